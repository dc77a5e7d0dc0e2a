#pragma once

// Graph attention (GATv2 scoring), multi-head scaled dot-product attention
// and dense layers built from tape primitives.

#include <cmath>
#include <utility>
#include <vector>

#include "fjs/nn/tape.hpp"

namespace fjs::nn {

/// Directed edges src -> dst; node v aggregates over the sources of its
/// incoming edges.
struct EdgeIndex {
  std::vector<int> src;
  std::vector<int> dst;
  int num_nodes = 0;

  static EdgeIndex from_pairs(const std::vector<std::pair<int, int>>& edges, int num_nodes) {
    EdgeIndex out;
    out.num_nodes = num_nodes;
    out.src.reserve(edges.size());
    out.dst.reserve(edges.size());
    for (const auto& [s, d] : edges) {
      out.src.push_back(s);
      out.dst.push_back(d);
    }
    return out;
  }

  /// Adds (v, v) for every node lacking one.
  void ensure_self_loops() {
    std::vector<bool> has(static_cast<std::size_t>(num_nodes), false);
    for (std::size_t e = 0; e < src.size(); ++e)
      if (src[e] == dst[e]) has[static_cast<std::size_t>(src[e])] = true;
    for (int v = 0; v < num_nodes; ++v) {
      if (has[static_cast<std::size_t>(v)]) continue;
      src.push_back(v);
      dst.push_back(v);
    }
  }
};

enum class HeadCombine { concat, average };

struct GatShape {
  int heads = 1;
  int head_size = 1;
  HeadCombine combine = HeadCombine::concat;
  double slope = 0.15;

  int out_width() const { return combine == HeadCombine::concat ? heads * head_size : head_size; }
};

/// w_src, w_dst: [in, heads*head_size]; att: [head_size, heads]; bias: [1, out_width].
template <typename Scalar>
struct GatWeights {
  Var<Scalar> w_src;
  Var<Scalar> w_dst;
  Var<Scalar> att;
  Var<Scalar> bias;
};

/// GATv2 layer: score(u->v) = att . LeakyReLU(W_src h_u + W_dst h_v),
/// normalized over v's incoming edges; v receives sum_u alpha_uv W_src h_u.
/// `edges` must already contain the self-loops. Per-head attention
/// coefficients ([E,1] each) are appended to `attention` when given.
template <typename Scalar>
Var<Scalar> gat_layer(Var<Scalar> x, const EdgeIndex& edges, const GatWeights<Scalar>& w, const GatShape& shape,
                      std::vector<Var<Scalar>>* attention = nullptr) {
  const Var<Scalar> xs = matmul(x, w.w_src);
  const Var<Scalar> xd = matmul(x, w.w_dst);
  Var<Scalar> out{};
  for (int h = 0; h < shape.heads; ++h) {
    const Var<Scalar> hs = slice_cols(xs, h * shape.head_size, shape.head_size);
    const Var<Scalar> hd = slice_cols(xd, h * shape.head_size, shape.head_size);
    const Var<Scalar> from = gather_rows(hs, edges.src);
    const Var<Scalar> to = gather_rows(hd, edges.dst);
    const Var<Scalar> pre = leaky_relu(add(from, to), static_cast<Scalar>(shape.slope));
    const Var<Scalar> score = matmul(pre, slice_cols(w.att, h, 1));
    const Var<Scalar> alpha = segment_softmax(score, edges.dst, edges.num_nodes);
    if (attention) attention->push_back(alpha);
    const Var<Scalar> head = segment_sum(mul_rows(from, alpha), edges.dst, edges.num_nodes);
    if (h == 0)
      out = head;
    else
      out = shape.combine == HeadCombine::concat ? concat_cols(out, head) : add(out, head);
  }
  if (shape.combine == HeadCombine::average && shape.heads > 1) out = scale(out, Scalar(1) / static_cast<Scalar>(shape.heads));
  return add(out, w.bias);
}

/// Multi-head scaled dot-product self-attention over the rows of `x`;
/// wq/wk/wv: [d_in, heads*head_size]; head outputs are concatenated.
/// Per-head attention matrices ([n,n]) are appended to `attention` when given.
template <typename Scalar>
Var<Scalar> mha(Var<Scalar> x, Var<Scalar> wq, Var<Scalar> wk, Var<Scalar> wv, int heads, int head_size,
                std::vector<Var<Scalar>>* attention = nullptr) {
  const Var<Scalar> q = matmul(x, wq);
  const Var<Scalar> k = matmul(x, wk);
  const Var<Scalar> v = matmul(x, wv);
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(head_size));
  Var<Scalar> out{};
  for (int h = 0; h < heads; ++h) {
    const Var<Scalar> qh = slice_cols(q, h * head_size, head_size);
    const Var<Scalar> kh = slice_cols(k, h * head_size, head_size);
    const Var<Scalar> vh = slice_cols(v, h * head_size, head_size);
    const Var<Scalar> a = softmax_masked(scale(matmul_nt(qh, kh), inv_sqrt));
    if (attention) attention->push_back(a);
    const Var<Scalar> head = matmul(a, vh);
    out = h == 0 ? head : concat_cols(out, head);
  }
  return out;
}

/// x W + b
template <typename Scalar>
Var<Scalar> dense(Var<Scalar> x, Var<Scalar> w, Var<Scalar> b) {
  return add(matmul(x, w), b);
}

}  // namespace fjs::nn
