#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records nodes in creation order, which is a topological
// order; backward() walks it once in reverse.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace fjs::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

template <typename Scalar>
class Tape;

/// Handle to a node on a tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  int id = -1;

  const Matrix<Scalar>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Tape&, const Mat& grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> leaf(Mat value, bool requires_grad = false) {
    nodes_.push_back({std::move(value), Mat(), requires_grad, nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Var<Scalar> constant(Mat value) { return leaf(std::move(value), false); }

  /// Records an op result. `backward` receives the output gradient and must
  /// accumulate into the inputs via accumulate().
  Var<Scalar> record(Mat value, bool requires_grad, Backward backward) {
    nodes_.push_back({std::move(value), Mat(), requires_grad, requires_grad ? std::move(backward) : nullptr});
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(Var<Scalar> v) const { return node(v.id).value; }
  bool requires_grad(Var<Scalar> v) const { return node(v.id).requires_grad; }

  /// Gradient of the last backward() root with respect to `v`; zeros if none reached it.
  Mat grad(Var<Scalar> v) const {
    const auto& n = node(v.id);
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  template <typename Derived>
  void accumulate(Var<Scalar> v, const Eigen::MatrixBase<Derived>& g) {
    auto& n = node(v.id);
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to every node.
  void backward(Var<Scalar> root) {
    if (value(root).size() != 1) throw ShapeError("backward: root must be a 1x1 scalar");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    auto& r = node(root.id);
    if (!r.requires_grad) return;
    r.grad = Mat::Ones(1, 1);
    for (int i = root.id; i >= 0; --i) {
      auto& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.backward || n.grad.size() == 0) continue;
      const Mat g = n.grad;
      n.backward(*this, g);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    Backward backward;
  };

  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  std::vector<Node> nodes_;
};

namespace detail {

template <typename Scalar>
void same_tape(Var<Scalar> a, Var<Scalar> b) {
  if (a.tape != b.tape) throw ContractViolation("operands live on different tapes");
}

inline std::string shape(Eigen::Index r, Eigen::Index c) { return "[" + std::to_string(r) + "," + std::to_string(c) + "]"; }

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b);
  auto& t = *a.tape;
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + detail::shape(a.rows(), a.cols()) + " x " + detail::shape(b.rows(), b.cols()));
  Matrix<Scalar> out = a.value() * b.value();
  return t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
    if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
  });
}

/// a * b^T
template <typename Scalar>
Var<Scalar> matmul_nt(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b);
  auto& t = *a.tape;
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: " + detail::shape(a.rows(), a.cols()) + " x " + detail::shape(b.rows(), b.cols()) + "^T");
  Matrix<Scalar> out = a.value() * b.value().transpose();
  return t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b));
    if (tp.requires_grad(b)) tp.accumulate(b, g.transpose() * tp.value(a));
  });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  auto& t = *a.tape;
  Matrix<Scalar> out = a.value().transpose();
  return t.record(std::move(out), t.requires_grad(a),
                  [a](Tape<Scalar>& tp, const Matrix<Scalar>& g) { tp.accumulate(a, g.transpose()); });
}

/// Elementwise sum; `b` may also be a 1 x cols row broadcast over the rows of `a`.
template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b);
  auto& t = *a.tape;
  const bool broadcast = b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols();
  if (!broadcast && (a.rows() != b.rows() || a.cols() != b.cols()))
    throw ShapeError("add: " + detail::shape(a.rows(), a.cols()) + " + " + detail::shape(b.rows(), b.cols()));
  Matrix<Scalar> out = a.value();
  if (broadcast)
    out.rowwise() += b.value().row(0);
  else
    out += b.value();
  return t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                  [a, b, broadcast](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
                    tp.accumulate(a, g);
                    if (broadcast)
                      tp.accumulate(b, g.colwise().sum());
                    else
                      tp.accumulate(b, g);
                  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  auto& t = *a.tape;
  return t.record(a.value() * s, t.requires_grad(a),
                  [a, s](Tape<Scalar>& tp, const Matrix<Scalar>& g) { tp.accumulate(a, g * s); });
}

/// Multiplies row r of `x` by the scalar w(r, 0).
template <typename Scalar>
Var<Scalar> mul_rows(Var<Scalar> x, Var<Scalar> w) {
  detail::same_tape(x, w);
  auto& t = *x.tape;
  if (w.cols() != 1 || w.rows() != x.rows())
    throw ShapeError("mul_rows: weights " + detail::shape(w.rows(), w.cols()) + " for " + detail::shape(x.rows(), x.cols()));
  Matrix<Scalar> out = x.value().array().colwise() * w.value().col(0).array();
  return t.record(std::move(out), t.requires_grad(x) || t.requires_grad(w), [x, w](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    if (tp.requires_grad(x)) {
      Matrix<Scalar> gx = g.array().colwise() * tp.value(w).col(0).array();
      tp.accumulate(x, gx);
    }
    if (tp.requires_grad(w)) {
      Matrix<Scalar> gw = (g.array() * tp.value(x).array()).rowwise().sum();
      tp.accumulate(w, gw);
    }
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b);
  auto& t = *a.tape;
  if (a.rows() != b.rows())
    throw ShapeError("concat_cols: " + detail::shape(a.rows(), a.cols()) + " | " + detail::shape(b.rows(), b.cols()));
  Matrix<Scalar> out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const auto ac = a.cols();
  const auto bc = b.cols();
  return t.record(std::move(out), t.requires_grad(a) || t.requires_grad(b),
                  [a, b, ac, bc](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
                    tp.accumulate(a, g.leftCols(ac));
                    tp.accumulate(b, g.rightCols(bc));
                  });
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Eigen::Index start, Eigen::Index count) {
  auto& t = *a.tape;
  if (start < 0 || count < 0 || start + count > a.cols())
    throw ShapeError("slice_cols: [" + std::to_string(start) + "," + std::to_string(start + count) + ") of " +
                     detail::shape(a.rows(), a.cols()));
  Matrix<Scalar> out = a.value().middleCols(start, count);
  return t.record(std::move(out), t.requires_grad(a), [a, start, count](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> ga = Matrix<Scalar>::Zero(tp.value(a).rows(), tp.value(a).cols());
    ga.middleCols(start, count) = g;
    tp.accumulate(a, ga);
  });
}

template <typename Scalar>
Var<Scalar> leaky_relu(Var<Scalar> x, Scalar slope) {
  auto& t = *x.tape;
  Matrix<Scalar> out = x.value().unaryExpr([slope](Scalar v) { return v > 0 ? v : slope * v; });
  return t.record(std::move(out), t.requires_grad(x), [x, slope](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> d = tp.value(x).unaryExpr([slope](Scalar v) { return v > 0 ? Scalar(1) : slope; });
    tp.accumulate(x, g.cwiseProduct(d));
  });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  return leaky_relu(x, Scalar(0));
}

template <typename Scalar>
Var<Scalar> log(Var<Scalar> x) {
  auto& t = *x.tape;
  Matrix<Scalar> out = x.value().array().log();
  return t.record(std::move(out), t.requires_grad(x), [x](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    tp.accumulate(x, g.cwiseQuotient(tp.value(x)));
  });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> x) {
  auto& t = *x.tape;
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value().sum();
  return t.record(std::move(out), t.requires_grad(x), [x](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    tp.accumulate(x, Matrix<Scalar>::Constant(tp.value(x).rows(), tp.value(x).cols(), g(0, 0)));
  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> x) {
  return scale(sum(x), Scalar(1) / static_cast<Scalar>(x.value().size()));
}

/// 1x1 node holding x(r, c).
template <typename Scalar>
Var<Scalar> pick(Var<Scalar> x, Eigen::Index r, Eigen::Index c) {
  auto& t = *x.tape;
  if (r < 0 || r >= x.rows() || c < 0 || c >= x.cols()) throw ShapeError("pick: index out of range");
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value()(r, c);
  return t.record(std::move(out), t.requires_grad(x), [x, r, c](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gx = Matrix<Scalar>::Zero(tp.value(x).rows(), tp.value(x).cols());
    gx(r, c) = g(0, 0);
    tp.accumulate(x, gx);
  });
}

template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> x, std::vector<int> index) {
  auto& t = *x.tape;
  Matrix<Scalar> out(static_cast<Eigen::Index>(index.size()), x.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= x.rows()) throw ShapeError("gather_rows: row " + std::to_string(index[i]) + " out of range");
    out.row(static_cast<Eigen::Index>(i)) = x.value().row(index[i]);
  }
  return t.record(std::move(out), t.requires_grad(x), [x, index = std::move(index)](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gx = Matrix<Scalar>::Zero(tp.value(x).rows(), tp.value(x).cols());
    for (std::size_t i = 0; i < index.size(); ++i) gx.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(x, gx);
  });
}

/// Mask over columns; empty means every column is live.
using Mask = std::vector<std::uint8_t>;

namespace detail {

inline bool live(const Mask& mask, Eigen::Index c) { return mask.empty() || mask[static_cast<std::size_t>(c)] != 0; }

template <typename Scalar>
Matrix<Scalar> masked_softmax_rows(const Matrix<Scalar>& x, const Mask& mask) {
  Matrix<Scalar> p = Matrix<Scalar>::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Scalar hi = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      if (live(mask, c)) hi = std::max(hi, x(r, c));
    Scalar total = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      if (live(mask, c)) total += (p(r, c) = std::exp(x(r, c) - hi));
    p.row(r) /= total;
  }
  return p;
}

inline void check_mask(const Mask& mask, Eigen::Index cols, const char* op) {
  if (mask.empty()) return;
  if (static_cast<Eigen::Index>(mask.size()) != cols) throw ShapeError(std::string(op) + ": mask width mismatch");
  for (auto m : mask)
    if (m) return;
  throw ContractViolation(std::string(op) + ": every entry is masked");
}

}  // namespace detail

/// Row-wise softmax over live columns; masked entries get exactly 0
/// probability and 0 gradient.
template <typename Scalar>
Var<Scalar> softmax_masked(Var<Scalar> x, Mask mask = {}) {
  auto& t = *x.tape;
  detail::check_mask(mask, x.cols(), "softmax_masked");
  Matrix<Scalar> p = detail::masked_softmax_rows(x.value(), mask);
  Matrix<Scalar> keep = p;
  return t.record(std::move(p), t.requires_grad(x), [x, p = std::move(keep)](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gp = g.cwiseProduct(p);
    Matrix<Scalar> gx = gp - p.cwiseProduct(gp.rowwise().sum().replicate(1, p.cols()));
    tp.accumulate(x, gx);
  });
}

/// Row-wise log-softmax over live columns; masked entries hold -inf and
/// receive no gradient.
template <typename Scalar>
Var<Scalar> log_softmax_masked(Var<Scalar> x, Mask mask = {}) {
  auto& t = *x.tape;
  detail::check_mask(mask, x.cols(), "log_softmax_masked");
  const Matrix<Scalar>& xv = x.value();
  Matrix<Scalar> out(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    Scalar hi = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index c = 0; c < xv.cols(); ++c)
      if (detail::live(mask, c)) hi = std::max(hi, xv(r, c));
    Scalar total = 0;
    for (Eigen::Index c = 0; c < xv.cols(); ++c)
      if (detail::live(mask, c)) total += std::exp(xv(r, c) - hi);
    const Scalar lse = hi + std::log(total);
    for (Eigen::Index c = 0; c < xv.cols(); ++c)
      out(r, c) = detail::live(mask, c) ? xv(r, c) - lse : -std::numeric_limits<Scalar>::infinity();
  }
  Matrix<Scalar> p = detail::masked_softmax_rows(xv, mask);
  return t.record(std::move(out), t.requires_grad(x), [x, p = std::move(p), mask](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gl = g;
    for (Eigen::Index c = 0; c < gl.cols(); ++c)
      if (!detail::live(mask, c)) gl.col(c).setZero();
    Matrix<Scalar> gx = gl - p.cwiseProduct(gl.rowwise().sum().replicate(1, p.cols()));
    tp.accumulate(x, gx);
  });
}

/// Softmax of a column of scores within groups: entries e with equal
/// segment[e] are normalized together.
template <typename Scalar>
Var<Scalar> segment_softmax(Var<Scalar> scores, std::vector<int> segment, int num_segments) {
  auto& t = *scores.tape;
  if (scores.cols() != 1 || scores.rows() != static_cast<Eigen::Index>(segment.size()))
    throw ShapeError("segment_softmax: scores must be [E,1] matching the segment list");
  const auto& s = scores.value();
  std::vector<Scalar> hi(static_cast<std::size_t>(num_segments), -std::numeric_limits<Scalar>::infinity());
  for (std::size_t e = 0; e < segment.size(); ++e) {
    auto& h = hi.at(static_cast<std::size_t>(segment[e]));
    h = std::max(h, s(static_cast<Eigen::Index>(e), 0));
  }
  Matrix<Scalar> p(s.rows(), 1);
  std::vector<Scalar> total(static_cast<std::size_t>(num_segments), Scalar(0));
  for (std::size_t e = 0; e < segment.size(); ++e) {
    const auto seg = static_cast<std::size_t>(segment[e]);
    p(static_cast<Eigen::Index>(e), 0) = std::exp(s(static_cast<Eigen::Index>(e), 0) - hi[seg]);
    total[seg] += p(static_cast<Eigen::Index>(e), 0);
  }
  for (std::size_t e = 0; e < segment.size(); ++e) p(static_cast<Eigen::Index>(e), 0) /= total[static_cast<std::size_t>(segment[e])];
  Matrix<Scalar> keep = p;
  return t.record(std::move(p), t.requires_grad(scores),
                  [scores, segment = std::move(segment), num_segments, p = std::move(keep)](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
                    std::vector<Scalar> dot(static_cast<std::size_t>(num_segments), Scalar(0));
                    for (std::size_t e = 0; e < segment.size(); ++e)
                      dot[static_cast<std::size_t>(segment[e])] += g(static_cast<Eigen::Index>(e), 0) * p(static_cast<Eigen::Index>(e), 0);
                    Matrix<Scalar> gs(p.rows(), 1);
                    for (std::size_t e = 0; e < segment.size(); ++e) {
                      const auto i = static_cast<Eigen::Index>(e);
                      gs(i, 0) = p(i, 0) * (g(i, 0) - dot[static_cast<std::size_t>(segment[e])]);
                    }
                    tp.accumulate(scores, gs);
                  });
}

/// Row sums grouped by segment: out.row(k) = sum of x.row(e) with segment[e] == k.
template <typename Scalar>
Var<Scalar> segment_sum(Var<Scalar> x, std::vector<int> segment, int num_segments) {
  auto& t = *x.tape;
  if (x.rows() != static_cast<Eigen::Index>(segment.size())) throw ShapeError("segment_sum: row count mismatch");
  Matrix<Scalar> out = Matrix<Scalar>::Zero(num_segments, x.cols());
  for (std::size_t e = 0; e < segment.size(); ++e) out.row(segment[e]) += x.value().row(static_cast<Eigen::Index>(e));
  return t.record(std::move(out), t.requires_grad(x), [x, segment = std::move(segment)](Tape<Scalar>& tp, const Matrix<Scalar>& g) {
    Matrix<Scalar> gx(static_cast<Eigen::Index>(segment.size()), g.cols());
    for (std::size_t e = 0; e < segment.size(); ++e) gx.row(static_cast<Eigen::Index>(e)) = g.row(segment[e]);
    tp.accumulate(x, gx);
  });
}

}  // namespace fjs::nn
