#pragma once

// Autoregressive job-selection policy: a two-layer graph attention encoder
// over the disjunctive graph, a per-step state network over job contexts,
// and a decision network producing one logit per job.

#include <cstdint>
#include <span>
#include <vector>

#include "fjs/features.hpp"
#include "fjs/instance.hpp"
#include "fjs/nn/layers.hpp"
#include "fjs/nn/params.hpp"
#include "fjs/schedule.hpp"

namespace fjs {

using nn::Matrix;
using nn::NamedParams;
using nn::Var;

struct PolicyConfig {
  int gat1_heads = 3;
  int gat1_size = 64;
  int gat2_heads = 3;
  int gat2_size = 128;
  int mha_heads = 3;
  int mha_size = 64;
  int state_size = 128;
  int fnn_hidden = 128;
  double slope = 0.15;
  /// Multiplier applied to every time-valued feature before it enters the network.
  double time_scale = 0.01;

  int embed_width() const { return kPriorWidth + gat2_size; }
  int attention_width() const { return mha_heads * mha_size; }
  int decision_width() const { return embed_width() + state_size; }
};

/// Seeded initialization of every policy tensor.
NamedParams<float> init_params(const PolicyConfig& cfg, std::uint64_t seed);

/// Throws nn::ShapeError unless `params` has exactly the tensors `cfg` needs.
void check_params(const NamedParams<float>& params, const PolicyConfig& cfg);

/// Static per-instance network inputs.
struct PolicyInputs {
  const Instance* inst = nullptr;
  Eigen::MatrixXd priors;  // scaled op priors, [N, 18]
  nn::EdgeIndex edges;     // message-passing edges with self-loops
};

PolicyInputs prepare_inputs(const Instance& inst, const PolicyConfig& cfg);

/// Job contexts with time-valued columns scaled, [n, 11].
Eigen::MatrixXd scaled_contexts(const Instance& inst, const ScheduleState& state, const PolicyConfig& cfg,
                                const RankConfig& rank);

/// Row of the encoder output used for each job: its ready operation, or its
/// last operation once finished (those rows are masked).
std::vector<int> ready_rows(const Instance& inst, const ScheduleState& state);

nn::Mask unfinished_mask(const ScheduleState& state);

// Differentiable graph, templated on the scalar type: float for training,
// double for inference and gradient checks.

template <typename Scalar>
Var<Scalar> encode_graph(nn::Tape<Scalar>& tape, const nn::BoundParams<Scalar>& p, const PolicyInputs& in,
                         const PolicyConfig& cfg) {
  using namespace nn;
  const Var<Scalar> x = tape.constant(in.priors.cast<Scalar>());
  const GatShape g1{cfg.gat1_heads, cfg.gat1_size, HeadCombine::concat, cfg.slope};
  const GatShape g2{cfg.gat2_heads, cfg.gat2_size, HeadCombine::average, cfg.slope};
  const Var<Scalar> h1 = relu(gat_layer(x, in.edges, {p["gat1.w_src"], p["gat1.w_dst"], p["gat1.att"], p["gat1.bias"]}, g1));
  const Var<Scalar> h2 =
      relu(gat_layer(concat_cols(x, h1), in.edges, {p["gat2.w_src"], p["gat2.w_dst"], p["gat2.att"], p["gat2.bias"]}, g2));
  return concat_cols(x, h2);
}

/// Per-job logits as a [1, n] row.
template <typename Scalar>
Var<Scalar> step_logits(nn::Tape<Scalar>& tape, const nn::BoundParams<Scalar>& p, Var<Scalar> embedding,
                        const Eigen::MatrixXd& contexts, const std::vector<int>& rows, const PolicyConfig& cfg) {
  using namespace nn;
  const Var<Scalar> c = tape.constant(contexts.cast<Scalar>());
  const Var<Scalar> a = matmul(c, p["state.w1"]);
  const Var<Scalar> att = mha(a, p["state.wq"], p["state.wk"], p["state.wv"], cfg.mha_heads, cfg.mha_size);
  const Var<Scalar> s = relu(matmul(add(a, att), p["state.w2"]));
  const Var<Scalar> e = gather_rows(embedding, rows);
  const Var<Scalar> hidden =
      leaky_relu(dense(concat_cols(e, s), p["decision.w_hidden"], p["decision.b_hidden"]), static_cast<Scalar>(cfg.slope));
  return transpose(matmul(hidden, p["decision.w_out"]));
}

/// Teacher-forced log-likelihood of `sequence`. Returns the differentiable
/// total; `per_step`, when given, receives each step's log-probability.
template <typename Scalar>
Var<Scalar> log_prob_graph(nn::Tape<Scalar>& tape, const nn::BoundParams<Scalar>& p, const PolicyInputs& in,
                           std::span<const int> sequence, const PolicyConfig& cfg, const RankConfig& rank,
                           std::vector<double>* per_step = nullptr) {
  const Instance& inst = *in.inst;
  validate_sequence(inst, sequence);
  const Var<Scalar> embedding = encode_graph(tape, p, in, cfg);
  ScheduleState state = init_state(inst);
  Var<Scalar> total{};
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const int job = sequence[t];
    const Var<Scalar> logits = step_logits(tape, p, embedding, scaled_contexts(inst, state, cfg, rank), ready_rows(inst, state), cfg);
    const Var<Scalar> lp = nn::pick(nn::log_softmax_masked(logits, unfinished_mask(state)), 0, job);
    if (per_step) per_step->push_back(static_cast<double>(lp.value()(0, 0)));
    total = t == 0 ? lp : nn::add(total, lp);
    step(state, job, inst, rank);
  }
  return total;
}

// Parameters are stored and trained in float32; the inference entry points
// below evaluate them in float64.

/// Encoder output e, [N, embed_width]; columns [0, 18) are the scaled priors.
Matrix<double> encode(const Instance& inst, const NamedParams<float>& params, const PolicyConfig& cfg);

/// Job-selection probabilities at `state` (exactly 0 for finished jobs).
std::vector<double> step_probs(const Matrix<double>& embedding, const ScheduleState& state, const Instance& inst,
                               const NamedParams<float>& params, const PolicyConfig& cfg, const RankConfig& rank);

/// Teacher-forced log p(sequence | inst).
double log_prob_of(const Instance& inst, const NamedParams<float>& params, std::span<const int> sequence,
                   const PolicyConfig& cfg, const RankConfig& rank);

/// Float32 evaluation that also adds d(log p)/d(params) into `grads`
/// (same layout as params).
double log_prob_of(const Instance& inst, const NamedParams<float>& params, std::span<const int> sequence,
                   const PolicyConfig& cfg, const RankConfig& rank, NamedParams<float>& grads);

enum class DecodeMode { sample, greedy };

struct RolloutSpec {
  DecodeMode mode = DecodeMode::greedy;
  std::uint64_t seed = 0;
};

struct Rollout {
  std::vector<int> sequence;
  double log_prob = 0;
  Schedule schedule;
};

/// Inference-only evaluator. Linear maps that act on the low-dimensional
/// job contexts are pre-multiplied, and many rollouts of one instance are
/// advanced in lockstep so each step is a handful of matrix products.
class PolicyRunner {
 public:
  PolicyRunner(const NamedParams<float>& params, const PolicyConfig& cfg, const RankConfig& rank);

  struct Prepared {
    const Instance* inst = nullptr;
    Matrix<double> embedding;     // [N, embed_width]
    Matrix<double> embed_hidden;  // embedding * W_hidden[embed rows] + b_hidden, [N, fnn_hidden]
  };

  Prepared prepare(const Instance& inst) const;

  /// Logits for each rollout state, [states.size(), n].
  Matrix<double> logits(const Prepared& prep, std::span<const ScheduleState* const> states) const;

  std::vector<Rollout> run(const Prepared& prep, std::span<const RolloutSpec> specs) const;

  const PolicyConfig& config() const { return cfg_; }
  const RankConfig& rank() const { return rank_; }

 private:
  PolicyConfig cfg_;
  RankConfig rank_;
  Matrix<double> context_proj_;  // [11, state_size + heads*(2*mha_size + state_size)]
  Matrix<double> w_hidden_state_;
  Matrix<double> w_out_;
  NamedParams<double> dparams_;
};

/// One rollout; `seed` drives sampling in DecodeMode::sample.
Rollout rollout(const Instance& inst, const NamedParams<float>& params, DecodeMode mode, std::uint64_t seed,
                const PolicyConfig& cfg, const RankConfig& rank);

}  // namespace fjs
