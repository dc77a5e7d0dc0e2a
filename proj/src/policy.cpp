#include "fjs/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fjs/rng.hpp"

namespace fjs {

namespace {

struct TensorSpec {
  const char* name;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index fan_in;  // 0 for zero-initialized biases
};

std::vector<TensorSpec> tensor_specs(const PolicyConfig& c) {
  const Eigen::Index g1 = c.gat1_heads * c.gat1_size;
  const Eigen::Index g2_in = kPriorWidth + g1;
  const Eigen::Index att = c.attention_width();
  return {
      {"gat1.w_src", kPriorWidth, g1, kPriorWidth},
      {"gat1.w_dst", kPriorWidth, g1, kPriorWidth},
      {"gat1.att", c.gat1_size, c.gat1_heads, c.gat1_size},
      {"gat1.bias", 1, g1, 0},
      {"gat2.w_src", g2_in, c.gat2_heads * c.gat2_size, g2_in},
      {"gat2.w_dst", g2_in, c.gat2_heads * c.gat2_size, g2_in},
      {"gat2.att", c.gat2_size, c.gat2_heads, c.gat2_size},
      {"gat2.bias", 1, c.gat2_size, 0},
      {"state.w1", kContextWidth, att, kContextWidth},
      {"state.wq", att, att, att},
      {"state.wk", att, att, att},
      {"state.wv", att, att, att},
      {"state.w2", att, c.state_size, att},
      {"decision.w_hidden", c.decision_width(), c.fnn_hidden, c.decision_width()},
      {"decision.b_hidden", 1, c.fnn_hidden, 0},
      {"decision.w_out", c.fnn_hidden, 1, c.fnn_hidden},
  };
}

}  // namespace

NamedParams<float> init_params(const PolicyConfig& cfg, std::uint64_t seed) {
  NamedParams<float> params;
  Rng rng(derive_seed(seed, {0x1417}));
  for (const auto& t : tensor_specs(cfg)) {
    params.add(t.name, t.fan_in > 0 ? nn::init_uniform<float>(t.rows, t.cols, t.fan_in, rng)
                                    : Matrix<float>::Zero(t.rows, t.cols));
  }
  return params;
}

void check_params(const NamedParams<float>& params, const PolicyConfig& cfg) {
  const auto specs = tensor_specs(cfg);
  for (const auto& t : specs) {
    if (!params.contains(t.name)) throw nn::ShapeError(std::string("model is missing tensor '") + t.name + "'");
    const auto& v = params.at(t.name);
    if (v.rows() != t.rows || v.cols() != t.cols)
      throw nn::ShapeError(std::string("tensor '") + t.name + "' has shape [" + std::to_string(v.rows()) + "," +
                           std::to_string(v.cols()) + "], expected [" + std::to_string(t.rows) + "," +
                           std::to_string(t.cols) + "]");
  }
}

PolicyInputs prepare_inputs(const Instance& inst, const PolicyConfig& cfg) {
  PolicyInputs in;
  in.inst = &inst;
  in.priors = op_priors(inst);
  for (int c = 0; c < kPriorWidth; ++c)
    if (prior_is_time(c)) in.priors.col(c) *= cfg.time_scale;
  in.edges = nn::EdgeIndex::from_pairs(attention_edges(build_graph(inst), inst.size()), inst.size());
  in.edges.ensure_self_loops();
  return in;
}

Eigen::MatrixXd scaled_contexts(const Instance& inst, const ScheduleState& state, const PolicyConfig& cfg,
                                const RankConfig& rank) {
  Eigen::MatrixXd c = job_contexts(inst, state, rank);
  for (int k = 0; k < kContextWidth; ++k)
    if (context_is_time(k)) c.col(k) *= cfg.time_scale;
  return c;
}

std::vector<int> ready_rows(const Instance& inst, const ScheduleState& state) {
  std::vector<int> rows(static_cast<std::size_t>(inst.jobs()));
  for (int j = 0; j < inst.jobs(); ++j)
    rows[static_cast<std::size_t>(j)] = inst.first_op(j) + std::min(state.next_pos[static_cast<std::size_t>(j)], inst.machines() - 1);
  return rows;
}

nn::Mask unfinished_mask(const ScheduleState& state) {
  nn::Mask mask(state.next_pos.size());
  for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = state.finished(static_cast<int>(j)) ? 0 : 1;
  return mask;
}

Matrix<double> encode(const Instance& inst, const NamedParams<float>& params, const PolicyConfig& cfg) {
  check_params(params, cfg);
  const NamedParams<double> dp = params.cast<double>();
  nn::Tape<double> tape;
  const nn::BoundParams<double> bound(tape, dp, false);
  const PolicyInputs in = prepare_inputs(inst, cfg);
  return encode_graph(tape, bound, in, cfg).value();
}

std::vector<double> step_probs(const Matrix<double>& embedding, const ScheduleState& state, const Instance& inst,
                               const NamedParams<float>& params, const PolicyConfig& cfg, const RankConfig& rank) {
  if (state.unfinished_count() == 0) throw nn::ContractViolation("step_probs: every job is finished");
  const NamedParams<double> dp = params.cast<double>();
  nn::Tape<double> tape;
  const nn::BoundParams<double> bound(tape, dp, false);
  const Var<double> e = tape.constant(embedding);
  const Var<double> logits = step_logits(tape, bound, e, scaled_contexts(inst, state, cfg, rank), ready_rows(inst, state), cfg);
  const auto& p = nn::softmax_masked(logits, unfinished_mask(state)).value();
  return {p.data(), p.data() + p.size()};
}

double log_prob_of(const Instance& inst, const NamedParams<float>& params, std::span<const int> sequence,
                   const PolicyConfig& cfg, const RankConfig& rank) {
  const NamedParams<double> dp = params.cast<double>();
  nn::Tape<double> tape;
  const nn::BoundParams<double> bound(tape, dp, false);
  const PolicyInputs in = prepare_inputs(inst, cfg);
  return log_prob_graph(tape, bound, in, sequence, cfg, rank).value()(0, 0);
}

double log_prob_of(const Instance& inst, const NamedParams<float>& params, std::span<const int> sequence,
                   const PolicyConfig& cfg, const RankConfig& rank, NamedParams<float>& grads) {
  nn::Tape<float> tape;
  const nn::BoundParams<float> bound(tape, params, true);
  const PolicyInputs in = prepare_inputs(inst, cfg);
  std::vector<double> per_step;
  const Var<float> total = log_prob_graph(tape, bound, in, sequence, cfg, rank, &per_step);
  tape.backward(total);
  bound.accumulate_grads(grads);
  double sum = 0;
  for (double v : per_step) sum += v;
  return sum;
}

PolicyRunner::PolicyRunner(const NamedParams<float>& params, const PolicyConfig& cfg, const RankConfig& rank)
    : cfg_(cfg), rank_(rank) {
  check_params(params, cfg);
  dparams_ = params.cast<double>();
  const auto& w1 = dparams_["state.w1"];
  const auto& w2 = dparams_["state.w2"];
  const int ms = cfg.mha_size;
  const int ss = cfg.state_size;
  // [W1 W2 | per head: W1 Wq_h, W1 Wk_h, W1 Wv_h W2_h]
  context_proj_.resize(kContextWidth, ss + cfg.mha_heads * (2 * ms + ss));
  context_proj_.leftCols(ss) = w1 * w2;
  for (int h = 0; h < cfg.mha_heads; ++h) {
    const Eigen::Index off = ss + h * (2 * ms + ss);
    context_proj_.middleCols(off, ms) = w1 * dparams_["state.wq"].middleCols(h * ms, ms);
    context_proj_.middleCols(off + ms, ms) = w1 * dparams_["state.wk"].middleCols(h * ms, ms);
    context_proj_.middleCols(off + 2 * ms, ss) = w1 * dparams_["state.wv"].middleCols(h * ms, ms) * w2.middleRows(h * ms, ms);
  }
  w_hidden_state_ = dparams_["decision.w_hidden"].bottomRows(ss);
  w_out_ = dparams_["decision.w_out"];
}

PolicyRunner::Prepared PolicyRunner::prepare(const Instance& inst) const {
  Prepared prep;
  prep.inst = &inst;
  nn::Tape<double> tape;
  const nn::BoundParams<double> bound(tape, dparams_, false);
  const PolicyInputs in = prepare_inputs(inst, cfg_);
  prep.embedding = encode_graph(tape, bound, in, cfg_).value();
  prep.embed_hidden = prep.embedding * dparams_["decision.w_hidden"].topRows(cfg_.embed_width());
  prep.embed_hidden.rowwise() += dparams_["decision.b_hidden"].row(0);
  return prep;
}

Matrix<double> PolicyRunner::logits(const Prepared& prep, std::span<const ScheduleState* const> states) const {
  const Instance& inst = *prep.inst;
  const Eigen::Index n = inst.jobs();
  const auto count = static_cast<Eigen::Index>(states.size());
  const int ms = cfg_.mha_size;
  const int ss = cfg_.state_size;

  Matrix<double> contexts(count * n, kContextWidth);
  for (Eigen::Index r = 0; r < count; ++r)
    contexts.middleRows(r * n, n) = scaled_contexts(inst, *states[static_cast<std::size_t>(r)], cfg_, rank_);
  const Matrix<double> proj = contexts * context_proj_;

  Matrix<double> state = proj.leftCols(ss);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(ms));
  Matrix<double> scores(n, n);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (int h = 0; h < cfg_.mha_heads; ++h) {
      const Eigen::Index off = ss + h * (2 * ms + ss);
      const auto q = proj.block(r * n, off, n, ms);
      const auto k = proj.block(r * n, off + ms, n, ms);
      const auto u = proj.block(r * n, off + 2 * ms, n, ss);
      scores.noalias() = q * k.transpose();
      scores *= inv_sqrt;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double hi = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - hi).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      state.middleRows(r * n, n).noalias() += scores * u;
    }
  }
  state = state.cwiseMax(0.0);

  Matrix<double> hidden = state * w_hidden_state_;
  for (Eigen::Index r = 0; r < count; ++r) {
    const auto rows = ready_rows(inst, *states[static_cast<std::size_t>(r)]);
    for (Eigen::Index j = 0; j < n; ++j) hidden.row(r * n + j) += prep.embed_hidden.row(rows[static_cast<std::size_t>(j)]);
  }
  const double slope = cfg_.slope;
  hidden = hidden.unaryExpr([slope](double v) { return v > 0 ? v : slope * v; });
  const Matrix<double> z = hidden * w_out_;
  return Eigen::Map<const Matrix<double>>(z.data(), count, n);
}

std::vector<Rollout> PolicyRunner::run(const Prepared& prep, std::span<const RolloutSpec> specs) const {
  const Instance& inst = *prep.inst;
  const std::size_t count = specs.size();
  std::vector<ScheduleState> states(count, init_state(inst));
  std::vector<Rollout> out(count);
  std::vector<Rng> rngs;
  rngs.reserve(count);
  for (const auto& s : specs) rngs.emplace_back(s.seed);
  std::vector<const ScheduleState*> ptrs(count);
  for (std::size_t r = 0; r < count; ++r) ptrs[r] = &states[r];

  for (int t = 0; t < inst.size(); ++t) {
    const Matrix<double> z = logits(prep, ptrs);
    for (std::size_t r = 0; r < count; ++r) {
      const auto& st = states[r];
      const auto row = z.row(static_cast<Eigen::Index>(r));
      double hi = -std::numeric_limits<double>::infinity();
      int best = -1;
      for (int j = 0; j < inst.jobs(); ++j) {
        if (st.finished(j)) continue;
        if (row(j) > hi) {
          hi = row(j);
          best = j;
        }
      }
      double total = 0;
      for (int j = 0; j < inst.jobs(); ++j)
        if (!st.finished(j)) total += std::exp(row(j) - hi);
      const double lse = hi + std::log(total);

      int choice = best;
      if (specs[r].mode == DecodeMode::sample) {
        const double u = rngs[r].uniform();
        double cum = 0;
        for (int j = 0; j < inst.jobs(); ++j) {
          if (st.finished(j)) continue;
          choice = j;
          cum += std::exp(row(j) - lse);
          if (u < cum) break;
        }
      }
      out[r].log_prob += row(choice) - lse;
      step(states[r], choice, inst, rank_);
    }
  }
  for (std::size_t r = 0; r < count; ++r) {
    out[r].schedule = to_schedule(states[r], rank_);
    out[r].sequence = out[r].schedule.sequence;
  }
  return out;
}

Rollout rollout(const Instance& inst, const NamedParams<float>& params, DecodeMode mode, std::uint64_t seed,
                const PolicyConfig& cfg, const RankConfig& rank) {
  const PolicyRunner runner(params, cfg, rank);
  const auto prep = runner.prepare(inst);
  const RolloutSpec spec{mode, seed};
  return runner.run(prep, std::span(&spec, 1)).front();
}

}  // namespace fjs
