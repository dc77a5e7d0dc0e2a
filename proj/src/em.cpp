#include "fjs/em.hpp"

#include <bit>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fjs/parallel.hpp"
#include "fjs/rng.hpp"

namespace fjs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Rollouts advanced together per policy evaluation.
constexpr int kLockstep = 64;

std::vector<Rollout> sample_many(const PolicyRunner& runner, const PolicyRunner::Prepared& prep, int k, std::uint64_t seed,
                                 int first_index = 0) {
  std::vector<Rollout> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int start = 0; start < k; start += kLockstep) {
    std::vector<RolloutSpec> specs;
    for (int i = start; i < std::min(k, start + kLockstep); ++i)
      specs.push_back({DecodeMode::sample, derive_seed(seed, {static_cast<std::uint64_t>(first_index + i)})});
    for (auto& r : runner.run(prep, specs)) out.push_back(std::move(r));
  }
  return out;
}

void write_report(const std::filesystem::path& path, const std::vector<EpochReport>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kReportHeader << "\n";
  for (const auto& r : rows) out << csv_row(r) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Matrix<float> scalar_tensor(double v) {
  Matrix<float> m(1, 1);
  m(0, 0) = static_cast<float>(v);
  return m;
}

/// A double stored losslessly as two float bit patterns.
Matrix<float> double_tensor(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  Matrix<float> m(1, 2);
  m(0, 0) = std::bit_cast<float>(static_cast<std::uint32_t>(bits >> 32));
  m(0, 1) = std::bit_cast<float>(static_cast<std::uint32_t>(bits & 0xFFFFFFFFu));
  return m;
}

double tensor_double(const Matrix<float>& m) {
  const std::uint64_t hi = std::bit_cast<std::uint32_t>(m(0, 0));
  const std::uint64_t lo = std::bit_cast<std::uint32_t>(m(0, 1));
  return std::bit_cast<double>((hi << 32) | lo);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (k_train < 1) throw ConfigError("K (train) must be >= 1");
  if (k_test < 0) throw ConfigError("K (test) must be >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(lr > 0)) throw ConfigError("learning rate must be positive");
  if (validation_interval < 1) throw ConfigError("validation interval must be >= 1");
}

std::string csv_row(const EpochReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.epoch << "," << r.train_pseudo_makespan << "," << r.train_nll << "," << r.val_greedy_makespan << ","
      << r.seconds;
  return out.str();
}

PseudoLabel e_step(const PolicyRunner& runner, const Instance& inst, int k, std::uint64_t seed) {
  if (k < 1) throw ConfigError("e_step: K must be >= 1");
  const auto prep = runner.prepare(inst);
  const auto rollouts = sample_many(runner, prep, k, seed);
  const Rollout* best = &rollouts.front();
  double best_z = z_value(best->schedule.makespan, runner.rank());
  for (const auto& r : rollouts) {
    const double z = z_value(r.schedule.makespan, runner.rank());
    if (z < best_z) {
      best = &r;
      best_z = z;
    }
  }
  return {best->sequence, best->schedule.makespan};
}

double m_step(std::span<const LabeledInstance> batch, NamedParams<float>& params, nn::AdamState<float>& adam,
              const PolicyConfig& cfg, const RankConfig& rank, int workers) {
  if (batch.empty()) throw ConfigError("m_step: empty batch");
  std::vector<NamedParams<float>> grads(batch.size());
  std::vector<double> log_probs(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    grads[i] = params.zeros_like();
    log_probs[i] = log_prob_of(*batch[i].inst, params, *batch[i].sequence, cfg, rank, grads[i]);
  });
  // Reduce in index order so the update does not depend on thread timing.
  NamedParams<float> total = params.zeros_like();
  for (const auto& g : grads)
    for (std::size_t t = 0; t < total.size(); ++t) total.value(t) += g.value(t);
  const float scale = -1.0f / static_cast<float>(batch.size());
  for (std::size_t t = 0; t < total.size(); ++t) total.value(t) *= scale;
  nn::adam_step(params, total, adam);
  return -std::accumulate(log_probs.begin(), log_probs.end(), 0.0) / static_cast<double>(batch.size());
}

double greedy_mean_makespan(const NamedParams<float>& params, std::span<const Instance> instances,
                            const PolicyConfig& cfg, const RankConfig& rank, int workers) {
  if (instances.empty()) return 0;
  const PolicyRunner runner(params, cfg, rank);
  std::vector<double> values(instances.size());
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    const auto prep = runner.prepare(instances[i]);
    const RolloutSpec greedy{DecodeMode::greedy, 0};
    values[i] = defuzz(runner.run(prep, std::span(&greedy, 1)).front().schedule.makespan);
  });
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

NamedParams<float> pack_train_state(const TrainState& state) {
  NamedParams<float> out = state.params;
  for (std::size_t i = 0; i < state.adam.first.size(); ++i) out.add("adam.m/" + state.adam.first.name(i), state.adam.first.value(i));
  for (std::size_t i = 0; i < state.adam.second.size(); ++i)
    out.add("adam.v/" + state.adam.second.name(i), state.adam.second.value(i));
  out.add("adam.step", double_tensor(static_cast<double>(state.adam.step)));
  out.add("train.epoch", scalar_tensor(state.epoch));
  out.add("train.best_val", double_tensor(state.has_best ? state.best_val : std::numeric_limits<double>::quiet_NaN()));
  return out;
}

NamedParams<float> policy_params(const NamedParams<float>& packed, const PolicyConfig& cfg) {
  const NamedParams<float> reference = init_params(cfg, 0);
  NamedParams<float> out;
  for (std::size_t i = 0; i < reference.size(); ++i) out.add(reference.name(i), packed.at(reference.name(i)));
  check_params(out, cfg);
  return out;
}

TrainState unpack_train_state(const NamedParams<float>& packed, const PolicyConfig& cfg, double lr) {
  TrainState s;
  s.params = policy_params(packed, cfg);
  s.adam = nn::AdamState<float>(s.params, {.lr = lr});
  if (!packed.contains("adam.step")) throw nn::CheckpointError("checkpoint has no optimizer state to resume from");
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    s.adam.first.value(i) = packed.at("adam.m/" + s.params.name(i));
    s.adam.second.value(i) = packed.at("adam.v/" + s.params.name(i));
  }
  s.adam.step = static_cast<std::int64_t>(tensor_double(packed.at("adam.step")));
  s.epoch = static_cast<int>(packed.at("train.epoch")(0, 0));
  const double best = tensor_double(packed.at("train.best_val"));
  s.has_best = !std::isnan(best);
  s.best_val = s.has_best ? best : 0;
  return s;
}

TrainResult train(std::span<const Instance> dataset, std::span<const Instance> val_set, const TrainConfig& cfg,
                  std::optional<TrainState> resume, const std::function<void(const EpochReport&)>& on_epoch) {
  cfg.validate();
  if (dataset.empty()) throw ConfigError("train: empty dataset");

  TrainState state;
  if (resume) {
    state = std::move(*resume);
    state.adam.config.lr = cfg.lr;
  } else {
    state.params = init_params(cfg.policy, derive_seed(cfg.seed, {0x1a17}));
    state.adam = nn::AdamState<float>(state.params, {.lr = cfg.lr});
  }

  TrainResult result;
  result.initial_val = greedy_mean_makespan(state.params, val_set, cfg.policy, cfg.rank, cfg.workers);
  result.best_params = state.params;

  const bool persist = !cfg.checkpoint_dir.empty();
  if (persist) std::filesystem::create_directories(cfg.checkpoint_dir);

  for (int epoch = state.epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), 1})).shuffle(order);

    double pseudo_sum = 0;
    double nll_sum = 0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      // E-step against frozen parameters.
      const PolicyRunner runner(state.params, cfg.policy, cfg.rank);
      std::vector<PseudoLabel> labels(stop - start);
      parallel_for(labels.size(), cfg.workers, [&](std::size_t i) {
        const std::size_t idx = order[start + i];
        labels[i] = e_step(runner, dataset[idx], cfg.k_train,
                           derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), 2, idx}));
      });
      std::vector<LabeledInstance> batch;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        batch.push_back({&dataset[order[start + i]], &labels[i].sequence});
        pseudo_sum += defuzz(labels[i].makespan);
      }
      nll_sum += m_step(batch, state.params, state.adam, cfg.policy, cfg.rank, cfg.workers) * static_cast<double>(batch.size());
      ++batches;
    }

    EpochReport report;
    report.epoch = epoch;
    report.train_pseudo_makespan = pseudo_sum / static_cast<double>(dataset.size());
    report.train_nll = nll_sum / static_cast<double>(dataset.size());
    const bool validate_now = epoch % cfg.validation_interval == 0 || epoch == cfg.epochs;
    report.val_greedy_makespan = validate_now && !val_set.empty()
                                     ? greedy_mean_makespan(state.params, val_set, cfg.policy, cfg.rank, cfg.workers)
                                     : std::numeric_limits<double>::quiet_NaN();
    state.epoch = epoch;
    const bool improved = validate_now && (!state.has_best || report.val_greedy_makespan < state.best_val);
    if (improved) {
      state.best_val = report.val_greedy_makespan;
      state.has_best = true;
      result.best_params = state.params;
    }
    report.seconds = seconds_since(t0);
    result.reports.push_back(report);

    if (persist) {
      nn::write_checkpoint(pack_train_state(state), cfg.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"));
      if (improved || !std::filesystem::exists(cfg.checkpoint_dir / "best.ckpt"))
        nn::write_checkpoint(state.params, cfg.checkpoint_dir / "best.ckpt");
      std::vector<EpochReport> rows;
      const auto csv = cfg.checkpoint_dir / "report.csv";
      // A resumed run keeps the rows of the epochs it did not redo.
      if (resume && std::filesystem::exists(csv)) {
        std::ifstream in(csv);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
          EpochReport r;
          char comma;
          std::istringstream ls(line);
          ls >> r.epoch >> comma >> r.train_pseudo_makespan >> comma >> r.train_nll >> comma >> r.val_greedy_makespan >>
              comma >> r.seconds;
          if (ls && r.epoch < result.reports.front().epoch) rows.push_back(r);
        }
      }
      rows.insert(rows.end(), result.reports.begin(), result.reports.end());
      write_report(csv, rows);
    }
    if (on_epoch) on_epoch(report);
  }
  result.final_params = state.params;
  return result;
}

EvalResult evaluate_one(const PolicyRunner& runner, const Instance& inst, int k, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const auto prep = runner.prepare(inst);
  const RolloutSpec greedy_spec{DecodeMode::greedy, 0};
  const Rollout greedy = runner.run(prep, std::span(&greedy_spec, 1)).front();
  EvalResult out;
  out.greedy = greedy.schedule.makespan;
  out.best = greedy.schedule.makespan;
  out.best_sequence = greedy.sequence;
  double best_z = z_value(out.best, runner.rank());
  if (k > 0) {
    for (const auto& r : sample_many(runner, prep, k, seed)) {
      const double z = z_value(r.schedule.makespan, runner.rank());
      if (z < best_z) {
        best_z = z;
        out.best = r.schedule.makespan;
        out.best_sequence = r.sequence;
      }
    }
  }
  out.seconds = seconds_since(t0);
  return out;
}

std::vector<EvalResult> evaluate(const NamedParams<float>& params, std::span<const Instance> instances, int k,
                                 const PolicyConfig& cfg, const RankConfig& rank, std::uint64_t seed, int workers) {
  const PolicyRunner runner(params, cfg, rank);
  std::vector<EvalResult> out(instances.size());
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    out[i] = evaluate_one(runner, instances[i], k, derive_seed(seed, {i}));
  });
  return out;
}

}  // namespace fjs
