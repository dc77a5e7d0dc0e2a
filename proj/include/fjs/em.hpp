#pragma once

// Expectation-maximization self-labeling: sample K schedules per instance
// from the frozen policy and keep the best as a pseudo-label (E-step), then
// raise the pseudo-labels' log-likelihood with one Adam update (M-step).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fjs/nn/adam.hpp"
#include "fjs/policy.hpp"

namespace fjs {

struct TrainConfig {
  int epochs = 30;
  int k_train = 256;
  int k_test = 512;
  int batch_size = 16;
  double lr = 0.0002;
  std::uint64_t seed = 0;
  RankConfig rank;
  PolicyConfig policy;
  int validation_interval = 1;
  std::filesystem::path checkpoint_dir;  // empty: keep everything in memory
  int workers = 1;

  void validate() const;
};

struct EpochReport {
  int epoch = 0;
  double train_pseudo_makespan = 0;
  double train_nll = 0;
  double val_greedy_makespan = 0;
  double seconds = 0;
};

inline constexpr const char* kReportHeader = "epoch,train_pseudo_makespan,train_nll,val_greedy_makespan,seconds";
std::string csv_row(const EpochReport& r);

struct PseudoLabel {
  std::vector<int> sequence;
  Tfn makespan;
};

/// Best of K sampled rollouts by Z-value of the fuzzy makespan (first on ties).
/// Rollout k samples with seed derive_seed(seed, {k}).
PseudoLabel e_step(const PolicyRunner& runner, const Instance& inst, int k, std::uint64_t seed);

struct LabeledInstance {
  const Instance* inst = nullptr;
  const std::vector<int>* sequence = nullptr;
};

/// One Adam update on -(1/|batch|) sum log p(label | inst). Returns the
/// loss before the update.
double m_step(std::span<const LabeledInstance> batch, NamedParams<float>& params, nn::AdamState<float>& adam,
              const PolicyConfig& cfg, const RankConfig& rank, int workers = 1);

/// Mean defuzzified makespan of greedy rollouts.
double greedy_mean_makespan(const NamedParams<float>& params, std::span<const Instance> instances,
                            const PolicyConfig& cfg, const RankConfig& rank, int workers = 1);

struct TrainState {
  NamedParams<float> params;
  nn::AdamState<float> adam;
  int epoch = 0;  // last completed epoch
  double best_val = 0;
  bool has_best = false;
};

/// Epoch checkpoint: parameters plus optimizer and bookkeeping tensors.
NamedParams<float> pack_train_state(const TrainState& state);
TrainState unpack_train_state(const NamedParams<float>& packed, const PolicyConfig& cfg, double lr);

/// Policy tensors only (drops optimizer/bookkeeping tensors).
NamedParams<float> policy_params(const NamedParams<float>& packed, const PolicyConfig& cfg);

struct TrainResult {
  NamedParams<float> best_params;
  NamedParams<float> final_params;
  double initial_val = 0;  // greedy validation makespan before the first update
  std::vector<EpochReport> reports;
};

/// Runs epochs resume->epoch+1 .. cfg.epochs. With a checkpoint dir, writes
/// report.csv, epoch_<k>.ckpt and best.ckpt. `on_epoch` sees each report.
TrainResult train(std::span<const Instance> dataset, std::span<const Instance> val_set, const TrainConfig& cfg,
                  std::optional<TrainState> resume = std::nullopt,
                  const std::function<void(const EpochReport&)>& on_epoch = {});

struct EvalResult {
  Tfn greedy;
  Tfn best;
  std::vector<int> best_sequence;
  double seconds = 0;
};

/// Greedy rollout plus K sampled rollouts per instance; `best` is the
/// minimum-Z makespan over all of them with greedy first on ties.
EvalResult evaluate_one(const PolicyRunner& runner, const Instance& inst, int k, std::uint64_t seed);

std::vector<EvalResult> evaluate(const NamedParams<float>& params, std::span<const Instance> instances, int k,
                                 const PolicyConfig& cfg, const RankConfig& rank, std::uint64_t seed, int workers = 1);

}  // namespace fjs
