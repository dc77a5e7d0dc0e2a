#pragma once

// GA and PSO over job-repetition sequences, plus the benchmark harness.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fjs/policy.hpp"
#include "fjs/rng.hpp"
#include "fjs/schedule.hpp"

namespace fjs {

struct GAConfig {
  int population = 100;
  int iterations = 100;
  double crossover_prob = 0.7;
  double mutation_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PSOConfig {
  int population = 100;
  int iterations = 100;
  double c_global = 1.2;
  double c_local = 1.2;
  double inertia_start = 0.9;
  double inertia_end = 0.4;
  std::uint64_t seed = 0;

  void validate() const;
  double inertia(int iteration) const;
};

struct SolveResult {
  Schedule schedule;
  std::vector<double> trace;  // best-so-far Z after initialization and after each iteration
};

/// Job-based order crossover: the child keeps `keep` jobs where `a` has them
/// and fills the other slots with the remaining jobs in `b`'s order.
std::vector<int> job_order_crossover(std::span<const int> a, std::span<const int> b, const std::vector<bool>& keep);

/// Swaps two positions holding different jobs (no-op if there is only one job).
void swap_mutation(std::vector<int>& seq, Rng& rng);

/// Positions sorted by ascending key receive the sorted job-repetition multiset.
std::vector<int> decode_random_keys(std::span<const double> keys, std::span<const int> multiset);

/// Sorted job-repetition multiset: each job id m times.
std::vector<int> repetition_multiset(int jobs, int machines);

std::vector<int> random_sequence(const Instance& inst, Rng& rng);

SolveResult ga_solve(const Instance& inst, const GAConfig& cfg, const RankConfig& rank = {});
SolveResult pso_solve(const Instance& inst, const PSOConfig& cfg, const RankConfig& rank = {});

struct BenchRecord {
  std::string instance;
  int n = 0;
  int m = 0;
  std::string solver;
  Tfn makespan;  // componentwise mean over repeats
  double defuzz = 0;
  double z_value = 0;
  double seconds = 0;  // mean wall time per run
};

struct BenchInstance {
  std::string name;
  Instance inst;
};

struct BenchConfig {
  std::vector<std::string> solvers{"emarm", "ga", "pso"};
  int repeats = 30;
  std::uint64_t seed = 0;
  int k = 0;  // sampled rollouts for emarm on top of greedy
  GAConfig ga;
  PSOConfig pso;
  RankConfig rank;
  PolicyConfig policy;
  std::optional<NamedParams<float>> model;
  int workers = 1;

  void validate() const;
};

std::vector<BenchRecord> bench(std::span<const BenchInstance> instances, const BenchConfig& cfg);

inline constexpr const char* kBenchHeader = "instance,size,solver,t1,t2,t3,defuzz,z_value,seconds";
std::string csv_row(const BenchRecord& r);

/// Mean seconds per (size, solver): one row per size in first-seen order,
/// one column per solver.
struct TimingTable {
  std::vector<std::string> solvers;
  std::vector<std::string> sizes;
  std::vector<std::vector<double>> seconds;  // [size][solver]
};

TimingTable timing_table(std::span<const BenchRecord> records);
std::string format_timing_tsv(const TimingTable& table);

}  // namespace fjs
