#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fjs/fuzzy.hpp"
#include "fjs/instance.hpp"

namespace fjs {

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Partial list schedule. Job ids in `sequence` are 0-based.
struct ScheduleState {
  std::vector<int> next_pos;
  std::vector<Tfn> job_fc;
  std::vector<Tfn> machine_fc;
  std::vector<int> sequence;
  std::vector<std::optional<Tfn>> op_start;
  std::vector<std::optional<Tfn>> op_end;

  bool finished(int job) const;
  bool complete() const;
  int unfinished_count() const;
};

struct Schedule {
  std::vector<int> sequence;
  std::vector<Tfn> starts;
  std::vector<Tfn> ends;
  Tfn makespan;
};

ScheduleState init_state(const Instance& inst);

/// Schedules the ready operation of `job` at the fuzzy max of its
/// predecessor's completion and its machine's availability.
void step(ScheduleState& state, int job, const Instance& inst, const RankConfig& cfg = {});

/// Fuzzy max over all scheduled completion times; ZERO when nothing is scheduled.
Tfn fuzzy_makespan(const ScheduleState& state, const RankConfig& cfg = {});
Tfn fuzzy_makespan(const Schedule& schedule, const RankConfig& cfg = {});

/// Throws ValidationError unless every job appears exactly m times.
void validate_sequence(const Instance& inst, std::span<const int> sequence);

Schedule decode(const Instance& inst, std::span<const int> sequence, const RankConfig& cfg = {});

Schedule to_schedule(const ScheduleState& state, const RankConfig& cfg = {});

/// Number of distinct job-repetition sequences, N! / (m!)^n; nullopt on overflow.
std::optional<std::uint64_t> sequence_count(int n, int m);

struct OptimumResult {
  Schedule schedule;
  std::uint64_t count = 0;
};

/// Exhaustive search over distinct job-repetition sequences, minimizing the
/// Z-value of the makespan. Refuses with ConfigError above `limit`.
OptimumResult brute_force_optimum(const Instance& inst, const RankConfig& cfg, std::uint64_t limit);

/// Violations of the start-time constraints of a decoded schedule: start
/// times nonnegative, job precedence, and machine non-overlap along the
/// machine processing order. `level` picks the scalar the fuzzy ">=" is
/// judged on; machine_defuzz judges start and precedence on Z-values and
/// machine overlap on defuzzified values.
enum class FeasibilityLevel { z_value, defuzz, machine_defuzz };
std::vector<std::string> feasibility_violations(const Instance& inst, const Schedule& schedule, const RankConfig& cfg,
                                                FeasibilityLevel level = FeasibilityLevel::z_value);

/// Per-machine, time-ordered bars {op_id, job, start, end}.
nlohmann::json export_gantt(const Schedule& schedule, const Instance& inst);

}  // namespace fjs
