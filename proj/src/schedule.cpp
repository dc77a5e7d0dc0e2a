#include "fjs/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fjs {

bool ScheduleState::finished(int job) const {
  return next_pos[static_cast<std::size_t>(job)] >= static_cast<int>(machine_fc.size());
}

bool ScheduleState::complete() const { return sequence.size() == op_end.size(); }

int ScheduleState::unfinished_count() const {
  int count = 0;
  for (std::size_t j = 0; j < next_pos.size(); ++j) count += finished(static_cast<int>(j)) ? 0 : 1;
  return count;
}

ScheduleState init_state(const Instance& inst) {
  ScheduleState s;
  s.next_pos.assign(static_cast<std::size_t>(inst.jobs()), 0);
  s.job_fc.assign(static_cast<std::size_t>(inst.jobs()), kZero);
  s.machine_fc.assign(static_cast<std::size_t>(inst.machines()), kZero);
  s.sequence.reserve(static_cast<std::size_t>(inst.size()));
  s.op_start.assign(static_cast<std::size_t>(inst.size()), std::nullopt);
  s.op_end.assign(static_cast<std::size_t>(inst.size()), std::nullopt);
  return s;
}

void step(ScheduleState& state, int job, const Instance& inst, const RankConfig& cfg) {
  if (job < 0 || job >= inst.jobs()) throw PreconditionError("step: job " + std::to_string(job) + " out of range");
  auto& pos = state.next_pos[static_cast<std::size_t>(job)];
  if (pos >= inst.machines()) throw PreconditionError("step: job " + std::to_string(job) + " is already finished");

  const OperationRef& op = inst.op(job, pos);
  auto& machine_fc = state.machine_fc[static_cast<std::size_t>(op.machine)];
  auto& job_fc = state.job_fc[static_cast<std::size_t>(job)];
  // job_fc is ZERO before the first operation, so it doubles as the predecessor completion.
  const Tfn start = fuzzy_max(job_fc, machine_fc, cfg);
  const Tfn end = start + op.time;

  state.op_start[static_cast<std::size_t>(op.op_id)] = start;
  state.op_end[static_cast<std::size_t>(op.op_id)] = end;
  job_fc = end;
  machine_fc = end;
  ++pos;
  state.sequence.push_back(job);
}

Tfn fuzzy_makespan(const ScheduleState& state, const RankConfig& cfg) {
  Tfn best = kZero;
  bool any = false;
  for (const auto& end : state.op_end) {
    if (!end) continue;
    best = any ? fuzzy_max(best, *end, cfg) : *end;
    any = true;
  }
  return best;
}

Tfn fuzzy_makespan(const Schedule& schedule, const RankConfig& cfg) {
  if (schedule.ends.empty()) return kZero;
  Tfn best = schedule.ends.front();
  for (const auto& end : schedule.ends) best = fuzzy_max(best, end, cfg);
  return best;
}

void validate_sequence(const Instance& inst, std::span<const int> sequence) {
  if (sequence.size() != static_cast<std::size_t>(inst.size()))
    throw ValidationError("sequence has length " + std::to_string(sequence.size()) + ", expected " +
                          std::to_string(inst.size()));
  std::vector<int> count(static_cast<std::size_t>(inst.jobs()), 0);
  for (int j : sequence) {
    if (j < 0 || j >= inst.jobs()) throw ValidationError("sequence contains unknown job " + std::to_string(j));
    ++count[static_cast<std::size_t>(j)];
  }
  std::string bad;
  for (int j = 0; j < inst.jobs(); ++j) {
    if (count[static_cast<std::size_t>(j)] != inst.machines())
      bad += (bad.empty() ? "" : ", ") + std::to_string(j) + " (x" + std::to_string(count[static_cast<std::size_t>(j)]) + ")";
  }
  if (!bad.empty())
    throw ValidationError("each job must appear " + std::to_string(inst.machines()) + " times; offending jobs: " + bad);
}

Schedule to_schedule(const ScheduleState& state, const RankConfig& cfg) {
  if (!state.complete()) throw PreconditionError("schedule is incomplete");
  Schedule out;
  out.sequence = state.sequence;
  out.starts.reserve(state.op_start.size());
  out.ends.reserve(state.op_end.size());
  for (std::size_t i = 0; i < state.op_end.size(); ++i) {
    out.starts.push_back(*state.op_start[i]);
    out.ends.push_back(*state.op_end[i]);
  }
  out.makespan = fuzzy_makespan(state, cfg);
  return out;
}

Schedule decode(const Instance& inst, std::span<const int> sequence, const RankConfig& cfg) {
  validate_sequence(inst, sequence);
  ScheduleState state = init_state(inst);
  for (int job : sequence) step(state, job, inst, cfg);
  return to_schedule(state, cfg);
}

std::optional<std::uint64_t> sequence_count(int n, int m) {
  // Product of binomials C(k*m, m) for k = 1..n, each exact in 128-bit.
  unsigned __int128 total = 1;
  const unsigned __int128 cap = std::numeric_limits<std::uint64_t>::max();
  for (int k = 1; k <= n; ++k) {
    unsigned __int128 binom = 1;
    const int top = k * m;
    for (int i = 1; i <= m; ++i) {
      binom = binom * static_cast<unsigned>(top - m + i) / static_cast<unsigned>(i);
      if (binom > cap) return std::nullopt;
    }
    total *= binom;
    if (total > cap) return std::nullopt;
  }
  return static_cast<std::uint64_t>(total);
}

OptimumResult brute_force_optimum(const Instance& inst, const RankConfig& cfg, std::uint64_t limit) {
  const auto total = sequence_count(inst.jobs(), inst.machines());
  if (!total || *total > limit)
    throw ConfigError("brute force refused: " + (total ? std::to_string(*total) : std::string("more than 2^64")) +
                      " sequences exceed limit " + std::to_string(limit));

  std::vector<int> seq;
  seq.reserve(static_cast<std::size_t>(inst.size()));
  for (int j = 0; j < inst.jobs(); ++j) seq.insert(seq.end(), static_cast<std::size_t>(inst.machines()), j);

  OptimumResult best;
  double best_z = 0;
  do {
    ScheduleState state = init_state(inst);
    for (int job : seq) step(state, job, inst, cfg);
    const double z = z_value(fuzzy_makespan(state, cfg), cfg);
    if (best.count == 0 || z < best_z) {
      best_z = z;
      best.schedule = to_schedule(state, cfg);
    }
    ++best.count;
  } while (std::next_permutation(seq.begin(), seq.end()));
  return best;
}

namespace {

/// Operations per machine in the order the sequence placed them.
std::vector<std::vector<int>> machine_order(const Instance& inst, std::span<const int> sequence) {
  std::vector<std::vector<int>> order(static_cast<std::size_t>(inst.machines()));
  std::vector<int> pos(static_cast<std::size_t>(inst.jobs()), 0);
  for (int job : sequence) {
    const auto& op = inst.op(job, pos[static_cast<std::size_t>(job)]++);
    order[static_cast<std::size_t>(op.machine)].push_back(op.op_id);
  }
  return order;
}

}  // namespace

std::vector<std::string> feasibility_violations(const Instance& inst, const Schedule& schedule, const RankConfig& cfg,
                                                FeasibilityLevel level) {
  std::vector<std::string> out;
  const auto scorer = [&](bool crisp) {
    return [&cfg, crisp](const Tfn& t) { return crisp ? defuzz(t) : z_value(t, cfg); };
  };
  const auto score = scorer(level == FeasibilityLevel::defuzz);
  const auto machine_score = scorer(level != FeasibilityLevel::z_value);
  const auto at_least = [](auto&& f, const Tfn& later, const Tfn& earlier) {
    return f(later) >= f(earlier) - 1e-9 * (1.0 + std::abs(f(earlier)));
  };

  if (schedule.starts.size() != static_cast<std::size_t>(inst.size()) || schedule.ends.size() != schedule.starts.size()) {
    out.push_back("schedule does not cover every operation");
    return out;
  }
  for (const auto& op : inst.ops()) {
    const auto i = static_cast<std::size_t>(op.op_id);
    if (schedule.ends[i] != schedule.starts[i] + op.time) out.push_back("op " + std::to_string(op.op_id) + ": end != start + time");
    if (!(score(schedule.starts[i]) >= 0)) out.push_back("op " + std::to_string(op.op_id) + ": negative start");
    if (op.position > 0 && !at_least(score, schedule.starts[i], schedule.ends[i - 1]))
      out.push_back("op " + std::to_string(op.op_id) + ": starts before its job predecessor completes");
  }
  for (const auto& ops : machine_order(inst, schedule.sequence)) {
    for (std::size_t k = 1; k < ops.size(); ++k) {
      const auto prev = static_cast<std::size_t>(ops[k - 1]);
      const auto cur = static_cast<std::size_t>(ops[k]);
      if (!at_least(machine_score, schedule.starts[cur], schedule.ends[prev]))
        out.push_back("op " + std::to_string(ops[k]) + ": overlaps op " + std::to_string(ops[k - 1]) + " on machine " +
                      std::to_string(inst.op(ops[k]).machine));
    }
  }
  return out;
}

nlohmann::json export_gantt(const Schedule& schedule, const Instance& inst) {
  if (schedule.sequence.size() != static_cast<std::size_t>(inst.size()) ||
      schedule.starts.size() != static_cast<std::size_t>(inst.size()))
    throw PreconditionError("export_gantt: schedule is incomplete");
  const auto tfn = [](const Tfn& t) { return nlohmann::json::array({t.a1, t.a2, t.a3}); };
  nlohmann::json machines = nlohmann::json::array();
  const auto order = machine_order(inst, schedule.sequence);
  for (std::size_t k = 0; k < order.size(); ++k) {
    nlohmann::json bars = nlohmann::json::array();
    for (int id : order[k]) {
      bars.push_back({{"op_id", id},
                      {"job", inst.op(id).job},
                      {"start", tfn(schedule.starts[static_cast<std::size_t>(id)])},
                      {"end", tfn(schedule.ends[static_cast<std::size_t>(id)])}});
    }
    machines.push_back({{"machine", k}, {"bars", std::move(bars)}});
  }
  return {{"n", inst.jobs()},
          {"m", inst.machines()},
          {"sequence", schedule.sequence},
          {"makespan", tfn(schedule.makespan)},
          {"machines", std::move(machines)}};
}

}  // namespace fjs
