#include "fjs/features.hpp"

#include <vector>

namespace fjs {

PriorMatrix op_priors(const Instance& inst) {
  const int n = inst.jobs();
  const int m = inst.machines();
  PriorMatrix x(inst.size(), kPriorWidth);

  std::vector<Quartiles> job_q(static_cast<std::size_t>(n));
  std::vector<Quartiles> machine_q(static_cast<std::size_t>(m));
  {
    std::vector<std::vector<Tfn>> by_machine(static_cast<std::size_t>(m));
    std::vector<Tfn> row;
    for (int j = 0; j < n; ++j) {
      row.clear();
      for (int p = 0; p < m; ++p) {
        const auto& o = inst.op(j, p);
        row.push_back(o.time);
        by_machine[static_cast<std::size_t>(o.machine)].push_back(o.time);
      }
      job_q[static_cast<std::size_t>(j)] = quartiles_defuzz(row);
    }
    for (int k = 0; k < m; ++k) machine_q[static_cast<std::size_t>(k)] = quartiles_defuzz(by_machine[static_cast<std::size_t>(k)]);
  }

  for (int j = 0; j < n; ++j) {
    double total = 0;
    for (int p = 0; p < m; ++p) total += defuzz(inst.op(j, p).time);
    double done = 0;
    for (int p = 0; p < m; ++p) {
      const auto& o = inst.op(j, p);
      const double d = defuzz(o.time);
      done += d;
      double rest = 0;
      for (int q = p + 1; q < m; ++q) rest += defuzz(inst.op(j, q).time);
      const Quartiles& jq = job_q[static_cast<std::size_t>(j)];
      const Quartiles& mq = machine_q[static_cast<std::size_t>(o.machine)];
      x.row(o.op_id) << o.time.a1, o.time.a2, o.time.a3, d, done / total, rest / total, jq.q1, jq.q2, jq.q3, mq.q1,
          mq.q2, mq.q3, d - jq.q1, d - jq.q2, d - jq.q3, d - mq.q1, d - mq.q2, d - mq.q3;
    }
  }
  return x;
}

ContextMatrix job_contexts(const Instance& inst, const ScheduleState& state, const RankConfig& cfg) {
  const int n = inst.jobs();
  const int m = inst.machines();
  ContextMatrix c = ContextMatrix::Zero(n, kContextWidth);

  Tfn job_max = state.job_fc.front();
  Tfn job_sum = kZero;
  for (const Tfn& t : state.job_fc) {
    job_max = fuzzy_max(job_max, t, cfg);
    job_sum += t;
  }
  Tfn machine_max = state.machine_fc.front();
  Tfn machine_sum = kZero;
  for (const Tfn& t : state.machine_fc) {
    machine_max = fuzzy_max(machine_max, t, cfg);
    machine_sum += t;
  }
  const double job_max_d = defuzz(job_max);
  const double machine_max_d = defuzz(machine_max);
  const double job_mean = defuzz(job_sum) / n;
  const double machine_mean = defuzz(machine_sum) / m;
  const Quartiles jq = quartiles_defuzz(state.job_fc);
  const Quartiles mq = quartiles_defuzz(state.machine_fc);

  for (int j = 0; j < n; ++j) {
    if (state.finished(j)) continue;
    const auto& ready = inst.op(j, state.next_pos[static_cast<std::size_t>(j)]);
    // The job's completion is its scheduled predecessor's completion (ZERO before the first op).
    const double pred = defuzz(state.job_fc[static_cast<std::size_t>(j)]);
    const double mach = defuzz(state.machine_fc[static_cast<std::size_t>(ready.machine)]);
    c.row(j) << pred - mach, job_max_d != 0 ? pred / job_max_d : 0.0, pred - job_mean, pred - jq.q1, pred - jq.q2,
        pred - jq.q3, machine_max_d != 0 ? mach / machine_max_d : 0.0, mach - machine_mean, mach - mq.q1,
        mach - mq.q2, mach - mq.q3;
  }
  return c;
}

}  // namespace fjs
