#include <doctest.h>

#include "fjs/schedule.hpp"
#include "support.hpp"

using namespace fjs;

TEST_CASE("initial state") {
  const Instance inst = generate(3, 4, 1);
  const ScheduleState s = init_state(inst);
  CHECK(s.sequence.empty());
  for (const auto& fc : s.job_fc) CHECK(fc == kZero);
  for (const auto& st : s.op_start) CHECK_FALSE(st.has_value());
  CHECK(fuzzy_makespan(s) == kZero);
  CHECK(s.unfinished_count() == 3);
}

TEST_CASE("two by two hand example") {
  const Instance inst = test::two_by_two();
  ScheduleState s = init_state(inst);
  step(s, 0, inst);
  CHECK(s.op_start[0] == kZero);
  CHECK(s.op_end[0] == Tfn{1, 2, 3});
  step(s, 1, inst);
  step(s, 0, inst);
  CHECK(s.op_start[1] == Tfn{1, 2, 3});
  CHECK(s.op_end[1] == Tfn{3, 5, 7});
  step(s, 1, inst);
  CHECK(s.op_end[3] == Tfn{3, 4, 5});
  CHECK(s.complete());
  CHECK_THROWS_AS(step(s, 0, inst), PreconditionError);
  CHECK_THROWS_AS(step(s, 5, inst), PreconditionError);

  const std::vector<int> seq{0, 1, 0, 1};
  const Schedule sched = decode(inst, seq);
  CHECK(sched.makespan == Tfn{3, 5, 7});
  CHECK(fuzzy_makespan(sched) == Tfn{3, 5, 7});

  const auto gantt = export_gantt(sched, inst);
  CHECK(gantt["machines"][0]["bars"][0]["op_id"] == 0);
  CHECK(gantt["machines"][0]["bars"][1]["op_id"] == 3);
  for (const auto& mach : gantt["machines"]) CHECK(mach["bars"].size() == 2);
}

TEST_CASE("single op and single job") {
  const Instance one({{0}}, {{{1, 2, 3}}});
  CHECK(decode(one, std::vector<int>{0}).makespan == Tfn{1, 2, 3});

  const Instance chain({{2, 0, 1}}, {{{1, 2, 3}, {1, 1, 2}, {2, 2, 2}}});
  const auto opt = brute_force_optimum(chain, {}, 10);
  CHECK(opt.count == 1);
  CHECK(opt.schedule.makespan == Tfn{4, 5, 7});
}

TEST_CASE("sequence validation") {
  const Instance inst = test::two_by_two();
  CHECK_THROWS_AS(decode(inst, std::vector<int>{0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(decode(inst, std::vector<int>{0, 0, 0, 1}), ValidationError);
  CHECK_THROWS_AS(decode(inst, std::vector<int>{0, 1, 0, 7}), ValidationError);
  try {
    decode(inst, std::vector<int>{0, 0, 0, 1});
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("offending jobs: 0") != std::string::npos);
  }
  // Fig. 1(b) shape
  CHECK_NOTHROW(decode(generate(3, 3, 2), std::vector<int>{0, 2, 1, 2, 0, 1, 0, 1, 2}));
}

TEST_CASE("brute force counts") {
  CHECK(sequence_count(2, 2) == 6u);
  CHECK(sequence_count(3, 3) == 1680u);
  CHECK_FALSE(sequence_count(20, 20).has_value());
  CHECK(brute_force_optimum(test::two_by_two(), {}, 100).count == 6);
  CHECK(brute_force_optimum(generate(3, 3, 5), {}, 2000).count == 1680);
  CHECK_THROWS_AS(brute_force_optimum(generate(3, 3, 5), {}, 100), ConfigError);
}

TEST_CASE("decoded schedules") {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance inst = generate(1 + static_cast<int>(rng.below(6)), 1 + static_cast<int>(rng.below(6)), rng.next());
    const auto seq = test::random_sequence_for(inst, rng);
    const Schedule a = decode(inst, seq);
    const Schedule b = decode(inst, seq);
    CHECK(a.makespan == b.makespan);
    CHECK(a.ends == b.ends);
    CHECK(feasibility_violations(inst, a, {}).empty());
    for (int op = 0; op < inst.size(); ++op) {
      CHECK(a.ends[op] == a.starts[op] + inst.op(op).time);
      CHECK(z_value(a.makespan) >= z_value(a.ends[op]));
    }
    const auto gantt = export_gantt(a, inst);
    for (const auto& mach : gantt["machines"]) {
      CHECK(mach["bars"].size() == static_cast<std::size_t>(inst.jobs()));
    }
  }
}

TEST_CASE("oracle lower bound") {
  Rng rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    const Instance inst = generate(3, 3, rng.next());
    const double best = z_value(brute_force_optimum(inst, {}, 2000).schedule.makespan);
    for (int i = 0; i < 50; ++i) CHECK(z_value(decode(inst, test::random_sequence_for(inst, rng)).makespan) >= best);
  }
}

TEST_CASE("gantt needs a complete schedule") {
  const Instance inst = test::two_by_two();
  ScheduleState s = init_state(inst);
  step(s, 0, inst);
  CHECK_THROWS(export_gantt(to_schedule(s), inst));
}
