#include <doctest.h>

#include "fjs/features.hpp"
#include "support.hpp"

using namespace fjs;

TEST_CASE("op priors layout") {
  const Instance inst = test::two_by_two();
  const PriorMatrix x = op_priors(inst);
  REQUIRE(x.rows() == 4);
  REQUIRE(x.cols() == kPriorWidth);
  CHECK(x(0, 0) == 1);
  CHECK(x(0, 2) == 3);
  CHECK(x(0, 3) == 2);
  CHECK(x(0, 4) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(x(0, 5) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(x(1, 5) == 0);
  CHECK(x(3, 5) == 0);
  // job 0 defuzz values {2, 3}: quartiles (2.25, 2.5, 2.75)
  CHECK(x(0, 6) == 2.25);
  CHECK(x(0, 8) == 2.75);
  CHECK(x(0, 12) == 2 - 2.25);
  // machine 0 holds ops 0 (defuzz 2) and 3 (defuzz 2)
  CHECK(x(3, 9) == 2);
  CHECK(x(3, 15) == 0);
}

TEST_CASE("constant job has zero job-quartile differences") {
  const Instance inst({{0, 1, 2}}, {{{2, 4, 6}, {2, 4, 6}, {2, 4, 6}}});
  const PriorMatrix x = op_priors(inst);
  for (int r = 0; r < 3; ++r) {
    CHECK(x(r, 6) == 4);
    CHECK(x(r, 7) == 4);
    CHECK(x(r, 8) == 4);
    CHECK(x(r, 12) == 0);
    CHECK(x(r, 13) == 0);
    CHECK(x(r, 14) == 0);
  }
}

TEST_CASE("progress fractions") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance inst = generate(1 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(5)), rng.next());
    const PriorMatrix x = op_priors(inst);
    for (int i = 0; i < inst.size(); ++i) {
      CHECK(x(i, 4) >= 0);
      CHECK(x(i, 4) <= 1);
      CHECK(x(i, 4) + x(i, 5) == doctest::Approx(1).epsilon(1e-12));
    }
    // crisp shift changes the fractions as their sums say
    const double c = 5;
    const Instance shifted = inst.map_times([c](Tfn t) { return t + Tfn::crisp(c); });
    const PriorMatrix y = op_priors(shifted);
    for (int j = 0; j < inst.jobs(); ++j) {
      double total = 0, done = 0;
      for (int p = 0; p < inst.machines(); ++p) total += defuzz(inst.op(j, p).time) + c;
      for (int p = 0; p < inst.machines(); ++p) {
        done += defuzz(inst.op(j, p).time) + c;
        CHECK(y(inst.op(j, p).op_id, 4) == doctest::Approx(done / total).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("job contexts") {
  const Instance inst = test::two_by_two();
  ScheduleState s = init_state(inst);
  const ContextMatrix c0 = job_contexts(inst, s);
  REQUIRE(c0.cols() == kContextWidth);
  CHECK(c0.isZero());

  // job 0 ready at op 1 (machine 1), pred end (1,2,3) defuzz 2; machine 1 fc (1,1,1) defuzz 1
  step(s, 0, inst);
  step(s, 1, inst);
  const ContextMatrix c1 = job_contexts(inst, s);
  CHECK(c1(0, 0) == 1.0);
  CHECK(c1(0, 1) == 1.0);
  CHECK(c1(0, 2) == doctest::Approx(2 - 1.5));
  CHECK(c1(0, 6) == doctest::Approx(1.0 / 2.0));

  step(s, 0, inst);
  const ContextMatrix c2 = job_contexts(inst, s);
  CHECK(c2.row(0).isZero());

  // single machine: the running value is the max
  const Instance single({{0}, {0}}, {{{1, 2, 3}}, {{2, 3, 4}}});
  ScheduleState t = init_state(single);
  step(t, 0, single);
  CHECK(job_contexts(single, t)(1, 6) == 1.0);
}

TEST_CASE("features stay finite") {
  Rng rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = generate(1 + static_cast<int>(rng.below(6)), 1 + static_cast<int>(rng.below(6)), rng.next());
    CHECK(op_priors(inst).allFinite());
    ScheduleState s = init_state(inst);
    for (int job : test::random_sequence_for(inst, rng)) {
      CHECK(job_contexts(inst, s).allFinite());
      step(s, job, inst);
    }
  }
}
