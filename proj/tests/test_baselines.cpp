#include <doctest.h>

#include <map>

#include "fjs/baselines.hpp"
#include "support.hpp"

using namespace fjs;

namespace {

bool valid_for(const std::vector<int>& seq, int n, int m) {
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (int j : seq) {
    if (j < 0 || j >= n) return false;
    ++count[static_cast<std::size_t>(j)];
  }
  return seq.size() == static_cast<std::size_t>(n * m) && std::all_of(count.begin(), count.end(), [m](int c) { return c == m; });
}

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i] > trace[i - 1]) return false;
  return true;
}

}  // namespace

TEST_CASE("operators keep sequences valid") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const int m = 1 + static_cast<int>(rng.below(6));
    const Instance inst = generate(n, m, rng.next());
    const auto a = random_sequence(inst, rng);
    const auto b = random_sequence(inst, rng);
    std::vector<bool> keep(static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < keep.size(); ++j) keep[j] = rng.uniform() < 0.5;
    auto child = job_order_crossover(a, b, keep);
    CHECK(valid_for(child, n, m));
    for (std::size_t i = 0; i < a.size(); ++i)
      if (keep[static_cast<std::size_t>(a[i])]) CHECK(child[i] == a[i]);
    const auto before = child;
    swap_mutation(child, rng);
    CHECK(valid_for(child, n, m));
    if (n > 1 && m * n > 1) CHECK(child != before);
  }
  std::vector<int> same{0, 0, 0};
  swap_mutation(same, rng);
  CHECK(same == std::vector<int>{0, 0, 0});
}

TEST_CASE("random key decoding") {
  const std::vector<double> keys{0.7, 0.2, 0.9, 0.1};
  CHECK(decode_random_keys(keys, repetition_multiset(2, 2)) == std::vector<int>{1, 0, 1, 0});
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5)), m = 1 + static_cast<int>(rng.below(5));
    std::vector<double> k(static_cast<std::size_t>(n * m));
    for (auto& v : k) v = rng.uniform(-3, 3);
    CHECK(valid_for(decode_random_keys(k, repetition_multiset(n, m)), n, m));
  }
}

TEST_CASE("configs") {
  GAConfig ga;
  CHECK(ga.population == 100);
  CHECK(ga.iterations == 100);
  CHECK(ga.crossover_prob == 0.7);
  CHECK(ga.mutation_prob == 0.1);
  ga.mutation_prob = 1.5;
  CHECK_THROWS_AS(ga.validate(), ConfigError);
  PSOConfig pso;
  CHECK(pso.c_global == 1.2);
  CHECK(pso.c_local == 1.2);
  CHECK(pso.inertia(0) == 0.9);
  CHECK(pso.inertia(99) == doctest::Approx(0.4));
  pso.c_local = 0;
  CHECK_THROWS_AS(pso.validate(), ConfigError);
}

TEST_CASE("solvers") {
  Rng rng(3);
  for (int trial = 0; trial < 6; ++trial) {
    const Instance inst = generate(3, 3, rng.next());
    const double opt = z_value(brute_force_optimum(inst, {}, 2000).schedule.makespan);
    GAConfig gc;
    gc.seed = rng.next();
    const auto g = ga_solve(inst, gc);
    CHECK(g.trace.size() == 101);
    CHECK(non_increasing(g.trace));
    CHECK(g.trace.back() == z_value(g.schedule.makespan));
    CHECK(z_value(g.schedule.makespan) == doctest::Approx(opt).epsilon(1e-12));
    CHECK(feasibility_violations(inst, g.schedule, {}).empty());

    PSOConfig pc;
    pc.seed = rng.next();
    const auto p = pso_solve(inst, pc);
    CHECK(non_increasing(p.trace));
    CHECK(p.trace.back() == z_value(p.schedule.makespan));
    CHECK(z_value(p.schedule.makespan) >= opt);

    CHECK(ga_solve(inst, gc).schedule.sequence == g.schedule.sequence);
    CHECK(pso_solve(inst, pc).schedule.sequence == p.schedule.sequence);
  }
}

TEST_CASE("bench table") {
  std::vector<BenchInstance> set;
  set.push_back({"a", generate(3, 3, 1)});
  set.push_back({"b", generate(4, 3, 2)});
  BenchConfig cfg;
  cfg.policy.gat1_size = cfg.policy.gat2_size = cfg.policy.mha_size = cfg.policy.state_size = cfg.policy.fnn_hidden = 8;
  cfg.model = init_params(cfg.policy, 3);
  cfg.repeats = 2;
  cfg.ga.population = cfg.pso.population = 10;
  cfg.ga.iterations = cfg.pso.iterations = 5;
  const auto rows = bench(set, cfg);
  CHECK(rows.size() == set.size() * cfg.solvers.size());
  CHECK(rows[0].instance == "a");
  CHECK(rows[0].solver == "emarm");
  CHECK(rows[0].makespan == rollout(set[0].inst, *cfg.model, DecodeMode::greedy, 0, cfg.policy, {}).schedule.makespan);
  CHECK(csv_row(rows[0]).rfind("a,3x3,emarm,", 0) == 0);

  cfg.repeats = 1;
  cfg.solvers = {"ga"};
  const auto once = bench(set, cfg);
  GAConfig gc = cfg.ga;
  gc.seed = derive_seed(cfg.seed, {0, 0});
  CHECK(once[0].makespan == ga_solve(set[0].inst, gc).schedule.makespan);

  const auto table = timing_table(rows);
  CHECK(table.sizes == std::vector<std::string>{"3x3", "4x3"});
  CHECK(table.solvers == std::vector<std::string>{"emarm", "ga", "pso"});
  CHECK(format_timing_tsv(table).rfind("size\temarm\tga\tpso\n", 0) == 0);

  cfg.model.reset();
  cfg.solvers = {"emarm"};
  CHECK_THROWS_AS(bench(set, cfg), ConfigError);
  cfg.solvers = {"sa"};
  CHECK_THROWS_AS(bench(set, cfg), ConfigError);
}
