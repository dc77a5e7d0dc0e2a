#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fjs/instance.hpp"
#include "support.hpp"

using namespace fjs;

TEST_CASE("op numbering") {
  const Instance inst = test::two_by_two();
  CHECK(inst.size() == 4);
  for (const auto& op : inst.ops()) CHECK(op.op_id == op.job * inst.machines() + op.position);
  CHECK(inst.op(1, 0).machine == 1);
  CHECK(inst.op(1, 1).time == Tfn{2, 2, 2});
  CHECK(inst.first_op(1) == 2);
  CHECK(inst.last_op(1) == 3);
}

TEST_CASE("instance validation") {
  CHECK_THROWS_AS(Instance({{0, 0}}, {{{1, 1, 1}, {1, 1, 1}}}), ConfigError);
  CHECK_THROWS_AS(Instance({{0, 1}}, {{{2, 1, 3}, {1, 1, 1}}}), ConfigError);
  CHECK_THROWS_AS(Instance({{0, 1}}, {{{0, 1, 3}, {1, 1, 1}}}), ConfigError);
}

TEST_CASE("disjunctive graph") {
  const auto g1 = build_graph(Instance({{0, 1}}, {{{1, 1, 1}, {2, 2, 2}}}));
  CHECK(g1.conjunctive_edges == std::vector<std::pair<int, int>>{{0, 1}});
  CHECK(g1.machine_cliques == std::vector<std::vector<int>>{{0}, {1}});

  const auto g2 = build_graph(test::two_by_two());
  CHECK(g2.conjunctive_edges.size() == 2);
  CHECK(g2.machine_cliques == std::vector<std::vector<int>>{{0, 3}, {1, 2}});

  const auto g3 = build_graph(generate(3, 3, 1));
  CHECK(g3.conjunctive_edges.size() == 6);
  CHECK(g3.machine_cliques.size() == 3);
  for (const auto& c : g3.machine_cliques) CHECK(c.size() == 3);

  for (auto [n, m] : {std::pair{4, 3}, std::pair{6, 6}, std::pair{10, 5}}) {
    const Instance inst = generate(n, m, 9);
    const auto g = build_graph(inst);
    std::size_t undirected = g.conjunctive_edges.size();
    for (const auto& c : g.machine_cliques) undirected += c.size() * (c.size() - 1) / 2;
    CHECK(undirected == static_cast<std::size_t>(n * (m - 1) + m * n * (n - 1) / 2));
    std::vector<int> seen(static_cast<std::size_t>(inst.size()), 0);
    for (const auto& c : g.machine_cliques)
      for (int op : c) ++seen[static_cast<std::size_t>(op)];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    const auto edges = attention_edges(g, inst.size());
    CHECK(edges.size() == 2 * undirected + static_cast<std::size_t>(inst.size()));
  }
}

TEST_CASE("generator") {
  CHECK(generate(2, 2, 7) == generate(2, 2, 7));
  CHECK_FALSE(generate(5, 5, 7) == generate(5, 5, 8));

  const Instance big = generate(10, 10, 3);
  CHECK(big.size() == 100);
  std::vector<int> use(10, 0);
  for (const auto& op : big.ops()) {
    ++use[static_cast<std::size_t>(op.machine)];
    CHECK(1 <= op.time.a1);
    CHECK(op.time.a1 <= op.time.a2);
    CHECK(op.time.a2 <= op.time.a3);
    CHECK(op.time.a2 <= 99);
  }
  for (int u : use) CHECK(u == 10);

  for (int n : {10, 15, 20}) CHECK(generate(n, n, 1).size() == n * n);
  CHECK_THROWS_AS(generate(0, 2, 1), ConfigError);
  CHECK_THROWS_AS(generate(2, 2, 1, {1.2, 1.3}), ConfigError);
  CHECK_THROWS_AS(generate(2, 2, 1, {0.9, 0.95}), ConfigError);
}

TEST_CASE("text format") {
  const Instance parsed = parse_instance("2 2\n0 1 2 3  1 2 3 4\n1 1 1 1  0 2 2 2\n");
  CHECK(parsed == test::two_by_two());

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = generate(1 + static_cast<int>(seed % 5), 1 + static_cast<int>(seed % 4), seed, {0.5, 2.0});
    CHECK(parse_instance(format_instance(inst)) == inst);
    CHECK(instance_from_json(to_json(inst)) == inst);
  }
  const Instance scaled = generate(3, 3, 4).map_times([](Tfn t) { return Tfn{t.a1 / 3, t.a2 / 3, t.a3 / 3}; });
  CHECK(parse_instance(format_instance(scaled)) == scaled);

  auto error_of = [](const std::string& text) {
    try {
      parse_instance(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("2 2\n0 1 1 1 0 1 1 1\n1 1 1 1 0 1 1 1\n").find("line 2") != std::string::npos);
  CHECK(error_of("2 x\n").find("line 1") != std::string::npos);
  CHECK(error_of("1 2\n0 3 2 4 1 1 1 1\n").find("line 2") != std::string::npos);
  CHECK(error_of("1 2\n0 1 2 3 1 1 2 2\n") .empty());
  CHECK_FALSE(error_of("1 2\n0 1 2 3 1 1 2\n").empty());
  CHECK_FALSE(error_of("1 1\n0 1 1 1\n5\n").empty());
}

TEST_CASE("file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "fjs_instance_test";
  std::filesystem::create_directories(dir);
  const Instance inst = generate(4, 3, 21);
  write_instance(inst, dir / "a.txt");
  write_instance(inst, dir / "a.json");
  CHECK(read_instance(dir / "a.txt") == inst);
  CHECK(read_instance(dir / "a.json") == inst);
  CHECK(read_instance(dir / "a.json").seed() == inst.seed());
  std::filesystem::remove_all(dir);
}
