#include "fjs/instance.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fjs/rng.hpp"

namespace fjs {

namespace {

void check_rows(const std::vector<std::vector<int>>& machines, const std::vector<std::vector<Tfn>>& times) {
  if (machines.empty()) throw ConfigError("instance has no jobs");
  if (times.size() != machines.size()) throw ConfigError("machine and time rows differ in count");
  const std::size_t m = machines.front().size();
  if (m == 0) throw ConfigError("instance has no machines");
  for (std::size_t j = 0; j < machines.size(); ++j) {
    if (machines[j].size() != m || times[j].size() != m)
      throw ConfigError("job " + std::to_string(j) + " does not have " + std::to_string(m) + " operations");
    std::vector<bool> seen(m, false);
    for (int k : machines[j]) {
      if (k < 0 || static_cast<std::size_t>(k) >= m || seen[static_cast<std::size_t>(k)])
        throw ConfigError("job " + std::to_string(j) + " machine row is not a permutation");
      seen[static_cast<std::size_t>(k)] = true;
    }
    for (const Tfn& t : times[j]) {
      if (!t.valid() || !(t.a1 > 0) || !std::isfinite(t.a3))
        throw ConfigError("job " + std::to_string(j) + " has an invalid processing time " + format_tfn(t));
    }
  }
}

}  // namespace

Instance::Instance(const std::vector<std::vector<int>>& machines, const std::vector<std::vector<Tfn>>& times,
                   std::optional<std::uint64_t> seed)
    : seed_(seed) {
  check_rows(machines, times);
  n_ = static_cast<int>(machines.size());
  m_ = static_cast<int>(machines.front().size());
  ops_.reserve(static_cast<std::size_t>(n_ * m_));
  for (int j = 0; j < n_; ++j) {
    for (int p = 0; p < m_; ++p) {
      ops_.push_back({j * m_ + p, j, p, machines[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)],
                      times[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)]});
    }
  }
}

DisjunctiveGraph build_graph(const Instance& inst) {
  DisjunctiveGraph g;
  g.machine_cliques.resize(static_cast<std::size_t>(inst.machines()));
  for (const auto& o : inst.ops()) {
    if (o.position + 1 < inst.machines()) g.conjunctive_edges.emplace_back(o.op_id, o.op_id + 1);
    g.machine_cliques[static_cast<std::size_t>(o.machine)].push_back(o.op_id);
  }
  return g;
}

std::vector<std::pair<int, int>> attention_edges(const DisjunctiveGraph& graph, int num_ops) {
  std::vector<std::pair<int, int>> edges;
  for (const auto& [a, b] : graph.conjunctive_edges) {
    edges.emplace_back(a, b);
    edges.emplace_back(b, a);
  }
  for (const auto& clique : graph.machine_cliques)
    for (int u : clique)
      for (int v : clique)
        if (u != v) edges.emplace_back(u, v);
  for (int i = 0; i < num_ops; ++i) edges.emplace_back(i, i);
  return edges;
}

Instance generate(int n, int m, std::uint64_t seed, TimeSpread spread) {
  if (n < 1 || m < 1) throw ConfigError("generate: n and m must be positive");
  if (!(spread.lo > 0 && spread.lo <= 1 && spread.hi >= 1))
    throw ConfigError("generate: spread must satisfy 0 < lo <= 1 <= hi");

  Rng rng(seed);
  std::vector<std::vector<int>> machines(static_cast<std::size_t>(n));
  std::vector<std::vector<Tfn>> times(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    auto& row = machines[static_cast<std::size_t>(j)];
    row.resize(static_cast<std::size_t>(m));
    std::iota(row.begin(), row.end(), 0);
    rng.shuffle(row);
    for (int p = 0; p < m; ++p) {
      const double mode = rng.between(1, 99);
      const double u = rng.uniform(spread.lo, 1.0);
      const double v = 1.0 + (spread.hi - 1.0) * (1.0 - rng.uniform());
      const double lo = std::clamp(std::round(mode * u), 1.0, mode);
      const double hi = std::max(std::round(mode * v), mode);
      times[static_cast<std::size_t>(j)].push_back({lo, mode, hi});
    }
  }
  return Instance(machines, times, seed);
}

std::string format_instance(const Instance& inst) {
  std::string out = std::to_string(inst.jobs()) + " " + std::to_string(inst.machines()) + "\n";
  for (int j = 0; j < inst.jobs(); ++j) {
    for (int p = 0; p < inst.machines(); ++p) {
      const auto& o = inst.op(j, p);
      if (p > 0) out += "  ";
      out += std::to_string(o.machine) + " " + format_real(o.time.a1) + " " + format_real(o.time.a2) + " " +
             format_real(o.time.a3);
    }
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  return tokens;
}

template <typename T>
T parse_number(const std::string& tok, int line) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line) + ": malformed number '" + tok + "'");
  return value;
}

}  // namespace

Instance parse_instance(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> std::vector<std::string> {
    while (std::getline(in, line)) {
      ++line_no;
      auto toks = split_tokens(line);
      if (!toks.empty()) return toks;
    }
    return {};
  };

  auto header = next_line();
  if (header.size() != 2) throw ParseError("line " + std::to_string(line_no) + ": expected header 'n m'");
  const int n = parse_number<int>(header[0], line_no);
  const int m = parse_number<int>(header[1], line_no);
  if (n < 1 || m < 1) throw ParseError("line " + std::to_string(line_no) + ": n and m must be positive");

  std::vector<std::vector<int>> machines(static_cast<std::size_t>(n));
  std::vector<std::vector<Tfn>> times(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    auto toks = next_line();
    if (toks.empty()) throw ParseError("line " + std::to_string(line_no + 1) + ": missing row for job " + std::to_string(j));
    if (toks.size() != static_cast<std::size_t>(4 * m))
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(m) +
                       " groups of 'machine a1 a2 a3'");
    std::vector<bool> seen(static_cast<std::size_t>(m), false);
    for (int p = 0; p < m; ++p) {
      const int k = parse_number<int>(toks[static_cast<std::size_t>(4 * p)], line_no);
      if (k < 0 || k >= m || seen[static_cast<std::size_t>(k)])
        throw ParseError("line " + std::to_string(line_no) + ": machine row is not a permutation of 0.." +
                         std::to_string(m - 1));
      seen[static_cast<std::size_t>(k)] = true;
      Tfn t{parse_number<double>(toks[static_cast<std::size_t>(4 * p + 1)], line_no),
            parse_number<double>(toks[static_cast<std::size_t>(4 * p + 2)], line_no),
            parse_number<double>(toks[static_cast<std::size_t>(4 * p + 3)], line_no)};
      if (!t.valid()) throw ParseError("line " + std::to_string(line_no) + ": requires a1 <= a2 <= a3");
      if (!(t.a1 > 0)) throw ParseError("line " + std::to_string(line_no) + ": requires a1 > 0");
      machines[static_cast<std::size_t>(j)].push_back(k);
      times[static_cast<std::size_t>(j)].push_back(t);
    }
  }
  if (!next_line().empty()) throw ParseError("line " + std::to_string(line_no) + ": trailing data after " +
                                             std::to_string(n) + " job rows");
  return Instance(machines, times);
}

Instance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open instance file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    if (path.extension() == ".json") return instance_from_json(nlohmann::json::parse(buf.str()));
    return parse_instance(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write instance file " + path.string());
  if (path.extension() == ".json")
    out << to_json(inst).dump(2) << "\n";
  else
    out << format_instance(inst);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

nlohmann::json to_json(const Instance& inst) {
  nlohmann::json jobs = nlohmann::json::array();
  for (int j = 0; j < inst.jobs(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < inst.machines(); ++p) {
      const auto& o = inst.op(j, p);
      row.push_back({{"machine", o.machine}, {"t", {o.time.a1, o.time.a2, o.time.a3}}});
    }
    jobs.push_back(std::move(row));
  }
  nlohmann::json doc{{"n", inst.jobs()}, {"m", inst.machines()}, {"jobs", std::move(jobs)}};
  doc["seed"] = inst.seed() ? nlohmann::json(*inst.seed()) : nlohmann::json(nullptr);
  return doc;
}

Instance instance_from_json(const nlohmann::json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    const int m = doc.at("m").get<int>();
    const auto& jobs = doc.at("jobs");
    if (n < 1 || m < 1 || jobs.size() != static_cast<std::size_t>(n)) throw ParseError("job count does not match n");
    std::vector<std::vector<int>> machines;
    std::vector<std::vector<Tfn>> times;
    for (const auto& row : jobs) {
      if (row.size() != static_cast<std::size_t>(m)) throw ParseError("job row length does not match m");
      auto& mrow = machines.emplace_back();
      auto& trow = times.emplace_back();
      for (const auto& op : row) {
        mrow.push_back(op.at("machine").get<int>());
        const auto& t = op.at("t");
        trow.push_back({t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()});
      }
    }
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed") && !doc["seed"].is_null()) seed = doc["seed"].get<std::uint64_t>();
    return Instance(machines, times, seed);
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed instance JSON: ") + e.what());
  }
}

}  // namespace fjs
