#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fjs/fuzzy.hpp"

namespace fjs {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OperationRef {
  int op_id = 0;
  int job = 0;
  int position = 0;
  int machine = 0;
  Tfn time;

  friend bool operator==(const OperationRef&, const OperationRef&) = default;
};

/// Job shop instance with n jobs and m machines; every job visits every
/// machine once. Operations are numbered op_id = job*m + position.
class Instance {
 public:
  Instance() = default;

  /// `machines[j][p]` and `times[j][p]` describe position p of job j.
  /// Throws ConfigError when the rows are not machine permutations or a
  /// time is not a valid TFN.
  Instance(const std::vector<std::vector<int>>& machines, const std::vector<std::vector<Tfn>>& times,
           std::optional<std::uint64_t> seed = std::nullopt);

  int jobs() const { return n_; }
  int machines() const { return m_; }
  int size() const { return n_ * m_; }

  const OperationRef& op(int op_id) const { return ops_[static_cast<std::size_t>(op_id)]; }
  const OperationRef& op(int job, int position) const { return op(job * m_ + position); }
  const std::vector<OperationRef>& ops() const { return ops_; }

  int first_op(int job) const { return job * m_; }
  int last_op(int job) const { return job * m_ + m_ - 1; }

  std::optional<std::uint64_t> seed() const { return seed_; }

  /// Same instance with every processing time replaced by f(time).
  template <typename F>
  Instance map_times(F&& f) const {
    Instance out = *this;
    for (auto& o : out.ops_) o.time = f(o.time);
    return out;
  }

  /// Equality of shape and operations; the seed is provenance only.
  friend bool operator==(const Instance& a, const Instance& b) {
    return a.n_ == b.n_ && a.m_ == b.m_ && a.ops_ == b.ops_;
  }

 private:
  int n_ = 0;
  int m_ = 0;
  std::vector<OperationRef> ops_;
  std::optional<std::uint64_t> seed_;
};

struct DisjunctiveGraph {
  /// Intra-job precedence arcs (op, next op of the same job).
  std::vector<std::pair<int, int>> conjunctive_edges;
  /// Operations grouped by machine, in job order.
  std::vector<std::vector<int>> machine_cliques;
};

DisjunctiveGraph build_graph(const Instance& inst);

/// Directed message-passing edges (src, dst): conjunctive arcs in both
/// directions, every ordered pair inside a machine clique, and self-loops.
std::vector<std::pair<int, int>> attention_edges(const DisjunctiveGraph& graph, int num_ops);

struct TimeSpread {
  double lo = 0.85;
  double hi = 1.30;
};

/// Seeded random instance: uniform machine permutations, integer modal
/// times in [1, 99] and multiplicative lower/upper spreads.
Instance generate(int n, int m, std::uint64_t seed, TimeSpread spread = {});

Instance parse_instance(const std::string& text);
std::string format_instance(const Instance& inst);

Instance read_instance(const std::filesystem::path& path);
void write_instance(const Instance& inst, const std::filesystem::path& path);

nlohmann::json to_json(const Instance& inst);
Instance instance_from_json(const nlohmann::json& doc);

}  // namespace fjs
