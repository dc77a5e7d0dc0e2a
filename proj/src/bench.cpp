#include "fjs/baselines.hpp"

#include <chrono>
#include <map>
#include <sstream>

#include "fjs/em.hpp"
#include "fjs/parallel.hpp"

namespace fjs {

void BenchConfig::validate() const {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (k < 0) throw ConfigError("k must be >= 0");
  for (const auto& s : solvers) {
    if (s != "emarm" && s != "ga" && s != "pso") throw ConfigError("unknown solver '" + s + "'");
    if (s == "emarm" && !model) throw ConfigError("solver emarm needs a model checkpoint");
  }
  ga.validate();
  pso.validate();
}

std::vector<BenchRecord> bench(std::span<const BenchInstance> instances, const BenchConfig& cfg) {
  cfg.validate();
  std::optional<PolicyRunner> runner;
  if (cfg.model) runner.emplace(*cfg.model, cfg.policy, cfg.rank);

  const std::size_t solvers = cfg.solvers.size();
  const auto repeats = static_cast<std::size_t>(cfg.repeats);
  struct Run {
    Tfn makespan;
    double seconds = 0;
  };
  std::vector<Run> runs(instances.size() * solvers * repeats);
  parallel_for(runs.size(), cfg.workers, [&](std::size_t task) {
    const std::size_t i = task / (solvers * repeats);
    const std::size_t s = task / repeats % solvers;
    const std::size_t r = task % repeats;
    const Instance& inst = instances[i].inst;
    const std::string& name = cfg.solvers[s];
    const std::uint64_t seed = derive_seed(cfg.seed, {i, r});
    const auto t0 = std::chrono::steady_clock::now();
    Schedule schedule;
    if (name == "emarm") {
      const auto res = evaluate_one(*runner, inst, cfg.k, seed);
      schedule = decode(inst, res.best_sequence, cfg.rank);
    } else if (name == "ga") {
      GAConfig ga = cfg.ga;
      ga.seed = seed;
      schedule = ga_solve(inst, ga, cfg.rank).schedule;
    } else {
      PSOConfig pso = cfg.pso;
      pso.seed = seed;
      schedule = pso_solve(inst, pso, cfg.rank).schedule;
    }
    runs[task].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (const auto bad = feasibility_violations(inst, schedule, cfg.rank); !bad.empty())
      throw ValidationError(name + " produced an infeasible schedule on " + instances[i].name + ": " + bad.front());
    runs[task].makespan = schedule.makespan;
  });

  std::vector<BenchRecord> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t s = 0; s < solvers; ++s) {
      BenchRecord rec;
      rec.instance = instances[i].name;
      rec.n = instances[i].inst.jobs();
      rec.m = instances[i].inst.machines();
      rec.solver = cfg.solvers[s];
      for (std::size_t r = 0; r < repeats; ++r) {
        const Run& run = runs[(i * solvers + s) * repeats + r];
        rec.makespan += run.makespan;
        rec.seconds += run.seconds;
      }
      const double inv = 1.0 / static_cast<double>(repeats);
      rec.makespan = {rec.makespan.a1 * inv, rec.makespan.a2 * inv, rec.makespan.a3 * inv};
      rec.seconds *= inv;
      rec.defuzz = defuzz(rec.makespan);
      rec.z_value = z_value(rec.makespan, cfg.rank);
      out.push_back(rec);
    }
  }
  return out;
}

std::string csv_row(const BenchRecord& r) {
  std::ostringstream out;
  out << r.instance << "," << r.n << "x" << r.m << "," << r.solver << "," << format_real(r.makespan.a1) << ","
      << format_real(r.makespan.a2) << "," << format_real(r.makespan.a3) << "," << format_real(r.defuzz) << ","
      << format_real(r.z_value) << "," << format_real(r.seconds);
  return out.str();
}

TimingTable timing_table(std::span<const BenchRecord> records) {
  TimingTable t;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, int>> acc;
  auto index_of = [](std::vector<std::string>& v, const std::string& key) {
    const auto it = std::find(v.begin(), v.end(), key);
    if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
    v.push_back(key);
    return v.size() - 1;
  };
  for (const auto& r : records) {
    const std::size_t size = index_of(t.sizes, std::to_string(r.n) + "x" + std::to_string(r.m));
    const std::size_t solver = index_of(t.solvers, r.solver);
    auto& cell = acc[{size, solver}];
    cell.first += r.seconds;
    ++cell.second;
  }
  t.seconds.assign(t.sizes.size(), std::vector<double>(t.solvers.size(), std::numeric_limits<double>::quiet_NaN()));
  for (const auto& [key, cell] : acc) t.seconds[key.first][key.second] = cell.first / cell.second;
  return t;
}

std::string format_timing_tsv(const TimingTable& table) {
  std::ostringstream out;
  out << "size";
  for (const auto& s : table.solvers) out << "\t" << s;
  out << "\n";
  for (std::size_t i = 0; i < table.sizes.size(); ++i) {
    out << table.sizes[i];
    for (double v : table.seconds[i]) out << "\t" << format_real(v);
    out << "\n";
  }
  return out.str();
}

}  // namespace fjs
