#include "fjs/baselines.hpp"

#include <algorithm>
#include <numeric>

namespace fjs {

void GAConfig::validate() const {
  if (population < 2) throw ConfigError("GA population must be >= 2");
  if (iterations < 0) throw ConfigError("GA iterations must be >= 0");
  if (!(crossover_prob >= 0 && crossover_prob <= 1)) throw ConfigError("GA crossover probability must be in [0,1]");
  if (!(mutation_prob >= 0 && mutation_prob <= 1)) throw ConfigError("GA mutation probability must be in [0,1]");
}

void PSOConfig::validate() const {
  if (population < 1) throw ConfigError("PSO population must be >= 1");
  if (iterations < 0) throw ConfigError("PSO iterations must be >= 0");
  if (!(c_global > 0 && c_local > 0)) throw ConfigError("PSO learning factors must be > 0");
  if (!(inertia_start > 0 && inertia_end > 0)) throw ConfigError("PSO inertia must be > 0");
}

double PSOConfig::inertia(int iteration) const {
  if (iterations <= 1) return inertia_start;
  const double t = static_cast<double>(iteration) / (iterations - 1);
  return inertia_start + (inertia_end - inertia_start) * t;
}

std::vector<int> repetition_multiset(int jobs, int machines) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(jobs * machines));
  for (int j = 0; j < jobs; ++j) out.insert(out.end(), static_cast<std::size_t>(machines), j);
  return out;
}

std::vector<int> random_sequence(const Instance& inst, Rng& rng) {
  auto seq = repetition_multiset(inst.jobs(), inst.machines());
  rng.shuffle(seq);
  return seq;
}

std::vector<int> job_order_crossover(std::span<const int> a, std::span<const int> b, const std::vector<bool>& keep) {
  std::vector<int> child(a.begin(), a.end());
  std::size_t from = 0;
  for (auto& slot : child) {
    if (keep[static_cast<std::size_t>(slot)]) continue;
    while (keep[static_cast<std::size_t>(b[from])]) ++from;
    slot = b[from++];
  }
  return child;
}

void swap_mutation(std::vector<int>& seq, Rng& rng) {
  if (seq.size() < 2 || std::all_of(seq.begin(), seq.end(), [&](int j) { return j == seq.front(); })) return;
  for (;;) {
    const auto i = rng.below(seq.size());
    const auto k = rng.below(seq.size());
    if (seq[i] != seq[k]) {
      std::swap(seq[i], seq[k]);
      return;
    }
  }
}

std::vector<int> decode_random_keys(std::span<const double> keys, std::span<const int> multiset) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });
  std::vector<int> seq(keys.size());
  for (std::size_t r = 0; r < order.size(); ++r) seq[order[r]] = multiset[r];
  return seq;
}

namespace {

struct Scored {
  std::vector<int> seq;
  double z = 0;
};

double fitness(const Instance& inst, std::span<const int> seq, const RankConfig& rank) {
  return z_value(decode(inst, seq, rank).makespan, rank);
}

std::size_t tournament(const std::vector<Scored>& pop, Rng& rng) {
  const auto a = rng.below(pop.size());
  const auto b = rng.below(pop.size());
  return pop[b].z < pop[a].z ? b : a;
}

}  // namespace

SolveResult ga_solve(const Instance& inst, const GAConfig& cfg, const RankConfig& rank) {
  cfg.validate();
  Rng rng(cfg.seed);
  std::vector<Scored> pop(static_cast<std::size_t>(cfg.population));
  for (auto& ind : pop) {
    ind.seq = random_sequence(inst, rng);
    ind.z = fitness(inst, ind.seq, rank);
  }
  auto best_of = [](const std::vector<Scored>& p) {
    std::size_t b = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p[i].z < p[b].z) b = i;
    return b;
  };
  Scored best = pop[best_of(pop)];
  SolveResult out;
  out.trace.push_back(best.z);

  std::vector<bool> keep(static_cast<std::size_t>(inst.jobs()));
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Scored> next;
    next.reserve(pop.size());
    next.push_back(best);
    while (next.size() < pop.size()) {
      const auto& p1 = pop[tournament(pop, rng)].seq;
      const auto& p2 = pop[tournament(pop, rng)].seq;
      std::vector<int> c1 = p1;
      std::vector<int> c2 = p2;
      if (rng.uniform() < cfg.crossover_prob) {
        for (std::size_t j = 0; j < keep.size(); ++j) keep[j] = rng.uniform() < 0.5;
        c1 = job_order_crossover(p1, p2, keep);
        c2 = job_order_crossover(p2, p1, keep);
      }
      for (auto* c : {&c1, &c2}) {
        if (next.size() == pop.size()) break;
        if (rng.uniform() < cfg.mutation_prob) swap_mutation(*c, rng);
        const double z = fitness(inst, *c, rank);
        next.push_back({std::move(*c), z});
      }
    }
    pop = std::move(next);
    const auto& cand = pop[best_of(pop)];
    if (cand.z < best.z) best = cand;
    out.trace.push_back(best.z);
  }
  out.schedule = decode(inst, best.seq, rank);
  return out;
}

SolveResult pso_solve(const Instance& inst, const PSOConfig& cfg, const RankConfig& rank) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto multiset = repetition_multiset(inst.jobs(), inst.machines());
  const std::size_t dim = multiset.size();
  const auto count = static_cast<std::size_t>(cfg.population);

  std::vector<std::vector<double>> x(count, std::vector<double>(dim));
  std::vector<std::vector<double>> v(count, std::vector<double>(dim));
  std::vector<std::vector<double>> pbest(count);
  std::vector<double> pbest_z(count);
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t d = 0; d < dim; ++d) {
      x[p][d] = rng.uniform();
      v[p][d] = rng.uniform(-0.5, 0.5);
    }
    pbest[p] = x[p];
    pbest_z[p] = fitness(inst, decode_random_keys(x[p], multiset), rank);
  }
  std::size_t g = 0;
  for (std::size_t p = 1; p < count; ++p)
    if (pbest_z[p] < pbest_z[g]) g = p;
  std::vector<double> gbest = pbest[g];
  double gbest_z = pbest_z[g];

  SolveResult out;
  out.trace.push_back(gbest_z);
  for (int it = 0; it < cfg.iterations; ++it) {
    const double w = cfg.inertia(it);
    for (std::size_t p = 0; p < count; ++p) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        v[p][d] = w * v[p][d] + cfg.c_global * r1 * (gbest[d] - x[p][d]) + cfg.c_local * r2 * (pbest[p][d] - x[p][d]);
        x[p][d] += v[p][d];
      }
      const double z = fitness(inst, decode_random_keys(x[p], multiset), rank);
      if (z < pbest_z[p]) {
        pbest_z[p] = z;
        pbest[p] = x[p];
      }
    }
    // Global best is refreshed once per sweep.
    for (std::size_t p = 0; p < count; ++p) {
      if (pbest_z[p] < gbest_z) {
        gbest_z = pbest_z[p];
        gbest = pbest[p];
      }
    }
    out.trace.push_back(gbest_z);
  }
  out.schedule = decode(inst, decode_random_keys(gbest, multiset), rank);
  return out;
}

}  // namespace fjs
