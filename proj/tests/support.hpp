#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fjs/instance.hpp"
#include "fjs/nn/params.hpp"
#include "fjs/rng.hpp"

namespace fjs::test {

// J0 = (M0,(1,2,3)),(M1,(2,3,4)); J1 = (M1,(1,1,1)),(M0,(2,2,2))
inline Instance two_by_two() {
  return Instance({{0, 1}, {1, 0}}, {{{1, 2, 3}, {2, 3, 4}}, {{1, 1, 1}, {2, 2, 2}}});
}

inline Tfn random_tfn(Rng& rng, double scale = 100) {
  double v[3] = {rng.uniform() * scale, rng.uniform() * scale, rng.uniform() * scale};
  std::sort(v, v + 3);
  return {v[0], v[1], v[2]};
}

inline std::vector<int> random_sequence_for(const Instance& inst, Rng& rng) {
  std::vector<int> seq;
  for (int j = 0; j < inst.jobs(); ++j) seq.insert(seq.end(), static_cast<std::size_t>(inst.machines()), j);
  rng.shuffle(seq);
  return seq;
}

struct GradCheck {
  double max_rel = 0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // entries whose +-h window straddles a ReLU kink
};

/// Compares tape gradients of loss(tape, params) with central differences of
/// base step h, Richardson-extrapolated with h/2 so smooth entries carry no
/// O(h^2) truncation error. Relative error per tensor is
/// |analytic - numeric|_inf / max(|analytic|_inf, |numeric|_inf, 1e-5).
/// An entry whose estimate at h disagrees with the one at h/10 has a kink of a
/// piecewise-linear activation inside its window and is counted, not compared.
/// `per_tensor` > 0 restricts the check to that many random entries per tensor.
inline GradCheck grad_check(
    const nn::NamedParams<double>& params,
    const std::function<nn::Var<double>(nn::Tape<double>&, const nn::BoundParams<double>&)>& loss, double h = 1e-3,
    std::size_t per_tensor = 0, std::uint64_t seed = 1) {
  nn::Tape<double> tape;
  nn::BoundParams<double> bound(tape, params, true);
  tape.backward(loss(tape, bound));
  nn::NamedParams<double> analytic = params.zeros_like();
  bound.accumulate_grads(analytic);

  auto eval = [&](const nn::NamedParams<double>& p) {
    nn::Tape<double> t;
    nn::BoundParams<double> b(t, p, false);
    return loss(t, b).value()(0, 0);
  };

  Rng rng(seed);
  GradCheck out;
  nn::NamedParams<double> probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto count = static_cast<std::size_t>(params.value(i).size());
    std::vector<std::size_t> entries(count);
    for (std::size_t e = 0; e < count; ++e) entries[e] = e;
    if (per_tensor > 0 && count > per_tensor) {
      rng.shuffle(entries);
      entries.resize(per_tensor);
    }
    double diff = 0, scale_a = 0, scale_n = 0;
    for (auto e : entries) {
      double* x = probe.value(i).data() + e;
      const double saved = *x;
      auto central = [&](double step) {
        *x = saved + step;
        const double up = eval(probe);
        *x = saved - step;
        const double down = eval(probe);
        *x = saved;
        return (up - down) / (2 * step);
      };
      auto richardson = [&](double step) { return (4 * central(step / 2) - central(step)) / 3; };
      const double numeric = richardson(h);
      const double a = analytic.value(i).data()[e];
      if (std::abs(a - numeric) > 1e-7 * std::max(std::abs(a), 1e-5)) {
        const double fine = richardson(h / 10);
        if (std::abs(fine - numeric) > 1e-6 * std::max(std::abs(fine), 1e-8)) {
          ++out.kinks;
          continue;
        }
      }
      diff = std::max(diff, std::abs(a - numeric));
      scale_a = std::max(scale_a, std::abs(a));
      scale_n = std::max(scale_n, std::abs(numeric));
      ++out.checked;
    }
    out.max_rel = std::max(out.max_rel, diff / std::max({scale_a, scale_n, 1e-5}));
  }
  return out;
}

}  // namespace fjs::test
