#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pdiae/rng.hpp"
#include "pdiae/tape.hpp"

namespace pdiae {

// Builds the graph for a scalar objective on the given tape and returns the
// loss node. Must be a pure function of the store contents.
using ScalarFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double h = 1e-5;
  std::size_t max_coords_per_slot = 100;
  std::uint64_t seed = 20240;
  double floor = 1e-12;
};

// Central-difference verification of reverse-mode gradients. Reports the
// worst relative error |analytic - numeric| / max(|analytic|, floor) over the
// sampled coordinates.
inline double grad_check(ParamStore& store, const ScalarFn& f,
                         GradCheckOptions opt = {}) {
  if (opt.h <= 0.0) throw Error("grad_check: step must be positive");

  auto eval = [&]() -> double {
    Tape t(&store);
    const double v = t.scalar_val(f(t));
    if (!std::isfinite(v)) throw Error("grad_check: objective is not finite");
    return v;
  };

  Tape t(&store);
  Gradients analytic = t.backprop(f(t));

  Rng rng(opt.seed);
  double worst = 0.0;
  for (auto& [name, slot] : store.slots) {
    const std::size_t n = slot.numel();
    std::vector<std::size_t> coords;
    if (n <= opt.max_coords_per_slot) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      coords.resize(opt.max_coords_per_slot);
      for (auto& c : coords) c = rng.below(n);
    }
    const RealArray& ga = analytic.at(name);
    for (std::size_t c : coords) {
      const double saved = slot[c];
      slot[c] = saved + opt.h;
      const double fp = eval();
      slot[c] = saved - opt.h;
      const double fm = eval();
      slot[c] = saved;
      const double numeric = (fp - fm) / (2.0 * opt.h);
      const double err =
          std::abs(ga[c] - numeric) / std::max(std::abs(ga[c]), opt.floor);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace pdiae
