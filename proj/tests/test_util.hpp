#pragma once

#include <complex>
#include <vector>

#include "pdiae/grid.hpp"
#include "pdiae/rng.hpp"

namespace pdiae::testutil {

inline ComplexGrid random_grid(const Shape& sizes, std::uint64_t seed) {
  Rng rng(seed);
  ComplexGrid g(sizes);
  for (std::size_t i = 0; i < g.numel(); ++i) {
    g.values.re[i] = rng.uniform(-1.0, 1.0);
    g.values.im[i] = rng.uniform(-1.0, 1.0);
  }
  return g;
}

inline RealArray random_array(const Shape& shape, std::uint64_t seed,
                              double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  RealArray a(shape);
  for (auto& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

// Random 1-d trigonometric polynomial with modes |k| <= max_degree, returned
// as an exact sampler so the same function can be placed on any grid.
struct TrigPoly1D {
  std::vector<std::complex<double>> coeff;  // index i -> mode k = i - max_deg
  int max_deg;

  std::complex<double> operator()(double x) const {
    std::complex<double> acc{0.0, 0.0};
    for (int i = 0; i < (int)coeff.size(); ++i) {
      const double k = double(i - max_deg);
      acc += coeff[i] * std::polar(1.0, 2.0 * 3.141592653589793238462643 * k * x);
    }
    return acc;
  }

  ComplexGrid sample(std::size_t s) const {
    ComplexGrid g(Shape{s});
    for (std::size_t j = 0; j < s; ++j) {
      const auto v = (*this)(double(j) / double(s));
      g.values.re[j] = v.real();
      g.values.im[j] = v.imag();
    }
    return g;
  }
};

inline TrigPoly1D random_trig_poly(int max_deg, std::uint64_t seed) {
  Rng rng(seed);
  TrigPoly1D p;
  p.max_deg = max_deg;
  p.coeff.resize(2 * max_deg + 1);
  for (auto& c : p.coeff)
    c = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return p;
}

// 2-d random trigonometric polynomial, modes |k0|,|k1| <= max_degree.
struct TrigPoly2D {
  std::vector<std::complex<double>> coeff;  // (2D+1)^2 row-major
  int max_deg;

  std::complex<double> operator()(double x0, double x1) const {
    const int w = 2 * max_deg + 1;
    std::complex<double> acc{0.0, 0.0};
    for (int i0 = 0; i0 < w; ++i0)
      for (int i1 = 0; i1 < w; ++i1) {
        const double k0 = double(i0 - max_deg), k1 = double(i1 - max_deg);
        acc += coeff[i0 * w + i1] *
               std::polar(1.0, 2.0 * 3.141592653589793238462643 *
                                   (k0 * x0 + k1 * x1));
      }
    return acc;
  }

  ComplexGrid sample(std::size_t s) const {
    ComplexGrid g(Shape{s, s});
    for (std::size_t j0 = 0; j0 < s; ++j0)
      for (std::size_t j1 = 0; j1 < s; ++j1) {
        const auto v = (*this)(double(j0) / double(s), double(j1) / double(s));
        g.values.re[j0 * s + j1] = v.real();
        g.values.im[j0 * s + j1] = v.imag();
      }
    return g;
  }
};

inline TrigPoly2D random_trig_poly_2d(int max_deg, std::uint64_t seed) {
  Rng rng(seed);
  TrigPoly2D p;
  p.max_deg = max_deg;
  const int w = 2 * max_deg + 1;
  p.coeff.resize((std::size_t)w * w);
  for (auto& c : p.coeff)
    c = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  return p;
}

}  // namespace pdiae::testutil
