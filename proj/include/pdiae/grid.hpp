#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "pdiae/array.hpp"
#include "pdiae/fft.hpp"

namespace pdiae {

// Complex samples of a function on the uniform grid x_j = j/s over [0,1)^d.
struct ComplexGrid {
  Shape sizes;
  ComplexArray values;

  ComplexGrid() = default;
  ComplexGrid(Shape s, ComplexArray v) : sizes(std::move(s)), values(std::move(v)) {
    validate();
  }
  explicit ComplexGrid(Shape s) : sizes(s), values(std::move(s)) { validate(); }

  std::size_t dim() const { return sizes.size(); }
  std::size_t numel() const { return shape_numel(sizes); }

  void validate() const {
    if (sizes.empty() || sizes.size() > 2)
      throw Error("ComplexGrid: dim must be 1 or 2, got " +
                  std::to_string(sizes.size()));
    for (auto s : sizes)
      if (s < 2) throw Error("ComplexGrid: sizes must be >= 2 per axis, got " +
                             shape_str(sizes));
    if (values.shape != sizes)
      throw Error("ComplexGrid: values shape " + shape_str(values.shape) +
                  " != sizes " + shape_str(sizes));
  }
};

// Centered, integral-normalized Fourier coefficients: entry at centered
// position c (per axis) holds mode k = c - floor(modes/2), so coeff(k)
// approximates the integral of a(x) exp(-2*pi*i*k.x) over [0,1)^d.
// Grid-size invariant for band-limited signals.
struct Spectrum {
  Shape modes;
  ComplexArray coeffs;

  std::size_t dim() const { return modes.size(); }
  std::size_t numel() const { return shape_numel(modes); }
};

using IndexMap = std::shared_ptr<const std::vector<std::size_t>>;

namespace spectral_detail {

inline std::size_t std_index_of_mode(long long k, std::size_t n) {
  long long m = k % (long long)n;
  if (m < 0) m += (long long)n;
  return (std::size_t)m;
}

// Flat positions, within a row-major array of shape `big`, of the centered
// sub-block of shape `small`. In centered storage the retained band
// k in [-floor(m/2), ceil(m/2)-1] is contiguous per axis.
inline std::vector<std::size_t> band_positions_raw(const Shape& small,
                                                   const Shape& big) {
  if (small.size() != big.size())
    throw Error("band_positions: rank mismatch");
  const std::size_t d = small.size();
  std::vector<std::size_t> off(d);
  for (std::size_t a = 0; a < d; ++a) {
    if (small[a] > big[a])
      throw Error("band_positions: band " + shape_str(small) +
                  " exceeds container " + shape_str(big));
    off[a] = big[a] / 2 - small[a] / 2;
  }
  std::vector<std::size_t> out(shape_numel(small));
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t pos = 0;
    for (std::size_t a = 0; a < d; ++a) pos = pos * big[a] + (off[a] + idx[a]);
    out[flat] = pos;
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < small[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

// Flat positions in standard DFT order (length sizes[a] per axis) for each
// centered-order entry of a `modes` spectrum embedded in a `sizes` array.
inline std::vector<std::size_t> standard_positions_raw(const Shape& modes,
                                                       const Shape& sizes) {
  if (modes.size() != sizes.size())
    throw Error("standard_positions: rank mismatch");
  const std::size_t d = modes.size();
  for (std::size_t a = 0; a < d; ++a)
    if (modes[a] > sizes[a])
      throw Error("standard_positions: modes " + shape_str(modes) +
                  " exceed grid " + shape_str(sizes));
  std::vector<std::size_t> out(shape_numel(modes));
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t pos = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const long long k = (long long)idx[a] - (long long)(modes[a] / 2);
      pos = pos * sizes[a] + std_index_of_mode(k, sizes[a]);
    }
    out[flat] = pos;
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < modes[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

enum class MapKind { Band, Standard };

inline IndexMap cached_map(MapKind kind, const Shape& from, const Shape& to) {
  static std::mutex mu;
  static std::map<std::tuple<int, Shape, Shape>, IndexMap> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple((int)kind, from, to);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto vec = std::make_shared<std::vector<std::size_t>>(
      kind == MapKind::Band ? band_positions_raw(from, to)
                            : standard_positions_raw(from, to));
  cache[key] = vec;
  return vec;
}

}  // namespace spectral_detail

// Positions of the centered `small` band inside centered `big` storage.
inline IndexMap band_map(const Shape& small, const Shape& big) {
  return spectral_detail::cached_map(spectral_detail::MapKind::Band, small, big);
}

// Positions of centered `modes` coefficients inside a standard-order DFT
// array over `sizes` grid points.
inline IndexMap standard_map(const Shape& modes, const Shape& sizes) {
  return spectral_detail::cached_map(spectral_detail::MapKind::Standard, modes,
                                     sizes);
}

inline ComplexArray gather(const ComplexArray& a, const IndexMap& map,
                           const Shape& out_shape) {
  ComplexArray out(out_shape);
  for (std::size_t i = 0; i < map->size(); ++i) {
    out.re[i] = a.re[(*map)[i]];
    out.im[i] = a.im[(*map)[i]];
  }
  return out;
}

inline ComplexArray embed(const ComplexArray& a, const IndexMap& map,
                          const Shape& out_shape) {
  ComplexArray out(out_shape);
  for (std::size_t i = 0; i < map->size(); ++i) {
    out.re[(*map)[i]] = a.re[i];
    out.im[(*map)[i]] = a.im[i];
  }
  return out;
}

// Forward transform with 1/prod(sizes) normalization; keeps all s modes.
// The normalization makes coefficients approximate integrals, which is what
// keeps them stable when the same signal is sampled on a finer grid.
inline Spectrum fft_forward(const ComplexGrid& g) {
  g.validate();
  ComplexArray work = g.values;
  fft::transform_nd(work, -1);
  const double inv = 1.0 / double(g.numel());
  for (std::size_t i = 0; i < work.numel(); ++i) {
    work.re[i] *= inv;
    work.im[i] *= inv;
  }
  // Reorder standard DFT layout into ascending-k (centered) layout.
  const IndexMap map = standard_map(g.sizes, g.sizes);
  ComplexArray centered(g.sizes);
  for (std::size_t i = 0; i < map->size(); ++i) {
    centered.re[i] = work.re[(*map)[i]];
    centered.im[i] = work.im[(*map)[i]];
  }
  return Spectrum{g.sizes, std::move(centered)};
}

// Trigonometric synthesis of the retained band onto an s-point grid per
// axis. Unnormalized inverse, exact inverse of fft_forward at s == modes.
inline ComplexGrid fft_inverse(const Spectrum& sp, const Shape& sizes) {
  if (sizes.size() != sp.dim())
    throw Error("fft_inverse: rank mismatch " + shape_str(sizes) + " vs " +
                shape_str(sp.modes));
  for (std::size_t a = 0; a < sizes.size(); ++a)
    if (sizes[a] < sp.modes[a])
      throw Error("fft_inverse: target size " + shape_str(sizes) +
                  " below retained modes " + shape_str(sp.modes) +
                  "; truncate first");
  ComplexArray std_layout =
      embed(sp.coeffs, standard_map(sp.modes, sizes), sizes);
  fft::transform_nd(std_layout, +1);
  return ComplexGrid(sizes, std::move(std_layout));
}

inline Spectrum truncate(const Spectrum& sp, const Shape& modes) {
  if (modes.size() != sp.dim()) throw Error("truncate: rank mismatch");
  for (std::size_t a = 0; a < modes.size(); ++a) {
    if (modes[a] > sp.modes[a])
      throw Error("truncate: requested modes " + shape_str(modes) +
                  " exceed available " + shape_str(sp.modes));
    if (modes[a] < 2) throw Error("truncate: modes must be >= 2 per axis");
  }
  return Spectrum{modes, gather(sp.coeffs, band_map(modes, sp.modes), modes)};
}

inline Spectrum pad(const Spectrum& sp, const Shape& modes) {
  if (modes.size() != sp.dim()) throw Error("pad: rank mismatch");
  for (std::size_t a = 0; a < modes.size(); ++a)
    if (modes[a] < sp.modes[a])
      throw Error("pad: requested modes " + shape_str(modes) +
                  " below retained " + shape_str(sp.modes));
  return Spectrum{modes, embed(sp.coeffs, band_map(sp.modes, modes), modes)};
}

enum class ResampleMethod { spectral, bilinear };

namespace spectral_detail {

// Separable piecewise-linear interpolation with periodic wrap along one axis.
inline ComplexArray lerp_axis(const ComplexArray& a, const Shape& shape,
                              std::size_t axis, std::size_t target) {
  const std::size_t n = shape[axis];
  std::size_t inner = 1;
  for (std::size_t k = axis + 1; k < shape.size(); ++k) inner *= shape[k];
  const std::size_t outer = shape_numel(shape) / (n * inner);
  Shape out_shape = shape;
  out_shape[axis] = target;
  ComplexArray out(out_shape);
  for (std::size_t jp = 0; jp < target; ++jp) {
    const double x = double(jp) * double(n) / double(target);
    const std::size_t j0 = (std::size_t)x % n;
    const std::size_t j1 = (j0 + 1) % n;
    const double f = x - std::floor(x);
    for (std::size_t o = 0; o < outer; ++o) {
      const double* sr0 = a.re.data.data() + (o * n + j0) * inner;
      const double* sr1 = a.re.data.data() + (o * n + j1) * inner;
      const double* si0 = a.im.data.data() + (o * n + j0) * inner;
      const double* si1 = a.im.data.data() + (o * n + j1) * inner;
      double* dr = out.re.data.data() + (o * target + jp) * inner;
      double* di = out.im.data.data() + (o * target + jp) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        dr[i] = (1.0 - f) * sr0[i] + f * sr1[i];
        di[i] = (1.0 - f) * si0[i] + f * si1[i];
      }
    }
  }
  return out;
}

}  // namespace spectral_detail

// Change the sampling rate of a grid. Resampling to the same sizes returns
// the input unchanged for both methods (needed so an identity interpolator
// is exactly the identity).
inline ComplexGrid resample(const ComplexGrid& g, const Shape& sizes,
                            ResampleMethod method) {
  g.validate();
  if (sizes.size() != g.dim()) throw Error("resample: rank mismatch");
  for (auto s : sizes)
    if (s < 2) throw Error("resample: target sizes must be >= 2");
  if (sizes == g.sizes) return g;
  if (method == ResampleMethod::bilinear) {
    ComplexArray cur = g.values;
    Shape cur_shape = g.sizes;
    for (std::size_t a = 0; a < sizes.size(); ++a) {
      if (sizes[a] == cur_shape[a]) continue;
      cur = spectral_detail::lerp_axis(cur, cur_shape, a, sizes[a]);
      cur_shape[a] = sizes[a];
    }
    return ComplexGrid(sizes, std::move(cur));
  }
  Spectrum sp = fft_forward(g);
  Shape mid(g.dim());
  for (std::size_t a = 0; a < g.dim(); ++a) mid[a] = std::min(sizes[a], g.sizes[a]);
  if (mid != sp.modes) sp = truncate(sp, mid);
  return fft_inverse(sp, sizes);
}

inline ComplexGrid resample(const ComplexGrid& g, std::size_t s,
                            ResampleMethod method) {
  return resample(g, Shape(g.dim(), s), method);
}

inline double sqnorm(const ComplexArray& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    t += a.re[i] * a.re[i] + a.im[i] * a.im[i];
  return t;
}

// Uniform grid coordinates x_j = j/s, row-major flattening, one d-vector per
// grid point.
inline std::vector<std::vector<double>> grid_coords(const Shape& sizes) {
  const std::size_t d = sizes.size();
  std::vector<std::vector<double>> out(shape_numel(sizes),
                                       std::vector<double>(d));
  std::vector<std::size_t> idx(d, 0);
  for (auto& pt : out) {
    for (std::size_t a = 0; a < d; ++a) pt[a] = double(idx[a]) / double(sizes[a]);
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < sizes[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

}  // namespace pdiae
