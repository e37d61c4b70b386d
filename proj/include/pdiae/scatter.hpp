#pragma once

#include <complex>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "pdiae/train.hpp"

namespace pdiae {

// Far-field geometry: an n_y x n_y medium grid of cell centers on
// [-0.5,0.5]^2 and n_dir source/receiver directions on the unit circle.
struct ScatterGeometry {
  std::size_t n_y = 24;
  std::size_t n_dir = 16;
  double omega = 4.0 * 3.141592653589793238462643;

  std::size_t cells() const { return n_y * n_y; }
  std::size_t pairs() const { return n_dir * n_dir; }
  double cell_area() const { return 1.0 / double(n_y * n_y); }
  double angle_weight() const {
    const double dth = kTau / double(n_dir);
    return dth * dth;
  }

  // Cell center of flat index (row-major, axis 0 = first coordinate).
  void cell_center(std::size_t flat, double& y0, double& y1) const {
    const std::size_t i = flat / n_y, j = flat % n_y;
    y0 = -0.5 + (double(i) + 0.5) / double(n_y);
    y1 = -0.5 + (double(j) + 0.5) / double(n_y);
  }

  void direction(std::size_t k, double& d0, double& d1) const {
    const double th = kTau * double(k) / double(n_dir);
    d0 = std::cos(th);
    d1 = std::sin(th);
  }

  void validate() const {
    if (n_y < 8) throw Error("geometry: n_y must be >= 8");
    if (n_dir < 4) throw Error("geometry: n_dir must be >= 4");
    if (omega <= 0.0) throw Error("geometry: omega must be positive");
    if (omega / double(n_y) >= 3.141592653589793238462643)
      throw Error("geometry: omega too high for the grid (omega/n_y must stay "
                  "below pi to resolve the phase)");
  }
};

struct Medium {
  RealArray eta;  // [n_y, n_y]
};

struct Measurement {
  ComplexArray data;  // [n_dir, n_dir], entry (receiver, source)
};

struct ScatterSample {
  Medium medium;
  Measurement measurement;
  ScatterGeometry geom;
  double noise_percent = 0.0;
};

// ---- linearized forward operator ------------------------------------------------

// Holds the factorized phase tables so repeated applications (CG) cost two
// matrix products instead of fresh complex exponentials:
//   Lambda(r_i, s_j) = sum_y e^{-i w r_i . y} e^{+i w s_j . y} eta(y) dy
class BornOperator {
 public:
  explicit BornOperator(const ScatterGeometry& geom) : geom_(geom) {
    geom.validate();
    const std::size_t N = geom.cells(), D = geom.n_dir;
    recv_.resize(D * N);
    src_.resize(D * N);
    for (std::size_t k = 0; k < D; ++k) {
      double d0, d1;
      geom.direction(k, d0, d1);
      for (std::size_t y = 0; y < N; ++y) {
        double y0, y1;
        geom.cell_center(y, y0, y1);
        const double phase = geom.omega * (d0 * y0 + d1 * y1);
        recv_[k * N + y] = std::polar(1.0, -phase);
        src_[k * N + y] = std::polar(1.0, +phase);
      }
    }
  }

  const ScatterGeometry& geom() const { return geom_; }

  // eta (complex, length n_y^2) -> Lambda (length n_dir^2), midpoint rule.
  std::vector<std::complex<double>> forward(
      const std::vector<std::complex<double>>& eta) const {
    const std::size_t N = geom_.cells(), D = geom_.n_dir;
    const double dy = geom_.cell_area();
    std::vector<std::complex<double>> weighted(D * N);
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t y = 0; y < N; ++y)
        weighted[i * N + y] = recv_[i * N + y] * eta[y];
    std::vector<std::complex<double>> out(D * D);
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = 0; j < D; ++j) {
        std::complex<double> acc{0.0, 0.0};
        const std::complex<double>* wi = weighted.data() + i * N;
        const std::complex<double>* sj = src_.data() + j * N;
        for (std::size_t y = 0; y < N; ++y) acc += wi[y] * sj[y];
        out[i * D + j] = acc * dy;
      }
    return out;
  }

  // Lambda -> image over the medium grid with the angular quadrature weight;
  // the exact discrete adjoint of forward() under the weighted inner
  // products (cell area on the medium, dtheta^2 on the sphere pairs).
  std::vector<std::complex<double>> adjoint(
      const std::vector<std::complex<double>>& lambda) const {
    const std::size_t N = geom_.cells(), D = geom_.n_dir;
    const double w = geom_.angle_weight();
    std::vector<std::complex<double>> partial(D * N, {0.0, 0.0});
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t j = 0; j < D; ++j) {
        const std::complex<double> lij = lambda[i * D + j];
        const std::complex<double>* sj = src_.data() + j * N;
        std::complex<double>* pi = partial.data() + i * N;
        for (std::size_t y = 0; y < N; ++y) pi[y] += lij * std::conj(sj[y]);
      }
    std::vector<std::complex<double>> out(N, {0.0, 0.0});
    for (std::size_t i = 0; i < D; ++i) {
      const std::complex<double>* ri = recv_.data() + i * N;
      const std::complex<double>* pi = partial.data() + i * N;
      for (std::size_t y = 0; y < N; ++y) out[y] += std::conj(ri[y]) * pi[y];
    }
    for (auto& v : out) v *= w;
    return out;
  }

 private:
  ScatterGeometry geom_;
  std::vector<std::complex<double>> recv_, src_;
};

inline std::vector<std::complex<double>> to_cvec(const ComplexArray& a) {
  std::vector<std::complex<double>> out(a.numel());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = {a.re[i], a.im[i]};
  return out;
}

inline ComplexArray from_cvec(const std::vector<std::complex<double>>& v,
                              const Shape& shape) {
  ComplexArray out(shape);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.re[i] = v[i].real();
    out.im[i] = v[i].imag();
  }
  return out;
}

inline Measurement born_forward(const Medium& medium, const BornOperator& op) {
  const std::size_t N = op.geom().cells();
  if (medium.eta.numel() != N)
    throw Error("born_forward: medium has " + std::to_string(medium.eta.numel()) +
                " cells, geometry wants " + std::to_string(N));
  std::vector<std::complex<double>> eta(N);
  for (std::size_t i = 0; i < N; ++i) eta[i] = {medium.eta[i], 0.0};
  const auto lam = op.forward(eta);
  return Measurement{from_cvec(lam, Shape{op.geom().n_dir, op.geom().n_dir})};
}

inline ComplexArray born_adjoint(const Measurement& meas, const BornOperator& op) {
  if (meas.data.numel() != op.geom().pairs())
    throw Error("born_adjoint: measurement shape mismatch");
  const auto img = op.adjoint(to_cvec(meas.data));
  return from_cvec(img, Shape{op.geom().n_y, op.geom().n_y});
}

// ---- Tikhonov reconstruction ------------------------------------------------------

struct TikhonovResult {
  Medium eta;
  bool converged = false;
  double rel_residual = 0.0;
  std::size_t iterations = 0;
};

// Solves (F*F + eps I) eta = F* Lambda by conjugate gradients on the normal
// equations; the operator is Hermitian positive definite so plain CG applies.
// Returns the real part (media are real); non-convergence is flagged, not
// thrown, and the last iterate is returned.
inline TikhonovResult tikhonov_reconstruct(const Measurement& meas,
                                           const BornOperator& op, double eps,
                                           double tol = 1e-8,
                                           std::size_t max_iters = 500) {
  if (eps <= 0.0) throw Error("tikhonov_reconstruct: eps must be positive");
  const std::size_t N = op.geom().cells();
  using CVec = std::vector<std::complex<double>>;
  const CVec b = op.adjoint(to_cvec(meas.data));

  auto apply = [&](const CVec& x) {
    CVec out = op.adjoint(op.forward(x));
    for (std::size_t i = 0; i < N; ++i) out[i] += eps * x[i];
    return out;
  };
  auto dot = [](const CVec& a, const CVec& b2) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b2[i];
    return acc;
  };
  auto norm = [&](const CVec& a) { return std::sqrt(std::abs(dot(a, a))); };

  const double bnorm = norm(b);
  TikhonovResult res;
  CVec x(N, {0.0, 0.0});
  if (bnorm == 0.0) {
    res.eta.eta = RealArray(Shape{op.geom().n_y, op.geom().n_y});
    res.converged = true;
    return res;
  }
  CVec r = b, p = b;
  double rs = std::abs(dot(r, r).real());
  std::size_t it = 0;
  for (; it < max_iters; ++it) {
    if (std::sqrt(rs) / bnorm <= tol) break;
    const CVec Ap = apply(p);
    const double alpha = rs / dot(p, Ap).real();
    for (std::size_t i = 0; i < N; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rs_new = std::abs(dot(r, r).real());
    const double beta = rs_new / rs;
    for (std::size_t i = 0; i < N; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_new;
  }
  res.iterations = it;
  res.rel_residual = std::sqrt(rs) / bnorm;
  res.converged = res.rel_residual <= tol;
  res.eta.eta = RealArray(Shape{op.geom().n_y, op.geom().n_y});
  for (std::size_t i = 0; i < N; ++i) res.eta.eta[i] = x[i].real();
  return res;
}

// ---- media and task generators -------------------------------------------------------

struct GaussianBlob {
  double amp, sigma, c0, c1;
};

inline Medium make_gaussian_medium(const ScatterGeometry& geom,
                                   const std::vector<GaussianBlob>& blobs) {
  Medium m;
  m.eta = RealArray(Shape{geom.n_y, geom.n_y});
  for (std::size_t y = 0; y < geom.cells(); ++y) {
    double y0, y1;
    geom.cell_center(y, y0, y1);
    double acc = 0.0;
    for (const auto& b : blobs) {
      const double d2 = (y0 - b.c0) * (y0 - b.c0) + (y1 - b.c1) * (y1 - b.c1);
      acc += b.amp * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
    }
    m.eta[y] = acc;
  }
  return m;
}

struct PointMediaRanges {
  std::size_t points_min = 2, points_max = 4;
  double amp_min = 0.5, amp_max = 1.5;
  double sigma_min = 0.02, sigma_max = 0.08;
  double center_min = -0.3, center_max = 0.3;
};

// Gaussian mixtures resembling isolated point scatterers.
inline Medium gen_point_media(const ScatterGeometry& geom, Rng& rng,
                              const PointMediaRanges& ranges = {}) {
  const std::size_t span = ranges.points_max - ranges.points_min + 1;
  const std::size_t count = ranges.points_min + rng.below(span);
  std::vector<GaussianBlob> blobs;
  for (std::size_t p = 0; p < count; ++p) {
    GaussianBlob b;
    b.amp = rng.uniform(ranges.amp_min, ranges.amp_max);
    b.sigma = rng.uniform(ranges.sigma_min, ranges.sigma_max);
    b.c0 = rng.uniform(ranges.center_min, ranges.center_max);
    b.c1 = rng.uniform(ranges.center_min, ranges.center_max);
    blobs.push_back(b);
  }
  return make_gaussian_medium(geom, blobs);
}

// ---- 1-d symbol tasks ------------------------------------------------------------------

enum class SymbolKind { derivative, abs_xi, smooth_band };

inline std::complex<double> symbol_value(SymbolKind kind, long long k,
                                         double k0) {
  switch (kind) {
    case SymbolKind::derivative: return {0.0, kTau * double(k)};
    case SymbolKind::abs_xi: return {kTau * std::abs(double(k)), 0.0};
    case SymbolKind::smooth_band:
      return {std::exp(-(double(k) / k0) * (double(k) / k0)), 0.0};
  }
  throw Error("symbol_value: unknown kind");
}

// Band-limited random input with |k| < m_gen/2 and smoothly decaying
// coefficients; the target is computed exactly in the spectrum, so labels
// are reproducible on any grid s > m_gen.
inline Sample gen_symbol_task_1d(SymbolKind kind, std::size_t m_gen, Rng& rng,
                                 std::size_t s, double k0 = 4.0) {
  if (m_gen >= s)
    throw Error("gen_symbol_task_1d: m_gen must be below the grid size");
  Spectrum in_sp;
  in_sp.modes = {s};
  in_sp.coeffs = ComplexArray(Shape{s});
  Spectrum out_sp = in_sp;
  const long long half = (long long)(m_gen / 2);
  for (long long k = -(half - 1); k <= half - 1; ++k) {
    const double decay = std::pow(1.0 + std::abs(double(k)), -2.0);
    const std::complex<double> c{rng.normal() * decay, rng.normal() * decay};
    const std::complex<double> tv = c * symbol_value(kind, k, k0);
    const std::size_t idx = (std::size_t)(k + (long long)(s / 2));
    in_sp.coeffs.re[idx] = c.real();
    in_sp.coeffs.im[idx] = c.imag();
    out_sp.coeffs.re[idx] = tv.real();
    out_sp.coeffs.im[idx] = tv.imag();
  }
  return Sample{fft_inverse(in_sp, Shape{s}), fft_inverse(out_sp, Shape{s})};
}

// ---- noise --------------------------------------------------------------------------------

inline double rms_of(const ComplexArray& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    acc += a.re[i] * a.re[i] + a.im[i] * a.im[i];
  return std::sqrt(acc / double(2 * a.numel()));
}

// Additive Gaussian noise with std = percent/100 of the tensor RMS (RMS over
// all real components), applied independently to re and im.
inline ComplexArray add_noise(const ComplexArray& a, double percent, Rng& rng) {
  if (percent < 0.0) throw Error("add_noise: percent must be >= 0");
  if (percent == 0.0) return a;
  const double sigma = (percent / 100.0) * rms_of(a);
  ComplexArray out = a;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    out.re[i] += sigma * rng.normal();
    out.im[i] += sigma * rng.normal();
  }
  return out;
}

inline RealArray add_noise(const RealArray& a, double percent, Rng& rng) {
  if (percent < 0.0) throw Error("add_noise: percent must be >= 0");
  if (percent == 0.0) return a;
  double acc = 0.0;
  for (double v : a.data) acc += v * v;
  const double sigma = (percent / 100.0) * std::sqrt(acc / double(a.numel()));
  RealArray out = a;
  for (auto& v : out.data) v += sigma * rng.normal();
  return out;
}

// ---- dataset persistence --------------------------------------------------------------------

constexpr char kDatasetMagic[8] = {'P', 'D', 'S', 'C', '1', '\0', '\0', '\0'};

struct ScatterDataset {
  ScatterGeometry geom;
  double noise_percent = 0.0;
  std::vector<ScatterSample> samples;
};

inline void write_dataset(const ScatterDataset& ds, const std::string& path) {
  for (const auto& s : ds.samples)
    if (s.geom.n_y != ds.geom.n_y || s.geom.n_dir != ds.geom.n_dir ||
        s.geom.omega != ds.geom.omega)
      throw Error("write_dataset: samples must share one geometry per file");
  std::ostringstream manifest;
  manifest << "geom.n_y=" << ds.geom.n_y << "\n"
           << "geom.n_dir=" << ds.geom.n_dir << "\n"
           << "geom.omega=" << model_detail::fmt_double(ds.geom.omega) << "\n"
           << "noise_percent=" << model_detail::fmt_double(ds.noise_percent) << "\n"
           << "count=" << ds.samples.size() << "\n";
  const std::string text = manifest.str();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("write_dataset: cannot open " + path);
  out.write(kDatasetMagic, 8);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(text.data(), (std::streamsize)text.size());
  for (const auto& s : ds.samples) {
    out.write(reinterpret_cast<const char*>(s.medium.eta.data.data()),
              (std::streamsize)(s.medium.eta.numel() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(s.measurement.data.re.data.data()),
              (std::streamsize)(s.measurement.data.numel() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(s.measurement.data.im.data.data()),
              (std::streamsize)(s.measurement.data.numel() * sizeof(double)));
  }
  if (!out) throw Error("write_dataset: write failed for " + path);
}

inline ScatterDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_dataset: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kDatasetMagic, 8) != 0)
    throw Error("read_dataset: bad header in " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  if (in.gcount() != 8) throw Error("read_dataset: bad header in " + path);
  std::string text(len, '\0');
  in.read(text.data(), (std::streamsize)len);
  if ((std::uint64_t)in.gcount() != len)
    throw Error("read_dataset: truncated manifest");

  ScatterDataset ds;
  std::size_t count = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("read_dataset: malformed manifest line '" + line + "'");
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "geom.n_y") ds.geom.n_y = std::stoull(val);
    else if (key == "geom.n_dir") ds.geom.n_dir = std::stoull(val);
    else if (key == "geom.omega") ds.geom.omega = std::stod(val);
    else if (key == "noise_percent") ds.noise_percent = std::stod(val);
    else if (key == "count") count = std::stoull(val);
    else throw Error("read_dataset: unknown manifest key '" + key + "'");
  }
  ds.geom.validate();

  for (std::size_t k = 0; k < count; ++k) {
    ScatterSample s;
    s.geom = ds.geom;
    s.noise_percent = ds.noise_percent;
    s.medium.eta = RealArray(Shape{ds.geom.n_y, ds.geom.n_y});
    s.measurement.data = ComplexArray(Shape{ds.geom.n_dir, ds.geom.n_dir});
    auto read_block = [&](double* dst, std::size_t n) {
      in.read(reinterpret_cast<char*>(dst), (std::streamsize)(n * sizeof(double)));
      if ((std::size_t)in.gcount() != n * sizeof(double))
        throw Error("read_dataset: truncated payload at sample " +
                    std::to_string(k) + " (header count " +
                    std::to_string(count) + " does not match file contents)");
    };
    read_block(s.medium.eta.data.data(), s.medium.eta.numel());
    read_block(s.measurement.data.re.data.data(), s.measurement.data.numel());
    read_block(s.measurement.data.im.data.data(), s.measurement.data.numel());
    ds.samples.push_back(std::move(s));
  }
  char extra;
  if (in.read(&extra, 1))
    throw Error("read_dataset: trailing bytes (header count " +
                std::to_string(count) + " does not match file contents)");
  return ds;
}

// Measurements become 2-d complex inputs; media become real targets.
inline std::vector<Sample> to_training_samples(const ScatterDataset& ds) {
  std::vector<Sample> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    ComplexGrid in(Shape{ds.geom.n_dir, ds.geom.n_dir});
    in.values = s.measurement.data;
    ComplexGrid target(Shape{ds.geom.n_y, ds.geom.n_y});
    target.values.re = s.medium.eta;
    out.push_back({std::move(in), std::move(target)});
  }
  return out;
}

}  // namespace pdiae
