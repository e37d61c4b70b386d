#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "pdiae/array.hpp"

namespace pdiae {
namespace fft {

// Unnormalized DFT along contiguous re/im buffers:
//   X_k = sum_j x_j exp(sign * 2*pi*i * j*k / n)
// Radix-2 for powers of two, Bluestein chirp-z otherwise; both O(n log n).

namespace detail {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Roots-of-unity table for size n: entry k holds exp(-2*pi*i*k/n), k < n/2.
struct Pow2Plan {
  std::size_t n = 0;
  std::vector<double> wre, wim;
};

inline std::shared_ptr<const Pow2Plan> pow2_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const Pow2Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<Pow2Plan>();
  plan->n = n;
  plan->wre.resize(n / 2);
  plan->wim.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = -kTwoPi * double(k) / double(n);
    plan->wre[k] = std::cos(ang);
    plan->wim[k] = std::sin(ang);
  }
  cache[n] = plan;
  return plan;
}

inline void transform_pow2(double* re, double* im, std::size_t n, int sign) {
  if (n < 2) return;
  const auto plan = pow2_plan(n);
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  const double conj = (sign > 0) ? -1.0 : 1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const double wr = plan->wre[k * step];
        const double wi = conj * plan->wim[k * step];
        const std::size_t a = start + k, b = a + half;
        const double tr = re[b] * wr - im[b] * wi;
        const double ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
    }
  }
}

// Bluestein plan for one (n, sign) pair: chirp and the padded FFT of its
// symmetric extension.
struct BluesteinPlan {
  std::size_t n = 0, M = 0;
  int sign = 1;
  std::vector<double> chirp_re, chirp_im;  // w_j = exp(sign*pi*i*j^2/n)
  std::vector<double> bfft_re, bfft_im;    // FFT_M of conj chirp, wrapped
};

inline std::shared_ptr<const BluesteinPlan> bluestein_plan(std::size_t n,
                                                           int sign) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, int>,
                  std::shared_ptr<const BluesteinPlan>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  auto plan = std::make_shared<BluesteinPlan>();
  plan->n = n;
  plan->sign = sign;
  plan->M = next_pow2(2 * n - 1);
  plan->chirp_re.resize(n);
  plan->chirp_im.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    // Reduce j^2 mod 2n before converting to an angle to keep precision.
    const std::size_t jsq = (j * j) % (2 * n);
    const double ang = double(sign) * kTwoPi * 0.5 * double(jsq) / double(n);
    plan->chirp_re[j] = std::cos(ang);
    plan->chirp_im[j] = std::sin(ang);
  }
  plan->bfft_re.assign(plan->M, 0.0);
  plan->bfft_im.assign(plan->M, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    plan->bfft_re[j] = plan->chirp_re[j];
    plan->bfft_im[j] = -plan->chirp_im[j];
    if (j > 0) {
      plan->bfft_re[plan->M - j] = plan->bfft_re[j];
      plan->bfft_im[plan->M - j] = plan->bfft_im[j];
    }
  }
  transform_pow2(plan->bfft_re.data(), plan->bfft_im.data(), plan->M, -1);
  cache[key] = plan;
  return plan;
}

inline void transform_bluestein(double* re, double* im, std::size_t n,
                                int sign) {
  const auto plan = bluestein_plan(n, sign);
  const std::size_t M = plan->M;
  std::vector<double> are(M, 0.0), aim(M, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    // a_j = x_j * w_j
    are[j] = re[j] * plan->chirp_re[j] - im[j] * plan->chirp_im[j];
    aim[j] = re[j] * plan->chirp_im[j] + im[j] * plan->chirp_re[j];
  }
  transform_pow2(are.data(), aim.data(), M, -1);
  for (std::size_t k = 0; k < M; ++k) {
    const double r = are[k] * plan->bfft_re[k] - aim[k] * plan->bfft_im[k];
    const double i = are[k] * plan->bfft_im[k] + aim[k] * plan->bfft_re[k];
    are[k] = r;
    aim[k] = i;
  }
  transform_pow2(are.data(), aim.data(), M, +1);
  const double inv = 1.0 / double(M);
  for (std::size_t k = 0; k < n; ++k) {
    const double cr = are[k] * inv, ci = aim[k] * inv;
    re[k] = cr * plan->chirp_re[k] - ci * plan->chirp_im[k];
    im[k] = cr * plan->chirp_im[k] + ci * plan->chirp_re[k];
  }
}

}  // namespace detail

inline void transform(double* re, double* im, std::size_t n, int sign) {
  if (n < 2) return;
  if (detail::is_pow2(n))
    detail::transform_pow2(re, im, n, sign);
  else
    detail::transform_bluestein(re, im, n, sign);
}

// Separable transform over every axis of a row-major array.
inline void transform_nd(double* re, double* im, const Shape& shape,
                         int sign) {
  const std::size_t total = shape_numel(shape);
  if (total == 0) return;
  std::size_t inner = 1;  // product of sizes after the current axis
  for (std::size_t axis = shape.size(); axis-- > 0;) {
    const std::size_t n = shape[axis];
    const std::size_t outer = total / (n * inner);
    if (inner == 1) {
      for (std::size_t o = 0; o < outer; ++o)
        transform(re + o * n, im + o * n, n, sign);
    } else {
      std::vector<double> tre(n), tim(n);
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
          double* base_re = re + o * n * inner + i;
          double* base_im = im + o * n * inner + i;
          for (std::size_t k = 0; k < n; ++k) {
            tre[k] = base_re[k * inner];
            tim[k] = base_im[k * inner];
          }
          transform(tre.data(), tim.data(), n, sign);
          for (std::size_t k = 0; k < n; ++k) {
            base_re[k * inner] = tre[k];
            base_im[k * inner] = tim[k];
          }
        }
      }
    }
    inner *= n;
  }
}

inline void transform_nd(ComplexArray& a, int sign) {
  transform_nd(a.re.data.data(), a.im.data.data(), a.shape, sign);
}

}  // namespace fft
}  // namespace pdiae
