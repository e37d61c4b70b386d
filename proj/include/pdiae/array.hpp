#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pdiae {

// Error type thrown by all module boundaries. Messages carry enough context
// (shapes, keys, file offsets) to be actionable from a CLI.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major float64 array. Flat storage, no broadcasting; shape is
// carried along so op implementations can check compatibility explicitly.
struct RealArray {
  Shape shape;
  std::vector<double> data;

  RealArray() = default;
  explicit RealArray(Shape sh, double fill = 0.0)
      : shape(std::move(sh)), data(shape_numel(shape), fill) {}
  RealArray(Shape sh, std::vector<double> values)
      : shape(std::move(sh)), data(std::move(values)) {
    if (data.size() != shape_numel(shape))
      throw Error("RealArray: " + std::to_string(data.size()) +
                  " values do not fill shape " + shape_str(shape));
  }

  static RealArray scalar(double v) {
    RealArray a(Shape{1});
    a.data[0] = v;
    return a;
  }

  std::size_t numel() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const RealArray& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Complex array as a pair of real arrays. All arithmetic and autodiff treat
// re/im as independent real degrees of freedom.
struct ComplexArray {
  Shape shape;
  RealArray re, im;

  ComplexArray() = default;
  explicit ComplexArray(Shape sh)
      : shape(sh), re(sh), im(std::move(sh)) {}
  ComplexArray(RealArray r, RealArray i)
      : shape(r.shape), re(std::move(r)), im(std::move(i)) {
    if (re.shape != im.shape)
      throw Error("ComplexArray: re shape " + shape_str(re.shape) +
                  " != im shape " + shape_str(im.shape));
  }

  std::size_t numel() const { return re.numel(); }
  bool all_finite() const { return re.all_finite() && im.all_finite(); }
};

inline void check_same_shape(const RealArray& a, const RealArray& b,
                             const char* op) {
  if (!a.same_shape(b))
    throw Error(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                " vs " + shape_str(b.shape));
}

inline double max_abs_diff(const RealArray& a, const RealArray& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const ComplexArray& a, const ComplexArray& b) {
  return std::max(max_abs_diff(a.re, b.re), max_abs_diff(a.im, b.im));
}

}  // namespace pdiae
