#pragma once

#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace humor {

struct TensorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank 0 (scalar), 1 (vector) or 2 (row-major matrix).
struct Shape {
  int rank = 0;
  int d0 = 1;
  int d1 = 1;

  int size() const { return rank == 0 ? 1 : (rank == 1 ? d0 : d0 * d1); }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    if (rank == 0) return "()";
    if (rank == 1) return "(" + std::to_string(d0) + ")";
    return "(" + std::to_string(d0) + "x" + std::to_string(d1) + ")";
  }
};

inline Shape scalar_shape() { return Shape{0, 1, 1}; }
inline Shape vec_shape(int n) { return Shape{1, n, 1}; }
inline Shape mat_shape(int r, int c) { return Shape{2, r, c}; }

// Dense array of doubles. All numeric state in the library lives in these.
struct Tensor {
  Shape shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(s), v(static_cast<std::size_t>(s.size()), fill) {}

  static Tensor scalar(double x) {
    Tensor t(scalar_shape());
    t.v[0] = x;
    return t;
  }
  static Tensor vec(std::initializer_list<double> xs) {
    Tensor t(vec_shape(static_cast<int>(xs.size())));
    t.v.assign(xs);
    return t;
  }
  static Tensor vec(const std::vector<double>& xs) {
    Tensor t(vec_shape(static_cast<int>(xs.size())));
    t.v = xs;
    return t;
  }
  static Tensor mat(int r, int c, std::initializer_list<double> xs) {
    Tensor t(mat_shape(r, c));
    if (static_cast<int>(xs.size()) != r * c)
      throw TensorError("mat: value count does not match shape");
    t.v.assign(xs);
    return t;
  }

  int size() const { return shape.size(); }
  double& at(int i) { return v[static_cast<std::size_t>(i)]; }
  double at(int i) const { return v[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return v[static_cast<std::size_t>(i) * shape.d1 + j]; }
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * shape.d1 + j]; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  double l2norm() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace humor
