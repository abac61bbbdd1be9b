#pragma once

#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace qtl {

// Dense row-major tensor of 64-bit reals. Shape is dynamic; layer code
// computes its own strides.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s)
      : shape(std::move(s)), v(numel(shape), 0.0) {}

  static std::size_t numel(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return s.empty() ? 0 : n;
  }

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }

  std::span<double> flat() { return v; }
  std::span<const double> flat() const { return v; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  bool operator==(const Tensor& o) const = default;
};

}  // namespace qtl
