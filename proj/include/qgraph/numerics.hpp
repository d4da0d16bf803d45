#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Neumaier (improved Kahan) accumulator. Summation order still matters
/// for bit-exactness, but the error no longer grows with the term count.
template <typename T>
class CompensatedSum {
 public:
  void add(T x) {
    const T t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(T x) {
    add(x);
    return *this;
  }
  T value() const { return sum_ + comp_; }

 private:
  T sum_{};
  T comp_{};
};

template <>
inline void CompensatedSum<std::complex<double>>::add(std::complex<double> x) {
  // Component-wise Neumaier.
  auto step = [](double& s, double& c, double v) {
    const double t = s + v;
    if (std::abs(s) >= std::abs(v)) {
      c += (s - t) + v;
    } else {
      c += (v - t) + s;
    }
    s = t;
  };
  double sr = sum_.real(), si = sum_.imag();
  double cr = comp_.real(), ci = comp_.imag();
  step(sr, cr, x.real());
  step(si, ci, x.imag());
  sum_ = {sr, si};
  comp_ = {cr, ci};
}

struct Extrapolation {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Polynomial extrapolation of samples (x_i, y_i) to x = 0 by Neville's
/// scheme. With a geometric grid this is the classical Richardson tableau.
/// The error estimate is the gap between the two highest-order entries.
inline Extrapolation extrapolate_to_zero(std::span<const double> x,
                                         std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error("extrapolate_to_zero: need matching, non-empty samples");
  }
  std::vector<double> p(y.begin(), y.end());
  const std::size_t n = p.size();
  // Order n-2 estimate built from the last n-1 samples (the finest ones).
  double previous = n > 1 ? p[n - 1] : p[0];
  for (std::size_t level = 1; level < n; ++level) {
    if (level == n - 1) previous = p[1];
    for (std::size_t i = 0; i + level < n; ++i) {
      const double xi = x[i];
      const double xj = x[i + level];
      p[i] = (xi * p[i + 1] - xj * p[i]) / (xi - xj);
    }
  }
  Extrapolation out;
  out.value = p[0];
  out.error_estimate = n > 1 ? std::abs(p[0] - previous) : std::abs(p[0]);
  return out;
}

}  // namespace qgraph
