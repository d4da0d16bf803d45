#pragma once

// Independent reference computations used by the tests. None of these
// call into the library's numerical routines.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

/// Secular function of a Kirchhoff star with Neumann leaves:
/// sum_b sin(k L_b) prod_{c != b} cos(k L_c), i.e. Z(k) = sum tan(k L_b)
/// cleared of poles.
inline double star_secular(double k, const std::vector<double>& lengths) {
  double total = 0.0;
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    double term = std::sin(k * lengths[b]);
    for (std::size_t c = 0; c < lengths.size(); ++c) {
      if (c != b) term *= std::cos(k * lengths[c]);
    }
    total += term;
  }
  return total;
}

/// Roots of f on (0, k_max] by a fine sign scan and bisection.
inline std::vector<double> scan_roots(const std::function<double(double)>& f, double k_max,
                                      double step) {
  std::vector<double> roots;
  double a = step * 1e-3;
  double fa = f(a);
  for (double b = a + step; b <= k_max + step; b += step) {
    const double fb = f(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if (fa * fb < 0.0) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (flo * fm <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      const double r = 0.5 * (lo + hi);
      if (r <= k_max) roots.push_back(r);
    }
    a = b;
    fa = fb;
  }
  return roots;
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return sum * h / 3.0;
}

/// sigma_2 = (1/2) int_0^inf tr((S e^{-sL})^2) ds by quadrature.
inline std::complex<double> sigma2_by_quadrature(const Eigen::MatrixXcd& s,
                                                 const std::vector<double>& lengths) {
  double l_min = lengths[0];
  for (double l : lengths) l_min = std::min(l_min, l);
  auto part = [&](bool imag) {
    return [&, imag](double x) {
      Eigen::MatrixXcd m = s;
      for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) *= std::exp(-x * lengths[c]);
      const std::complex<double> tr = (m * m).trace();
      return imag ? tr.imag() : tr.real();
    };
  };
  const double upper = 40.0 / l_min;
  return 0.5 * std::complex<double>(simpson(part(false), 0.0, upper, 20000),
                                    simpson(part(true), 0.0, upper, 20000));
}

/// Cylinder trace of the equal-length Kirchhoff 3-star, L = 1, zero mode
/// included: (1 + 2 e^{-pi t / 2}) / (1 - e^{-pi t}).
inline double star3_trace(double t) {
  return (1.0 + 2.0 * std::exp(-pi * t / 2.0)) / (1.0 - std::exp(-pi * t));
}

/// sum_{n >= 0} e^{-n pi t}: the Neumann interval of length 1 with its
/// zero mode.
inline double interval_trace(double t) { return 1.0 / (1.0 - std::exp(-pi * t)); }

/// Kirchhoff vertex matrix entry by entry.
inline Eigen::MatrixXd kirchhoff(int d) {
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = 2.0 / d - (i == j ? 1.0 : 0.0);
  }
  return m;
}

/// sum_{n=1}^{N} n^-p with the remainder closed by Euler-Maclaurin.
inline double zeta_partial(int p, long n_terms) {
  double s = 0.0;
  for (long n = n_terms; n >= 1; --n) s += std::pow(static_cast<double>(n), -p);
  const double x = static_cast<double>(n_terms);
  // sum_{n > N} n^-p ~ N^{1-p}/(p-1) - N^{-p}/2 + p N^{-p-1}/12
  s += std::pow(x, 1.0 - p) / (p - 1) - 0.5 * std::pow(x, -p) + p * std::pow(x, -p - 1.0) / 12.0;
  return s;
}

}  // namespace oracle
