#include "qgraph/images.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/trigamma.hpp>

namespace qgraph {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

/// (atan(a/t) - atan(b/t)) / pi for a >= b >= 0, without cancellation.
double arctan_step(double a, double b, double t) {
  return std::atan2((a - b) * t, t * t + a * b) / kPi;
}

double min_of(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }

}  // namespace

double free_kernel(double t, double x) {
  if (!(t > 0.0)) throw Error("free_kernel: t must be positive");
  return (t / kPi) / (t * t + x * x);
}

double inverse_square_tail(long n_max) {
  if (n_max < 0) throw Error("inverse_square_tail: negative cutoff");
  return boost::math::trigamma(static_cast<double>(n_max) + 1.0);
}

OrbitTable::OrbitTable(const Eigen::MatrixXcd& s, std::span<const double> lengths,
                       int n_max)
    : n_max_(std::max(n_max, 0)),
      directed_(static_cast<int>(s.rows())),
      min_length_(min_of(lengths)) {
  if (n_max_ > 0) groups_ = PathSums(s, lengths).periodic(n_max_);
}

PeriodicTraceTerm OrbitTable::trace_term(double t) const {
  if (!(t > 0.0)) throw Error("periodic_trace_term: t must be positive");
  CompensatedSum<double> sum;
  for (int n = 1; n <= n_max_; ++n) {
    for (const auto& g : groups_[n - 1]) {
      sum += g.amplitude.real() * (g.length / n) * free_kernel(t, g.length);
    }
  }
  PeriodicTraceTerm out;
  out.value = sum.value();
  out.n_max = n_max_;
  out.truncation_bound = directed_ * t / (kPi * min_length_) * inverse_square_tail(n_max_);
  return out;
}

PeriodicTraceTerm periodic_trace_term(const BondScatteringMatrix& s,
                                      std::span<const double> lengths, double t,
                                      int n_max) {
  return OrbitTable(s.s, lengths, n_max).trace_term(t);
}

int bounce_levels_needed(double t, int directed_bonds, double min_length, double tol) {
  const double m = t / (min_length * std::tan(kPi * tol / directed_bonds));
  return std::max(0, static_cast<int>(std::ceil(m)));
}

std::vector<BounceSums> bounce_partial_sums(const BondScatteringMatrix& s,
                                            std::span<const double> lengths,
                                            std::span<const double> ts, int m_max) {
  for (double t : ts) {
    if (!(t > 0.0)) throw Error("bounce_partial_sums: t must be positive");
  }
  if (m_max < 0) throw Error("bounce_partial_sums: m_max must be >= 0");
  const auto levels = PathSums(s.s, lengths).bounce(m_max);
  const double l_min = min_of(lengths);
  const double limit = 0.25 * bounce_trace(s);
  std::vector<BounceSums> out;
  for (double t : ts) {
    BounceSums b;
    b.limit = limit;
    CompensatedSum<double> sum;
    for (int m = 0; m <= m_max; ++m) {
      for (const auto& g : levels[m]) {
        sum += 0.5 * g.amplitude.real() *
               arctan_step(g.interior_length + 2.0 * g.closing_length, g.interior_length, t);
      }
      b.partial_sums.push_back(sum.value());
      b.remainder_bounds.push_back(s.size() / kPi * std::atan(t / ((m + 1) * l_min)));
    }
    out.push_back(std::move(b));
  }
  return out;
}

BounceSums bounce_partial_sums(const BondScatteringMatrix& s,
                               std::span<const double> lengths, double t, int m_max) {
  const double ts[] = {t};
  return std::move(bounce_partial_sums(s, lengths, ts, m_max).front());
}

double bounce_lemma_defect(const Eigen::MatrixXcd& s, std::span<const int> w) {
  if (w.empty()) throw Error("bounce_lemma_defect: interior path must be nonempty");
  const int dim = static_cast<int>(s.rows());
  const int nb = dim / 2;
  for (int b : w) {
    if (b < 0 || b >= dim) throw Error("bounce_lemma_defect: bond index out of range");
  }
  cd inner = 1.0;
  for (std::size_t j = 0; j + 1 < w.size(); ++j) inner *= s(w[j + 1], w[j]);
  const int first = w.front();
  const int last = w.back();
  CompensatedSum<cd> lhs;
  for (int a = 0; a < dim; ++a) {
    const int rev = a < nb ? a + nb : a - nb;
    lhs += s(first, a) * inner * s(rev, last);
  }
  const int rev_last = last < nb ? last + nb : last - nb;
  const cd rhs = (first == rev_last ? 1.0 : 0.0) * inner;
  return std::abs(lhs.value() - rhs);
}

bool bounce_lemma_check(const Eigen::MatrixXcd& s, std::span<const int> w,
                        double tolerance) {
  return bounce_lemma_defect(s, w) <= tolerance;
}

KernelTraceSplit reconstruct_trace(const BondScatteringMatrix& s,
                                   std::span<const double> lengths,
                                   const OrbitTable& table, double t) {
  if (!(t > 0.0)) throw Error("reconstruct_trace: t must be positive");
  CompensatedSum<double> total;
  for (double l : lengths) total += l;
  const auto po = table.trace_term(t);
  KernelTraceSplit out;
  out.t = t;
  out.t_fs = 0.5 * total.value() * free_kernel(t, 0.0);
  out.t_bp = 0.25 * bounce_trace(s);
  out.t_po = po.value;
  out.n_max = po.n_max;
  out.truncation_bound = po.truncation_bound;
  return out;
}

KernelTraceSplit reconstruct_trace(const BondScatteringMatrix& s,
                                   std::span<const double> lengths, double t,
                                   int n_max) {
  return reconstruct_trace(s, lengths, OrbitTable(s.s, lengths, n_max), t);
}

}  // namespace qgraph
