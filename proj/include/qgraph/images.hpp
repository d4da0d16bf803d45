#pragma once

#include <span>
#include <vector>

#include "qgraph/orbits.hpp"
#include "qgraph/scattering.hpp"

namespace qgraph {

/// T0(t; x) = (t / pi) / (t^2 + x^2).
double free_kernel(double t, double x);

struct PeriodicTraceTerm {
  double value = 0.0;
  /// (2B t / (pi L_min)) sum_{n > n_max} 1/n^2.
  double truncation_bound = 0.0;
  int n_max = 0;
};

/// Periodic-path amplitudes grouped by length, computed once and reused
/// for many values of t.
class OrbitTable {
 public:
  OrbitTable(const Eigen::MatrixXcd& s, std::span<const double> lengths, int n_max);

  /// Re sum_{n <= n_max} sum_p A_p (l_p / n) T0(t; l_p).
  PeriodicTraceTerm trace_term(double t) const;

  int n_max() const { return n_max_; }

 private:
  int n_max_;
  int directed_;
  double min_length_;
  std::vector<std::vector<LengthGroup>> groups_;
};

PeriodicTraceTerm periodic_trace_term(const BondScatteringMatrix& s,
                                      std::span<const double> lengths, double t,
                                      int n_max);

/// sum_{n > n_max} 1/n^2.
double inverse_square_tail(long n_max);

struct BounceSums {
  /// Entry m: bounce contributions with interior length |w| <= m.
  std::vector<double> partial_sums;
  /// Entry m: bound on what the levels beyond m can still add.
  std::vector<double> remainder_bounds;
  /// tr(S J) / 4.
  double limit = 0.0;
};

/// Direct evaluation of the bounce-path integrals, level by level.
BounceSums bounce_partial_sums(const BondScatteringMatrix& s,
                               std::span<const double> lengths, double t, int m_max);

/// Bounce sums for several t from one pass over the paths.
std::vector<BounceSums> bounce_partial_sums(const BondScatteringMatrix& s,
                                            std::span<const double> lengths,
                                            std::span<const double> ts, int m_max);

/// Smallest level m whose remainder bound is at most `tol`.
int bounce_levels_needed(double t, int directed_bonds, double min_length, double tol);

/// Defect of the bounce identity for interior path w:
/// |sum_alpha A_{alpha w rev(alpha)} - J_{w_1, w_last} A_w|.
double bounce_lemma_defect(const Eigen::MatrixXcd& s, std::span<const int> w);

/// True when bounce_lemma_defect is within `tolerance`.
bool bounce_lemma_check(const Eigen::MatrixXcd& s, std::span<const int> w,
                        double tolerance = 1e-12);

struct KernelTraceSplit {
  double t = 0.0;
  /// total_length / (pi t)
  double t_fs = 0.0;
  double t_po = 0.0;
  /// tr(S J) / 4, the exact bounce contribution.
  double t_bp = 0.0;
  int n_max = 0;
  double truncation_bound = 0.0;

  double total() const { return t_fs + t_bp + t_po; }
};

/// T(t) rebuilt from free, bounce and periodic parts; includes k = 0 modes.
KernelTraceSplit reconstruct_trace(const BondScatteringMatrix& s,
                                   std::span<const double> lengths, double t,
                                   int n_max);

KernelTraceSplit reconstruct_trace(const BondScatteringMatrix& s,
                                   std::span<const double> lengths,
                                   const OrbitTable& table, double t);

}  // namespace qgraph
