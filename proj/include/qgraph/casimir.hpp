#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qgraph/graph.hpp"
#include "qgraph/orbits.hpp"
#include "qgraph/scattering.hpp"

namespace qgraph {

/// Second Bernoulli polynomial x^2 - x + 1/6 on [0, 1].
double bernoulli2(double x);

/// Closed form for the equal-length Kirchhoff star: (B - 3) pi / (48 L).
double energy_star(int bonds, double length);

/// Equal-length vacuum energy from the eigenphases of S:
/// -(pi / 2L) sum_j B2(theta_j / 2 pi), theta_j in (0, 2 pi].
double energy_equal_bernoulli(std::span<const double> thetas, double length);

/// Eigenphases of S mapped to (0, 2 pi].
std::vector<double> scattering_eigenphases(const Eigen::MatrixXcd& s);

struct EnergyBreakdown {
  double value = 0.0;
  /// sigma_n for n = 1..n_max (complex; imaginary part vanishes for
  /// J-symmetric S).
  std::vector<std::complex<double>> per_n_partial;
  /// 2B / (n^2 L_min) for each n.
  std::vector<double> per_n_bound;
  /// (2B / (2 pi L_min)) sum_{n > n_max} 1/n^2.
  double tail_bound = 0.0;
  int n_max = 0;
  /// Set when the requested n_max could not be reached.
  bool truncated = false;
};

/// -(1/2 pi) sum_{n <= n_max} Re sigma_n with the rigorous tail bound.
EnergyBreakdown energy_orbit_sum(const BondScatteringMatrix& s,
                                 std::span<const double> lengths, int n_max = 30);

/// Same sum taken from explicit path enumeration, stopping at the last
/// period that fits in the path budget.
EnergyBreakdown energy_orbit_sum_enumerated(const BondScatteringMatrix& s,
                                            std::span<const double> lengths,
                                            int n_max,
                                            std::size_t budget = 10'000'000);

/// (2B / (2 pi L_min)) sum_{n > n_max} 1/n^2.
double orbit_tail_bound(int directed_bonds, double min_length, int n_max);

struct QuadratureConfig {
  double abs_tol = 1e-13;
  /// Geometric panels toward s = 0 stop once the panel is shorter than this.
  double min_panel = 1e-14;
  int max_depth = 30;
};

struct LogDetEnergy {
  double value = 0.0;
  double error_estimate = 0.0;
  long evaluations = 0;
};

/// log det(I - S exp(-s L)); real for J-symmetric S.
double log_det_resolvent(const Eigen::MatrixXcd& s, std::span<const double> lengths,
                         double s_arg);

/// (1 / 2 pi) int_0^inf log det(I - S exp(-s L)) ds.
LogDetEnergy energy_logdet_detailed(const BondScatteringMatrix& s,
                                    std::span<const double> lengths,
                                    const QuadratureConfig& config = {});

inline double energy_logdet(const BondScatteringMatrix& s,
                            std::span<const double> lengths,
                            const QuadratureConfig& config = {}) {
  return energy_logdet_detailed(s, lengths, config).value;
}

/// Subdivide to equal lengths and use the Bernoulli formula. Without an
/// explicit unit the largest common unit is searched for.
double energy_rational(const MetricGraph& graph, std::optional<double> unit = {});

struct ForceResult {
  double value = 0.0;
  double error_estimate = 0.0;
  double step = 0.0;
};

/// -dE/dL_b by a five-point central difference of energy_logdet. The
/// error estimate is (16/15) |D(h) - D(h/2)|.
ForceResult casimir_force(const MetricGraph& graph, int bond, double step,
                          const QuadratureConfig& config = {});

}  // namespace qgraph
