#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qgraph/scattering.hpp"

namespace qgraph {

struct Level {
  double k = 0.0;
  int multiplicity = 1;
};

/// Eigenvalues k_n in (0, k_max], strictly increasing, with multiplicity.
/// k = 0 modes are counted separately in zero_modes.
struct Spectrum {
  std::vector<Level> levels;
  double k_max = 0.0;
  bool include_zero_mode = false;
  int zero_modes = 0;
  double tolerance = 0.0;
  /// Total length and directed-bond count, used by the Weyl bounds.
  double total_length = 0.0;
  int directed_bonds = 0;

  /// N(k): eigenvalues <= k counted with multiplicity (zero modes only
  /// when include_zero_mode is set).
  long count_below(double k) const;
};

struct SpectrumOptions {
  /// Bracket width below which a crossing is reported.
  double tolerance = 1e-10;
  /// Crossings closer than this are merged into one level.
  double merge_distance = 1e-8;
  int threads = 1;
  bool include_zero_mode = false;
};

/// Eigenphases of U(k) = S exp(ik L) in [0, 2 pi), sorted.
std::vector<double> evolution_eigenphases(const Eigen::MatrixXcd& s,
                                          std::span<const double> lengths,
                                          double k);

/// Roots of det(I - S exp(ikL)) on (0, k_max] by counting eigenphase
/// crossings of 0 and bisecting on the count.
Spectrum find_spectrum(const BondScatteringMatrix& s,
                       std::span<const double> lengths, double k_max,
                       const SpectrumOptions& options = {});

/// Equal-length spectrum {(2 pi n - theta_j)/L, n >= 1}; thetas in
/// (0, 2 pi] with 2 pi acting as 0. Truncated to the `count` smallest
/// values (ties at the cut are kept whole).
Spectrum equal_length_spectrum(std::span<const double> thetas, double length,
                               std::size_t count);

/// Same, truncated at k_max instead of a count.
Spectrum equal_length_spectrum_below(std::span<const double> thetas,
                                     double length, double k_max);

/// Smallest t for which the stored spectrum resolves exp(-k t) to 1e-16.
inline double min_trustworthy_t(double k_max) { return 37.0 / k_max; }

struct CylinderTrace {
  double t = 0.0;
  double value = 0.0;
  /// Bound on the omitted sum over k > k_max (Weyl-law estimate).
  double truncation_bound = 0.0;
};

CylinderTrace cylinder_trace(const Spectrum& spectrum, double t);

/// Absolute accuracy the spectral route is expected to reach.
inline constexpr double kSpectralTarget = 1e-3;

struct SpectralEnergy {
  double value = 0.0;
  double error_estimate = 0.0;
  /// error_estimate <= kSpectralTarget
  bool converged = true;
  std::vector<double> t_grid;
  std::vector<double> samples;
};

/// Regularised sum: g(t) = (1/2)[sum k e^{-kt} - total_length/(pi t^2)],
/// extrapolated to t -> 0 over the given (decreasing) grid.
SpectralEnergy energy_from_spectrum(const Spectrum& spectrum,
                                    std::span<const double> t_grid);

/// Default grid t0, t0/2, t0/4, t0/8 with t0 = min_length / 4.
std::vector<double> default_t_grid(double min_length);

/// k_max needed for the default grid to be trustworthy.
double required_k_max(double min_length);

}  // namespace qgraph
