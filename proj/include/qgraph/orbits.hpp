#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qgraph/numerics.hpp"

namespace qgraph {

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A periodic path (alpha_1 .. alpha_n) with every transition nonzero.
struct PeriodicPath {
  std::vector<int> bonds;
  std::complex<double> amplitude;  // prod S_{alpha_{j+1}, alpha_j}, cyclic
  double length = 0.0;             // sum of L_{alpha_j}

  int period() const { return static_cast<int>(bonds.size()); }
};

struct PathEnumeration {
  std::vector<PeriodicPath> paths;
  /// sigma_n = sum_p A_p / (l_p n).
  std::complex<double> sigma;
};

/// Depth-first listing of all periodic paths of period n over the nonzero
/// pattern of S. Throws BudgetExceeded past `budget` materialised paths.
PathEnumeration enumerate_periodic_paths(const Eigen::MatrixXcd& s,
                                         std::span<const double> lengths, int n,
                                         std::size_t budget = 10'000'000);

/// Amplitudes summed over all paths sharing a metric length.
struct LengthGroup {
  double length = 0.0;
  std::complex<double> amplitude;
};

/// Bounce-path amplitudes A_{alpha w rev(alpha)} grouped by the interior
/// length l_w and the length of the closing bond alpha.
struct BounceGroup {
  double interior_length = 0.0;
  double closing_length = 0.0;
  std::complex<double> amplitude;
};

/// Transfer-matrix evaluation of path sums. Paths are aggregated by how
/// many times they use each distinct bond length, so the work grows
/// polynomially in the period instead of exponentially. With all lengths
/// equal a level costs O(B^2).
class PathSums {
 public:
  PathSums(const Eigen::MatrixXcd& s, std::span<const double> lengths);

  /// Entry n-1 holds sum_{p in P_n} A_p grouped by l_p, for n = 1..n_max.
  std::vector<std::vector<LengthGroup>> periodic(int n_max) const;

  /// sigma_n = sum_{p in P_n} A_p / (l_p n) for n = 1..n_max.
  std::vector<std::complex<double>> sigmas(int n_max) const;

  /// Entry n holds the bounce groups with |w| = n, for n = 0..m_max.
  std::vector<std::vector<BounceGroup>> bounce(int m_max) const;

  int distinct_lengths() const { return static_cast<int>(values_.size()); }

 private:
  struct Succ {
    int to;
    std::complex<double> amp;
  };
  std::uint64_t radix_for(int levels) const;

  int dim_;
  std::vector<std::vector<Succ>> succ_;
  std::vector<double> values_;  // distinct lengths
  std::vector<int> class_of_;   // per directed bond
};

}  // namespace qgraph
