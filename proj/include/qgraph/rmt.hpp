#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qgraph {

enum class Ensemble { Poisson, COE, CUE, CSE, CSE_KramersLifted };

std::string ensemble_name(Ensemble kind);
Ensemble parse_ensemble(std::string_view name);

inline constexpr double kZeta3 = 1.202056903159594285399738161511;

struct EnsembleSample {
  Ensemble kind = Ensemble::CUE;
  int dim = 0;
  /// dim phases in (0, 2 pi], sorted. For CSE they come in equal pairs.
  std::vector<double> thetas;
  std::uint64_t seed = 0;
};

/// Independent stream seed for sample `index` of a run seeded with `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Haar-distributed unitary from the QR decomposition of a complex
/// Ginibre matrix with the phases of diag(R) divided out.
Eigen::MatrixXcd haar_unitary(int n, std::mt19937_64& rng);

/// Eigenphases for one draw of the ensemble. dim = 2B must be even.
/// CSE: eigenphases of a self-dual matrix built from a dim x dim Haar
/// unitary; B distinct phases, each reported twice.
/// CSE_KramersLifted: the 2B distinct phases of a 4B x 4B CSE matrix.
EnsembleSample sample_eigenphases(Ensemble kind, int dim, std::uint64_t seed);

/// Random J-symmetric unitary S = J U D U^dagger with U Haar and D a
/// random diagonal of +-1 entries; dim = 2B.
Eigen::MatrixXcd random_j_symmetric_unitary(int dim, std::uint64_t seed);

struct VarianceResult {
  Ensemble kind = Ensemble::CUE;
  int bonds = 0;
  double length = 1.0;
  double mean = 0.0;
  double mean_stderr = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;
  double closed_form = 0.0;
  long samples = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo mean and variance of the equal-length vacuum energy over
/// the ensemble. Results do not depend on `threads`.
VarianceResult mc_energy_stats(Ensemble kind, int bonds, double length, long samples,
                               std::uint64_t seed, int threads = 1);

struct TraceMoments {
  /// <tr S^n> for n = 1..n_max with the standard error of each part.
  std::vector<std::complex<double>> mean;
  std::vector<std::complex<double>> mean_stderr;
  /// <|tr S^n|^2>.
  std::vector<double> form_factor;
  std::vector<double> form_factor_stderr;
  /// <Re tr S^n Re tr S^m>, row-major n_max x n_max.
  std::vector<double> cross;
  std::vector<double> cross_stderr;
  int n_max = 0;
  long samples = 0;
};

TraceMoments mc_trace_moments(Ensemble kind, int bonds, int n_max, long samples,
                              std::uint64_t seed, int threads = 1);

struct FormFactor {
  Ensemble kind = Ensemble::CUE;
  int n = 0;
  int bonds = 0;
  double value = 0.0;
};

/// K(n) = <|tr S^n|^2> for dimension 2B.
FormFactor form_factor(Ensemble kind, int n, int bonds);

/// Smallest cutoff for which 2B sum_{n > N} n^-4 is below 1e-10.
long default_series_cutoff(int bonds);

/// (1 / (8 pi^2 L^2)) sum_n K(n) / n^4, summed to n_cutoff plus the
/// tail with K at its large-n value. `printed` multiplies by 4.
double variance_from_form_factor(Ensemble kind, int bonds, double length,
                                 long n_cutoff = 0, bool printed = false);

/// The same variance through polygamma closed forms.
double variance_closed(Ensemble kind, int bonds, double length, bool printed = false);

}  // namespace qgraph
