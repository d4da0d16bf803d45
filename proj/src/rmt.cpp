#include "qgraph/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>

#include "qgraph/casimir.hpp"
#include "qgraph/numerics.hpp"

namespace qgraph {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform on [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

cd complex_gaussian(std::mt19937_64& rng) {
  // Box-Muller; 1 - u keeps the logarithm finite.
  const double u = 1.0 - uniform01(rng);
  const double v = uniform01(rng);
  const double r = std::sqrt(-std::log(u));
  return {r * std::cos(kTwoPi * v), r * std::sin(kTwoPi * v)};
}

double to_phase(cd z) {
  double th = std::arg(z);
  if (th <= 0.0) th += kTwoPi;
  return th;
}

std::vector<double> phases_of(const Eigen::MatrixXcd& m) {
  // A unitary matrix is normal, so the eigenvectors of the Hermitian
  // combination Re(S) + c Im(S) diagonalise it unless two phases collide
  // under theta -> cos(theta) + c sin(theta); that case is detected from
  // the off-diagonal residue and handed to the general solver.
  constexpr double c = 0.5772156649015329;
  const Eigen::MatrixXcd h =
      0.5 * (m + m.adjoint()) + cd(0.0, -0.5 * c) * (m - m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> herm(h);
  std::vector<double> out;
  if (herm.info() == Eigen::Success) {
    const Eigen::MatrixXcd d = herm.eigenvectors().adjoint() * m * herm.eigenvectors();
    const Eigen::MatrixXcd off = d - Eigen::MatrixXcd(d.diagonal().asDiagonal());
    if (off.cwiseAbs().maxCoeff() <= 1e-10) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_phase(d(i, i)));
    }
  }
  if (out.empty()) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, false);
    if (solver.info() != Eigen::Success) throw Error("sample_eigenphases: eigensolver failed");
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_phase(solver.eigenvalues()(i)));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double circular_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

/// Collapse Kramers pairs of a sorted phase list to one phase per pair.
std::vector<double> kramers_distinct(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  double worst_a = 0.0, worst_b = 0.0;
  for (std::size_t i = 0; i < n; i += 2) {
    worst_a = std::max(worst_a, circular_gap(sorted[i], sorted[i + 1]));
    worst_b = std::max(worst_b, circular_gap(sorted[i + 1], sorted[(i + 2) % n]));
  }
  const std::size_t offset = worst_a <= worst_b ? 0 : 1;
  std::vector<double> out;
  for (std::size_t i = 0; i < n; i += 2) {
    const double a = sorted[(i + offset) % n];
    double b = sorted[(i + offset + 1) % n];
    if (b < a) b += kTwoPi;
    double mid = 0.5 * (a + b);
    if (mid > kTwoPi) mid -= kTwoPi;
    out.push_back(mid);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Self-dual S = Z U^T Z^T U with Z the symplectic unit, dimension n = 2m.
Eigen::MatrixXcd self_dual(const Eigen::MatrixXcd& u) {
  const Eigen::Index m = u.rows() / 2;
  Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(u.rows(), u.cols());
  z.topRightCorner(m, m).setIdentity();
  z.bottomLeftCorner(m, m) = -Eigen::MatrixXcd::Identity(m, m);
  return z * u.transpose() * z.transpose() * u;
}

void require_dim(int dim, const char* who) {
  if (dim < 2 || dim % 2 != 0) {
    throw Error(std::string(who) + ": dimension must be even and at least 2");
  }
}

struct Moments {
  double mean = 0.0;
  double mean_stderr = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;
};

Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  CompensatedSum<double> s1;
  for (double v : x) s1 += v;
  Moments m;
  m.mean = s1.value() / n;
  CompensatedSum<double> s2, s4;
  for (double v : x) {
    const double d = (v - m.mean) * (v - m.mean);
    s2 += d;
    s4 += d * d;
  }
  m.variance = s2.value() / (n - 1.0);
  m.mean_stderr = std::sqrt(m.variance / n);
  const double m4 = s4.value() / n;
  m.variance_stderr = std::sqrt(std::max(m4 - m.variance * m.variance, 0.0) / n);
  return m;
}

/// Runs f(i) for i in [0, count) over `threads` workers in contiguous blocks.
template <typename F>
void parallel_for(long count, int threads, F&& f) {
  threads = std::max(1, threads);
  const long block = (count + threads - 1) / threads;
  std::vector<std::future<void>> jobs;
  for (int t = 0; t < threads; ++t) {
    const long first = t * block;
    const long last = std::min(count, first + block);
    if (first >= last) break;
    jobs.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async,
                              [&f, first, last] {
                                for (long i = first; i < last; ++i) f(i);
                              }));
  }
  for (auto& j : jobs) j.get();
}

double harmonic3(long m) {
  // sum_{n <= m} n^-3 = zeta(3) + psi''(m + 1) / 2
  if (m <= 0) return 0.0;
  return kZeta3 + 0.5 * boost::math::polygamma(2, static_cast<double>(m) + 1.0);
}

double inverse_power_tail(int power, long n) {
  // sum_{k > n} k^-p = (-1)^p psi^{(p-1)}(n + 1) / (p - 1)!
  const double fact = std::tgamma(static_cast<double>(power));
  const double sign = power % 2 == 0 ? 1.0 : -1.0;
  return sign * boost::math::polygamma(power - 1, static_cast<double>(n) + 1.0) / fact;
}

double prefactor(double length, bool printed) {
  if (!(length > 0.0)) throw Error("variance: length must be positive");
  return (printed ? 4.0 : 1.0) / (8.0 * kPi * kPi * length * length);
}

double cse_factor(long n, int b) {
  const long two_b = 2L * b;
  if (n >= two_b) return static_cast<double>(2 * two_b);
  CompensatedSum<double> h;
  for (long m = 1; m <= n; ++m) h += 1.0 / (b + 0.5 - static_cast<double>(m));
  return 2.0 * n + n * h.value();
}

double coe_factor(long n, int b) {
  const long two_b = 2L * b;
  CompensatedSum<double> h;
  if (n <= two_b) {
    for (long m = 1; m <= n; ++m) h += 1.0 / (static_cast<double>(m) + b - 0.5);
    return 2.0 * n - n * h.value();
  }
  for (long j = 0; j < two_b; ++j) h += 1.0 / (static_cast<double>(n) - b + 0.5 + j);
  return 2.0 * two_b - n * h.value();
}

double factor(Ensemble kind, long n, int b) {
  switch (kind) {
    case Ensemble::Poisson: return 2.0 * b;
    case Ensemble::CUE: return static_cast<double>(std::min<long>(n, 2L * b));
    case Ensemble::COE: return coe_factor(n, b);
    case Ensemble::CSE: return cse_factor(n, b);
    case Ensemble::CSE_KramersLifted: return 0.25 * cse_factor(n, 2 * b);
  }
  throw Error("form_factor: unsupported ensemble");
}

double limit_factor(Ensemble kind, int b) {
  return kind == Ensemble::CSE ? 4.0 * b : 2.0 * b;
}

}  // namespace

std::string ensemble_name(Ensemble kind) {
  switch (kind) {
    case Ensemble::Poisson: return "poisson";
    case Ensemble::COE: return "coe";
    case Ensemble::CUE: return "cue";
    case Ensemble::CSE: return "cse";
    case Ensemble::CSE_KramersLifted: return "cse-lifted";
  }
  return "unknown";
}

Ensemble parse_ensemble(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "poisson") return Ensemble::Poisson;
  if (lower == "coe") return Ensemble::COE;
  if (lower == "cue") return Ensemble::CUE;
  if (lower == "cse") return Ensemble::CSE;
  if (lower == "cse-lifted" || lower == "cse_kramerslifted" || lower == "cse-kramers") {
    return Ensemble::CSE_KramersLifted;
  }
  throw Error("unknown ensemble '" + std::string(name) + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Eigen::MatrixXcd haar_unitary(int n, std::mt19937_64& rng) {
  Eigen::MatrixXcd g(n, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) g(r, c) = complex_gaussian(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (int c = 0; c < n; ++c) {
    const double mag = std::abs(r(c, c));
    q.col(c) *= mag > 0.0 ? r(c, c) / mag : cd{1.0};
  }
  return q;
}

EnsembleSample sample_eigenphases(Ensemble kind, int dim, std::uint64_t seed) {
  require_dim(dim, "sample_eigenphases");
  std::mt19937_64 rng(seed);
  EnsembleSample out;
  out.kind = kind;
  out.dim = dim;
  out.seed = seed;
  switch (kind) {
    case Ensemble::Poisson:
      for (int i = 0; i < dim; ++i) out.thetas.push_back(kTwoPi * (1.0 - uniform01(rng)));
      std::sort(out.thetas.begin(), out.thetas.end());
      break;
    case Ensemble::CUE:
      out.thetas = phases_of(haar_unitary(dim, rng));
      break;
    case Ensemble::COE: {
      const Eigen::MatrixXcd u = haar_unitary(dim, rng);
      out.thetas = phases_of(u.transpose() * u);
      break;
    }
    case Ensemble::CSE: {
      const auto distinct = kramers_distinct(phases_of(self_dual(haar_unitary(dim, rng))));
      for (double th : distinct) {
        out.thetas.push_back(th);
        out.thetas.push_back(th);
      }
      break;
    }
    case Ensemble::CSE_KramersLifted:
      out.thetas = kramers_distinct(phases_of(self_dual(haar_unitary(2 * dim, rng))));
      break;
  }
  return out;
}

Eigen::MatrixXcd random_j_symmetric_unitary(int dim, std::uint64_t seed) {
  require_dim(dim, "random_j_symmetric_unitary");
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXcd u = haar_unitary(dim, rng);
  Eigen::VectorXcd d(dim);
  for (int i = 0; i < dim; ++i) d(i) = (rng() >> 63) ? 1.0 : -1.0;
  const Eigen::MatrixXcd h = u * d.asDiagonal() * u.adjoint();
  const int nb = dim / 2;
  Eigen::MatrixXcd s(dim, dim);
  // (J H) row a is row rev(a) of H.
  for (int a = 0; a < dim; ++a) s.row(a) = h.row(a < nb ? a + nb : a - nb);
  return s;
}

VarianceResult mc_energy_stats(Ensemble kind, int bonds, double length, long samples,
                               std::uint64_t seed, int threads) {
  if (bonds < 1) throw Error("mc_energy_stats: B must be at least 1");
  if (samples < 1000) throw Error("mc_energy_stats: need at least 1000 samples");
  std::vector<double> energies(samples);
  parallel_for(samples, threads, [&](long i) {
    const auto draw = sample_eigenphases(kind, 2 * bonds, derive_seed(seed, i));
    energies[i] = energy_equal_bernoulli(draw.thetas, length);
  });
  const Moments m = moments(energies);
  VarianceResult out;
  out.kind = kind;
  out.bonds = bonds;
  out.length = length;
  out.mean = m.mean;
  out.mean_stderr = m.mean_stderr;
  out.variance = m.variance;
  out.variance_stderr = m.variance_stderr;
  out.closed_form = variance_closed(kind, bonds, length);
  out.samples = samples;
  out.seed = seed;
  return out;
}

TraceMoments mc_trace_moments(Ensemble kind, int bonds, int n_max, long samples,
                              std::uint64_t seed, int threads) {
  if (n_max < 1) throw Error("mc_trace_moments: n_max must be >= 1");
  if (samples < 2) throw Error("mc_trace_moments: need at least 2 samples");
  std::vector<cd> traces(static_cast<std::size_t>(samples) * n_max);
  parallel_for(samples, threads, [&](long i) {
    const auto draw = sample_eigenphases(kind, 2 * bonds, derive_seed(seed, i));
    for (int n = 1; n <= n_max; ++n) {
      cd tr = 0.0;
      for (double th : draw.thetas) tr += std::polar(1.0, n * th);
      traces[i * n_max + (n - 1)] = tr;
    }
  });
  TraceMoments out;
  out.n_max = n_max;
  out.samples = samples;
  std::vector<double> buf(samples);
  auto column = [&](auto&& value) {
    for (long i = 0; i < samples; ++i) buf[i] = value(i);
    return moments(buf);
  };
  for (int n = 0; n < n_max; ++n) {
    const auto re = column([&](long i) { return traces[i * n_max + n].real(); });
    const auto im = column([&](long i) { return traces[i * n_max + n].imag(); });
    const auto ff = column([&](long i) { return std::norm(traces[i * n_max + n]); });
    out.mean.push_back({re.mean, im.mean});
    out.mean_stderr.push_back({re.mean_stderr, im.mean_stderr});
    out.form_factor.push_back(ff.mean);
    out.form_factor_stderr.push_back(ff.mean_stderr);
  }
  for (int n = 0; n < n_max; ++n) {
    for (int m = 0; m < n_max; ++m) {
      const auto c = column([&](long i) {
        return traces[i * n_max + n].real() * traces[i * n_max + m].real();
      });
      out.cross.push_back(c.mean);
      out.cross_stderr.push_back(c.mean_stderr);
    }
  }
  return out;
}

FormFactor form_factor(Ensemble kind, int n, int bonds) {
  if (n < 1) throw Error("form_factor: n must be >= 1");
  if (bonds < 1) throw Error("form_factor: B must be at least 1");
  return {kind, n, bonds, factor(kind, n, bonds)};
}

long default_series_cutoff(int bonds) {
  return static_cast<long>(std::ceil(std::cbrt(2.0 * bonds / 3e-10)));
}

double variance_from_form_factor(Ensemble kind, int bonds, double length, long n_cutoff,
                                 bool printed) {
  if (bonds < 1) throw Error("variance_from_form_factor: B must be at least 1");
  const long needed = default_series_cutoff(bonds);
  if (n_cutoff == 0) n_cutoff = std::max<long>(needed, 64L * bonds);
  if (n_cutoff < needed) {
    throw Error("variance_from_form_factor: cutoff below " + std::to_string(needed));
  }
  CompensatedSum<double> sum;
  for (long n = n_cutoff; n >= 1; --n) {
    const double nd = static_cast<double>(n);
    sum += factor(kind, n, bonds) / (nd * nd * nd * nd);
  }
  sum += limit_factor(kind, bonds) * inverse_power_tail(4, n_cutoff);
  return prefactor(length, printed) * sum.value();
}

double variance_closed(Ensemble kind, int bonds, double length, bool printed) {
  if (bonds < 1) throw Error("variance_closed: B must be at least 1");
  using boost::math::digamma;
  using boost::math::polygamma;
  const double b = bonds;
  const double two_b = 2.0 * b;
  double series = 0.0;
  switch (kind) {
    case Ensemble::Poisson:
      return (printed ? 4.0 : 1.0) * kPi * kPi * b / (360.0 * length * length);
    case Ensemble::CUE:
      series = kZeta3 + 0.5 * polygamma(2, two_b) + b / 3.0 * polygamma(3, two_b);
      break;
    case Ensemble::COE: {
      CompensatedSum<double> s;
      s += harmonic3(2 * bonds - 1) * (2.0 + digamma(b + 0.5));
      for (int n = 1; n < 2 * bonds; ++n) {
        s += -digamma(n + b + 0.5) / (static_cast<double>(n) * n * n);
      }
      // n >= 2B: K = 4B - n (psi(n + B + 1/2) - psi(n - B + 1/2)),
      // summed to M and closed with the large-n expansion of K.
      const long far = 4L * bonds + 4000;
      for (long n = far; n >= 2L * bonds; --n) {
        const double nd = static_cast<double>(n);
        const double k = 2.0 * two_b - nd * (digamma(nd + b + 0.5) - digamma(nd - b + 0.5));
        s += k / (nd * nd * nd * nd);
      }
      s += two_b * inverse_power_tail(4, far);
      s += -b * (4.0 * b * b - 1.0) / 6.0 * inverse_power_tail(6, far);
      series = s.value();
      break;
    }
    case Ensemble::CSE: {
      CompensatedSum<double> s;
      s += harmonic3(2 * bonds - 1) * (2.0 + digamma(b + 0.5));
      for (int n = 1; n < 2 * bonds; ++n) {
        s += -digamma(n - b + 0.5) / (static_cast<double>(n) * n * n);
      }
      s += two_b / 3.0 * polygamma(3, two_b);
      series = s.value();
      break;
    }
    case Ensemble::CSE_KramersLifted:
      return 0.25 * variance_closed(Ensemble::CSE, 2 * bonds, length, printed);
  }
  return prefactor(length, printed) * series;
}

}  // namespace qgraph
