#include "qgraph/casimir.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "qgraph/spectrum.hpp"

namespace qgraph {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Panel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
  bool operator<(const Panel& other) const { return error < other.error; }
};

/// One Gauss-Kronrod 7/15 panel; error is |K15 - G7|.
template <typename F>
Panel gk15(F& f, double a, double b) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = wk[0] * fc;
  double gauss = wg[0] * fc;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double fsum = f(c - h * x[i]) + f(c + h * x[i]);
    kronrod += wk[i] * fsum;
    // Gauss nodes are the even-indexed Kronrod abscissae.
    if (i % 2 == 0) gauss += wg[i / 2] * fsum;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

/// Globally adaptive bisection over an initial panel set, absolute tolerance.
template <typename F>
std::pair<double, double> adaptive(F& f, const std::vector<double>& breaks,
                                   double abs_tol, int max_depth) {
  std::priority_queue<Panel> queue;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    queue.push(gk15(f, breaks[i], breaks[i + 1]));
  }
  const std::size_t max_panels = breaks.size() * (std::size_t{1} << std::min(max_depth, 12));
  auto total_error = [&] {
    double e = 0.0;
    auto copy = queue;
    while (!copy.empty()) {
      e += copy.top().error;
      copy.pop();
    }
    return e;
  };
  double err = total_error();
  while (err > abs_tol && queue.size() < max_panels) {
    const Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = gk15(f, worst.a, mid);
    const Panel right = gk15(f, mid, worst.b);
    queue.push(left);
    queue.push(right);
    err += left.error + right.error - worst.error;
    if (err <= abs_tol) err = total_error();  // refresh drift from updates
  }
  std::vector<Panel> panels;
  while (!queue.empty()) {
    panels.push_back(queue.top());
    queue.pop();
  }
  // Sum in position order so the result does not depend on heap layout.
  std::sort(panels.begin(), panels.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  CompensatedSum<double> sum, esum;
  for (const auto& p : panels) {
    sum += p.value;
    esum += p.error;
  }
  return {sum.value(), esum.value()};
}

EnergyBreakdown breakdown_from_sigmas(std::vector<cd> sigmas, int directed,
                                      double l_min, int requested) {
  EnergyBreakdown out;
  out.per_n_partial = std::move(sigmas);
  out.n_max = static_cast<int>(out.per_n_partial.size());
  out.truncated = out.n_max < requested;
  CompensatedSum<double> sum;
  for (int n = 1; n <= out.n_max; ++n) {
    sum += out.per_n_partial[n - 1].real();
    out.per_n_bound.push_back(directed / (static_cast<double>(n) * n * l_min));
  }
  out.value = -sum.value() / kTwoPi;
  out.tail_bound = orbit_tail_bound(directed, l_min, out.n_max);
  return out;
}

}  // namespace

double bernoulli2(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error("bernoulli2: argument outside [0, 1]");
  return x * x - x + 1.0 / 6.0;
}

double energy_star(int bonds, double length) {
  if (bonds < 1) throw Error("energy_star: B must be at least 1");
  if (!(length > 0.0)) throw Error("energy_star: length must be positive");
  return (bonds - 3) * kPi / (48.0 * length);
}

double energy_equal_bernoulli(std::span<const double> thetas, double length) {
  if (!(length > 0.0)) throw Error("energy_equal_bernoulli: length must be positive");
  CompensatedSum<double> sum;
  for (double th : thetas) {
    if (!(th >= 0.0 && th <= kTwoPi)) {
      throw Error("energy_equal_bernoulli: phase outside (0, 2 pi]");
    }
    sum += bernoulli2(th / kTwoPi);
  }
  return -kPi / (2.0 * length) * sum.value();
}

std::vector<double> scattering_eigenphases(const Eigen::MatrixXcd& s) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(s, false);
  if (solver.info() != Eigen::Success) throw Error("eigenphases: eigensolver failed");
  std::vector<double> out;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    double th = std::arg(solver.eigenvalues()(i));
    if (th <= 0.0) th += kTwoPi;
    out.push_back(th);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double orbit_tail_bound(int directed_bonds, double min_length, int n_max) {
  // sum_{n > N} 1/n^2 = psi'(N + 1)
  const double tail = boost::math::trigamma(static_cast<double>(std::max(n_max, 0)) + 1.0);
  return directed_bonds / (kTwoPi * min_length) * tail;
}

EnergyBreakdown energy_orbit_sum(const BondScatteringMatrix& s,
                                 std::span<const double> lengths, int n_max) {
  require_j_symmetric(s, "energy_orbit_sum");
  if (n_max < 1) throw Error("energy_orbit_sum: n_max must be >= 1");
  const double l_min = *std::min_element(lengths.begin(), lengths.end());
  const PathSums sums(s.s, lengths);
  return breakdown_from_sigmas(sums.sigmas(n_max), s.size(), l_min, n_max);
}

EnergyBreakdown energy_orbit_sum_enumerated(const BondScatteringMatrix& s,
                                            std::span<const double> lengths,
                                            int n_max, std::size_t budget) {
  require_j_symmetric(s, "energy_orbit_sum");
  if (n_max < 1) throw Error("energy_orbit_sum: n_max must be >= 1");
  const double l_min = *std::min_element(lengths.begin(), lengths.end());
  std::vector<cd> sigmas;
  for (int n = 1; n <= n_max; ++n) {
    try {
      sigmas.push_back(enumerate_periodic_paths(s.s, lengths, n, budget).sigma);
    } catch (const BudgetExceeded&) {
      break;
    }
  }
  return breakdown_from_sigmas(std::move(sigmas), s.size(), l_min, n_max);
}

double log_det_resolvent(const Eigen::MatrixXcd& s, std::span<const double> lengths,
                         double s_arg) {
  const Eigen::Index n = s.rows();
  Eigen::MatrixXcd m = -s;
  for (Eigen::Index c = 0; c < n; ++c) m.col(c) *= std::exp(-s_arg * lengths[c]);
  m.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
  const auto& u = lu.matrixLU();
  double log_abs = 0.0;
  cd phase = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mag = std::abs(u(i, i));
    if (mag == 0.0) return -std::numeric_limits<double>::infinity();
    log_abs += std::log(mag);
    phase *= u(i, i) / mag;
  }
  phase *= static_cast<double>(lu.permutationP().determinant());
  // The determinant is real and positive for s > 0; near s = 0 roundoff
  // dominates its phase, so only check away from the singular point.
  if (s_arg > 1e-6 && (phase.real() <= 0.0 || std::abs(phase.imag()) > 1e-6)) {
    throw Error("log_det_resolvent: det(I - S exp(-sL)) is not real positive at s = " +
                std::to_string(s_arg));
  }
  return log_abs;
}

LogDetEnergy energy_logdet_detailed(const BondScatteringMatrix& s,
                                    std::span<const double> lengths,
                                    const QuadratureConfig& config) {
  require_j_symmetric(s, "energy_logdet");
  if (static_cast<int>(lengths.size()) != s.size()) {
    throw Error("energy_logdet: need one length per directed bond");
  }
  const double l_min = *std::min_element(lengths.begin(), lengths.end());
  const double l_max = *std::max_element(lengths.begin(), lengths.end());
  // Spectral radius of S exp(-sL) is at most exp(-s L_min).
  const double s_max = std::log(s.size() * 1e16) / l_min;
  const double sigma0 = std::min(0.25 / l_max, 0.5 * s_max);

  LogDetEnergy out;
  auto f = [&](double x) {
    ++out.evaluations;
    return log_det_resolvent(s.s, lengths, x);
  };

  // Geometric panels [2^{-j-1} sigma0, 2^{-j} sigma0] toward the log
  // singularity, then [sigma0, s_max].
  std::vector<double> breaks;
  double a = sigma0;
  while (a > config.min_panel) {
    breaks.push_back(a);
    a *= 0.5;
  }
  std::reverse(breaks.begin(), breaks.end());
  const int coarse = 16;
  for (int i = 1; i <= coarse; ++i) {
    breaks.push_back(sigma0 + (s_max - sigma0) * std::pow(static_cast<double>(i) / coarse, 2.0));
  }
  const auto [integral, error] = adaptive(f, breaks, config.abs_tol, config.max_depth);

  // Remaining [0, a]: log det ~ m log s + c with m eigenphases of S at 0.
  const double a0 = breaks.front();
  int zero_modes = 0;
  for (double th : scattering_eigenphases(s.s)) {
    if (th < 1e-9 || kTwoPi - th < 1e-9) ++zero_modes;
  }
  const double fa = f(a0);
  const double head = a0 * fa - zero_modes * a0;

  out.value = (integral + head) / kTwoPi;
  out.error_estimate = (error + std::abs(head)) / kTwoPi;
  return out;
}

double energy_rational(const MetricGraph& graph, std::optional<double> unit) {
  if (!unit) {
    std::vector<double> lengths;
    for (const auto& b : graph.bonds()) lengths.push_back(b.length);
    unit = commensurate_unit(lengths);
    if (!unit) throw Error("energy_rational: incommensurate lengths");
  }
  const MetricGraph fine = subdivide_rational(graph, *unit);
  const auto s = assemble_bond_s(fine);
  require_j_symmetric(s, "energy_rational");
  return energy_equal_bernoulli(scattering_eigenphases(s.s), *unit);
}

ForceResult casimir_force(const MetricGraph& graph, int bond, double step,
                          const QuadratureConfig& config) {
  if (bond < 0 || bond >= graph.bond_count()) throw Error("casimir_force: no such bond");
  const double base = graph.bond(bond).length;
  if (!(step > 0.0) || base - 2.0 * step <= 0.0) {
    throw Error("casimir_force: step must satisfy 0 < 2h < L_b");
  }
  const auto s = assemble_bond_s(graph);
  require_j_symmetric(s, "casimir_force");
  const int nb = graph.bond_count();
  auto energy_at = [&](double len) {
    auto lengths = graph.directed_lengths();
    lengths[bond] = len;
    lengths[bond + nb] = len;
    return energy_logdet(s, lengths, config);
  };
  auto derivative = [&](double h) {
    return (-energy_at(base + 2 * h) + 8 * energy_at(base + h) - 8 * energy_at(base - h) +
            energy_at(base - 2 * h)) /
           (12.0 * h);
  };
  const double coarse = derivative(step);
  const double fine = derivative(0.5 * step);
  ForceResult out;
  out.value = -coarse;
  out.error_estimate = 16.0 / 15.0 * std::abs(coarse - fine);
  out.step = step;
  if (out.error_estimate > 0.1 * std::abs(out.value) && out.error_estimate > 1e-8) {
    throw Error("casimir_force: step too large (stencil error estimate exceeds 10% "
                "of the force)");
  }
  return out;
}

}  // namespace qgraph
