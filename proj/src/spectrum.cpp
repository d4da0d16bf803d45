#include "qgraph/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <numbers>
#include <string>

namespace qgraph {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Phases this close to the branch cut are treated as sitting on it.
constexpr double kCutBand = 1e-9;

struct PhaseState {
  double k = 0.0;
  double phase_sum = 0.0;  // sum of eigenphases taken in [0, 2 pi)
  double min_cut_distance = 0.0;
};

class CrossingCounter {
 public:
  CrossingCounter(const Eigen::MatrixXcd& s, std::span<const double> lengths)
      : s_(s), lengths_(lengths.begin(), lengths.end()) {
    for (double l : lengths_) directed_length_ += l;
  }

  PhaseState state(double k) const {
    const auto phases = evolution_eigenphases(s_, lengths_, k);
    PhaseState st{k, 0.0, kTwoPi};
    for (double th : phases) {
      st.phase_sum += th;
      st.min_cut_distance = std::min({st.min_cut_distance, th, kTwoPi - th});
    }
    return st;
  }

  /// Crossings of phase 0 in (a.k, b.k]. Every eigenphase advances with
  /// speed in [L_min, L_max] while arg det U grows exactly by
  /// (sum of directed lengths) * dk, so the deficit counts wraps.
  long crossings(const PhaseState& a, const PhaseState& b) const {
    const double drift = directed_length_ * (b.k - a.k);
    const double raw = (drift - (b.phase_sum - a.phase_sum)) / kTwoPi;
    const double rounded = std::round(raw);
    if (std::abs(raw - rounded) > 1e-6 || rounded < 0.0) {
      throw Error("find_spectrum: eigenphase count is not a non-negative "
                  "integer between k = " + std::to_string(a.k) + " and " +
                  std::to_string(b.k) + " (phase tracking lost)");
    }
    return static_cast<long>(rounded);
  }

  int dim() const { return static_cast<int>(s_.rows()); }

 private:
  const Eigen::MatrixXcd& s_;
  std::vector<double> lengths_;
  double directed_length_ = 0.0;
};

/// Nudge a grid point off the branch cut so its crossing count is unambiguous.
PhaseState clean_state(const CrossingCounter& counter, double k, double step) {
  PhaseState st = counter.state(k);
  double shift = step * 1e-3;
  for (int tries = 0; st.min_cut_distance < kCutBand && tries < 20; ++tries) {
    st = counter.state(k + shift);
    shift *= 0.5;
  }
  return st;
}

void bisect(const CrossingCounter& counter, const PhaseState& a,
            const PhaseState& b, long count, double tol,
            std::vector<Level>& out) {
  if (count == 0) return;
  if (b.k - a.k <= 2.0 * tol) {
    out.push_back({0.5 * (a.k + b.k), static_cast<int>(count)});
    return;
  }
  const PhaseState mid = counter.state(0.5 * (a.k + b.k));
  const long left = std::clamp(counter.crossings(a, mid), 0L, count);
  bisect(counter, a, mid, left, tol, out);
  bisect(counter, mid, b, count - left, tol, out);
}

std::vector<Level> merge_levels(std::vector<Level> raw, double merge) {
  std::sort(raw.begin(), raw.end(),
            [](const Level& x, const Level& y) { return x.k < y.k; });
  std::vector<Level> out;
  for (const auto& lv : raw) {
    if (!out.empty() && lv.k - out.back().k < merge) {
      // Multiplicity-weighted centre of the merged cluster.
      auto& back = out.back();
      const int m = back.multiplicity + lv.multiplicity;
      back.k = (back.k * back.multiplicity + lv.k * lv.multiplicity) / m;
      back.multiplicity = m;
    } else {
      out.push_back(lv);
    }
  }
  return out;
}

Spectrum finish_equal(std::vector<double> ks, int zero_modes, double length,
                      std::size_t dim, double k_max) {
  Spectrum sp;
  sp.k_max = k_max;
  sp.zero_modes = zero_modes;
  sp.total_length = 0.5 * static_cast<double>(dim) * length;
  sp.directed_bonds = static_cast<int>(dim);
  std::vector<Level> raw;
  raw.reserve(ks.size());
  for (double k : ks) raw.push_back({k, 1});
  sp.levels = merge_levels(std::move(raw), 1e-12 * std::max(1.0, k_max));
  return sp;
}

}  // namespace

long Spectrum::count_below(double k) const {
  long n = include_zero_mode ? zero_modes : 0;
  for (const auto& lv : levels) {
    if (lv.k > k) break;
    n += lv.multiplicity;
  }
  return n;
}

std::vector<double> evolution_eigenphases(const Eigen::MatrixXcd& s,
                                          std::span<const double> lengths,
                                          double k) {
  const Eigen::Index n = s.rows();
  if (static_cast<Eigen::Index>(lengths.size()) != n) {
    throw Error("evolution_eigenphases: need one length per directed bond");
  }
  Eigen::MatrixXcd u = s;
  for (Eigen::Index c = 0; c < n; ++c) u.col(c) *= std::polar(1.0, k * lengths[c]);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(u, false);
  if (solver.info() != Eigen::Success) {
    throw Error("evolution_eigenphases: eigensolver failed");
  }
  std::vector<double> phases(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double th = std::arg(solver.eigenvalues()(i));
    if (th < 0.0) th += kTwoPi;
    if (th >= kTwoPi) th -= kTwoPi;
    phases[i] = th;
  }
  std::sort(phases.begin(), phases.end());
  return phases;
}

Spectrum find_spectrum(const BondScatteringMatrix& s,
                       std::span<const double> lengths, double k_max,
                       const SpectrumOptions& options) {
  require_j_symmetric(s, "find_spectrum");
  if (!(k_max > 0.0)) throw Error("find_spectrum: k_max must be positive");
  if (static_cast<int>(lengths.size()) != s.size()) {
    throw Error("find_spectrum: need one length per directed bond");
  }
  const double l_min = *std::min_element(lengths.begin(), lengths.end());
  double total = 0.0;
  for (double l : lengths) total += l;
  total *= 0.5;

  const CrossingCounter counter(s.s, lengths);
  const double step = std::min(std::numbers::pi / (4.0 * total), l_min / 8.0);
  const long cells = static_cast<long>(std::ceil(k_max / step));

  // Phases at k = 0 sitting on the cut are the zero modes; they are
  // counted as already crossed (phase 0) so (0, k] starts clean.
  PhaseState start{0.0, 0.0, kTwoPi};
  int zero_modes = 0;
  for (double th : evolution_eigenphases(s.s, lengths, 0.0)) {
    if (th < kCutBand || kTwoPi - th < kCutBand) {
      ++zero_modes;
    } else {
      start.phase_sum += th;
    }
  }

  const int threads = std::max(1, options.threads);
  const long per_chunk = (cells + threads - 1) / threads;
  auto work = [&](long first, long last) {
    std::vector<Level> found;
    PhaseState a = first == 0 ? start : clean_state(counter, first * step, step);
    for (long c = first; c < last; ++c) {
      const double kb = std::min(k_max, (c + 1) * step);
      PhaseState b = c + 1 == cells ? counter.state(kb) : clean_state(counter, kb, step);
      const long n = counter.crossings(a, b);
      bisect(counter, a, b, n, options.tolerance, found);
      a = b;
    }
    return found;
  };

  std::vector<std::future<std::vector<Level>>> jobs;
  for (int t = 0; t < threads; ++t) {
    const long first = t * per_chunk;
    const long last = std::min(cells, first + per_chunk);
    if (first >= last) break;
    jobs.push_back(std::async(threads == 1 ? std::launch::deferred : std::launch::async,
                              work, first, last));
  }
  std::vector<Level> raw;
  for (auto& j : jobs) {
    auto part = j.get();
    raw.insert(raw.end(), part.begin(), part.end());
  }

  Spectrum sp;
  sp.levels = merge_levels(std::move(raw), options.merge_distance);
  // A crossing exactly at k_max may be reported a hair above it.
  while (!sp.levels.empty() && sp.levels.back().k > k_max + options.tolerance) {
    sp.levels.pop_back();
  }
  sp.k_max = k_max;
  sp.include_zero_mode = options.include_zero_mode;
  sp.zero_modes = zero_modes;
  sp.tolerance = options.tolerance;
  sp.total_length = total;
  sp.directed_bonds = s.size();
  return sp;
}

Spectrum equal_length_spectrum_below(std::span<const double> thetas,
                                     double length, double k_max) {
  if (!(length > 0.0)) throw Error("equal_length_spectrum: length must be positive");
  std::vector<double> ks;
  int zeros = 0;
  for (double th : thetas) {
    double t = std::fmod(th, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t < 1e-12 || kTwoPi - t < 1e-12) {
      t = 0.0;
      ++zeros;
    }
    for (long n = 1;; ++n) {
      const double k = (kTwoPi * n - t) / length;
      if (k > k_max) break;
      ks.push_back(k);
    }
  }
  std::sort(ks.begin(), ks.end());
  return finish_equal(std::move(ks), zeros, length, thetas.size(), k_max);
}

Spectrum equal_length_spectrum(std::span<const double> thetas, double length,
                               std::size_t count) {
  if (thetas.empty() || count == 0) {
    Spectrum sp;
    sp.directed_bonds = static_cast<int>(thetas.size());
    sp.total_length = 0.5 * static_cast<double>(thetas.size()) * length;
    return sp;
  }
  // Each phase contributes one value per 2 pi / L window.
  const double windows =
      std::ceil(static_cast<double>(count) / static_cast<double>(thetas.size())) + 1.0;
  const Spectrum wide =
      equal_length_spectrum_below(thetas, length, windows * kTwoPi / length);
  Spectrum sp = wide;
  sp.levels.clear();
  std::size_t have = 0;
  for (const auto& lv : wide.levels) {
    if (have >= count) break;
    sp.levels.push_back(lv);
    have += lv.multiplicity;
  }
  sp.k_max = sp.levels.empty() ? 0.0 : sp.levels.back().k;
  return sp;
}

CylinderTrace cylinder_trace(const Spectrum& spectrum, double t) {
  if (spectrum.levels.empty()) {
    CylinderTrace empty{t, spectrum.include_zero_mode ? spectrum.zero_modes : 0.0, 0.0};
    return empty;
  }
  if (!(t > 0.0) || t < min_trustworthy_t(spectrum.k_max)) {
    throw Error("cylinder_trace: t = " + std::to_string(t) +
                " is below the trustworthy range; need k_max >= " +
                std::to_string(37.0 / t));
  }
  CompensatedSum<double> sum;
  if (spectrum.include_zero_mode) sum += spectrum.zero_modes;
  for (const auto& lv : spectrum.levels) sum += lv.multiplicity * std::exp(-lv.k * t);
  CylinderTrace out;
  out.t = t;
  out.value = sum.value();
  // |N(k) - k L/pi| <= 2B gives sum_{k > K} e^{-kt} <= e^{-Kt}(L/(pi t) + 2*2B).
  out.truncation_bound =
      std::exp(-spectrum.k_max * t) *
      (spectrum.total_length / (std::numbers::pi * t) + 2.0 * spectrum.directed_bonds);
  return out;
}

SpectralEnergy energy_from_spectrum(const Spectrum& spectrum,
                                    std::span<const double> t_grid) {
  if (t_grid.empty()) throw Error("energy_from_spectrum: empty t grid");
  SpectralEnergy out;
  out.t_grid.assign(t_grid.begin(), t_grid.end());
  for (double t : t_grid) {
    if (t < min_trustworthy_t(spectrum.k_max)) {
      throw Error("energy_from_spectrum: t = " + std::to_string(t) +
                  " needs k_max >= " + std::to_string(37.0 / t));
    }
    CompensatedSum<double> sum;
    for (const auto& lv : spectrum.levels) {
      sum += lv.multiplicity * lv.k * std::exp(-lv.k * t);
    }
    sum += -spectrum.total_length / (std::numbers::pi * t * t);
    out.samples.push_back(0.5 * sum.value());
  }
  const auto ex = extrapolate_to_zero(out.t_grid, out.samples);
  out.value = ex.value;
  out.error_estimate = ex.error_estimate;
  out.converged = std::isfinite(ex.value) && ex.error_estimate <= kSpectralTarget;
  return out;
}

std::vector<double> default_t_grid(double min_length) {
  const double t0 = min_length / 4.0;
  return {t0, t0 / 2.0, t0 / 4.0, t0 / 8.0};
}

double required_k_max(double min_length) {
  return 37.0 / default_t_grid(min_length).back();
}

}  // namespace qgraph
