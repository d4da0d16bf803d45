#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "oracles.hpp"
#include "qgraph/casimir.hpp"
#include "qgraph/rmt.hpp"
#include "qgraph/scattering.hpp"

using namespace qgraph;
using std::numbers::pi;

namespace {

constexpr std::uint64_t kSeed = 20240607;
constexpr long kSamples = 100000;

const Ensemble kAll[] = {Ensemble::Poisson, Ensemble::COE, Ensemble::CUE, Ensemble::CSE,
                         Ensemble::CSE_KramersLifted};

const VarianceResult& stats(Ensemble kind, int bonds) {
  static std::map<std::pair<Ensemble, int>, VarianceResult> cache;
  auto it = cache.find({kind, bonds});
  if (it == cache.end()) {
    it = cache.emplace(std::pair{kind, bonds}, mc_energy_stats(kind, bonds, 1.0, kSamples, kSeed))
             .first;
  }
  return it->second;
}

const TraceMoments& moments(Ensemble kind, int bonds) {
  static std::map<std::pair<Ensemble, int>, TraceMoments> cache;
  auto it = cache.find({kind, bonds});
  if (it == cache.end()) {
    it = cache.emplace(std::pair{kind, bonds}, mc_trace_moments(kind, bonds, 12, kSamples, kSeed))
             .first;
  }
  return it->second;
}

// Direct finite sum for the COE form factor at n <= 2B.
double coe_small_n(int n, int bonds) {
  double s = 0.0;
  for (int m = 1; m <= n; ++m) s += 1.0 / (m + bonds - 0.5);
  return 2.0 * n - n * s;
}

}  // namespace

TEST_CASE("ensemble names round-trip") {
  for (auto kind : kAll) CHECK(parse_ensemble(ensemble_name(kind)) == kind);
  CHECK_THROWS_AS(parse_ensemble("gue"), Error);
}

TEST_CASE("sampling is deterministic and well-formed") {
  for (auto kind : kAll) {
    const auto a = sample_eigenphases(kind, 8, 42);
    const auto b = sample_eigenphases(kind, 8, 42);
    const auto c = sample_eigenphases(kind, 8, 43);
    REQUIRE(a.thetas.size() == 8);
    CHECK(a.thetas == b.thetas);
    CHECK(a.thetas != c.thetas);
    CHECK(a.seed == 42);
    CHECK(a.dim == 8);
    for (std::size_t i = 0; i < a.thetas.size(); ++i) {
      CHECK(a.thetas[i] > 0.0);
      CHECK(a.thetas[i] <= 2 * pi);
      if (i > 0) CHECK(a.thetas[i] >= a.thetas[i - 1]);
    }
  }
  CHECK_THROWS_AS(sample_eigenphases(Ensemble::CUE, 3, 1), Error);
  CHECK_THROWS_AS(sample_eigenphases(Ensemble::CUE, 0, 1), Error);
}

TEST_CASE("CSE phases come in exact pairs, lifted ones do not") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = sample_eigenphases(Ensemble::CSE, 8, seed);
    for (std::size_t i = 0; i < 8; i += 2) CHECK(s.thetas[i] == s.thetas[i + 1]);
    const auto l = sample_eigenphases(Ensemble::CSE_KramersLifted, 8, seed);
    for (std::size_t i = 1; i < 8; ++i) CHECK(l.thetas[i] != l.thetas[i - 1]);
  }
}

TEST_CASE("Haar unitaries and J-symmetric samples are unitary") {
  std::mt19937_64 rng(3);
  for (int n : {1, 2, 5, 8}) CHECK(unitarity_defect(haar_unitary(n, rng)) < 1e-12);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_j_symmetric_unitary(6, seed);
    CHECK(unitarity_defect(s) < 1e-12);
    CHECK(make_bond_s(s).j_symmetric);
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("CUE mean of sum e^{i theta} is zero") {
  std::complex<double> sum = 0.0;
  double sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::complex<double> z = 0.0;
    for (double th : sample_eigenphases(Ensemble::CUE, 8, derive_seed(11, i)).thetas) {
      z += std::polar(1.0, th);
    }
    sum += z;
    sq += std::norm(z);
  }
  const auto mean = sum / double(n);
  const double se = std::sqrt(sq / n / n);
  CHECK(std::abs(mean.real()) <= 3 * se);
  CHECK(std::abs(mean.imag()) <= 3 * se);
}

TEST_CASE("form_factor") {
  CHECK(form_factor(Ensemble::CUE, 3, 4).value == 3.0);
  CHECK(form_factor(Ensemble::CUE, 10, 4).value == 8.0);
  CHECK(form_factor(Ensemble::CUE, 8, 4).value == 8.0);
  CHECK(std::abs(form_factor(Ensemble::COE, 2, 2).value - (4.0 - 2.0 * (1 / 2.5 + 1 / 3.5))) <
        1e-15);
  for (int b = 1; b <= 6; ++b) {
    for (int n = 1; n <= 2 * b; ++n) {
      CHECK(std::abs(form_factor(Ensemble::COE, n, b).value - coe_small_n(n, b)) < 1e-13);
    }
    for (int n = 1; n <= 60; ++n) {
      for (auto kind : {Ensemble::COE, Ensemble::CUE, Ensemble::CSE, Ensemble::CSE_KramersLifted}) {
        CHECK(form_factor(kind, n, b).value >= 0.0);
      }
    }
    // Large-n plateaus.
    CHECK(std::abs(form_factor(Ensemble::COE, 100000, b).value - 2 * b) < 1e-3);
    CHECK(form_factor(Ensemble::CSE, 4 * b, b).value == 4.0 * b);
  }
}

TEST_CASE("Monte Carlo form factors match the closed expressions") {
  SUBCASE("CUE at 2B = 8, n = 1..12") {
    const auto& m = moments(Ensemble::CUE, 4);
    for (int n = 1; n <= 12; ++n) {
      CHECK(std::abs(m.form_factor[n - 1] - std::min(n, 8)) <= 3 * m.form_factor_stderr[n - 1]);
    }
  }
  SUBCASE("COE at 2B = 4, n = 2") {
    const auto m = mc_trace_moments(Ensemble::COE, 2, 2, kSamples, kSeed);
    CHECK(std::abs(m.form_factor[1] - form_factor(Ensemble::COE, 2, 2).value) <=
          3 * m.form_factor_stderr[1]);
  }
  SUBCASE("COE, CSE and lifted CSE at 2B = 8") {
    for (auto kind : {Ensemble::COE, Ensemble::CSE, Ensemble::CSE_KramersLifted}) {
      const auto& m = moments(kind, 4);
      for (int n : {1, 2, 3, 5, 8, 12}) {
        CHECK(std::abs(m.form_factor[n - 1] - form_factor(kind, n, 4).value) <=
              3 * m.form_factor_stderr[n - 1]);
      }
    }
  }
}

TEST_CASE("traces of powers average to zero") {
  for (auto kind : {Ensemble::COE, Ensemble::CUE, Ensemble::CSE}) {
    const auto& m = moments(kind, 4);
    for (int n = 1; n <= 3; ++n) {
      CHECK(std::abs(m.mean[n - 1].real()) <= 3 * m.mean_stderr[n - 1].real());
      CHECK(std::abs(m.mean[n - 1].imag()) <= 3 * m.mean_stderr[n - 1].imag());
    }
  }
}

TEST_CASE("cross terms vanish for COE and CSE") {
  for (auto kind : {Ensemble::COE, Ensemble::CSE}) {
    const auto& m = moments(kind, 4);
    for (int n = 1; n <= 6; ++n) {
      for (int k = n + 1; k <= 6; ++k) {
        const auto idx = static_cast<std::size_t>((n - 1) * m.n_max + (k - 1));
        CHECK(std::abs(m.cross[idx]) <= 3 * m.cross_stderr[idx]);
      }
    }
  }
}

TEST_CASE("vacuum energy has mean zero in every ensemble") {
  for (auto kind : kAll) {
    for (int b : {1, 2, 4}) {
      const auto& r = stats(kind, b);
      CHECK(r.samples == kSamples);
      CHECK(r.seed == kSeed);
      CHECK(std::abs(r.mean) <= 3 * r.mean_stderr);
    }
  }
}

TEST_CASE("Monte Carlo variances match the closed forms") {
  for (auto kind : kAll) {
    for (int b : {1, 4}) {
      const auto& r = stats(kind, b);
      CHECK(r.closed_form == variance_closed(kind, b, 1.0));
      CHECK(std::abs(r.variance - r.closed_form) <= 3 * r.variance_stderr);
    }
  }
  CHECK(std::abs(variance_closed(Ensemble::Poisson, 1, 1.0) - pi * pi / 360) < 1e-15);
}

TEST_CASE("random-matrix variances sit below Poisson") {
  const double poisson = stats(Ensemble::Poisson, 4).variance;
  for (auto kind : {Ensemble::COE, Ensemble::CUE, Ensemble::CSE}) {
    CHECK(stats(kind, 4).variance < poisson);
  }
}

TEST_CASE("closed forms equal the form-factor series") {
  for (auto kind : kAll) {
    for (int b = 1; b <= 8; ++b) {
      const double closed = variance_closed(kind, b, 1.0);
      const double series = variance_from_form_factor(kind, b, 1.0);
      CHECK(std::abs(closed - series) <= 1e-12);
    }
  }
  for (auto kind : kAll) {
    const double scaled = variance_closed(kind, 3, 2.0);
    CHECK(scaled == doctest::Approx(variance_closed(kind, 3, 1.0) / 4).epsilon(1e-14));
    CHECK(variance_closed(kind, 3, 1.0, true) ==
          doctest::Approx(4 * variance_closed(kind, 3, 1.0)).epsilon(1e-14));
  }
}

TEST_CASE("large-B limits") {
  const double cue = variance_from_form_factor(Ensemble::CUE, 500, 1.0);
  const double target = kZeta3 / (8 * pi * pi);
  CHECK(std::abs(cue - target) / target < 1e-4);
  CHECK(std::abs(variance_closed(Ensemble::CUE, 500, 1.0) - target) / target < 1e-4);

  const double ratio = variance_closed(Ensemble::CSE, 500, 1.0) /
                       variance_closed(Ensemble::CSE_KramersLifted, 500, 1.0);
  CHECK(std::abs(ratio - 4.0) < 1e-2);
}

TEST_CASE("ordering COE > CUE > lifted CSE at B = 4") {
  const double coe = variance_closed(Ensemble::COE, 4, 1.0);
  const double cue = variance_closed(Ensemble::CUE, 4, 1.0);
  const double lifted = variance_closed(Ensemble::CSE_KramersLifted, 4, 1.0);
  CHECK(coe > cue);
  CHECK(cue > lifted);
  CHECK(stats(Ensemble::COE, 4).variance > stats(Ensemble::CUE, 4).variance);
  CHECK(stats(Ensemble::CUE, 4).variance > stats(Ensemble::CSE_KramersLifted, 4).variance);
}

TEST_CASE("Monte Carlo results do not depend on the worker count") {
  for (auto kind : {Ensemble::COE, Ensemble::CSE}) {
    const auto one = mc_energy_stats(kind, 3, 1.0, 2000, 5, 1);
    const auto three = mc_energy_stats(kind, 3, 1.0, 2000, 5, 3);
    CHECK(one.mean == three.mean);
    CHECK(one.variance == three.variance);
  }
  CHECK_THROWS_AS(mc_energy_stats(Ensemble::CUE, 2, 1.0, 999, 1), Error);
}

TEST_CASE("each sample's energy is the Bernoulli sum of its phases") {
  const auto s = sample_eigenphases(Ensemble::COE, 6, 77);
  const double e = energy_equal_bernoulli(s.thetas, 1.0);
  double direct = 0.0;
  for (double th : s.thetas) {
    const double x = th / (2 * pi);
    direct += x * x - x + 1.0 / 6.0;
  }
  CHECK(std::abs(e + pi / 2 * direct) < 1e-14);
}
