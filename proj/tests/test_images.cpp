#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/images.hpp"
#include "qgraph/rmt.hpp"
#include "qgraph/scattering.hpp"
#include "qgraph/spectrum.hpp"

using namespace qgraph;
using std::numbers::pi;

namespace {

struct Setup {
  MetricGraph graph;
  BondScatteringMatrix s;
  std::vector<double> lengths;
};

Setup make(MetricGraph g) {
  auto s = assemble_bond_s(g);
  auto dl = g.directed_lengths();
  return {std::move(g), std::move(s), std::move(dl)};
}

Setup star(std::vector<double> lengths) { return make(make_star(lengths)); }

Setup from_file(const char* name) {
  return make(load_graph(std::filesystem::path(QGRAPH_TEST_DATA) / name));
}

// Random walk of `steps` bonds along nonzero transitions of S.
std::vector<int> random_walk(const Eigen::MatrixXcd& s, int steps, std::mt19937_64& rng) {
  const int dim = static_cast<int>(s.rows());
  std::uniform_int_distribution<int> pick(0, dim - 1);
  std::vector<int> w{pick(rng)};
  while (static_cast<int>(w.size()) < steps) {
    std::vector<int> next;
    for (int b = 0; b < dim; ++b) {
      if (s(b, w.back()) != std::complex<double>(0.0)) next.push_back(b);
    }
    std::uniform_int_distribution<std::size_t> choose(0, next.size() - 1);
    w.push_back(next[choose(rng)]);
  }
  return w;
}

}  // namespace

TEST_CASE("free_kernel") {
  for (double t : {0.1, 1.0, 7.0}) CHECK(std::abs(free_kernel(t, 0.0) - 1.0 / (pi * t)) < 1e-15);
  CHECK(std::abs(free_kernel(1.0, 1.0) - 1.0 / (2 * pi)) < 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng), x = u(rng);
    CHECK(free_kernel(t, x) == free_kernel(t, -x));
  }
  CHECK_THROWS_AS(free_kernel(0.0, 1.0), Error);
  CHECK_THROWS_AS(free_kernel(-1.0, 1.0), Error);
}

TEST_CASE("inverse_square_tail") {
  double head = 0.0;
  for (int n = 1; n <= 50; ++n) head += 1.0 / (n * n);
  CHECK(std::abs(inverse_square_tail(50) - (pi * pi / 6 - head)) < 1e-14);
  CHECK(std::abs(inverse_square_tail(0) - pi * pi / 6) < 1e-14);
}

TEST_CASE("periodic_trace_term") {
  SUBCASE("n_max = 0 gives 0") {
    const auto st = star({1.0});
    CHECK(periodic_trace_term(st.s, st.lengths, 1.0, 0).value == 0.0);
  }
  SUBCASE("interval matches sum_m 2 T0(t; 2m)") {
    const auto st = star({1.0});
    for (double t : {0.5, 1.0, 3.0}) {
      double direct = 0.0;
      for (int m = 1; m <= 50; ++m) direct += 2.0 * free_kernel(t, 2.0 * m);
      CHECK(std::abs(periodic_trace_term(st.s, st.lengths, t, 100).value - direct) < 1e-13);
    }
  }
  SUBCASE("OrbitTable and the one-shot form agree") {
    const auto st = from_file("theta.g");
    const OrbitTable table(st.s.s, st.lengths, 12);
    CHECK(table.n_max() == 12);
    for (double t : {0.3, 1.0, 4.0}) {
      const auto a = table.trace_term(t);
      const auto b = periodic_trace_term(st.s, st.lengths, t, 12);
      CHECK(a.value == doctest::Approx(b.value).epsilon(1e-14));
      CHECK(a.truncation_bound == b.truncation_bound);
    }
  }
}

TEST_CASE("reconstruct_trace") {
  SUBCASE("interval at t = 2 against the geometric series") {
    const auto st = star({1.0});
    const auto r = reconstruct_trace(st.s, st.lengths, 2.0, 20000);
    CHECK(r.t_fs == doctest::Approx(1.0 / (2 * pi)).epsilon(1e-15));
    CHECK(r.t_bp == 0.5);
    const double exact = 1.0 / (1.0 - std::exp(-2 * pi));
    CHECK(std::abs(r.total() - exact) <= r.truncation_bound);
  }
  SUBCASE("equal 3-star at t = 1 against the closed form") {
    const auto st = star({1, 1, 1});
    const auto r = reconstruct_trace(st.s, st.lengths, 1.0, 20000);
    CHECK(std::abs(r.total() - oracle::star3_trace(1.0)) <= r.truncation_bound);
    CHECK(r.t_bp == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("t_fs is the total length times T0(t, 0)") {
    const auto st = from_file("theta.g");
    for (double t : {0.5, 2.0}) {
      const auto r = reconstruct_trace(st.s, st.lengths, t, 4);
      CHECK(r.t_fs == doctest::Approx(st.graph.total_length() * free_kernel(t, 0.0)));
    }
  }
  SUBCASE("irrational star against the spectral trace") {
    const auto st = from_file("star3_irrational.g");
    const double lm = st.graph.min_length();
    SpectrumOptions opt;
    opt.include_zero_mode = true;
    const double t_lo = lm / 2;
    const auto sp = find_spectrum(st.s, st.lengths, 40.0 / t_lo, opt);
    const OrbitTable table(st.s.s, st.lengths, 60);
    for (double t : {t_lo, 1.0, 2.5, 4 * st.graph.total_length()}) {
      const auto r = reconstruct_trace(st.s, st.lengths, table, t);
      const auto c = cylinder_trace(sp, t);
      CHECK(std::abs(r.total() - c.value) <= r.truncation_bound + c.truncation_bound + 1e-9);
    }
  }
  SUBCASE("large t leaves the bounce constant") {
    const auto st = star({1, 1, 1});
    const double t = 1e9;
    const auto r = reconstruct_trace(st.s, st.lengths, t, 200);
    CHECK(std::abs(r.total() - r.t_fs - 0.5) < 1e-6);
  }
}

TEST_CASE("bounce partial sums converge to tr(SJ)/4") {
  auto check_limit = [](const Setup& st, double expected, double t, int m_cap = 1 << 30) {
    const double tol = 1e-4;
    const int needed = bounce_levels_needed(t, st.s.size(), st.graph.min_length(), tol);
    const int m = std::min(m_cap, needed);
    const auto b = bounce_partial_sums(st.s, st.lengths, t, m);
    CHECK(b.limit == doctest::Approx(expected).epsilon(1e-14));
    REQUIRE(b.partial_sums.size() == static_cast<std::size_t>(m + 1));
    if (m < m_cap) CHECK(b.remainder_bounds.back() <= tol);
    CHECK(std::abs(b.partial_sums.back() - b.limit) <= b.remainder_bounds.back());
    for (std::size_t i = 0; i < b.partial_sums.size(); i += 97) {
      CHECK(std::abs(b.partial_sums[i] - b.limit) <= b.remainder_bounds[i] + 1e-12);
    }
    for (std::size_t i = 1; i < b.remainder_bounds.size(); ++i) {
      CHECK(b.remainder_bounds[i] <= b.remainder_bounds[i - 1]);
    }
  };
  SUBCASE("interval") { check_limit(star({1.0}), 0.5, 1.0); }
  SUBCASE("equal 4-star") { check_limit(star({1, 1, 1, 1}), 0.5, 0.7); }
  SUBCASE("irrational 3-star") { check_limit(from_file("star3_irrational.g"), 0.5, 1.0, 300); }
  SUBCASE("ring has no back-scattering") {
    const std::vector<double> ring{1.0, 1.3, 0.7};
    check_limit(make(make_ring(ring)), 0.0, 1.0);
  }
}

TEST_CASE("the bounce limit does not depend on t") {
  const auto st = from_file("theta.g");
  const double ts[] = {0.5, 1.5};
  const auto b = bounce_partial_sums(st.s, st.lengths, ts, 5);
  CHECK(b[0].limit == b[1].limit);
  const auto r1 = reconstruct_trace(st.s, st.lengths, 0.5, 3);
  const auto r3 = reconstruct_trace(st.s, st.lengths, 1.5, 3);
  CHECK(r1.t_bp == r3.t_bp);
}

TEST_CASE("bounce_levels_needed") {
  const int m = bounce_levels_needed(1.0, 6, 1.0, 1e-6);
  CHECK(6 / pi * std::atan(1.0 / (m + 1)) <= 1e-6);
  CHECK(6 / pi * std::atan(1.0 / (m - 1)) > 1e-6);
}

TEST_CASE("bounce lemma") {
  SUBCASE("single-bond interior paths") {
    const auto st = star({1.0, std::sqrt(2.0), pi / 3});
    for (int b = 0; b < st.s.size(); ++b) {
      const int w[] = {b};
      CHECK(bounce_lemma_defect(st.s.s, w) < 1e-15);
    }
  }
  SUBCASE("1000 random paths on each test graph") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> len(1, 8);
    for (const char* name : {"interval.g", "star3_irrational.g", "theta.g", "star3.g"}) {
      const auto st = from_file(name);
      double worst = 0.0;
      for (int i = 0; i < 1000; ++i) {
        const auto w = random_walk(st.s.s, len(rng), rng);
        worst = std::max(worst, bounce_lemma_defect(st.s.s, w));
        CHECK(bounce_lemma_check(st.s.s, w));
      }
      CHECK(worst <= 1e-12);
    }
  }
  SUBCASE("random J-symmetric unitaries") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> len(1, 6);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = random_j_symmetric_unitary(8, seed);
      for (int i = 0; i < 200; ++i) CHECK(bounce_lemma_check(s, random_walk(s, len(rng), rng)));
    }
  }
  SUBCASE("negative control: a unitary without J-symmetry") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXcd u = haar_unitary(8, rng);
    std::uniform_int_distribution<int> len(1, 6);
    int failures = 0;
    for (int i = 0; i < 200; ++i) {
      if (!bounce_lemma_check(u, random_walk(u, len(rng), rng))) ++failures;
    }
    CHECK(failures > 0);
    CHECK_FALSE(make_bond_s(u).j_symmetric);
  }
  CHECK_THROWS_AS(bounce_lemma_defect(Eigen::MatrixXcd::Identity(2, 2), std::vector<int>{}),
                  Error);
}
