#include "qgraph/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "qgraph/casimir.hpp"
#include "qgraph/images.hpp"
#include "qgraph/rmt.hpp"
#include "qgraph/spectrum.hpp"

namespace qgraph {

namespace {

using json = nlohmann::ordered_json;

/// Usage problems detected after CLI11 has accepted the flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form, so reruns produce identical bytes.
std::string num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string hex(std::uint64_t x) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << x;
  return s.str();
}

std::vector<double> parse_t_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream in(spec);
  std::string part;
  while (std::getline(in, part, ':')) parts.push_back(part);
  if (parts.size() != 3) throw UsageError("--t-grid expects a:b:n");
  double a = 0.0, b = 0.0;
  long n = 0;
  try {
    std::size_t pos = 0;
    a = std::stod(parts[0], &pos);
    if (pos != parts[0].size()) throw std::invalid_argument("a");
    b = std::stod(parts[1], &pos);
    if (pos != parts[1].size()) throw std::invalid_argument("b");
    n = std::stol(parts[2], &pos);
    if (pos != parts[2].size()) throw std::invalid_argument("n");
  } catch (const std::logic_error&) {
    throw UsageError("--t-grid: cannot parse '" + spec + "'");
  }
  if (!(a > 0.0) || !(b >= a) || n < 1) {
    throw UsageError("--t-grid needs 0 < a <= b and n >= 1");
  }
  std::vector<double> ts;
  for (long i = 0; i < n; ++i) {
    ts.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return ts;
}

struct Sink {
  std::ostream* stream;
  std::ofstream file;

  Sink(const std::string& path, std::ostream& fallback) : stream(&fallback) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw Error("cannot open output file " + path);
      stream = &file;
    }
  }
  std::ostream& operator*() { return *stream; }
};

int default_threads() {
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

struct Options {
  std::string graph;
  std::string out;
  double k_max = 0.0;
  int n_max = 30;
  std::string t_grid;
  std::vector<std::string> kinds;
  std::vector<int> bonds;
  long samples = 100000;
  std::uint64_t seed = 0;
  int threads = default_threads();
  double length = 1.0;
  bool printed = false;
  bool breakdown = false;
  bool zero_mode = false;
};

void run_spectrum(const Options& o, std::ostream& out) {
  const MetricGraph g = load_graph(o.graph);
  const auto s = assemble_bond_s(g);
  SpectrumOptions opts;
  opts.threads = o.threads;
  opts.include_zero_mode = o.zero_mode;
  const Spectrum sp = find_spectrum(s, g.directed_lengths(), o.k_max, opts);
  Sink sink(o.out, out);
  auto& os = *sink;
  os << "# graph " << hex(g.fingerprint()) << "\n";
  os << "# k_max " << num(o.k_max) << "\n";
  os << "# tolerance " << num(sp.tolerance) << "\n";
  os << "# zero_modes " << sp.zero_modes << "\n";
  os << "k,multiplicity\n";
  if (o.zero_mode && sp.zero_modes > 0) os << "0," << sp.zero_modes << "\n";
  for (const auto& lv : sp.levels) os << num(lv.k) << "," << lv.multiplicity << "\n";
}

struct MethodValue {
  std::string name;
  double value;
  double error;
};

void run_energy(const Options& o, std::ostream& out) {
  const MetricGraph g = load_graph(o.graph);
  const auto s = assemble_bond_s(g);
  require_j_symmetric(s, "energy");
  const auto lengths = g.directed_lengths();

  json doc;
  doc["command"] = "energy";
  doc["graph"] = hex(g.fingerprint());
  doc["bonds"] = g.bond_count();
  doc["total_length"] = g.total_length();
  json methods = json::object();
  std::vector<MethodValue> values;

  const auto logdet = energy_logdet_detailed(s, lengths);
  methods["logdet"] = {{"value", logdet.value}, {"error", logdet.error_estimate}};
  values.push_back({"logdet", logdet.value, logdet.error_estimate});

  EnergyBreakdown orbit;
  bool have_orbit = false;
  try {
    orbit = energy_orbit_sum(s, lengths, o.n_max);
    have_orbit = true;
    methods["orbit_sum"] = {{"value", orbit.value},
                            {"error", orbit.tail_bound},
                            {"n_max", orbit.n_max}};
    values.push_back({"orbit_sum", orbit.value, orbit.tail_bound});
  } catch (const Error& e) {
    methods["orbit_sum"] = {{"skipped", e.what()}};
  }

  std::vector<double> bond_lengths;
  for (const auto& b : g.bonds()) bond_lengths.push_back(b.length);
  if (const auto unit = commensurate_unit(bond_lengths)) {
    double pieces = 0.0;
    for (double l : bond_lengths) pieces += std::round(l / *unit);
    if (pieces <= 4096) {
      const double e = energy_rational(g, unit);
      // Bernoulli evaluation is exact up to eigenphase roundoff.
      const double err = 1e-12 * 2.0 * pieces;
      methods["bernoulli"] = {{"value", e}, {"error", err}, {"unit", *unit}};
      values.push_back({"bernoulli", e, err});
    } else {
      methods["bernoulli"] = {{"skipped", "subdivision too fine"}};
    }
  }

  if (o.k_max > 0.0) {
    SpectrumOptions opts;
    opts.threads = o.threads;
    const Spectrum sp = find_spectrum(s, lengths, o.k_max, opts);
    std::vector<double> grid = default_t_grid(g.min_length());
    if (o.k_max < required_k_max(g.min_length())) {
      const double t0 = 8.0 * min_trustworthy_t(o.k_max);
      grid = {t0, t0 / 2, t0 / 4, t0 / 8};
    }
    const auto e = energy_from_spectrum(sp, grid);
    methods["spectral"] = {{"value", e.value},
                           {"error", e.error_estimate},
                           {"k_max", o.k_max},
                           {"converged", e.converged}};
    values.push_back({"spectral", e.value, e.error_estimate});
  }
  doc["methods"] = methods;

  json table = json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      const double diff = std::abs(values[i].value - values[j].value);
      const double bound = values[i].error + values[j].error;
      table.push_back({{"a", values[i].name},
                       {"b", values[j].name},
                       {"difference", diff},
                       {"bound", bound},
                       {"agree", diff <= bound + 1e-12}});
    }
  }
  doc["agreement"] = table;

  Sink sink(o.out, out);
  *sink << doc.dump() << "\n";
  if (o.breakdown && have_orbit) {
    CompensatedSum<double> cumulative;
    for (int n = 1; n <= orbit.n_max; ++n) {
      const auto sigma = orbit.per_n_partial[n - 1];
      cumulative += -sigma.real() / (2.0 * std::numbers::pi);
      json line = {{"n", n},
                   {"sigma_n", sigma.real()},
                   {"sigma_n_imag", sigma.imag()},
                   {"bound_n", orbit.per_n_bound[n - 1]},
                   {"cumulative_value", cumulative.value()},
                   {"tail_bound", orbit_tail_bound(g.directed_count(), g.min_length(), n)}};
      *sink << line.dump() << "\n";
    }
  }
}

void run_images(const Options& o, std::ostream& out) {
  const auto ts = parse_t_grid(o.t_grid);
  const MetricGraph g = load_graph(o.graph);
  const auto s = assemble_bond_s(g);
  require_j_symmetric(s, "images");
  const auto lengths = g.directed_lengths();
  const double k_max = o.k_max > 0.0 ? o.k_max : std::ceil(1.25 * 37.0 / ts.front());
  SpectrumOptions opts;
  opts.threads = o.threads;
  const Spectrum sp = find_spectrum(s, lengths, k_max, opts);
  const OrbitTable table(s.s, lengths, o.n_max);
  Sink sink(o.out, out);
  auto& os = *sink;
  os << "# graph " << hex(g.fingerprint()) << "\n";
  os << "# k_max " << num(k_max) << "\n";
  os << "# n_max " << o.n_max << "\n";
  os << "t,spectral_T,reconstructed_T,abs_diff,bound\n";
  for (double t : ts) {
    const auto spectral = cylinder_trace(sp, t);
    const double with_zero = spectral.value + (sp.include_zero_mode ? 0 : sp.zero_modes);
    const auto rec = reconstruct_trace(s, lengths, table, t);
    const double diff = std::abs(rec.total() - with_zero);
    os << num(t) << "," << num(with_zero) << "," << num(rec.total()) << "," << num(diff)
       << "," << num(rec.truncation_bound + spectral.truncation_bound) << "\n";
  }
}

void run_rmt(const Options& o, std::ostream& out) {
  std::vector<Ensemble> kinds;
  for (const auto& k : o.kinds) {
    if (k == "all") {
      kinds = {Ensemble::Poisson, Ensemble::COE, Ensemble::CUE, Ensemble::CSE,
               Ensemble::CSE_KramersLifted};
    } else {
      try {
        kinds.push_back(parse_ensemble(k));
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }
  }
  Sink sink(o.out, out);
  for (const Ensemble kind : kinds) {
    for (const int b : o.bonds) {
      const auto r = mc_energy_stats(kind, b, o.length, o.samples, o.seed, o.threads);
      const double scale = o.printed ? 4.0 : 1.0;
      json line = {{"kind", ensemble_name(kind)},
                   {"B", b},
                   {"L", o.length},
                   {"mean", r.mean},
                   {"mean_stderr", r.mean_stderr},
                   {"variance", r.variance},
                   {"variance_stderr", r.variance_stderr},
                   {"closed_form", scale * r.closed_form},
                   {"series", variance_from_form_factor(kind, b, o.length, 0, o.printed)},
                   {"normalization", o.printed ? "printed" : "audited"},
                   {"samples", r.samples},
                   {"seed", r.seed}};
      *sink << line.dump() << "\n";
    }
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vacuum energy and spectra of quantum graphs"};
  app.name("qgraph");
  app.require_subcommand(1);
  Options o;

  auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues k_n <= k_max as CSV");
  spectrum->add_option("--graph", o.graph, "Graph file")->required();
  spectrum->add_option("--kmax", o.k_max, "Upper end of the spectrum")
      ->required()
      ->check(CLI::PositiveNumber);
  spectrum->add_flag("--zero-mode", o.zero_mode, "List k = 0 modes as a level");
  spectrum->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  spectrum->add_option("--out", o.out, "Output file (default stdout)");

  auto* energy = app.add_subcommand("energy", "Vacuum energy by every applicable method");
  energy->add_option("--graph", o.graph, "Graph file")->required();
  energy->add_option("--nmax", o.n_max, "Orbit-sum cutoff")->check(CLI::PositiveNumber);
  energy->add_option("--kmax", o.k_max, "Enables the spectral method")
      ->check(CLI::PositiveNumber);
  energy->add_flag("--breakdown", o.breakdown, "Per-period orbit-sum lines");
  energy->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  energy->add_option("--out", o.out, "Output file (default stdout)");

  auto* images = app.add_subcommand("images", "Trace reconstruction report as CSV");
  images->add_option("--graph", o.graph, "Graph file")->required();
  images->add_option("--t-grid", o.t_grid, "a:b:n, n points from a to b")->required();
  images->add_option("--nmax", o.n_max, "Periodic-path cutoff")->check(CLI::PositiveNumber);
  images->add_option("--kmax", o.k_max, "Spectrum cutoff")->check(CLI::PositiveNumber);
  images->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  images->add_option("--out", o.out, "Output file (default stdout)");

  auto* rmt = app.add_subcommand("rmt", "Random-matrix energy statistics as JSON lines");
  rmt->add_option("--kind", o.kinds, "poisson, coe, cue, cse, cse-lifted or all")
      ->required();
  rmt->add_option("--B", o.bonds, "Bond count(s); the matrix dimension is 2B")
      ->required()
      ->check(CLI::PositiveNumber);
  rmt->add_option("--samples", o.samples)->check(CLI::Range(1000L, 1000000000L));
  rmt->add_option("--seed", o.seed);
  rmt->add_option("--length", o.length, "Common bond length")->check(CLI::PositiveNumber);
  rmt->add_flag("--printed", o.printed, "Report closed forms with the x4 printed normalization");
  rmt->add_option("--threads", o.threads)->check(CLI::PositiveNumber);
  rmt->add_option("--out", o.out, "Output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (spectrum->parsed()) run_spectrum(o, out);
    if (energy->parsed()) run_energy(o, out);
    if (images->parsed()) run_images(o, out);
    if (rmt->parsed()) run_rmt(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace qgraph
