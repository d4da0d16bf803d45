#include "qgraph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace qgraph {

namespace {

constexpr double kCommensureTol = 1e-12;

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void text(std::string_view s) {
    bytes(s.data(), s.size());
    bytes("\0", 1);
  }
  void number(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    bytes(buf, static_cast<std::size_t>(res.ptr - buf));
    bytes("\0", 1);
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_double(std::string_view s) {
  const std::string str = trim(s);
  if (str.empty()) throw Error("empty number");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(str, &used);
  } catch (const std::exception&) {
    throw Error("malformed number '" + str + "'");
  }
  if (used != str.size()) throw Error("malformed number '" + str + "'");
  return v;
}

/// Best rational approximation p/q of x with q <= max_den and relative
/// error at most tol, if any.
std::optional<std::pair<long, long>> rationalize(double x, long max_den,
                                                 double tol) {
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(r);
    if (a > 1e15) break;
    const long ai = static_cast<long>(a);
    const long p2 = ai * p1 + p0;
    const long q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    const double approx = static_cast<double>(p1) / static_cast<double>(q1);
    if (std::abs(approx - x) <= tol * std::abs(x)) return std::pair{p1, q1};
    const double frac = r - a;
    if (frac <= 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace

MetricGraph::MetricGraph(std::vector<Vertex> vertices, std::vector<Bond> bonds)
    : vertices_(std::move(vertices)), bonds_(std::move(bonds)) {
  if (bonds_.empty()) throw Error("graph needs at least one bond");
  const int nv = vertex_count();
  CompensatedSum<double> total;
  for (const auto& b : bonds_) {
    if (!(b.length > 0.0) || !std::isfinite(b.length)) {
      throw Error("nonpositive length on bond '" + b.id + "'");
    }
    if (b.from < 0 || b.from >= nv || b.to < 0 || b.to >= nv) {
      throw Error("dangling endpoint reference on bond '" + b.id + "'");
    }
    total += b.length;
  }
  total_length_ = total.value();

  slot_.assign(directed_count(), -1);
  for (int v = 0; v < nv; ++v) {
    const auto& ends = vertices_[v].ends;
    for (int i = 0; i < static_cast<int>(ends.size()); ++i) {
      const int alpha = ends[i];
      if (alpha < 0 || alpha >= directed_count() || slot_[alpha] != -1 ||
          origin(alpha) != v) {
        throw Error("inconsistent bond ends at vertex '" + vertices_[v].id +
                    "'");
      }
      slot_[alpha] = i;
    }
  }
  if (std::find(slot_.begin(), slot_.end(), -1) != slot_.end()) {
    throw Error("directed bond without a vertex slot");
  }
}

int MetricGraph::origin(int alpha) const {
  const int nb = bond_count();
  return alpha < nb ? bonds_[alpha].from : bonds_[alpha - nb].to;
}

std::vector<double> MetricGraph::directed_lengths() const {
  std::vector<double> out(directed_count());
  for (int a = 0; a < directed_count(); ++a) out[a] = length(a);
  return out;
}

double MetricGraph::min_length() const {
  return std::min_element(bonds_.begin(), bonds_.end(),
                          [](const Bond& x, const Bond& y) {
                            return x.length < y.length;
                          })
      ->length;
}

double MetricGraph::max_length() const {
  return std::max_element(bonds_.begin(), bonds_.end(),
                          [](const Bond& x, const Bond& y) {
                            return x.length < y.length;
                          })
      ->length;
}

MetricGraph MetricGraph::with_lengths(std::span<const double> lengths) const {
  if (static_cast<int>(lengths.size()) != bond_count()) {
    throw Error("with_lengths: expected one length per bond");
  }
  auto bonds = bonds_;
  for (std::size_t b = 0; b < bonds.size(); ++b) bonds[b].length = lengths[b];
  return MetricGraph(vertices_, std::move(bonds));
}

std::uint64_t MetricGraph::fingerprint() const {
  Fnv1a h;
  for (const auto& v : vertices_) {
    h.text(v.id);
    h.number(static_cast<double>(v.condition.kind));
    for (const auto* m : {&v.condition.a, &v.condition.b}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) {
        h.number((*m)(i).real());
        h.number((*m)(i).imag());
      }
    }
    for (int e : v.ends) h.number(e);
  }
  for (const auto& b : bonds_) {
    h.text(b.id);
    h.number(b.from);
    h.number(b.to);
    h.number(b.length);
  }
  return h.value();
}

Eigen::MatrixXd reversal_operator(int bond_count) {
  const int n = 2 * bond_count;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    j(a, a < bond_count ? a + bond_count : a - bond_count) = 1.0;
  }
  return j;
}

MetricGraph build_graph(const GraphDescription& description) {
  if (description.bonds.empty()) throw Error("graph needs at least one bond");
  std::map<std::string, int> vertex_index;
  std::vector<Vertex> vertices;
  for (const auto& rec : description.vertices) {
    if (!vertex_index.emplace(rec.id, static_cast<int>(vertices.size()))
             .second) {
      throw Error("duplicate vertex id '" + rec.id + "'");
    }
    vertices.push_back({rec.id, rec.condition, {}});
  }
  std::set<std::string> bond_ids;
  std::vector<Bond> bonds;
  const int nb = static_cast<int>(description.bonds.size());
  for (int b = 0; b < nb; ++b) {
    const auto& rec = description.bonds[b];
    if (!bond_ids.insert(rec.id).second) {
      throw Error("duplicate bond id '" + rec.id + "'");
    }
    if (!(rec.length > 0.0)) {
      throw Error("nonpositive length on bond '" + rec.id + "'");
    }
    const auto from = vertex_index.find(rec.from);
    const auto to = vertex_index.find(rec.to);
    if (from == vertex_index.end() || to == vertex_index.end()) {
      throw Error("dangling endpoint reference on bond '" + rec.id + "'");
    }
    bonds.push_back({rec.id, from->second, to->second, rec.length});
    vertices[from->second].ends.push_back(b);
    vertices[to->second].ends.push_back(b + nb);
  }
  return MetricGraph(std::move(vertices), std::move(bonds));
}

MetricGraph make_star(std::span<const double> lengths) {
  if (lengths.empty()) throw Error("make_star: B must be at least 1");
  GraphDescription d;
  d.vertices.push_back({"center", VertexCondition::kirchhoff()});
  for (std::size_t b = 0; b < lengths.size(); ++b) {
    const std::string leaf = "leaf" + std::to_string(b + 1);
    d.vertices.push_back({leaf, VertexCondition::kirchhoff()});
    d.bonds.push_back({"b" + std::to_string(b + 1), "center", leaf, lengths[b]});
  }
  return build_graph(d);
}

MetricGraph make_ring(std::span<const double> lengths) {
  if (lengths.empty()) throw Error("make_ring: need at least one bond");
  GraphDescription d;
  const std::size_t n = lengths.size();
  for (std::size_t v = 0; v < n; ++v) {
    d.vertices.push_back({"v" + std::to_string(v), VertexCondition::kirchhoff()});
  }
  for (std::size_t b = 0; b < n; ++b) {
    d.bonds.push_back({"b" + std::to_string(b), "v" + std::to_string(b),
                       "v" + std::to_string((b + 1) % n), lengths[b]});
  }
  return build_graph(d);
}

MetricGraph subdivide_rational(const MetricGraph& graph, double unit) {
  if (!(unit > 0.0)) throw Error("subdivide_rational: unit must be positive");
  const int nb = graph.bond_count();
  std::vector<long> pieces(nb);
  long total = 0;
  for (int b = 0; b < nb; ++b) {
    const double len = graph.bond(b).length;
    const double ratio = len / unit;
    const double m = std::round(ratio);
    if (m < 1.0 || std::abs(m * unit - len) > kCommensureTol * len) {
      throw Error("incommensurate length on bond '" + graph.bond(b).id +
                  "' for unit " + std::to_string(unit));
    }
    pieces[b] = static_cast<long>(m);
    total += pieces[b];
  }

  // New bond numbering: pieces of bond 0 first, then bond 1, ...
  std::vector<long> first_piece(nb);
  std::partial_sum(pieces.begin(), pieces.end() - 1, first_piece.begin() + 1);
  const int new_nb = static_cast<int>(total);

  std::vector<Vertex> vertices;
  for (const auto& v : graph.vertices()) vertices.push_back({v.id, v.condition, {}});
  std::vector<Bond> bonds;
  bonds.reserve(new_nb);
  for (int b = 0; b < nb; ++b) {
    const auto& old = graph.bond(b);
    int prev = old.from;
    for (long j = 0; j < pieces[b]; ++j) {
      int next = old.to;
      if (j + 1 < pieces[b]) {
        next = static_cast<int>(vertices.size());
        vertices.push_back({old.id + "#" + std::to_string(j + 1),
                            VertexCondition::kirchhoff(),
                            {}});
      }
      bonds.push_back({old.id + "." + std::to_string(j), prev, next, unit});
      prev = next;
    }
  }

  // Original vertices keep their slot order; each old end maps to the
  // piece touching that vertex.
  for (int v = 0; v < graph.vertex_count(); ++v) {
    for (int alpha : graph.vertex(v).ends) {
      const int b = graph.bond_of(alpha);
      const bool plus = alpha < nb;
      const int piece = static_cast<int>(first_piece[b] + (plus ? 0 : pieces[b] - 1));
      vertices[v].ends.push_back(plus ? piece : piece + new_nb);
    }
  }
  // Inserted vertices: the incoming piece's reverse end, then the outgoing piece.
  for (int nbd = 0; nbd < new_nb; ++nbd) {
    const auto& bd = bonds[nbd];
    if (bd.to >= graph.vertex_count()) vertices[bd.to].ends.push_back(nbd + new_nb);
    if (bd.from >= graph.vertex_count()) vertices[bd.from].ends.push_back(nbd);
  }
  for (int v = graph.vertex_count(); v < static_cast<int>(vertices.size()); ++v) {
    std::sort(vertices[v].ends.begin(), vertices[v].ends.end(),
              [&](int x, int y) { return (x >= new_nb) > (y >= new_nb); });
  }
  return MetricGraph(std::move(vertices), std::move(bonds));
}

std::optional<double> commensurate_unit(std::span<const double> lengths,
                                        long max_denominator) {
  if (lengths.empty()) return std::nullopt;
  const double base = lengths[0];
  std::vector<std::pair<long, long>> ratios;
  long common = 1;
  for (double len : lengths) {
    const auto r = rationalize(len / base, max_denominator, kCommensureTol);
    if (!r) return std::nullopt;
    ratios.push_back(*r);
    common = std::lcm(common, r->second);
    if (common > max_denominator) return std::nullopt;
  }
  long g = 0;
  for (const auto& [p, q] : ratios) g = std::gcd(g, p * (common / q));
  const double unit = base * static_cast<double>(g) / static_cast<double>(common);
  for (double len : lengths) {
    const double m = std::round(len / unit);
    if (std::abs(m * unit - len) > kCommensureTol * len) return std::nullopt;
  }
  return unit;
}

double parse_length(std::string_view token) {
  const auto slash = token.find('/');
  if (slash == std::string_view::npos) return parse_double(token);
  const double p = parse_double(token.substr(0, slash));
  const double q = parse_double(token.substr(slash + 1));
  if (q == 0.0) throw Error("zero denominator in length '" + std::string(token) + "'");
  return p / q;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> parse_matrix_pair(
    std::string_view text) {
  std::vector<std::vector<std::complex<double>>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    std::vector<std::complex<double>> row;
    for (const auto& tok : toks) {
      const auto comma = tok.find(',');
      if (comma == std::string::npos) {
        throw Error("matrix entry '" + tok + "' is not a re,im pair");
      }
      row.emplace_back(parse_double(std::string_view(tok).substr(0, comma)),
                       parse_double(std::string_view(tok).substr(comma + 1)));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.size() % 2 != 0) {
    throw Error("matrix pair needs 2d rows (A then B)");
  }
  const std::size_t d = rows.size() / 2;
  Eigen::MatrixXcd a(d, d), b(d, d);
  for (std::size_t i = 0; i < 2 * d; ++i) {
    if (rows[i].size() != d) throw Error("matrix pair rows must have d entries");
    for (std::size_t j = 0; j < d; ++j) {
      (i < d ? a(i, j) : b(i - d, j)) = rows[i][j];
    }
  }
  return {a, b};
}

GraphDescription parse_graph_text(std::string_view text,
                                  const std::filesystem::path& base_dir) {
  GraphDescription d;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto toks = split_ws(line);
    if (toks.empty()) continue;
    const auto where = " (line " + std::to_string(lineno) + ")";
    try {
      if (toks[0] == "vertex") {
        if (toks.size() < 3) throw Error("vertex needs an id and a condition");
        VertexRecord rec{toks[1], {}};
        if (toks[2] == "kirchhoff" && toks.size() == 3) {
          rec.condition = VertexCondition::kirchhoff();
        } else if (toks[2] == "dft" && toks.size() == 3) {
          rec.condition = VertexCondition::dft();
        } else if (toks[2] == "custom" && toks.size() == 4) {
          const auto path = base_dir / toks[3];
          std::ifstream f(path);
          if (!f) throw Error("cannot open condition file " + path.string());
          std::stringstream buf;
          buf << f.rdbuf();
          auto [a, b] = parse_matrix_pair(buf.str());
          rec.condition = VertexCondition::matrix_pair(std::move(a), std::move(b));
        } else {
          throw Error("unknown vertex condition '" + toks[2] + "'");
        }
        d.vertices.push_back(std::move(rec));
      } else if (toks[0] == "bond") {
        if (toks.size() != 5) throw Error("bond needs: id v w length");
        d.bonds.push_back({toks[1], toks[2], toks[3], parse_length(toks[4])});
      } else {
        throw Error("unknown directive '" + toks[0] + "'");
      }
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + where);
    }
  }
  return d;
}

MetricGraph load_graph(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open graph file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  return build_graph(parse_graph_text(buf.str(), path.parent_path()));
}

}  // namespace qgraph
