#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qgraph/numerics.hpp"

namespace qgraph {

/// Matching-condition family attached to a vertex.
enum class ConditionKind { Kirchhoff, Dft, MatrixPair };

/// Matching conditions A f + B g = 0 at a vertex. For Kirchhoff and DFT
/// vertices the matrices are implied by the degree and left empty.
struct VertexCondition {
  ConditionKind kind = ConditionKind::Kirchhoff;
  Eigen::MatrixXcd a;
  Eigen::MatrixXcd b;

  static VertexCondition kirchhoff() { return {}; }
  static VertexCondition dft() { return {ConditionKind::Dft, {}, {}}; }
  static VertexCondition matrix_pair(Eigen::MatrixXcd a, Eigen::MatrixXcd b) {
    return {ConditionKind::MatrixPair, std::move(a), std::move(b)};
  }
};

struct VertexRecord {
  std::string id;
  VertexCondition condition;
};

struct BondRecord {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;
};

/// Unvalidated graph description, as read from a graph file.
struct GraphDescription {
  std::vector<VertexRecord> vertices;
  std::vector<BondRecord> bonds;
};

struct Vertex {
  std::string id;
  VertexCondition condition;
  /// Directed bonds leaving this vertex, in slot order. Slot i of the
  /// vertex scattering matrix refers to ends[i].
  std::vector<int> ends;

  int degree() const { return static_cast<int>(ends.size()); }
};

struct Bond {
  std::string id;
  int from = 0;
  int to = 0;
  double length = 0.0;
};

/// Finite metric graph with directed-bond indexing b+ = b, b- = b + B.
/// Immutable once constructed.
class MetricGraph {
 public:
  MetricGraph(std::vector<Vertex> vertices, std::vector<Bond> bonds);

  int bond_count() const { return static_cast<int>(bonds_.size()); }
  int directed_count() const { return 2 * bond_count(); }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const Vertex& vertex(int v) const { return vertices_.at(v); }
  const Bond& bond(int b) const { return bonds_.at(b); }

  int reverse(int alpha) const {
    const int nb = bond_count();
    return alpha < nb ? alpha + nb : alpha - nb;
  }
  int bond_of(int alpha) const {
    const int nb = bond_count();
    return alpha < nb ? alpha : alpha - nb;
  }
  int origin(int alpha) const;
  int terminus(int alpha) const { return origin(reverse(alpha)); }
  /// Position of directed bond alpha among the ends of its origin vertex.
  int slot(int alpha) const { return slot_.at(alpha); }

  double length(int alpha) const { return bonds_[bond_of(alpha)].length; }
  /// Length per directed bond (the diagonal of the length matrix), size 2B.
  std::vector<double> directed_lengths() const;
  double total_length() const { return total_length_; }
  double min_length() const;
  double max_length() const;

  /// Copy with every bond length replaced.
  MetricGraph with_lengths(std::span<const double> lengths) const;

  /// Stable 64-bit FNV-1a digest of the topology, lengths and conditions.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Bond> bonds_;
  std::vector<int> slot_;
  double total_length_ = 0.0;
};

/// The 2B x 2B reversal permutation J_{ab} = delta(a, rev b).
Eigen::MatrixXd reversal_operator(int bond_count);

MetricGraph build_graph(const GraphDescription& description);

/// Star with one central Kirchhoff vertex and B Neumann leaves.
MetricGraph make_star(std::span<const double> lengths);

/// Cycle of degree-2 Kirchhoff vertices (perfect transmission everywhere).
MetricGraph make_ring(std::span<const double> lengths);

/// Insert degree-2 Kirchhoff vertices so every bond has length `unit`.
/// Relative commensurability tolerance is 1e-12.
MetricGraph subdivide_rational(const MetricGraph& graph, double unit);

/// Largest unit of which every length is an integer multiple, found by
/// continued fractions with denominators up to max_denominator.
std::optional<double> commensurate_unit(std::span<const double> lengths,
                                        long max_denominator = 100000);

/// Parse "p/q" or a decimal literal.
double parse_length(std::string_view token);

/// Read the line-oriented graph format. `base_dir` resolves relative
/// `custom <file>` paths.
GraphDescription parse_graph_text(std::string_view text,
                                  const std::filesystem::path& base_dir = {});
MetricGraph load_graph(const std::filesystem::path& path);

/// Read a matrix pair file: 2d rows of `re,im` tokens, A first then B.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> parse_matrix_pair(
    std::string_view text);

}  // namespace qgraph
