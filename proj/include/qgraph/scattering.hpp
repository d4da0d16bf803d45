#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qgraph/graph.hpp"

namespace qgraph {

/// Tolerance for unitarity and J-symmetry checks.
inline constexpr double kMatrixTol = 1e-12;

struct VertexScatteringMatrix {
  Eigen::MatrixXcd sigma;
  bool k_dependent = false;
};

/// 2B x 2B bond scattering matrix. Construct through assemble_bond_s or
/// make_bond_s so that unitarity has been checked.
struct BondScatteringMatrix {
  Eigen::MatrixXcd s;
  bool j_symmetric = false;

  int size() const { return static_cast<int>(s.rows()); }
  int bond_count() const { return size() / 2; }
};

/// sigma_ij = 2/d - delta_ij.
VertexScatteringMatrix kirchhoff_sigma(int degree);

/// sigma_ij = exp(2 pi i ij / d) / sqrt(d).
VertexScatteringMatrix dft_sigma(int degree);

/// The (A, B) pair encoding continuity plus zero current sum.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> kirchhoff_pair(int degree);

/// Throws unless (A, B) has maximal rank and A B^dagger is self-adjoint.
void validate_matrix_pair(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// sigma(k) = -(A + ik B)^{-1} (A - ik B). k-dependence is probed at
/// k = 1 and k = sqrt(2).
VertexScatteringMatrix sigma_from_ab(const VertexCondition& condition, double k);

/// Vertex matrix for a graph vertex, with MatrixPair conditions
/// evaluated at k = 1.
VertexScatteringMatrix vertex_sigma(const VertexCondition& condition, int degree);

BondScatteringMatrix assemble_bond_s(
    const MetricGraph& graph, std::span<const VertexScatteringMatrix> sigmas);

/// Assemble using each vertex's own condition. Throws if any vertex is
/// k-dependent, since the bond matrix would then be k-dependent too.
BondScatteringMatrix assemble_bond_s(const MetricGraph& graph);

/// Wrap an arbitrary 2B x 2B unitary (e.g. a random-matrix draw).
BondScatteringMatrix make_bond_s(Eigen::MatrixXcd s);

/// True iff max |J S J - S^dagger| <= 1e-12.
bool check_k_independence(const BondScatteringMatrix& s);

/// tr(S J), the sum of back-scattering amplitudes S_{a, rev a}.
double bounce_trace(const BondScatteringMatrix& s);

/// Throws unless S is J-symmetric; energy routines call this first.
void require_j_symmetric(const BondScatteringMatrix& s, const char* who);

double max_abs(const Eigen::MatrixXcd& m);
double unitarity_defect(const Eigen::MatrixXcd& m);

}  // namespace qgraph
