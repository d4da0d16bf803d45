#include "qgraph/scattering.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace qgraph {

namespace {

using cd = std::complex<double>;

Eigen::MatrixXcd evaluate_ab(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                             double k) {
  const cd ik(0.0, k);
  const Eigen::MatrixXcd plus = a + ik * b;
  const Eigen::MatrixXcd minus = a - ik * b;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(plus);
  if (!lu.isInvertible()) throw Error("sigma_from_ab: A + ikB is singular");
  return -lu.solve(minus);
}

}  // namespace

double max_abs(const Eigen::MatrixXcd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double unitarity_defect(const Eigen::MatrixXcd& m) {
  return max_abs(m.adjoint() * m -
                 Eigen::MatrixXcd::Identity(m.rows(), m.cols()));
}

VertexScatteringMatrix kirchhoff_sigma(int degree) {
  if (degree < 1) throw Error("kirchhoff_sigma: degree must be positive");
  if (degree == 2) {
    // Exact perfect transmission, so subdivision leaves the spectrum intact.
    Eigen::MatrixXcd s(2, 2);
    s << 0.0, 1.0, 1.0, 0.0;
    return {s, false};
  }
  const double off = 2.0 / degree;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Constant(degree, degree, off);
  s.diagonal().array() -= 1.0;
  return {s, false};
}

VertexScatteringMatrix dft_sigma(int degree) {
  if (degree < 1) throw Error("dft_sigma: degree must be positive");
  Eigen::MatrixXcd s(degree, degree);
  const double norm = 1.0 / std::sqrt(static_cast<double>(degree));
  for (int i = 0; i < degree; ++i) {
    for (int j = 0; j < degree; ++j) {
      // Reduce ij mod d first so the phase argument stays small.
      const double phase = 2.0 * std::numbers::pi * ((i * j) % degree) / degree;
      s(i, j) = std::polar(norm, phase);
    }
  }
  return {s, false};
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> kirchhoff_pair(int degree) {
  if (degree < 1) throw Error("kirchhoff_pair: degree must be positive");
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(degree, degree);
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(degree, degree);
  for (int i = 0; i + 1 < degree; ++i) {
    a(i, i) = 1.0;
    a(i, i + 1) = -1.0;
  }
  b.row(degree - 1).setOnes();
  return {a, b};
}

void validate_matrix_pair(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows() ||
      a.rows() == 0) {
    throw Error("matrix pair: A and B must be square of equal size");
  }
  const Eigen::Index d = a.rows();
  Eigen::MatrixXcd ab(d, 2 * d);
  ab << a, b;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ab);
  const auto& sv = svd.singularValues();
  if (sv(d - 1) <= 1e-12 * std::max(1.0, sv(0))) {
    throw Error("matrix pair: (A, B) does not have maximal rank");
  }
  const Eigen::MatrixXcd abh = a * b.adjoint();
  const double scale = std::max(1.0, max_abs(abh));
  if (max_abs(abh - abh.adjoint()) > kMatrixTol * scale) {
    throw Error("matrix pair: A B^dagger is not self-adjoint");
  }
}

VertexScatteringMatrix sigma_from_ab(const VertexCondition& condition, double k) {
  if (!(k > 0.0)) throw Error("sigma_from_ab: k must be positive");
  validate_matrix_pair(condition.a, condition.b);
  VertexScatteringMatrix out;
  out.sigma = evaluate_ab(condition.a, condition.b, k);
  if (unitarity_defect(out.sigma) > kMatrixTol * out.sigma.rows()) {
    throw Error("sigma_from_ab: result is not unitary");
  }
  const Eigen::MatrixXcd p1 = evaluate_ab(condition.a, condition.b, 1.0);
  const Eigen::MatrixXcd p2 = evaluate_ab(condition.a, condition.b, std::sqrt(2.0));
  out.k_dependent = max_abs(p1 - p2) > 1e-10;
  return out;
}

VertexScatteringMatrix vertex_sigma(const VertexCondition& condition, int degree) {
  switch (condition.kind) {
    case ConditionKind::Kirchhoff:
      return kirchhoff_sigma(degree);
    case ConditionKind::Dft:
      return dft_sigma(degree);
    case ConditionKind::MatrixPair:
      if (condition.a.rows() != degree) {
        throw Error("matrix pair dimension " + std::to_string(condition.a.rows()) +
                    " does not match vertex degree " + std::to_string(degree));
      }
      return sigma_from_ab(condition, 1.0);
  }
  throw Error("vertex_sigma: unknown condition kind");
}

BondScatteringMatrix assemble_bond_s(
    const MetricGraph& graph, std::span<const VertexScatteringMatrix> sigmas) {
  if (static_cast<int>(sigmas.size()) != graph.vertex_count()) {
    throw Error("assemble_bond_s: one vertex matrix per vertex required");
  }
  const int n = graph.directed_count();
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n, n);
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const auto& ends = graph.vertex(v).ends;
    const auto& sigma = sigmas[v].sigma;
    if (sigma.rows() != static_cast<Eigen::Index>(ends.size()) ||
        sigma.cols() != sigma.rows()) {
      throw Error("assemble_bond_s: dimension mismatch at vertex '" +
                  graph.vertex(v).id + "'");
    }
    // Arriving along alpha means entering through the end rev(alpha).
    for (std::size_t in = 0; in < ends.size(); ++in) {
      const int alpha = graph.reverse(ends[in]);
      for (std::size_t out = 0; out < ends.size(); ++out) {
        s(ends[out], alpha) = sigma(out, in);
      }
    }
  }
  return make_bond_s(std::move(s));
}

BondScatteringMatrix assemble_bond_s(const MetricGraph& graph) {
  std::vector<VertexScatteringMatrix> sigmas;
  sigmas.reserve(graph.vertex_count());
  for (const auto& v : graph.vertices()) {
    sigmas.push_back(vertex_sigma(v.condition, v.degree()));
    if (sigmas.back().k_dependent) {
      throw Error("vertex '" + v.id + "' has k-dependent scattering");
    }
  }
  return assemble_bond_s(graph, sigmas);
}

BondScatteringMatrix make_bond_s(Eigen::MatrixXcd s) {
  if (s.rows() != s.cols() || s.rows() == 0 || s.rows() % 2 != 0) {
    throw Error("bond scattering matrix must be 2B x 2B");
  }
  if (unitarity_defect(s) > kMatrixTol) {
    throw Error("bond scattering matrix is not unitary");
  }
  BondScatteringMatrix out{std::move(s), false};
  out.j_symmetric = check_k_independence(out);
  return out;
}

bool check_k_independence(const BondScatteringMatrix& s) {
  const int nb = s.bond_count();
  const int n = s.size();
  double worst = 0.0;
  for (int b = 0; b < n; ++b) {
    const int rb = b < nb ? b + nb : b - nb;
    for (int a = 0; a < n; ++a) {
      const int ra = a < nb ? a + nb : a - nb;
      worst = std::max(worst, std::abs(s.s(rb, ra) - std::conj(s.s(a, b))));
    }
  }
  return worst <= kMatrixTol;
}

double bounce_trace(const BondScatteringMatrix& s) {
  const int nb = s.bond_count();
  cd sum = 0.0;
  for (int a = 0; a < s.size(); ++a) sum += s.s(a, a < nb ? a + nb : a - nb);
  if (s.j_symmetric && std::abs(sum.imag()) > kMatrixTol * s.size()) {
    throw Error("bounce_trace: tr(SJ) has an imaginary part for a J-symmetric S");
  }
  return sum.real();
}

void require_j_symmetric(const BondScatteringMatrix& s, const char* who) {
  if (!s.j_symmetric) {
    throw Error(std::string(who) +
                ": scattering matrix is not J-symmetric (k-dependent); vacuum "
                "energy is only defined here for k-independent S");
  }
}

}  // namespace qgraph
