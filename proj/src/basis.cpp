#include "mgt/basis.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace mgt {

// Per-pair square root factor of y with the branch cut exactly on the cut
// segment [e_a, e_b]: s_pair(x) = ((e_b-e_a)/2) * u * sqrt(1 - u^-2) with
// u = (2x - e_a - e_b) / (e_b - e_a). The product over pairs is a
// single-valued determination of y away from the cuts.
HyperellipticEvaluator HyperellipticEvaluator::make(const HyperellipticCurve& c) {
  HyperellipticEvaluator ev;
  ev.g = c.genus();
  for (auto [a, b] : c.cuts) ev.pairs.emplace_back(c.branch_points[a], c.branch_points[b]);
  return ev;
}

cplx HyperellipticEvaluator::y_affine(cplx x) const {
  cplx prod = 1.0;
  for (auto& [ea, eb] : pairs) {
    cplx half = 0.5 * (eb - ea);
    cplx u = (x - 0.5 * (ea + eb)) / half;
    prod *= half * u * std::sqrt(1.0 - 1.0 / (u * u));
  }
  return prod;
}

cplx HyperellipticEvaluator::y_infinity(cplx u) const {
  cplx prod = 1.0;
  for (auto& [ea, eb] : pairs) {
    cplx uc = (2.0 - (ea + eb) * u) / (u * (eb - ea));
    prod *= (0.5 * (2.0 - (ea + eb) * u)) * std::sqrt(1.0 - 1.0 / (uc * uc));
  }
  return prod;
}

void HyperellipticEvaluator::raw_one_forms(Chart chart, cplx pos, cplx* out) const {
  if (chart == Chart::affine) {
    cplx inv_y = 1.0 / y_affine(pos);
    cplx p = 1.0;
    for (int k = 0; k < g; ++k) {
      out[k] = p * inv_y;
      p *= pos;
    }
  } else {
    // omega_k = -u^(g-k) / T(u) du on sheet 0 (1-based k)
    cplx inv_t = 1.0 / y_infinity(pos);
    cplx p = 1.0;  // u^0
    for (int k = g - 1; k >= 0; --k) {
      out[k] = -p * inv_t;
      p *= pos;
    }
  }
}

Eigen::MatrixXcd raw_gram(const BranchedMesh& mesh, int subdivide) {
  int g = mesh.genus;
  Eigen::MatrixXcd N = Eigen::MatrixXcd::Zero(g, g);
  std::vector<cplx> vals(g);

  const bool torus = mesh.is_torus;
  HyperellipticEvaluator ev;
  if (!torus) ev = HyperellipticEvaluator::make(std::get<HyperellipticCurve>(mesh.model));

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const TriangleRule& rule = mesh.rule(static_cast<int>(t));
    double area = mesh.chart_area(static_cast<int>(t));

    // virtual 4:1 subdivision for the verification quadrature
    std::vector<std::array<cplx, 3>> cells;
    if (subdivide <= 0) {
      cells.push_back(tri.corner);
    } else {
      cplx a = tri.corner[0], b = tri.corner[1], c = tri.corner[2];
      cplx ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
      cells.push_back({a, ab, ca});
      cells.push_back({ab, b, bc});
      cells.push_back({ca, bc, c});
      cells.push_back({ab, bc, ca});
    }
    double cell_area = area / cells.size();
    for (auto& cell : cells) {
      for (const auto& node : rule.nodes) {
        cplx pos = node.bary[0] * cell[0] + node.bary[1] * cell[1] + node.bary[2] * cell[2];
        if (torus) {
          for (int k = 0; k < g; ++k) vals[k] = 1.0;
        } else {
          ev.raw_one_forms(tri.chart, pos, vals.data());
        }
        double w = cell_area * node.weight;
        for (int i = 0; i < g; ++i)
          for (int j = 0; j < g; ++j) N(i, j) += w * vals[i] * std::conj(vals[j]);
      }
    }
  }
  return N;
}

DifferentialBasis orthonormal_basis(const BranchedMesh& mesh) {
  DifferentialBasis basis;
  int g = mesh.genus;
  basis.g = g;
  for (int k = 1; k <= g; ++k)
    basis.raw_descriptors.push_back(mesh.is_torus ? "dz" : "x^" + std::to_string(k - 1) + " dx / y");

  const bool torus = mesh.is_torus;
  HyperellipticEvaluator ev;
  if (!torus) ev = HyperellipticEvaluator::make(std::get<HyperellipticCurve>(mesh.model));

  const std::size_t total = mesh.total_nodes();
  basis.raw_values.resize(g, static_cast<Eigen::Index>(total));
  Eigen::MatrixXcd N = Eigen::MatrixXcd::Zero(g, g);
  std::vector<cplx> vals(g);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const TriangleRule& rule = mesh.rule(static_cast<int>(t));
    double area = mesh.chart_area(static_cast<int>(t));
    double sign = mesh.sheet_sign(static_cast<int>(t));
    std::size_t off = mesh.node_offset[t];
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      cplx pos = mesh.node_position(static_cast<int>(t), q);
      if (torus) {
        for (int k = 0; k < g; ++k) vals[k] = 1.0;
      } else {
        ev.raw_one_forms(tri.chart, pos, vals.data());
        for (int k = 0; k < g; ++k) vals[k] *= sign;
      }
      double w = area * rule.nodes[q].weight;
      for (int k = 0; k < g; ++k) basis.raw_values(k, static_cast<Eigen::Index>(off + q)) = vals[k];
      for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) N(i, j) += w * vals[i] * std::conj(vals[j]);
    }
  }
  basis.gram_raw = N;

  Eigen::LLT<Eigen::MatrixXcd> llt(N);
  if (llt.info() != Eigen::Success)
    throw validation_error("gram-positive-definite",
                           "raw period Gram matrix is not positive definite; refine the mesh");
  Eigen::MatrixXcd L = llt.matrixL();
  basis.transform =
      L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXcd::Identity(g, g));
  basis.psi_values = basis.transform * basis.raw_values;

  // independent re-verification on a subdivided quadrature
  Eigen::MatrixXcd N2 = raw_gram(mesh, 1);
  Eigen::MatrixXcd P = basis.transform * N2 * basis.transform.adjoint();
  basis.orthonormality_residual = (P - Eigen::MatrixXcd::Identity(g, g)).cwiseAbs().maxCoeff();
  return basis;
}

Eigen::VectorXd bergman_node_density(const BranchedMesh& mesh, const DifferentialBasis& basis) {
  const std::size_t total = mesh.total_nodes();
  Eigen::VectorXd rho(static_cast<Eigen::Index>(total));
  for (std::size_t q = 0; q < total; ++q) {
    double s = 0;
    for (int k = 0; k < basis.g; ++k) s += std::norm(basis.psi_values(k, static_cast<Eigen::Index>(q)));
    rho[static_cast<Eigen::Index>(q)] = s / basis.g;
  }
  return rho;
}

VolumeFormB bergman_form(const BranchedMesh& mesh, const DifferentialBasis& basis) {
  VolumeFormB B;
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const TriangleRule& rule = mesh.rule(static_cast<int>(t));
    double area = mesh.chart_area(static_cast<int>(t));
    std::size_t off = mesh.node_offset[t];
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      double rho = 0;
      for (int k = 0; k < basis.g; ++k)
        rho += std::norm(basis.psi_values(k, static_cast<Eigen::Index>(off + q)));
      rho /= basis.g;
      double w = area * rule.nodes[q].weight * rho;
      for (int c = 0; c < 3; ++c) raw[tri.v[c]] += w * rule.nodes[q].bary[c];
    }
  }
  B.prenorm_total = raw.sum();
  if (B.prenorm_total <= 0)
    throw validation_error("bergman-positive", "Bergman mass total must be positive");
  B.mass = raw / B.prenorm_total;
  return B;
}

}  // namespace mgt
