#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mgt/mesh.hpp"

namespace mgt {

// Evaluates the square root y = sqrt(prod (x - e_i)) as a product of per-cut
// factors, each with its branch cut exactly on the cut segment, plus the
// analytic counterpart T(u) = u^(g+1) y(1/u) in the chart at infinity
// (T(0) = 1). All sheet-0 values; sheet 1 flips the sign.
struct HyperellipticEvaluator {
  std::vector<std::pair<cplx, cplx>> pairs;  // cut endpoints (e_a, e_b)
  int g = 0;

  static HyperellipticEvaluator make(const HyperellipticCurve& curve);
  cplx y_affine(cplx x) const;
  cplx y_infinity(cplx u) const;
  // chart coefficients of x^(k-1) dx / y for k = 1..g at an affine or
  // infinity-chart position (out must hold g values)
  void raw_one_forms(Chart chart, cplx pos, cplx* out) const;
};

// Orthonormal basis of holomorphic 1-forms. Raw forms are x^(k-1) dx / y on
// hyperelliptic covers (k = 1..g) and dz on the torus; values are stored as
// chart-coefficient samples at every quadrature node, including the sheet
// sign. psi = transform * raw is orthonormal for the Hermitian pairing
// (i/2) Int psi_i ^ conj(psi_j) computed by the mesh quadrature.
struct DifferentialBasis {
  int g = 0;
  std::vector<std::string> raw_descriptors;
  Eigen::MatrixXcd gram_raw;   // quadrature Gram of the raw forms
  Eigen::MatrixXcd transform;  // lower triangular, psi = transform * raw
  Eigen::MatrixXcd raw_values;  // g x total_nodes
  Eigen::MatrixXcd psi_values;  // g x total_nodes
  // max |(i/2) Int psi_i ^ conj(psi_j) - delta_ij| re-measured with an
  // independent (once-subdivided) quadrature.
  double orthonormality_residual = 0;
};

DifferentialBasis orthonormal_basis(const BranchedMesh& mesh);

// Raw-form Gram matrix; subdivide=1 virtually splits each triangle 4:1 first
// (used as the independent quadrature re-verification).
Eigen::MatrixXcd raw_gram(const BranchedMesh& mesh, int subdivide);

// The normalized Bergman volume form B = (i/2g) sum_l psi_l ^ conj(psi_l),
// lumped to a vertex mass vector. prenorm_total is the raw quadrature total
// of B (a direct accuracy measure, == 1 in exact arithmetic); mass is scaled
// by it so downstream identities hold to machine precision.
struct VolumeFormB {
  Eigen::VectorXd mass;
  double prenorm_total = 0;
};

VolumeFormB bergman_form(const BranchedMesh& mesh, const DifferentialBasis& basis);

// Bergman density (1/g) sum_l |psi_l|^2 at every quadrature node.
Eigen::VectorXd bergman_node_density(const BranchedMesh& mesh, const DifferentialBasis& basis);

}  // namespace mgt
