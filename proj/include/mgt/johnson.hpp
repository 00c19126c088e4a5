#pragma once

#include <Eigen/Dense>

#include "mgt/algebra.hpp"
#include "mgt/atensor.hpp"
#include "mgt/state.hpp"

namespace mgt {

// Coefficients of the degree-(2,2) symmetric expression built from A:
//   sum -3i ( psi_j psi_l A_{i jbar k lbar} conj(psi_k) conj(psi_i)
//             - psi_j psi_l A_{i jbar k ibar} conj(psi_k) conj(psi_l) ),
// collected as raw[j][l][k][i] = coefficient of psi_j psi_l (x) conj(psi_k)
// conj(psi_i).
struct E1Coefficients {
  int g = 0;
  std::vector<cplx> raw;  // index ((j*g + l)*g + k)*g + i
  double conj_pattern_residual = 0.0;  // conj(raw[P;R]) + raw[R;P]

  cplx at(int j, int l, int k, int i) const {
    return raw[static_cast<std::size_t>(((j * g + l) * g + k)) * g + i];
  }
};

E1Coefficients e1_coefficients(const ATensor& A);

// Kaehler contraction 2i * sum_{j,l} (raw[j,l,j,l] + raw[j,l,l,j]); equal to
// -6g * kz_invariant(A) up to the partial-trace residuals of A.
cplx kahler_contraction(const ATensor& A);

// Holomorphic quadratic differentials of a hyperelliptic surface, split by
// parity under the sheet involution: 2g-1 even elements x^a (dx)^2/y^2 and
// g-2 odd elements x^b (dx)^2/y. Inner product: the volume-form-weighted L2
// pairing Int q1 conj(q2) / rho dA, where rho is the frame density.
struct QuadDiffBasis {
  int g = 0;
  int n_even = 0, n_odd = 0;
  Eigen::VectorXi parity;     // +1 even, -1 odd, per basis element
  Eigen::MatrixXcd gram;      // Hermitian (n_even+n_odd)^2
  Eigen::MatrixXcd proj;      // dim x n_triangles: integrates conj(qd)/rho
  Eigen::VectorXd rho_tri;    // per-triangle Int 1/rho dA (for sample norms)

  int dim() const { return n_even + n_odd; }
};

// Throws model_error unless the state models a hyperelliptic curve of genus
// at least 2.
QuadDiffBasis quad_diff_basis(const SurfaceState& state);

// Per-triangle Wirtinger derivatives of all cached Green potentials.
struct QContext {
  Eigen::MatrixXcd d_fields;  // n_triangles x g^2
};
QContext make_q_context(const SurfaceState& state);

// Value of the cyclic-sum map: a quadratic differential sampled per triangle
// plus its projection onto the holomorphic basis.
struct QValue {
  Eigen::VectorXcd tri_samples;
  double norm = 0.0;             // weighted L2 norm of the samples
  Eigen::VectorXcd coeffs;       // projection coefficients in the QD basis
  double nonhol_residual = 0.0;  // weighted L2 norm of samples minus projection
  double even_norm = 0.0;        // norm of the even-parity part of the projection
};

// Arguments are frame coordinate vectors of length 2g: first g entries the
// holomorphic frame coefficients, last g the antiholomorphic ones.
QValue compute_q(const SurfaceState& state, const QuadDiffBasis& qd, const QContext& ctx,
                 const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2,
                 const Eigen::VectorXcd& f3);

// Linear extension over Lambda^3 coordinates (alternating in the three slots).
QValue compute_q_wedge(const SurfaceState& state, const QuadDiffBasis& qd, const QContext& ctx,
                       const Wedge3Basis& basis, const Eigen::VectorXcd& coords);

// Discrete check of the dbar identity: the least-squares conj(d/dx) of the
// samples against (i/4) sum_cyc f1' (f2.f3) rho per triangle.
struct DbarCheck {
  Eigen::VectorXcd lhs;      // fitted dbar of the samples
  Eigen::VectorXcd rhs;      // predicted source term
  Eigen::VectorXd weight;    // intrinsic L2 weights (0 where the fit was skipped)
  double err_norm = 0.0;     // weighted L2 of lhs - rhs
  double rhs_norm = 0.0;     // weighted L2 of rhs
};
DbarCheck dbar_q_check(const SurfaceState& state, const QContext& ctx,
                       const Eigen::VectorXcd& f1, const Eigen::VectorXcd& f2,
                       const Eigen::VectorXcd& f3);

// Hermitian matrix of the first obstruction form on the (2,1) block of U,
// transported to quadratic-differential coefficients: H = R N R^H, where
// R holds the projection coefficients of the map values on the exact (2,1)
// basis and N[b][a] = -i <conj xi_a, xi_b> is the positive pairing.
struct E1JResult {
  Eigen::MatrixXcd R;
  Eigen::MatrixXcd N;
  Eigen::MatrixXcd H;
  int rank = 0;
  bool rank_deficient = false;  // expected on hyperelliptic models
  double max_nonhol_residual = 0.0;
  double max_even_norm = 0.0;
  double max_q_norm = 0.0;
};

E1JResult e1_johnson(const SurfaceState& state, const QuadDiffBasis& qd, const QContext& ctx);

}  // namespace mgt
