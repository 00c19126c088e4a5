#pragma once

#include <Eigen/Dense>

#include "mgt/basis.hpp"
#include "mgt/laplace.hpp"
#include "mgt/mesh.hpp"

namespace mgt {

// 1-form as per-triangle constant coefficients w.r.t. the complex chart
// differential: phi = c dx + cbar conj(dx) on each triangle (du on the
// infinity cap).
struct OneForm {
  Eigen::VectorXcd c;
  Eigen::VectorXcd cbar;
};

// Rule-weighted triangle means of a per-node sample vector.
Eigen::VectorXcd triangle_means(const BranchedMesh& mesh, const Eigen::VectorXcd& node_values);

// Wirtinger weights of a triangle: the d/dx derivative of the linear
// interpolant is sum_c w[c] * u[corner c], with w[c] = -i conj(e_c) / (4 area)
// and e_c the edge opposite corner c.
void triangle_wirtinger_weights(const BranchedMesh::Triangle& tri, double area, cplx w[3]);

// Harmonic 1-form sum_k hol[k] psi_k + antihol[k] conj(psi_k) collapsed to
// per-triangle means.
OneForm one_form_from_frame(const BranchedMesh& mesh, const DifferentialBasis& basis,
                            const Eigen::VectorXcd& hol, const Eigen::VectorXcd& antihol);

// Exterior derivative of a piecewise-linear scalar field.
OneForm exterior_d(const BranchedMesh& mesh, const Eigen::VectorXcd& vertex_values);

// Hodge star: * (c dx + cbar conj(dx)) = -i c dx + i cbar conj(dx).
OneForm hodge_star(const OneForm& phi);

// Int phi ^ chi over the surface (per-triangle constants, exact for the
// representation).
cplx one_form_wedge_integral(const BranchedMesh& mesh, const OneForm& a, const OneForm& b);

// Harmonic projection: coordinates of (i/2) sum_j [ (Int phi ^ conj(psi_j)) psi_j
// - (Int phi ^ psi_j) conj(psi_j) ] plus the materialized form.
struct HarmonicProjection {
  Eigen::VectorXcd hol;      // psi coefficients
  Eigen::VectorXcd antihol;  // conj(psi) coefficients
  OneForm form;
};
HarmonicProjection harmonic_projection(const BranchedMesh& mesh, const DifferentialBasis& basis,
                                       const OneForm& phi);

// Max coefficient mismatch across chart-transition edges after transforming
// the infinity-cap side to the affine chart (diagnostic; O(h) for smooth
// forms).
double one_form_chart_jump(const BranchedMesh& mesh, const OneForm& phi);

}  // namespace mgt
