#include "mgt/oneform.hpp"

#include <algorithm>
#include <cmath>

namespace mgt {

Eigen::VectorXcd triangle_means(const BranchedMesh& mesh, const Eigen::VectorXcd& node_values) {
  const int nt = static_cast<int>(mesh.triangles.size());
  Eigen::VectorXcd out(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& rule = mesh.rule(t);
    const std::size_t off = mesh.node_offset[t];
    cplx acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      acc += rule.nodes[q].weight * node_values[off + q];
    }
    out[t] = acc;  // rule weights have unit mass
  }
  return out;
}

void triangle_wirtinger_weights(const BranchedMesh::Triangle& tri, double area, cplx w[3]) {
  const cplx scale = cplx(0.0, -1.0) / (4.0 * area);
  for (int c = 0; c < 3; ++c) {
    const cplx edge = tri.corner[(c + 2) % 3] - tri.corner[(c + 1) % 3];
    w[c] = scale * std::conj(edge);
  }
}

OneForm one_form_from_frame(const BranchedMesh& mesh, const DifferentialBasis& basis,
                            const Eigen::VectorXcd& hol, const Eigen::VectorXcd& antihol) {
  const int nt = static_cast<int>(mesh.triangles.size());
  const int g = basis.g;
  OneForm phi;
  phi.c.setZero(nt);
  phi.cbar.setZero(nt);
  Eigen::VectorXcd mean(g);
  for (int t = 0; t < nt; ++t) {
    const auto& rule = mesh.rule(t);
    const std::size_t off = mesh.node_offset[t];
    mean.setZero();
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      mean += rule.nodes[q].weight * basis.psi_values.col(off + q);
    }
    for (int k = 0; k < g; ++k) {
      phi.c[t] += hol[k] * mean[k];
      phi.cbar[t] += antihol[k] * std::conj(mean[k]);
    }
  }
  return phi;
}

OneForm exterior_d(const BranchedMesh& mesh, const Eigen::VectorXcd& vertex_values) {
  const int nt = static_cast<int>(mesh.triangles.size());
  OneForm out;
  out.c.setZero(nt);
  out.cbar.setZero(nt);
  cplx w[3];
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    triangle_wirtinger_weights(tri, mesh.chart_area(t), w);
    cplx dx = 0.0, dxbar = 0.0;
    for (int c = 0; c < 3; ++c) {
      const cplx u = vertex_values[tri.v[c]];
      dx += w[c] * u;
      dxbar += std::conj(w[c]) * u;
    }
    out.c[t] = dx;
    out.cbar[t] = dxbar;
  }
  return out;
}

OneForm hodge_star(const OneForm& phi) {
  OneForm out;
  out.c = cplx(0.0, -1.0) * phi.c;
  out.cbar = cplx(0.0, 1.0) * phi.cbar;
  return out;
}

cplx one_form_wedge_integral(const BranchedMesh& mesh, const OneForm& a, const OneForm& b) {
  cplx acc = 0.0;
  const int nt = static_cast<int>(mesh.triangles.size());
  for (int t = 0; t < nt; ++t) {
    acc += mesh.chart_area(t) * (a.c[t] * b.cbar[t] - a.cbar[t] * b.c[t]);
  }
  return cplx(0.0, -2.0) * acc;
}

HarmonicProjection harmonic_projection(const BranchedMesh& mesh, const DifferentialBasis& basis,
                                       const OneForm& phi) {
  const int nt = static_cast<int>(mesh.triangles.size());
  const int g = basis.g;
  HarmonicProjection proj;
  proj.hol.setZero(g);
  proj.antihol.setZero(g);
  Eigen::VectorXcd mean(g);
  for (int t = 0; t < nt; ++t) {
    const auto& rule = mesh.rule(t);
    const std::size_t off = mesh.node_offset[t];
    mean.setZero();
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      mean += rule.nodes[q].weight * basis.psi_values.col(off + q);
    }
    const double area = mesh.chart_area(t);
    proj.hol += (area * phi.c[t]) * mean.conjugate();
    proj.antihol += (area * phi.cbar[t]) * mean;
  }
  proj.form = one_form_from_frame(mesh, basis, proj.hol, proj.antihol);
  return proj;
}

double one_form_chart_jump(const BranchedMesh& mesh, const OneForm& phi) {
  double worst = 0.0;
  const int nt = static_cast<int>(mesh.triangles.size());
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    if (tri.chart != Chart::infinity_cap) continue;
    for (int k = 0; k < 3; ++k) {
      const int nb = tri.neighbor[k];
      if (nb < 0) continue;
      const auto& other = mesh.triangles[nb];
      if (other.chart != Chart::affine) continue;
      // Transform this triangle's (du, conj(du)) coefficients to the affine
      // chart at the shared edge midpoint: dx = -u^{-2} du... i.e. phi = c du
      // has affine coefficient c_x = -u^2 c_u since du = -u^2 dx.
      const cplx u_mid = 0.5 * (tri.corner[(k + 1) % 3] + tri.corner[(k + 2) % 3]);
      const cplx u2 = u_mid * u_mid;
      const cplx cx_here = -u2 * phi.c[t];
      const cplx cbx_here = -std::conj(u2) * phi.cbar[t];
      worst = std::max(worst, std::abs(cx_here - phi.c[nb]));
      worst = std::max(worst, std::abs(cbx_here - phi.cbar[nb]));
    }
  }
  return worst;
}

}  // namespace mgt
