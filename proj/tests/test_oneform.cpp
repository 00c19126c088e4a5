#include <doctest.h>

#include <mgt/oneform.hpp>
#include <mgt/state.hpp>

#include "fixtures.hpp"

using namespace mgt;

namespace {

Eigen::VectorXcd frame_unit(int g2, int k) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(g2);
  v[k] = 1.0;
  return v;
}

// smooth periodic vertex field cos(2 pi x) on the torus
Eigen::VectorXcd torus_cos_field(const BranchedMesh& mesh) {
  Eigen::VectorXcd u(static_cast<Eigen::Index>(mesh.vertices.size()));
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    u[static_cast<Eigen::Index>(v)] = std::cos(2.0 * kPi * mesh.vertices[v].pos.real());
  return u;
}

// worst frame-coefficient recovery error of projection(materialized frame)
double frame_recovery_error(const SurfaceState& s) {
  int g = s.g();
  Eigen::VectorXcd hol(g), antihol(g);
  for (int k = 0; k < g; ++k) {
    hol[k] = cplx(0.3 + 0.1 * k, -0.2 + 0.05 * k);
    antihol[k] = cplx(-0.1 * k, 0.4 - 0.3 * k);
  }
  OneForm phi = one_form_from_frame(s.mesh, s.basis, hol, antihol);
  HarmonicProjection h = harmonic_projection(s.mesh, s.basis, phi);
  return std::max((h.hol - hol).cwiseAbs().maxCoeff(), (h.antihol - antihol).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_SUITE("oneform") {
  TEST_CASE("wirtinger weights differentiate linear functions exactly") {
    const BranchedMesh& m = fixtures::sextic_state().mesh;
    const BranchedMesh::Triangle& tri = m.triangles[10];
    double area = m.chart_area(10);
    cplx w[3];
    triangle_wirtinger_weights(tri, area, w);
    // u(x) = x -> d/dx = 1; u = conj(x) -> 0; u = 1 -> 0
    cplx dx = 0, dxbar = 0, dc = 0;
    for (int k = 0; k < 3; ++k) {
      dx += w[k] * tri.corner[static_cast<std::size_t>(k)];
      dxbar += w[k] * std::conj(tri.corner[static_cast<std::size_t>(k)]);
      dc += w[k];
    }
    CHECK(std::abs(dx - 1.0) < 1e-13);
    CHECK(std::abs(dxbar) < 1e-13);
    CHECK(std::abs(dc) < 1e-13);
  }

  TEST_CASE("hodge star rotates types and squares to minus one") {
    const BranchedMesh& m = fixtures::sextic_small_state().mesh;
    Eigen::Index n = static_cast<Eigen::Index>(m.triangles.size());
    OneForm phi{Eigen::VectorXcd::Random(n), Eigen::VectorXcd::Random(n)};
    OneForm star = hodge_star(phi);
    CHECK((star.c + kI * phi.c).cwiseAbs().maxCoeff() == 0.0);
    CHECK((star.cbar - kI * phi.cbar).cwiseAbs().maxCoeff() == 0.0);
    OneForm star2 = hodge_star(star);
    CHECK((star2.c + phi.c).cwiseAbs().maxCoeff() == 0.0);
    CHECK((star2.cbar + phi.cbar).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("flat torus: wedge integrals, projection and idempotence are exact") {
    const SurfaceState& s = fixtures::torus_state();
    OneForm psi = one_form_from_frame(s.mesh, s.basis, frame_unit(1, 0),
                                      Eigen::VectorXcd::Zero(1));
    OneForm psibar = one_form_from_frame(s.mesh, s.basis, Eigen::VectorXcd::Zero(1),
                                         frame_unit(1, 0));
    CHECK(std::abs(one_form_wedge_integral(s.mesh, psi, psibar) - cplx(0, -2)) < 1e-12);
    CHECK(std::abs(one_form_wedge_integral(s.mesh, psi, psi)) < 1e-12);
    CHECK(frame_recovery_error(s) < 1e-12);

    Eigen::VectorXcd hol(1), antihol(1);
    hol << cplx(0.3, 0.1);
    antihol << cplx(-0.4, 0.7);
    HarmonicProjection h =
        harmonic_projection(s.mesh, s.basis, one_form_from_frame(s.mesh, s.basis, hol, antihol));
    HarmonicProjection h2 = harmonic_projection(s.mesh, s.basis, h.form);
    CHECK((h2.hol - h.hol).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((h2.antihol - h.antihol).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("branched cover: triangle-mean wedge integrals are first-order accurate") {
    // collapsing psi ~ rho^(-1/2) to per-triangle constants costs a few
    // percent on the cone fans; that is the honest accuracy of this layer
    const SurfaceState& s = fixtures::sextic_state();
    int g = s.g();
    for (int i = 0; i < g; ++i) {
      OneForm psi_i = one_form_from_frame(s.mesh, s.basis, frame_unit(g, i),
                                          Eigen::VectorXcd::Zero(g));
      for (int j = 0; j < g; ++j) {
        OneForm psibar_j = one_form_from_frame(s.mesh, s.basis, Eigen::VectorXcd::Zero(g),
                                               frame_unit(g, j));
        cplx w = one_form_wedge_integral(s.mesh, psi_i, psibar_j);
        cplx expect = i == j ? cplx(0, -2) : cplx(0, 0);
        CHECK(std::abs(w - expect) < 5e-2);
        OneForm psi_j = one_form_from_frame(s.mesh, s.basis, frame_unit(g, j),
                                            Eigen::VectorXcd::Zero(g));
        CHECK(std::abs(one_form_wedge_integral(s.mesh, psi_i, psi_j)) < 5e-2);
      }
    }
  }

  TEST_CASE("frame recovery error shrinks under refinement") {
    MeshParams p;
    p.base_resolution = 9;
    p.branch_grading_depth = 2;
    SurfaceState coarse = build_state(fixtures::quartic(), p);
    double e0 = frame_recovery_error(coarse);
    SurfaceState fine = build_state(fixtures::quartic(), p, refine(coarse.mesh));
    double e1 = frame_recovery_error(fine);
    CHECK(e0 < 0.2);
    CHECK(e1 < 0.75 * e0);
  }

  TEST_CASE("exact forms on the torus project to zero") {
    const SurfaceState& s = fixtures::torus_state();
    OneForm du = exterior_d(s.mesh, torus_cos_field(s.mesh));
    HarmonicProjection h = harmonic_projection(s.mesh, s.basis, du);
    CHECK(h.hol.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(h.antihol.cwiseAbs().maxCoeff() < 1e-12);
    // and their wedge against the harmonic frame vanishes (Stokes)
    OneForm psi = one_form_from_frame(s.mesh, s.basis, frame_unit(1, 0),
                                      Eigen::VectorXcd::Zero(1));
    CHECK(std::abs(one_form_wedge_integral(s.mesh, du, psi)) < 1e-3);
  }

  TEST_CASE("exterior derivative of a linear chart function is its gradient") {
    const SurfaceState& s = fixtures::torus_state();
    const BranchedMesh& m = s.mesh;
    Eigen::VectorXcd u(static_cast<Eigen::Index>(m.vertices.size()));
    for (std::size_t v = 0; v < m.vertices.size(); ++v) u[static_cast<Eigen::Index>(v)] = m.vertices[v].pos;
    OneForm du = exterior_d(m, u);
    int checked = 0;
    for (std::size_t t = 0; t < m.triangles.size() && checked < 50; ++t) {
      const auto& tri = m.triangles[t];
      // skip seam triangles where the periodic coordinate wraps
      bool seam = false;
      for (int k = 0; k < 3; ++k)
        if (std::abs(m.vertices[static_cast<std::size_t>(tri.v[static_cast<std::size_t>(k)])].pos -
                     tri.corner[static_cast<std::size_t>(k)]) > 1e-12)
          seam = true;
      if (seam) continue;
      ++checked;
      CHECK(std::abs(du.c[static_cast<Eigen::Index>(t)] - 1.0) < 1e-12);
      CHECK(std::abs(du.cbar[static_cast<Eigen::Index>(t)]) < 1e-12);
    }
    CHECK(checked == 50);
  }

  TEST_CASE("chart transition jump of the frame is a bounded nonzero diagnostic") {
    const SurfaceState& s = fixtures::quartic_state();
    OneForm psi = one_form_from_frame(s.mesh, s.basis, frame_unit(1, 0),
                                      Eigen::VectorXcd::Zero(1));
    double jump = one_form_chart_jump(s.mesh, psi);
    CHECK(jump < 0.5);
    CHECK(jump > 0.0);
  }

  TEST_CASE("triangle means average node samples with rule weights") {
    const SurfaceState& s = fixtures::sextic_small_state();
    const BranchedMesh& m = s.mesh;
    Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(m.total_nodes()));
    Eigen::VectorXcd means = triangle_means(m, ones);
    CHECK((means.array() - 1.0).abs().maxCoeff() < 1e-13);
    REQUIRE(means.size() == static_cast<Eigen::Index>(m.triangles.size()));
  }
}
