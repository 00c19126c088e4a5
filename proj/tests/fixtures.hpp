#pragma once

// Shared, lazily-built surface fixtures. Building a state involves meshing
// plus a sparse factorization and g^2 Green solves, so each configuration is
// constructed once and reused across suites (doctest runs them in-process).

#include <cmath>

#include <mgt/state.hpp>

namespace fixtures {

// Branch points at the n-th roots of unity, cut between adjacent pairs.
inline mgt::HyperellipticCurve roots_of_unity(int n) {
  mgt::HyperellipticCurve c;
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * mgt::kPi * k / n;
    c.branch_points.push_back({std::cos(t), std::sin(t)});
  }
  for (int k = 0; k < n; k += 2) c.cuts.push_back({k, k + 1});
  return c;
}

inline mgt::HyperellipticCurve quartic() { return roots_of_unity(4); }  // genus 1
inline mgt::HyperellipticCurve sextic() { return roots_of_unity(6); }   // genus 2
inline mgt::HyperellipticCurve octic() { return roots_of_unity(8); }    // genus 3

inline const mgt::SurfaceState& torus_state() {  // tau = i, 32 x 32 grid
  static mgt::SurfaceState s = [] {
    mgt::MeshParams p;
    p.base_resolution = 32;
    return mgt::build_state(mgt::TorusSurface{{0.0, 1.0}}, p);
  }();
  return s;
}

inline const mgt::SurfaceState& torus_coarse_state() {  // tau = i, 16 x 16 grid
  static mgt::SurfaceState s = [] {
    mgt::MeshParams p;
    p.base_resolution = 16;
    return mgt::build_state(mgt::TorusSurface{{0.0, 1.0}}, p);
  }();
  return s;
}

inline const mgt::SurfaceState& quartic_state() {
  static mgt::SurfaceState s = [] {
    return mgt::build_state(quartic(), mgt::MeshParams{});
  }();
  return s;
}

inline const mgt::SurfaceState& sextic_state() {
  static mgt::SurfaceState s = [] {
    return mgt::build_state(sextic(), mgt::MeshParams{});
  }();
  return s;
}

inline const mgt::SurfaceState& octic_state() {
  static mgt::SurfaceState s = [] {
    return mgt::build_state(octic(), mgt::MeshParams{});
  }();
  return s;
}

// Coarse genus-2 mesh, small enough for the dense spectral Green kernel.
inline const mgt::SurfaceState& sextic_small_state() {
  static mgt::SurfaceState s = [] {
    mgt::MeshParams p;
    p.base_resolution = 9;
    p.branch_grading_depth = 2;
    return mgt::build_state(sextic(), p);
  }();
  return s;
}

}  // namespace fixtures
