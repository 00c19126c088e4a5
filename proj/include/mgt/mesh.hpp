#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "mgt/common.hpp"
#include "mgt/quadrature.hpp"
#include "mgt/surface.hpp"

namespace mgt {

enum class Chart : std::uint8_t { affine, infinity_cap };

struct MeshParams {
  int base_resolution = 10;      // boundary circle h = 2R / base_resolution
  int branch_grading_depth = 4;  // geometric shells around each branch point
  int refinement_level = 0;
  int duffy_order = 12;          // radial x angular Gauss order at cone corners

  json to_json() const;
  static MeshParams from_json(const json& j);
  std::string canonical_string() const;
};

// Base (genus-0) triangulated sphere: an affine-chart disc plus a cap of
// triangles around infinity expressed in the u = 1/x chart.
struct BaseMesh {
  struct Vertex {
    cplx pos;                  // x coordinate; u coordinate if at_infinity
    bool at_infinity = false;  // only the single u = 0 vertex
    bool branch = false;
  };
  std::vector<Vertex> vertices;
  std::vector<std::array<int, 3>> tris;  // ccw in their chart
  std::vector<Chart> chart;
  std::vector<std::pair<int, int>> cut_edges;  // vertex id pairs (a < b)
  std::vector<int> branch_vertex;              // per branch point index

  cplx corner_coord(int tri, int corner) const;
};

struct MeshValidation {
  int vertex_count = 0, edge_count = 0, triangle_count = 0;
  int euler_characteristic = 0;
  int cone_count = 0;
  double max_cone_angle_error = 0;       // vs 4*pi
  double max_interior_angle_error = 0;   // single-chart vertex stars vs 2*pi
  double max_transition_angle_error = 0; // vertex stars mixing charts
  double min_triangle_angle = 0;
  double max_edge_length = 0;  // over chart coordinates
  bool oriented = false;
  bool manifold = false;

  json to_json() const;
};

// Triangulated model of the surface itself: the branched double cover of the
// base sphere for hyperelliptic curves, or a flat torus grid.
struct BranchedMesh {
  SurfaceModel model;
  MeshParams params;
  int genus = 0;
  bool is_torus = false;
  int torus_n = 0;

  BaseMesh base;  // hyperelliptic only

  struct Vertex {
    cplx pos;   // chart coordinate of the underlying base vertex
    bool at_infinity = false;
    bool cone = false;
    int base_vertex = -1;
  };
  struct Triangle {
    std::array<int, 3> v;
    Chart chart = Chart::affine;
    std::array<cplx, 3> corner;  // chart coordinates, ccw
    int sheet = 0;               // 0 or 1; odd differentials flip sign on sheet 1
    int base_tri = -1;
    std::array<int, 3> neighbor{-1, -1, -1};  // across edge opposite corner k
  };

  std::vector<Vertex> vertices;
  std::vector<Triangle> triangles;

  // Quadrature: per-triangle rule id (0 = interior rule, 1+c = corner rule
  // concentrated at corner c) and global node offsets.
  std::vector<std::uint8_t> rule_id;
  std::vector<std::size_t> node_offset;  // size triangles+1
  MeshValidation validation;

  const TriangleRule& rule(int tri) const;
  std::size_t total_nodes() const { return node_offset.back(); }
  std::size_t node_count(int tri) const { return node_offset[tri + 1] - node_offset[tri]; }
  double chart_area(int tri) const;
  cplx node_position(int tri, std::size_t local) const;
  double sheet_sign(int tri) const { return triangles[tri].sheet == 0 ? 1.0 : -1.0; }

  json to_json() const;
  static BranchedMesh from_json(const json& j);
};

// Full pipeline: base sphere -> double cover -> quadrature -> validation, or
// the torus grid. Throws validation_error when a mesh invariant fails.
BranchedMesh build_surface(const SurfaceModel& model, const MeshParams& params);

// One refinement step: 4:1 midpoint subdivision of the base mesh plus one
// grading round at cone vertices, then re-lift. Torus meshes double n.
BranchedMesh refine(const BranchedMesh& mesh);

namespace detail {
// Exposed for tests.
struct PlanarTriangulation {
  std::vector<std::array<int, 3>> triangles;  // ccw
};
PlanarTriangulation delaunay(const std::vector<cplx>& points);
BaseMesh build_base_sphere(const HyperellipticCurve& curve, const MeshParams& params);
BaseMesh refine_base(const BaseMesh& base, bool deepen_cones);
}  // namespace detail

}  // namespace mgt
