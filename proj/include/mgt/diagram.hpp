#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgt/state.hpp"

namespace mgt {

// Textual diagram grammar:
//   vertices ';' propagators ';' contractions
// A vertex is NAME(h,~a): one holomorphic index slot h and one
// antiholomorphic slot ~a; slot labels are globally unique. Propagators
// NAME-NAME link two distinct vertices through the Green operator.
// Contractions h=a identify one holomorphic with one antiholomorphic label
// (either textual order); uncontracted labels stay as free tensor indices.
struct DiagramVertex {
  std::string name;
  std::string hol;
  std::string antihol;
};

struct DiagramEdge {
  int a = 0, b = 0;  // vertex indices
};

struct DiagramArc {
  int hol_vertex = 0, antihol_vertex = 0;
  std::string hol, antihol;
};

struct DiagramExpr {
  std::string source;
  std::vector<DiagramVertex> vertices;
  std::vector<DiagramEdge> edges;
  std::vector<DiagramArc> arcs;
};

// Throws parse_error (with byte offset) on malformed or invalid input:
// duplicate names/labels, unknown references, self-propagators, contractions
// that do not join a holomorphic to an antiholomorphic slot, labels
// contracted twice, or a diagram whose combined propagator+contraction graph
// is disconnected.
DiagramExpr parse_diagram(const std::string& text);

enum class ReductionOrder {
  automatic,  // cheapest root per tree component
  forward,    // root at the last vertex of each component
  reverse,    // root at the first vertex of each component
};

struct DiagramOptions {
  ReductionOrder order = ReductionOrder::automatic;
  int max_dense_vertices = 1200;  // dense Green kernel budget (cycle graphs)
  long max_solves = 4096;         // Green solves budget
  double max_terms = 4e9;         // contraction / cycle flop budget
};

struct DiagramCost {
  long solves = 0;
  bool dense_kernel = false;
  double terms = 0;
};

// Evaluation result: tensor over the free labels (appearance order), each
// axis of length g, row-major storage.
struct DiagramValue {
  int g = 0;
  std::vector<std::string> labels;
  std::vector<cplx> data;
  DiagramCost cost;

  cplx scalar() const;
  cplx at(const std::vector<int>& idx) const;
};

// Evaluates the diagram on a prepared surface state. Tree-shaped propagator
// components reuse the cached Green potentials where possible; components
// containing a propagator cycle go through the dense Green kernel. Exceeding
// a budget throws config_error with the offending estimate; propagator
// components with more than one independent cycle are refused the same way.
DiagramValue evaluate_diagram(const SurfaceState& state, const DiagramExpr& expr,
                              const DiagramOptions& options = {});

}  // namespace mgt
