#pragma once

#include <array>
#include <nlohmann/json.hpp>
#include <variant>
#include <vector>

#include "mgt/common.hpp"

namespace mgt {

using json = nlohmann::json;

// Hyperelliptic curve y^2 = prod_i (x - e_i) with an even number (>= 4) of
// distinct finite branch points, presented with an explicit cut plan: a
// perfect matching of the branch points whose straight segments are disjoint.
struct HyperellipticCurve {
  std::vector<cplx> branch_points;
  std::vector<std::pair<int, int>> cuts;

  int genus() const;       // (#branch)/2 - 1
  void validate() const;   // throws model_error / config_error
};

// Flat torus C / (Z + tau Z), Im tau > 0.
struct TorusSurface {
  cplx tau{0.0, 1.0};
};

using SurfaceModel = std::variant<HyperellipticCurve, TorusSurface>;

int genus(const SurfaceModel& m);

// x -> (a x + b) / (c x + d) applied to the branch points, keeping the cut
// plan. Rejects transforms that send a branch point to infinity or collapse
// (|ad - bc| ~ 0).
HyperellipticCurve mobius_transform(const HyperellipticCurve& curve,
                                    const std::array<cplx, 4>& abcd);

SurfaceModel parse_surface_spec(const json& j);
json surface_to_json(const SurfaceModel& m);

// Canonical string form used in content hashes.
std::string surface_canonical_string(const SurfaceModel& m);

}  // namespace mgt
