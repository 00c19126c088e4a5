#pragma once

#include <array>
#include <vector>

namespace mgt {

// Gauss-Legendre nodes/weights on [0,1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendre gauss_legendre(int n);

// Quadrature rule on the reference triangle in barycentric coordinates.
// Weights sum to 1 (they are fractions of the triangle area).
struct TriangleRule {
  struct Node {
    std::array<double, 3> bary;
    double weight;
  };
  std::vector<Node> nodes;
};

// Symmetric rule exact for total degree <= 6 (12 points, positive weights).
const TriangleRule& triangle_rule_d6();

// Tensor Gauss rule with the radial substitution rho = s^2 concentrated at
// the given corner (0, 1 or 2). Integrates f ~ rho^(-1) singularities at the
// corner to near machine accuracy; exact for smooth factors of moderate degree.
TriangleRule duffy_corner_rule(int corner, int n_radial = 12, int n_angular = 12);

}  // namespace mgt
