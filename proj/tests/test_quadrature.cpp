#include <doctest.h>

#include <cmath>

#include <mgt/quadrature.hpp>

using namespace mgt;

namespace {

// Mean of x^a y^b over the reference triangle (0,0)-(1,0)-(0,1):
// integral a! b! / (a+b+2)! divided by area 1/2.
double monomial_mean(int a, int b) {
  double v = 2.0;
  for (int k = 1; k <= a; ++k) v *= k;
  for (int k = 1; k <= b; ++k) v *= k;
  for (int k = 1; k <= a + b + 2; ++k) v /= k;
  return v;
}

double rule_mean(const TriangleRule& rule, int a, int b) {
  double s = 0;
  for (const auto& n : rule.nodes) {
    double x = n.bary[1], y = n.bary[2];
    s += n.weight * std::pow(x, a) * std::pow(y, b);
  }
  return s;
}

double rule_corner_singular_mean(const TriangleRule& rule, int corner) {
  // f = 1 / distance(p, corner) with corners embedded at (0,0), (1,0), (0,1)
  const double cx[3] = {0, 1, 0}, cy[3] = {0, 0, 1};
  double s = 0;
  for (const auto& n : rule.nodes) {
    double x = n.bary[1], y = n.bary[2];
    s += n.weight / std::hypot(x - cx[corner], y - cy[corner]);
  }
  return s;
}

}  // namespace

TEST_SUITE("quadrature") {
  TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 on [0,1]") {
    for (int n = 1; n <= 8; ++n) {
      GaussLegendre gl = gauss_legendre(n);
      REQUIRE(gl.nodes.size() == static_cast<std::size_t>(n));
      REQUIRE(gl.weights.size() == static_cast<std::size_t>(n));
      double wsum = 0;
      for (int i = 0; i < n; ++i) {
        CHECK(gl.nodes[i] > 0.0);
        CHECK(gl.nodes[i] < 1.0);
        CHECK(gl.weights[i] > 0.0);
        wsum += gl.weights[i];
        // symmetric rule about 1/2
        CHECK(gl.nodes[i] + gl.nodes[n - 1 - i] == doctest::Approx(1.0).epsilon(1e-14));
      }
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
      for (int k = 0; k <= 2 * n - 1; ++k) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], k);
        CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("interior triangle rule: positive weights, exact through degree 6") {
    const TriangleRule& rule = triangle_rule_d6();
    double wsum = 0;
    for (const auto& n : rule.nodes) {
      CHECK(n.weight > 0.0);
      CHECK(n.bary[0] + n.bary[1] + n.bary[2] == doctest::Approx(1.0).epsilon(1e-14));
      for (double b : n.bary) CHECK(b >= 0.0);
      wsum += n.weight;
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int a = 0; a <= 6; ++a)
      for (int b = 0; a + b <= 6; ++b)
        CHECK(rule_mean(rule, a, b) == doctest::Approx(monomial_mean(a, b)).epsilon(1e-12));
  }

  TEST_CASE("corner rules: weights normalized, smooth integrands still exact enough") {
    for (int corner = 0; corner < 3; ++corner) {
      TriangleRule rule = duffy_corner_rule(corner);
      double wsum = 0;
      for (const auto& n : rule.nodes) {
        CHECK(n.weight > 0.0);
        wsum += n.weight;
      }
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
      for (int a = 0; a <= 3; ++a)
        for (int b = 0; a + b <= 3; ++b)
          CHECK(rule_mean(rule, a, b) == doctest::Approx(monomial_mean(a, b)).epsilon(1e-12));
    }
  }

  TEST_CASE("corner rules resolve a 1/r corner singularity") {
    // mean of 1/|p| over the triangle with the singular corner at the right
    // angle: 2 * sqrt(2) * log(1 + sqrt(2))
    const double exact0 = 2.0 * std::sqrt(2.0) * std::log(1.0 + std::sqrt(2.0));
    CHECK(rule_corner_singular_mean(duffy_corner_rule(0), 0) ==
          doctest::Approx(exact0).epsilon(1e-9));

    // corners 1 and 2 are related by the x <-> y reflection
    double m1 = rule_corner_singular_mean(duffy_corner_rule(1), 1);
    double m2 = rule_corner_singular_mean(duffy_corner_rule(2), 2);
    CHECK(m1 == doctest::Approx(m2).epsilon(1e-12));

    // the interior rule is far less accurate on the same integrand
    double plain = rule_corner_singular_mean(triangle_rule_d6(), 0);
    CHECK(std::abs(plain - exact0) > 1e-3);
  }

  TEST_CASE("corner rule order parameters control the node count") {
    TriangleRule small = duffy_corner_rule(0, 4, 4);
    TriangleRule big = duffy_corner_rule(0, 12, 12);
    CHECK(small.nodes.size() == 16);
    CHECK(big.nodes.size() == 144);
  }
}
