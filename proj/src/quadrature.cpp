#include "mgt/quadrature.hpp"

#include <cmath>
#include <cstdio>

#include "mgt/common.hpp"

namespace mgt {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

GaussLegendre gauss_legendre(int n) {
  // Newton iteration on P_n over [-1,1], then map to [0,1].
  GaussLegendre out;
  out.nodes.resize(n);
  out.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    out.nodes[i] = 0.5 * (1.0 - x);  // reversed order is irrelevant
    out.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return out;
}

const TriangleRule& triangle_rule_d6() {
  static const TriangleRule rule = [] {
    TriangleRule r;
    auto add3 = [&](double a, double w) {
      double b = 1.0 - 2.0 * a;
      r.nodes.push_back({{b, a, a}, w});
      r.nodes.push_back({{a, b, a}, w});
      r.nodes.push_back({{a, a, b}, w});
    };
    auto add6 = [&](double a, double b, double w) {
      double c = 1.0 - a - b;
      r.nodes.push_back({{a, b, c}, w});
      r.nodes.push_back({{a, c, b}, w});
      r.nodes.push_back({{b, a, c}, w});
      r.nodes.push_back({{b, c, a}, w});
      r.nodes.push_back({{c, a, b}, w});
      r.nodes.push_back({{c, b, a}, w});
    };
    // Dunavant degree-6 rule; all weights positive. Exactness is asserted by
    // the unit tests against closed-form monomial integrals.
    add3(0.063089014491502, 0.050844906370207);
    add3(0.249286745170910, 0.116786275726379);
    add6(0.310352451033785, 0.053145049844816, 0.082851075618374);
    return r;
  }();
  return rule;
}

TriangleRule duffy_corner_rule(int corner, int n_radial, int n_angular) {
  GaussLegendre gr = gauss_legendre(n_radial);
  GaussLegendre ga = gauss_legendre(n_angular);
  TriangleRule r;
  r.nodes.reserve(static_cast<std::size_t>(n_radial) * n_angular);
  // Barycentric parametrisation with apex at `corner`:
  //   lambda_corner = 1 - rho, the other two split rho as (1-t, t).
  // The unit-mass measure is 2 rho drho dt; substituting rho = s^2 gives
  // weight 4 s^3 ds dt, which tames rho^(-1) integrands.
  for (int i = 0; i < n_radial; ++i) {
    double s = gr.nodes[i];
    double rho = s * s;
    for (int j = 0; j < n_angular; ++j) {
      double t = ga.nodes[j];
      std::array<double, 3> bary{};
      bary[corner] = 1.0 - rho;
      bary[(corner + 1) % 3] = rho * (1.0 - t);
      bary[(corner + 2) % 3] = rho * t;
      double w = 4.0 * s * s * s * gr.weights[i] * ga.weights[j];
      r.nodes.push_back({bary, w});
    }
  }
  return r;
}

}  // namespace mgt
