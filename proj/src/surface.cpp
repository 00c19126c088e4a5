#include "mgt/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace mgt {

namespace {

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

// Do closed segments [a,b] and [c,d] intersect?
bool segments_intersect(cplx a, cplx b, cplx c, cplx d) {
  double scale = std::max({std::abs(b - a), std::abs(d - c), 1e-300});
  double eps = 1e-12 * scale * scale;
  double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  if (((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
      ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)))
    return true;
  auto on_segment = [&](cplx p, cplx q, cplx r) {
    // r collinear-ish with [p,q]: does it lie within the box?
    if (std::abs(cross(q - p, r - p)) > eps) return false;
    double t = std::real((r - p) * std::conj(q - p)) / std::norm(q - p);
    return t >= -1e-12 && t <= 1.0 + 1e-12;
  };
  return on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b);
}

}  // namespace

int HyperellipticCurve::genus() const {
  validate();
  return static_cast<int>(branch_points.size()) / 2 - 1;
}

void HyperellipticCurve::validate() const {
  std::size_t n = branch_points.size();
  if (n < 4 || n % 2 != 0)
    throw model_error("hyperelliptic model needs an even number >= 4 of branch points, got " +
                      std::to_string(n));
  double scale = 0;
  for (cplx e : branch_points) scale = std::max(scale, std::abs(e));
  scale = std::max(scale, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(branch_points[i] - branch_points[j]) < 1e-12 * scale)
        throw model_error("branch points " + std::to_string(i) + " and " + std::to_string(j) +
                          " coincide");

  if (cuts.size() != n / 2) throw config_error("cut plan must pair every branch point exactly once");
  std::set<int> used;
  for (auto [a, b] : cuts) {
    if (a < 0 || b < 0 || a >= static_cast<int>(n) || b >= static_cast<int>(n) || a == b)
      throw config_error("cut references an invalid branch point index");
    if (!used.insert(a).second || !used.insert(b).second)
      throw config_error("cut plan reuses a branch point");
  }
  for (std::size_t i = 0; i < cuts.size(); ++i)
    for (std::size_t j = i + 1; j < cuts.size(); ++j) {
      if (segments_intersect(branch_points[cuts[i].first], branch_points[cuts[i].second],
                             branch_points[cuts[j].first], branch_points[cuts[j].second]))
        throw config_error("cut plan self-intersects: cuts " + std::to_string(i) + " and " +
                           std::to_string(j));
    }
  // A branch point lying on the interior of another cut also invalidates it.
  for (std::size_t c = 0; c < cuts.size(); ++c) {
    cplx a = branch_points[cuts[c].first], b = branch_points[cuts[c].second];
    for (std::size_t k = 0; k < n; ++k) {
      if (static_cast<int>(k) == cuts[c].first || static_cast<int>(k) == cuts[c].second) continue;
      cplx r = branch_points[k];
      if (std::abs(cross(b - a, r - a)) < 1e-12 * scale * scale) {
        double t = std::real((r - a) * std::conj(b - a)) / std::norm(b - a);
        if (t > 1e-12 && t < 1.0 - 1e-12)
          throw config_error("branch point " + std::to_string(k) + " lies on cut " +
                             std::to_string(c));
      }
    }
  }
}

int genus(const SurfaceModel& m) {
  if (std::holds_alternative<TorusSurface>(m)) {
    const auto& t = std::get<TorusSurface>(m);
    if (t.tau.imag() <= 0) throw model_error("torus modulus must have positive imaginary part");
    return 1;
  }
  return std::get<HyperellipticCurve>(m).genus();
}

HyperellipticCurve mobius_transform(const HyperellipticCurve& curve,
                                    const std::array<cplx, 4>& abcd) {
  auto [a, b, c, d] = abcd;
  double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  if (scale <= 0 || std::abs(a * d - b * c) < 1e-12 * scale * scale)
    throw config_error("mobius transform is degenerate (|ad-bc| ~ 0)");
  HyperellipticCurve out = curve;
  for (std::size_t i = 0; i < curve.branch_points.size(); ++i) {
    cplx e = curve.branch_points[i];
    cplx den = c * e + d;
    if (std::abs(den) < 1e-10 * scale * std::max(1.0, std::abs(e)))
      throw config_error("mobius transform sends branch point " + std::to_string(i) +
                         " to infinity");
    out.branch_points[i] = (a * e + b) / den;
  }
  out.validate();
  return out;
}

SurfaceModel parse_surface_spec(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw config_error("surface spec needs a \"type\" field");
  std::string type = j.at("type").get<std::string>();
  if (type == "torus") {
    TorusSurface t;
    if (!j.contains("tau") || !j.at("tau").is_array() || j.at("tau").size() != 2)
      throw config_error("torus spec needs \"tau\": [re, im]");
    t.tau = cplx(j.at("tau")[0].get<double>(), j.at("tau")[1].get<double>());
    if (t.tau.imag() <= 0) throw model_error("torus modulus must have positive imaginary part");
    return t;
  }
  if (type == "hyperelliptic") {
    HyperellipticCurve c;
    if (!j.contains("branch_points") || !j.at("branch_points").is_array())
      throw config_error("hyperelliptic spec needs \"branch_points\": [[re,im],...]");
    for (const auto& p : j.at("branch_points")) {
      if (!p.is_array() || p.size() != 2) throw config_error("branch point must be [re, im]");
      c.branch_points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    if (j.contains("cuts")) {
      for (const auto& q : j.at("cuts")) {
        if (!q.is_array() || q.size() != 2) throw config_error("cut must be [i, j]");
        c.cuts.emplace_back(q[0].get<int>(), q[1].get<int>());
      }
    } else {
      // Default plan: pair consecutive points. Often valid for point sets
      // listed in geometric order; validate() rejects it otherwise.
      for (std::size_t i = 0; i + 1 < c.branch_points.size(); i += 2)
        c.cuts.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    }
    c.validate();
    return c;
  }
  throw model_error("unsupported surface type \"" + type + "\"");
}

json surface_to_json(const SurfaceModel& m) {
  json j;
  if (std::holds_alternative<TorusSurface>(m)) {
    const auto& t = std::get<TorusSurface>(m);
    j["type"] = "torus";
    j["tau"] = {t.tau.real(), t.tau.imag()};
  } else {
    const auto& c = std::get<HyperellipticCurve>(m);
    j["type"] = "hyperelliptic";
    j["branch_points"] = json::array();
    for (cplx e : c.branch_points) j["branch_points"].push_back({e.real(), e.imag()});
    j["cuts"] = json::array();
    for (auto [a, b] : c.cuts) j["cuts"].push_back({a, b});
  }
  return j;
}

std::string surface_canonical_string(const SurfaceModel& m) {
  char buf[64];
  std::string s;
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    s += buf;
  };
  if (std::holds_alternative<TorusSurface>(m)) {
    const auto& t = std::get<TorusSurface>(m);
    s = "torus:";
    put(t.tau.real());
    put(t.tau.imag());
  } else {
    const auto& c = std::get<HyperellipticCurve>(m);
    s = "hyperelliptic:";
    for (cplx e : c.branch_points) {
      put(e.real());
      put(e.imag());
    }
    s += "cuts:";
    for (auto [a, b] : c.cuts) s += std::to_string(a) + "-" + std::to_string(b) + ",";
  }
  return s;
}

}  // namespace mgt
