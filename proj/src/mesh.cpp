#include "mgt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <unordered_map>

namespace mgt {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// deterministic jitter in [-0.5, 0.5)
double jit(std::uint64_t& s) {
  return static_cast<double>(splitmix64(s) >> 11) * (1.0 / 9007199254740992.0) - 0.5;
}

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

double dist_to_segment(cplx p, cplx a, cplx b) {
  cplx d = b - a;
  double n2 = std::norm(d);
  if (n2 == 0) return std::abs(p - a);
  double t = std::clamp(std::real((p - a) * std::conj(d)) / n2, 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

// ---------------------------------------------------------------------------
// MeshParams

json MeshParams::to_json() const {
  return json{{"base_resolution", base_resolution},
              {"branch_grading_depth", branch_grading_depth},
              {"refinement_level", refinement_level},
              {"duffy_order", duffy_order}};
}

MeshParams MeshParams::from_json(const json& j) {
  MeshParams p;
  p.base_resolution = j.value("base_resolution", p.base_resolution);
  p.branch_grading_depth = j.value("branch_grading_depth", p.branch_grading_depth);
  p.refinement_level = j.value("refinement_level", p.refinement_level);
  p.duffy_order = j.value("duffy_order", p.duffy_order);
  if (p.base_resolution < 6) throw config_error("base_resolution must be >= 6");
  if (p.branch_grading_depth < 1 || p.branch_grading_depth > 12)
    throw config_error("branch_grading_depth must be in [1, 12]");
  if (p.refinement_level < 0 || p.refinement_level > 8)
    throw config_error("refinement_level must be in [0, 8]");
  if (p.duffy_order < 4 || p.duffy_order > 32) throw config_error("duffy_order must be in [4, 32]");
  return p;
}

std::string MeshParams::canonical_string() const {
  return "res=" + std::to_string(base_resolution) + ";depth=" + std::to_string(branch_grading_depth) +
         ";level=" + std::to_string(refinement_level) + ";duffy=" + std::to_string(duffy_order);
}

// ---------------------------------------------------------------------------
// Planar Delaunay (Bowyer-Watson). Point counts here are the *base* mesh only
// (a few thousand at most), so the O(n) cavity scan per insertion is fine.

namespace detail {

PlanarTriangulation delaunay(const std::vector<cplx>& points) {
  struct Tri {
    int a, b, c;  // ccw
    bool alive;
  };
  std::size_t n = points.size();
  if (n < 3) throw validation_error("delaunay-input", "need at least 3 points");

  double scale = 0;
  cplx lo(1e300, 1e300), hi(-1e300, -1e300);
  for (cplx p : points) {
    lo = {std::min(lo.real(), p.real()), std::min(lo.imag(), p.imag())};
    hi = {std::max(hi.real(), p.real()), std::max(hi.imag(), p.imag())};
  }
  scale = std::max({hi.real() - lo.real(), hi.imag() - lo.imag(), 1e-300});
  cplx mid = 0.5 * (lo + hi);

  // Symmetric inputs (roots of unity, concentric shells) produce exactly
  // cocircular and collinear configurations that the floating-point incircle
  // test cannot order consistently. Break every tie with a deterministic
  // index-keyed jitter used only inside the predicates; emitted triangles
  // still reference the caller's exact coordinates.
  auto jitter = [&](std::size_t k) {
    std::uint64_t h = k * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    double jx = (static_cast<double>(h & 0xffffffffull) / 4294967295.0 - 0.5);
    double jy = (static_cast<double>(h >> 32) / 4294967295.0 - 0.5);
    return cplx(jx, jy) * (2e-9 * scale);
  };
  std::vector<cplx> pts = points;
  for (std::size_t k = 0; k < pts.size(); ++k) pts[k] += jitter(k);
  pts.push_back(mid + cplx(-40.0, -20.0) * scale);
  pts.push_back(mid + cplx(40.0, -20.0) * scale);
  pts.push_back(mid + cplx(0.0, 40.0) * scale);
  int s0 = static_cast<int>(n), s1 = s0 + 1, s2 = s0 + 2;

  // Strict incircle determinant for ccw triangles; the jitter keeps every
  // determinant far from the floating-point noise floor, so no epsilon.
  auto in_circle = [&](const Tri& t, cplx p) {
    const double ax = pts[t.a].real() - p.real(), ay = pts[t.a].imag() - p.imag();
    const double bx = pts[t.b].real() - p.real(), by = pts[t.b].imag() - p.imag();
    const double cx = pts[t.c].real() - p.real(), cy = pts[t.c].imag() - p.imag();
    const double det = (ax * ax + ay * ay) * (bx * cy - by * cx) -
                       (bx * bx + by * by) * (ax * cy - ay * cx) +
                       (cx * cx + cy * cy) * (ax * by - ay * bx);
    return det > 0;
  };

  std::vector<Tri> tris;
  {
    Tri t{s0, s1, s2, true};
    if (cross(pts[s1] - pts[s0], pts[s2] - pts[s0]) < 0) std::swap(t.b, t.c);
    tris.push_back(t);
  }

  for (int ip = 0; ip < static_cast<int>(n); ++ip) {
    cplx p = pts[ip];
    std::vector<int> bad;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!tris[t].alive) continue;
      if (in_circle(tris[t], p)) bad.push_back(static_cast<int>(t));
    }
    if (bad.empty()) throw validation_error("delaunay-cavity", "insertion point outside all circumcircles");

    std::map<std::pair<int, int>, int> boundary;  // directed edge -> count
    for (int t : bad) {
      tris[t].alive = false;
      int v[3] = {tris[t].a, tris[t].b, tris[t].c};
      for (int k = 0; k < 3; ++k) {
        std::pair<int, int> e{v[k], v[(k + 1) % 3]};
        std::pair<int, int> rev{e.second, e.first};
        auto it = boundary.find(rev);
        if (it != boundary.end())
          boundary.erase(it);
        else
          boundary[e] = 1;
      }
    }
    for (auto& [e, cnt] : boundary) {
      (void)cnt;
      Tri t{e.first, e.second, ip, true};
      if (cross(pts[t.b] - pts[t.a], pts[t.c] - pts[t.a]) <= 0)
        throw validation_error("delaunay-cavity", "non-star-shaped cavity (degenerate input?)");
      tris.push_back(t);
    }
  }

  PlanarTriangulation out;
  for (const Tri& t : tris) {
    if (!t.alive) continue;
    if (t.a >= s0 || t.b >= s0 || t.c >= s0) continue;
    out.triangles.push_back({t.a, t.b, t.c});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Base sphere construction

namespace {

struct PointSet {
  std::vector<cplx> pts;
  std::vector<double> prot;

  bool try_add(cplx p, double r, bool mandatory) {
    if (!mandatory) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        double d = std::max(r, prot[i]);
        if (std::norm(p - pts[i]) < d * d) return false;
      }
    }
    pts.push_back(p);
    prot.push_back(r);
    return true;
  }
};

// Interior subdivision distances for a cut of length L, graded toward both
// endpoints with innermost scale la*2^-(depth-1) (resp. lb).
std::vector<double> chain_distances(double L, double la, double lb, double h_mid, int depth) {
  la = std::min(la, 0.35 * L);
  lb = std::min(lb, 0.35 * L);
  std::vector<double> ds;
  for (int j = depth - 1; j >= 0; --j) ds.push_back(la * std::pow(0.5, j));
  for (int j = depth - 1; j >= 0; --j) ds.push_back(L - lb * std::pow(0.5, j));
  double m0 = la, m1 = L - lb;
  if (m1 - m0 > 0.75 * h_mid) {
    int k = std::max(1, static_cast<int>(std::round((m1 - m0) / h_mid)));
    for (int i = 1; i < k; ++i) ds.push_back(m0 + (m1 - m0) * i / k);
  }
  std::sort(ds.begin(), ds.end());
  std::vector<double> keep;
  for (double d : ds) {
    if (d <= 0 || d >= L) continue;
    double local = std::max(0.29 * std::min(d, L - d), 1e-12 * L);
    if (!keep.empty() && d - keep.back() < local) continue;
    keep.push_back(d);
  }
  if (keep.empty()) keep.push_back(0.5 * L);
  return keep;
}

}  // namespace

BaseMesh build_base_sphere(const HyperellipticCurve& curve, const MeshParams& params) {
  curve.validate();
  const auto& e = curve.branch_points;
  int nb = static_cast<int>(e.size());

  double emax = 1.0;
  for (cplx p : e) emax = std::max(emax, std::abs(p));
  const double R = 2.5 * emax;
  const double h0 = 2.0 * R / params.base_resolution;
  const int depth = params.branch_grading_depth;
  std::uint64_t rng = 0x5eedc0ffee123456ull;

  // local grading scale per branch point
  std::vector<double> leff(nb);
  for (int i = 0; i < nb; ++i) {
    double dmin = 1e300;
    for (int j = 0; j < nb; ++j)
      if (j != i) dmin = std::min(dmin, std::abs(e[i] - e[j]));
    leff[i] = std::min(0.45 * dmin, 1.2 * h0);
  }

  PointSet ps;
  BaseMesh base;

  // 1. branch points
  for (int i = 0; i < nb; ++i) ps.try_add(e[i], 0.4 * leff[i] * std::pow(0.5, depth - 1), true);
  // chain bookkeeping for proximity filtering: per chain point, local gap
  std::vector<cplx> chain_pts;
  std::vector<double> chain_gap;
  std::vector<std::vector<int>> chain_ids(curve.cuts.size());

  // 2. cut chains
  for (std::size_t c = 0; c < curve.cuts.size(); ++c) {
    auto [ia, ib] = curve.cuts[c];
    cplx A = e[ia], B = e[ib];
    double L = std::abs(B - A);
    cplx dir = (B - A) / L;
    auto ds = chain_distances(L, leff[ia], leff[ib], h0, depth);
    chain_ids[c].push_back(ia);
    for (std::size_t k = 0; k < ds.size(); ++k) {
      double gl = k == 0 ? ds[k] : ds[k] - ds[k - 1];
      double gr = k + 1 == ds.size() ? L - ds[k] : ds[k + 1] - ds[k];
      double gap = std::min(gl, gr);
      double t = ds[k] + 0.06 * gap * jit(rng);  // tangential jitter, stays on the segment
      cplx p = A + t * dir;
      int id = static_cast<int>(ps.pts.size());
      ps.try_add(p, 0.33 * gap, true);
      chain_ids[c].push_back(id);
      chain_pts.push_back(p);
      chain_gap.push_back(gap);
    }
    chain_ids[c].push_back(ib);
  }

  auto near_cut = [&](cplx p) {
    for (std::size_t c = 0; c < curve.cuts.size(); ++c) {
      cplx A = e[curve.cuts[c].first], B = e[curve.cuts[c].second];
      double d = dist_to_segment(p, A, B);
      double local = h0;
      // local chain spacing: nearest chain point's gap (or endpoint scale)
      double best = 1e300;
      for (std::size_t k = 0; k < chain_pts.size(); ++k) {
        double dd = std::abs(p - chain_pts[k]);
        if (dd < best) {
          best = dd;
          local = chain_gap[k];
        }
      }
      if (d < 0.5 * local) return true;
    }
    return false;
  };

  // 3. boundary circle
  int n_bnd = std::max(20, static_cast<int>(std::ceil(2.0 * kPi * R / h0)));
  std::vector<int> boundary_ids;
  for (int k = 0; k < n_bnd; ++k) {
    double th = 2.0 * kPi * (k + 0.15 * jit(rng)) / n_bnd;
    boundary_ids.push_back(static_cast<int>(ps.pts.size()));
    ps.try_add(R * std::exp(cplx(0, th)), 0.4 * 2.0 * kPi * R / n_bnd, true);
  }

  // 4. grading shells around each branch point
  const int n_ring = 12;
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j < depth; ++j) {
      double r = leff[i] * std::pow(0.5, j);
      double spacing = 2.0 * kPi * r / n_ring;
      for (int k = 0; k < n_ring; ++k) {
        double th = 2.0 * kPi * (k + 0.5 * (j % 2) + 0.22 * jit(rng)) / n_ring;
        cplx p = e[i] + r * std::exp(cplx(0, th));
        if (std::abs(p) > R - 0.6 * h0 || near_cut(p)) continue;
        ps.try_add(p, 0.38 * spacing, false);
      }
    }
  }

  // 5. transition shells around short cuts (colliding branch pairs)
  for (std::size_t c = 0; c < curve.cuts.size(); ++c) {
    auto [ia, ib] = curve.cuts[c];
    double L = std::abs(e[ib] - e[ia]);
    if (L >= 1.6 * h0) continue;
    cplx mid2 = 0.5 * (e[ia] + e[ib]);
    for (double r = 0.8 * L * 2.0; r <= 1.4 * h0; r *= 2.0) {
      double spacing = 2.0 * kPi * r / n_ring;
      for (int k = 0; k < n_ring; ++k) {
        double th = 2.0 * kPi * (k + 0.22 * jit(rng)) / n_ring;
        cplx p = mid2 + r * std::exp(cplx(0, th));
        if (std::abs(p) > R - 0.6 * h0 || near_cut(p)) continue;
        ps.try_add(p, 0.38 * spacing, false);
      }
    }
  }

  // 6. hexagonal backdrop
  {
    double dy = h0 * std::sqrt(3.0) / 2.0;
    int rows = static_cast<int>(std::ceil(R / dy));
    for (int ry = -rows; ry <= rows; ++ry) {
      double y = ry * dy;
      int cols = static_cast<int>(std::ceil(R / h0)) + 1;
      for (int cx = -cols; cx <= cols; ++cx) {
        double x = (cx + 0.5 * (ry & 1)) * h0;
        cplx p{x + 0.08 * h0 * jit(rng), y + 0.08 * h0 * jit(rng)};
        if (std::abs(p) > R - 0.6 * h0 || near_cut(p)) continue;
        ps.try_add(p, 0.42 * h0, false);
      }
    }
  }

  // Triangulate; insert midpoints of missing cut sub-edges until every chain
  // edge is recovered.
  PlanarTriangulation tri;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 8)
      throw validation_error("cut-recovery", "cut edges not recovered after 8 refinement passes");
    tri = delaunay(ps.pts);
    std::set<std::uint64_t> edges;
    for (auto& t : tri.triangles)
      for (int k = 0; k < 3; ++k) edges.insert(edge_key(t[k], t[(k + 1) % 3]));
    bool ok = true;
    for (std::size_t c = 0; c < chain_ids.size(); ++c) {
      for (std::size_t k = 0; k + 1 < chain_ids[c].size(); ++k) {
        int a = chain_ids[c][k], b = chain_ids[c][k + 1];
        if (edges.count(edge_key(a, b))) continue;
        ok = false;
        int id = static_cast<int>(ps.pts.size());
        ps.try_add(0.5 * (ps.pts[a] + ps.pts[b]), 0.3 * std::abs(ps.pts[a] - ps.pts[b]), true);
        chain_ids[c].insert(chain_ids[c].begin() + static_cast<long>(k) + 1, id);
        ++k;
      }
    }
    if (ok) break;
  }

  // Assemble affine part.
  base.vertices.resize(ps.pts.size());
  for (std::size_t i = 0; i < ps.pts.size(); ++i) base.vertices[i].pos = ps.pts[i];
  for (int i = 0; i < nb; ++i) {
    base.vertices[i].branch = true;
    base.branch_vertex.push_back(i);
  }
  for (auto& t : tri.triangles) {
    base.tris.push_back(t);
    base.chart.push_back(Chart::affine);
  }
  for (auto& ids : chain_ids)
    for (std::size_t k = 0; k + 1 < ids.size(); ++k)
      base.cut_edges.emplace_back(std::min(ids[k], ids[k + 1]), std::max(ids[k], ids[k + 1]));

  // 7. infinity cap in the u = 1/x chart, sharing the boundary ring.
  {
    std::vector<cplx> cap_pts;
    std::vector<int> cap_to_base;
    // order boundary ids by angle so ring adjacency is contiguous
    std::sort(boundary_ids.begin(), boundary_ids.end(), [&](int a, int b) {
      return std::arg(ps.pts[a]) < std::arg(ps.pts[b]);
    });
    for (int id : boundary_ids) {
      cap_pts.push_back(1.0 / ps.pts[id]);
      cap_to_base.push_back(id);
    }
    for (int cshell = 1; cshell <= 2; ++cshell) {
      double r = (1.0 / R) * std::pow(0.5, cshell);
      int cnt = std::max(6, n_bnd >> cshell);
      for (int k = 0; k < cnt; ++k) {
        double th = 2.0 * kPi * (k + 0.3 * jit(rng)) / cnt;
        cap_pts.push_back(r * std::exp(cplx(0, th)));
        int id = static_cast<int>(base.vertices.size());
        BaseMesh::Vertex v;
        v.pos = 1.0 / cap_pts.back();  // canonical x coordinate
        base.vertices.push_back(v);
        cap_to_base.push_back(id);
      }
    }
    {
      cap_pts.push_back(cplx(0, 0));
      int id = static_cast<int>(base.vertices.size());
      BaseMesh::Vertex v;
      v.pos = 0;
      v.at_infinity = true;
      base.vertices.push_back(v);
      cap_to_base.push_back(id);
    }
    PlanarTriangulation cap = delaunay(cap_pts);
    for (auto& t : cap.triangles) {
      base.tris.push_back({cap_to_base[t[0]], cap_to_base[t[1]], cap_to_base[t[2]]});
      base.chart.push_back(Chart::infinity_cap);
    }
  }
  return base;
}

BaseMesh refine_base(const BaseMesh& base, bool deepen_cones) {
  // One red/green subdivision pass: `red` triangles split 4:1, neighbours with
  // hanging nodes are closed up. Global refinement marks everything red.
  auto subdivide = [](const BaseMesh& in, const std::vector<bool>& red_init) {
    BaseMesh out;
    out.vertices = in.vertices;
    out.branch_vertex = in.branch_vertex;

    std::vector<int> state(in.tris.size(), 0);
    for (std::size_t t = 0; t < in.tris.size(); ++t)
      if (red_init[t]) state[t] = 2;

    std::unordered_map<std::uint64_t, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = edge_key(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      const auto& va = out.vertices[a];
      const auto& vb = out.vertices[b];
      BaseMesh::Vertex m;
      if (va.at_infinity || vb.at_infinity) {
        // split in the u chart: u_mid = (u_a + u_b) / 2 with u(at-inf) = 0
        cplx ua = va.at_infinity ? cplx(0) : 1.0 / va.pos;
        cplx ub = vb.at_infinity ? cplx(0) : 1.0 / vb.pos;
        m.pos = 1.0 / (0.5 * (ua + ub));
      } else {
        m.pos = 0.5 * (va.pos + vb.pos);
      }
      int id = static_cast<int>(out.vertices.size());
      out.vertices.push_back(m);
      mid.emplace(key, id);
      return id;
    };

    // closure: a triangle with >= 2 split edges becomes red itself
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t t = 0; t < in.tris.size(); ++t) {
        if (state[t] == 2) {
          for (int k = 0; k < 3; ++k) {
            auto key = edge_key(in.tris[t][k], in.tris[t][(k + 1) % 3]);
            if (!mid.count(key)) {
              midpoint(in.tris[t][k], in.tris[t][(k + 1) % 3]);
              changed = true;
            }
          }
          continue;
        }
        int cnt = 0;
        for (int k = 0; k < 3; ++k)
          if (mid.count(edge_key(in.tris[t][k], in.tris[t][(k + 1) % 3]))) ++cnt;
        if (cnt >= 2) {
          state[t] = 2;
          changed = true;
        }
      }
    }

    for (std::size_t t = 0; t < in.tris.size(); ++t) {
      auto [a, b, c] = in.tris[t];
      Chart ch = in.chart[t];
      auto emit = [&](int x, int y, int z) {
        out.tris.push_back({x, y, z});
        out.chart.push_back(ch);
      };
      if (state[t] == 2) {
        int mab = midpoint(a, b), mbc = midpoint(b, c), mca = midpoint(c, a);
        emit(a, mab, mca);
        emit(mab, b, mbc);
        emit(mca, mbc, c);
        emit(mab, mbc, mca);
      } else {
        int split = -1, m = -1;
        int vv[3] = {a, b, c};
        for (int k = 0; k < 3; ++k) {
          auto it = mid.find(edge_key(vv[k], vv[(k + 1) % 3]));
          if (it != mid.end()) {
            split = k;
            m = it->second;
          }
        }
        if (split < 0) {
          emit(a, b, c);
        } else {
          int p = vv[split], q = vv[(split + 1) % 3], r = vv[(split + 2) % 3];
          emit(p, m, r);
          emit(m, q, r);
        }
      }
    }

    // propagate cut edges through splits
    for (auto [a, b] : in.cut_edges) {
      auto it = mid.find(edge_key(a, b));
      if (it == mid.end()) {
        out.cut_edges.emplace_back(std::min(a, b), std::max(a, b));
      } else {
        out.cut_edges.emplace_back(std::min(a, it->second), std::max(a, it->second));
        out.cut_edges.emplace_back(std::min(it->second, b), std::max(it->second, b));
      }
    }
    return out;
  };

  BaseMesh out = subdivide(base, std::vector<bool>(base.tris.size(), true));
  if (deepen_cones) {
    std::vector<bool> red(out.tris.size(), false);
    for (std::size_t t = 0; t < out.tris.size(); ++t)
      for (int k = 0; k < 3; ++k)
        if (out.vertices[out.tris[t][k]].branch) red[t] = true;
    out = subdivide(out, red);
  }
  return out;
}

}  // namespace detail

cplx BaseMesh::corner_coord(int tri, int corner) const {
  const Vertex& v = vertices[tris[tri][corner]];
  if (chart[tri] == Chart::affine) {
    if (v.at_infinity) throw validation_error("chart", "affine triangle touches infinity");
    return v.pos;
  }
  return v.at_infinity ? cplx(0) : 1.0 / v.pos;
}

// ---------------------------------------------------------------------------
// Double cover lift

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) p[std::max(a, b)] = std::min(a, b);
  }
};

void assign_quadrature(BranchedMesh& m) {
  m.rule_id.assign(m.triangles.size(), 0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    int cone_corner = -1;
    int cones = 0;
    for (int k = 0; k < 3; ++k)
      if (m.vertices[m.triangles[t].v[k]].cone) {
        cone_corner = k;
        ++cones;
      }
    if (cones > 1)
      throw validation_error("cone-adjacency", "triangle touches two cone vertices");
    if (cones == 1) m.rule_id[t] = static_cast<std::uint8_t>(1 + cone_corner);
  }
  m.node_offset.assign(m.triangles.size() + 1, 0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    m.node_offset[t + 1] = m.node_offset[t] + m.rule(static_cast<int>(t)).nodes.size();
}

void validate_mesh(BranchedMesh& m, int expected_cones) {
  MeshValidation& v = m.validation;
  v.vertex_count = static_cast<int>(m.vertices.size());
  v.triangle_count = static_cast<int>(m.triangles.size());

  // manifold + orientation: each directed edge appears exactly once
  std::unordered_map<std::uint64_t, int> undirected;
  std::set<std::pair<int, int>> directed;
  for (auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = t.v[k], b = t.v[(k + 1) % 3];
      if (!directed.insert({a, b}).second)
        throw validation_error("orientation", "directed edge repeated; inconsistent orientation");
      undirected[edge_key(a, b)]++;
    }
  }
  for (auto& [k, cnt] : undirected) {
    (void)k;
    if (cnt != 2) throw validation_error("manifold", "edge not shared by exactly two triangles");
  }
  v.manifold = true;
  v.oriented = true;
  v.edge_count = static_cast<int>(undirected.size());
  v.euler_characteristic = v.vertex_count - v.edge_count + v.triangle_count;
  if (v.euler_characteristic != 2 - 2 * m.genus)
    throw validation_error("euler", "chi = " + std::to_string(v.euler_characteristic) +
                                        ", expected " + std::to_string(2 - 2 * m.genus));

  // no edge joins two cone vertices (keeps the corner quadrature valid)
  for (auto& t : m.triangles)
    for (int k = 0; k < 3; ++k)
      if (m.vertices[t.v[k]].cone && m.vertices[t.v[(k + 1) % 3]].cone)
        throw validation_error("cone-adjacency", "two cone vertices joined by an edge");

  // angle sums
  std::vector<double> angle_sum(m.vertices.size(), 0.0);
  std::vector<int> chart_mask(m.vertices.size(), 0);
  double min_angle = 1e300, max_edge = 0;
  for (auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      cplx a = t.corner[k], b = t.corner[(k + 1) % 3], c = t.corner[(k + 2) % 3];
      double ang = std::abs(std::arg((b - a) / (c - a)));
      angle_sum[t.v[k]] += ang;
      chart_mask[t.v[k]] |= t.chart == Chart::affine ? 1 : 2;
      min_angle = std::min(min_angle, ang);
      max_edge = std::max(max_edge, std::abs(b - a));
    }
    double ar = cross(t.corner[1] - t.corner[0], t.corner[2] - t.corner[0]);
    if (ar <= 0) throw validation_error("orientation", "triangle with non-positive chart area");
  }
  v.min_triangle_angle = min_angle;
  v.max_edge_length = max_edge;

  int cones = 0;
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    double target = m.vertices[i].cone ? 4.0 * kPi : 2.0 * kPi;
    double err = std::abs(angle_sum[i] - target);
    if (m.vertices[i].cone) {
      ++cones;
      v.max_cone_angle_error = std::max(v.max_cone_angle_error, err);
    } else if (chart_mask[i] == 3) {
      v.max_transition_angle_error = std::max(v.max_transition_angle_error, err);
    } else {
      v.max_interior_angle_error = std::max(v.max_interior_angle_error, err);
    }
  }
  v.cone_count = cones;
  if (cones != expected_cones)
    throw validation_error("cone-count", "found " + std::to_string(cones) + " cone vertices, expected " +
                                             std::to_string(expected_cones));
  if (v.max_cone_angle_error > 1e-6)
    throw validation_error("cone-angle", "cone angle deviates from 4*pi by " +
                                             std::to_string(v.max_cone_angle_error));
  if (v.max_interior_angle_error > 1e-6)
    throw validation_error("vertex-angle", "interior angle sum deviates from 2*pi by " +
                                               std::to_string(v.max_interior_angle_error));
  if (v.max_transition_angle_error > 0.5)
    throw validation_error("chart-transition", "angle sum at chart transition off by " +
                                                   std::to_string(v.max_transition_angle_error));
  if (v.min_triangle_angle < 1e-4)
    throw validation_error("triangle-quality", "minimum angle " + std::to_string(min_angle));
}

BranchedMesh lift_double_cover(const SurfaceModel& model, const MeshParams& params,
                               const BaseMesh& base) {
  const auto& curve = std::get<HyperellipticCurve>(model);
  BranchedMesh m;
  m.model = model;
  m.params = params;
  m.genus = curve.genus();
  m.base = base;

  int T = static_cast<int>(base.tris.size());
  std::set<std::uint64_t> cut_set;
  for (auto [a, b] : base.cut_edges) cut_set.insert(edge_key(a, b));

  // corner copy id: ((t * 3 + k) * 2 + s)
  auto copy_id = [](int t, int k, int s) { return (t * 3 + k) * 2 + s; };
  UnionFind uf(6 * T);

  // base edge map: edge -> (tri, corner index of edge start)
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> emap;
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < 3; ++k) emap[edge_key(base.tris[t][k], base.tris[t][(k + 1) % 3])].push_back({t, k});

  for (auto& [key, users] : emap) {
    if (users.size() != 2)
      throw validation_error("manifold", "base edge not shared by exactly two triangles");
    int flip = cut_set.count(key) ? 1 : 0;
    auto [t1, k1] = users[0];
    auto [t2, k2] = users[1];
    // endpoints of the edge as corners of each triangle
    int va = base.tris[t1][k1], vb = base.tris[t1][(k1 + 1) % 3];
    auto corner_of = [&](int t, int v) {
      for (int k = 0; k < 3; ++k)
        if (base.tris[t][k] == v) return k;
      throw validation_error("adjacency", "vertex not found in adjacent triangle");
    };
    for (int s = 0; s < 2; ++s) {
      uf.unite(copy_id(t1, corner_of(t1, va), s), copy_id(t2, corner_of(t2, va), s ^ flip));
      uf.unite(copy_id(t1, corner_of(t1, vb), s), copy_id(t2, corner_of(t2, vb), s ^ flip));
    }
  }

  // classes -> lifted vertices (deterministic: ordered by representative id)
  std::unordered_map<int, int> class_to_vertex;
  std::vector<int> rep_of_vertex;
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < 3; ++k)
      for (int s = 0; s < 2; ++s) {
        int r = uf.find(copy_id(t, k, s));
        if (!class_to_vertex.count(r)) {
          class_to_vertex[r] = static_cast<int>(rep_of_vertex.size());
          rep_of_vertex.push_back(r);

          BranchedMesh::Vertex lv;
          int bv = base.tris[t][k];
          lv.pos = base.vertices[bv].pos;
          lv.at_infinity = base.vertices[bv].at_infinity;
          lv.base_vertex = bv;
          m.vertices.push_back(lv);
        }
      }

  // cone flag: a base vertex whose two sheet copies merged into a single
  // class is a cone point (local sheet labels are not comparable across cuts,
  // so count distinct lifted vertices per base vertex instead)
  {
    std::vector<std::set<int>> lifts_of_base(base.vertices.size());
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 2; ++s) {
          int lv = class_to_vertex[uf.find(copy_id(t, k, s))];
          lifts_of_base[static_cast<std::size_t>(base.tris[t][k])].insert(lv);
        }
    for (std::size_t bv = 0; bv < lifts_of_base.size(); ++bv) {
      const auto& ls = lifts_of_base[bv];
      if (ls.size() == 1) {
        m.vertices[*ls.begin()].cone = true;
        if (!base.vertices[bv].branch)
          throw validation_error("cover", "non-branch vertex became a cone point");
      } else if (ls.size() != 2) {
        throw validation_error("cover", "base vertex lifted to an unexpected number of copies");
      }
    }
  }
  int nb = static_cast<int>(curve.branch_points.size());
  if (static_cast<int>(m.vertices.size()) != 2 * static_cast<int>(base.vertices.size()) - nb)
    throw validation_error("cover", "lifted vertex count mismatch");

  // lifted triangles: (t, s) -> index 2t + s
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < 2; ++s) {
      BranchedMesh::Triangle lt;
      lt.base_tri = t;
      lt.sheet = s;
      lt.chart = base.chart[t];
      for (int k = 0; k < 3; ++k) {
        lt.v[k] = class_to_vertex[uf.find(copy_id(t, k, s))];
        lt.corner[k] = base.corner_coord(t, k);
      }
      m.triangles.push_back(lt);
    }

  // neighbours: across base edge (t,k)-(t',k'), sheet flips on cut edges
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < 3; ++k) {
      auto key = edge_key(base.tris[t][k], base.tris[t][(k + 1) % 3]);
      auto& users = emap[key];
      int t2 = users[0].first == t && users[0].second == k ? users[1].first : users[0].first;
      int flip = cut_set.count(key) ? 1 : 0;
      for (int s = 0; s < 2; ++s) m.triangles[2 * t + s].neighbor[(k + 2) % 3] = 2 * t2 + (s ^ flip);
    }

  assign_quadrature(m);
  validate_mesh(m, nb);
  return m;
}

BranchedMesh build_torus(const SurfaceModel& model, const MeshParams& params) {
  const auto& torus = std::get<TorusSurface>(model);
  if (torus.tau.imag() <= 0) throw model_error("torus modulus must have positive imaginary part");
  BranchedMesh m;
  m.model = model;
  m.params = params;
  m.genus = 1;
  m.is_torus = true;
  int n = params.base_resolution * (1 << params.refinement_level);
  if (n < 8) throw config_error("torus grid must be at least 8x8 (raise base_resolution)");
  m.torus_n = n;
  cplx tau = torus.tau;

  auto vid = [&](int i, int j) { return ((i % n + n) % n) * n + ((j % n + n) % n); };
  auto vpos = [&](int i, int j) {
    return (static_cast<double>(i) + tau * static_cast<double>(j)) / static_cast<double>(n);
  };

  m.vertices.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.vertices[vid(i, j)].pos = vpos(i, j);
      m.vertices[vid(i, j)].base_vertex = vid(i, j);
    }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      BranchedMesh::Triangle t1;
      t1.v = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)};
      t1.corner = {{vpos(i, j), vpos(i + 1, j), vpos(i + 1, j + 1)}};
      BranchedMesh::Triangle t2;
      t2.v = {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)};
      t2.corner = {{vpos(i, j), vpos(i + 1, j + 1), vpos(i, j + 1)}};
      t1.base_tri = static_cast<int>(m.triangles.size());
      m.triangles.push_back(t1);
      t2.base_tri = static_cast<int>(m.triangles.size());
      m.triangles.push_back(t2);
    }

  // neighbour table via shared vertex pairs
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> emap;
  for (std::size_t t = 0; t < m.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k)
      emap[edge_key(m.triangles[t].v[k], m.triangles[t].v[(k + 1) % 3])].push_back(
          {static_cast<int>(t), k});
  for (auto& [key, users] : emap) {
    (void)key;
    if (users.size() != 2) throw validation_error("manifold", "torus edge not shared by two triangles");
    auto [t1, k1] = users[0];
    auto [t2, k2] = users[1];
    m.triangles[t1].neighbor[(k1 + 2) % 3] = t2;
    m.triangles[t2].neighbor[(k2 + 2) % 3] = t1;
  }

  assign_quadrature(m);
  validate_mesh(m, 0);
  return m;
}

}  // namespace

BranchedMesh build_surface(const SurfaceModel& model, const MeshParams& params) {
  if (std::holds_alternative<TorusSurface>(model)) return build_torus(model, params);
  const auto& curve = std::get<HyperellipticCurve>(model);
  BaseMesh base = detail::build_base_sphere(curve, params);
  for (int l = 0; l < params.refinement_level; ++l) base = detail::refine_base(base, true);
  return lift_double_cover(model, params, base);
}

BranchedMesh refine(const BranchedMesh& mesh) {
  MeshParams p = mesh.params;
  p.refinement_level += 1;
  if (mesh.is_torus) return build_torus(mesh.model, p);
  BaseMesh base = detail::refine_base(mesh.base, true);
  return lift_double_cover(mesh.model, p, base);
}

// ---------------------------------------------------------------------------
// quadrature access & geometry

const TriangleRule& BranchedMesh::rule(int tri) const {
  if (rule_id[tri] == 0) return triangle_rule_d6();
  static std::map<std::pair<int, int>, TriangleRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(static_cast<int>(rule_id[tri]) - 1, params.duffy_order);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, duffy_corner_rule(key.first, key.second, key.second)).first;
  return it->second;
}

double BranchedMesh::chart_area(int tri) const {
  const auto& c = triangles[tri].corner;
  return 0.5 * cross(c[1] - c[0], c[2] - c[0]);
}

cplx BranchedMesh::node_position(int tri, std::size_t local) const {
  const auto& node = rule(tri).nodes[local];
  const auto& c = triangles[tri].corner;
  return node.bary[0] * c[0] + node.bary[1] * c[1] + node.bary[2] * c[2];
}

// ---------------------------------------------------------------------------
// serialization (enough to rebuild deterministically)

json MeshValidation::to_json() const {
  return json{{"vertices", vertex_count},
              {"edges", edge_count},
              {"triangles", triangle_count},
              {"euler_characteristic", euler_characteristic},
              {"cone_count", cone_count},
              {"max_cone_angle_error", max_cone_angle_error},
              {"max_interior_angle_error", max_interior_angle_error},
              {"max_transition_angle_error", max_transition_angle_error},
              {"min_triangle_angle", min_triangle_angle},
              {"max_edge_length", max_edge_length},
              {"oriented", oriented},
              {"manifold", manifold}};
}

json BranchedMesh::to_json() const {
  json j;
  j["schema"] = 1;
  j["surface"] = surface_to_json(model);
  j["params"] = params.to_json();
  if (is_torus) {
    j["torus_n"] = torus_n;
    return j;
  }
  json bj;
  bj["vertices"] = json::array();
  for (const auto& v : base.vertices)
    bj["vertices"].push_back({v.pos.real(), v.pos.imag(), v.at_infinity ? 1 : 0, v.branch ? 1 : 0});
  bj["tris"] = json::array();
  for (std::size_t t = 0; t < base.tris.size(); ++t)
    bj["tris"].push_back({base.tris[t][0], base.tris[t][1], base.tris[t][2],
                          base.chart[t] == Chart::affine ? 0 : 1});
  bj["cut_edges"] = json::array();
  for (auto [a, b] : base.cut_edges) bj["cut_edges"].push_back({a, b});
  bj["branch_vertex"] = base.branch_vertex;
  j["base"] = std::move(bj);
  return j;
}

BranchedMesh BranchedMesh::from_json(const json& j) {
  if (j.value("schema", 0) != 1) throw config_error("unknown mesh cache schema");
  SurfaceModel model = parse_surface_spec(j.at("surface"));
  MeshParams params = MeshParams::from_json(j.at("params"));
  if (std::holds_alternative<TorusSurface>(model)) return build_surface(model, params);
  BaseMesh base;
  for (const auto& v : j.at("base").at("vertices")) {
    BaseMesh::Vertex bv;
    bv.pos = cplx(v[0].get<double>(), v[1].get<double>());
    bv.at_infinity = v[2].get<int>() != 0;
    bv.branch = v[3].get<int>() != 0;
    base.vertices.push_back(bv);
  }
  for (const auto& t : j.at("base").at("tris")) {
    base.tris.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
    base.chart.push_back(t[3].get<int>() == 0 ? Chart::affine : Chart::infinity_cap);
  }
  for (const auto& e : j.at("base").at("cut_edges"))
    base.cut_edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  base.branch_vertex = j.at("base").at("branch_vertex").get<std::vector<int>>();
  return lift_double_cover(model, params, base);
}

}  // namespace mgt
