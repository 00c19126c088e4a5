// Acceptance gate: ten end-to-end checks, selectable by number on the command
// line (no argument = run all). Each prints one [PASS]/[FAIL] line with its
// measured quantities and wall time; the exit code is the failure count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <mgt/algebra.hpp>
#include <mgt/app.hpp>
#include <mgt/atensor.hpp>
#include <mgt/diagram.hpp>
#include <mgt/johnson.hpp>
#include <mgt/state.hpp>

using namespace mgt;

namespace {

HyperellipticCurve roots_of_unity(int n) {
  HyperellipticCurve c;
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * kPi * k / n;
    c.branch_points.push_back({std::cos(t), std::sin(t)});
  }
  for (int k = 0; k < n; k += 2) c.cuts.push_back({k, k + 1});
  return c;
}

struct Gate {
  bool pass = false;
  std::string detail;
};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
// The tensor of a genus-1 curve vanishes identically on a fine mesh.
Gate gate01() {
  auto t0 = std::chrono::steady_clock::now();
  MeshParams p;
  p.refinement_level = 3;
  SurfaceState s = build_state(roots_of_unity(4), p);
  ATensor A = compute_A(s);
  double a1 = kz_invariant(A);
  double t = elapsed(t0);
  Gate g;
  g.pass = std::abs(a1) < 1e-8 && A.max_abs < 1e-8 && t < 30.0;
  g.detail = fmt("|a_1|=%.2e max|A|=%.2e verts=%d (%.1fs, limit 30s)", std::abs(a1), A.max_abs,
                 s.n_vertices(), t);
  return g;
}

// ---------------------------------------------------------------- criterion 2
// Green operator on the square torus against the closed-form potential of a
// cosine load: relative L2 error below 1e-3 at ~5k vertices, second order.
Gate gate02() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<double> errs;
  int mid_verts = 0;
  for (int n : {32, 64, 128}) {
    MeshParams p;
    p.base_resolution = n;
    SurfaceState s = build_state(TorusSurface{{0.0, 1.0}}, p);
    if (n == 64) mid_verts = s.n_vertices();
    Eigen::VectorXcd density(static_cast<Eigen::Index>(s.mesh.total_nodes()));
    for (std::size_t t = 0; t < s.mesh.triangles.size(); ++t)
      for (std::size_t q = 0; q < s.mesh.node_count(static_cast<int>(t)); ++q)
        density[static_cast<Eigen::Index>(s.mesh.node_offset[t] + q)] =
            std::cos(2.0 * kPi * s.mesh.node_position(static_cast<int>(t), q).real());
    ScalarField u = s.laplacian->green_apply(two_form_from_node_density(s.mesh, density));
    double err2 = 0, ref2 = 0;
    for (int v = 0; v < s.laplacian->size(); ++v) {
      double x = s.mesh.vertices[static_cast<std::size_t>(v)].pos.real();
      cplx exact = -std::cos(2.0 * kPi * x) / (4.0 * kPi * kPi);
      err2 += s.laplacian->mass()[v] * std::norm(u.values[v] - exact);
      ref2 += s.laplacian->mass()[v] * std::norm(exact);
    }
    errs.push_back(std::sqrt(err2 / ref2));
  }
  double order = 0.5 * (std::log2(errs[0] / errs[1]) + std::log2(errs[1] / errs[2]));
  double t = elapsed(t0);
  Gate g;
  g.pass = errs[1] < 1e-3 && std::abs(order - 2.0) < 0.15 && t < 20.0;
  g.detail = fmt("rel_l2=[%.2e %.2e %.2e] order=%.3f verts@mid=%d (%.1fs, limit 20s)", errs[0],
                 errs[1], errs[2], order, mid_verts, t);
  return g;
}

// ---------------------------------------------------------------- criterion 3
// Genus-2 tensor identities at refinement 2: entry symmetries, vanishing
// partial traces, real invariant, symmetric Green pairing.
Gate gate03() {
  auto t0 = std::chrono::steady_clock::now();
  MeshParams p;
  p.refinement_level = 2;
  SurfaceState s = build_state(roots_of_unity(6), p);
  ATensor A = compute_A(s);
  cplx trace = 0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) trace += A.entry(i, j, j, i);
  double sym = std::max(A.conj_residual, A.swap_residual) / A.max_abs;
  double tr = std::max(A.trace_first_residual, A.trace_last_residual) / A.max_abs;
  double im = std::abs(trace.imag()) / std::abs(trace.real());

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double pairing_asym = 0;
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXcd la(s.n_vertices()), lb(s.n_vertices());
    for (int v = 0; v < s.n_vertices(); ++v) {
      la[v] = cplx(uni(rng), uni(rng));
      lb[v] = cplx(uni(rng), uni(rng));
    }
    TwoForm a{la}, b{lb};
    cplx ab = ConformalLaplacian::pairing(a, s.laplacian->green_apply(b));
    cplx ba = ConformalLaplacian::pairing(b, s.laplacian->green_apply(a));
    pairing_asym = std::max(pairing_asym, std::abs(ab - ba) / std::abs(ab));
  }
  double t = elapsed(t0);
  Gate g;
  g.pass = sym < 1e-8 && tr < 1e-10 && im < 1e-10 && pairing_asym < 1e-10 && t < 120.0;
  g.detail = fmt("sym=%.1e trace=%.1e im/re=%.1e pairing_asym=%.1e (%.1fs, limit 120s)", sym, tr,
                 im, pairing_asym, t);
  return g;
}

// ---------------------------------------------------------------- criterion 4
// The Kaehler contraction of the coefficient tensor equals -6g a_g.
Gate gate04() {
  auto t0 = std::chrono::steady_clock::now();
  std::string parts;
  bool ok = true;
  for (auto [curve, refine_level] :
       {std::pair<HyperellipticCurve, int>{roots_of_unity(6), 2}, {roots_of_unity(8), 1}}) {
    MeshParams p;
    p.refinement_level = refine_level;
    SurfaceState s = build_state(curve, p);
    ATensor A = compute_A(s);
    double a_g = kz_invariant(A);
    double rel = std::abs(kahler_contraction(A) + cplx(6.0 * A.g * a_g, 0.0)) / std::abs(a_g);
    ok = ok && rel < 1e-9;
    parts += fmt("g=%d rel=%.2e ", A.g, rel);
  }
  Gate g;
  g.pass = ok;
  g.detail = parts + fmt("(%.1fs)", elapsed(t0));
  return g;
}

// ---------------------------------------------------------------- criterion 5
// The trace invariant is a conformal invariant: a rotation-type fractional
// linear substitution of the branch points must not move it.
Gate gate05() {
  auto t0 = std::chrono::steady_clock::now();
  HyperellipticCurve base = roots_of_unity(6);
  const double theta = 0.6;
  HyperellipticCurve moved = mobius_transform(
      base, {cplx(std::cos(theta)), cplx(std::sin(theta)), cplx(-std::sin(theta)),
             cplx(std::cos(theta))});
  auto invariant_at = [&](const HyperellipticCurve& c, int level) {
    MeshParams p;
    p.refinement_level = level;
    return kz_invariant(compute_A(build_state(c, p)));
  };
  double a3 = invariant_at(base, 3), b3 = invariant_at(moved, 3);
  double rel3 = std::abs(a3 - b3) / std::abs(a3);
  double a4 = invariant_at(base, 4), b4 = invariant_at(moved, 4);
  double rel4 = std::abs(a4 - b4) / std::abs(a4);
  double t = elapsed(t0);
  Gate g;
  g.pass = rel3 < 1e-2 && rel4 < 2e-3;
  g.detail = fmt("level3: %.4f vs %.4f (rel %.2e < 1e-2)  level4: %.4f vs %.4f (rel %.2e < 2e-3) (%.0fs)",
                 a3, b3, rel3, a4, b4, rel4, t);
  return g;
}

// ---------------------------------------------------------------- criterion 6
// Small mesh (<= 500 vertices): the factorized Green kernel against a dense
// spectral pseudo-inverse, and tensor entries against an independent
// double-quadrature pairing through that dense kernel.
Gate gate06() {
  auto t0 = std::chrono::steady_clock::now();
  MeshParams p;
  p.base_resolution = 9;
  p.branch_grading_depth = 2;
  SurfaceState s = build_state(roots_of_unity(6), p);
  Gate g;
  if (s.n_vertices() > 500) {
    g.detail = fmt("mesh has %d vertices (> 500)", s.n_vertices());
    return g;
  }
  Eigen::MatrixXd K_fact = s.laplacian->green_kernel_dense(600);
  Eigen::MatrixXd K_spec = dense_green_kernel(*s.laplacian, 600);
  double kernel_rel = (K_fact - K_spec).cwiseAbs().maxCoeff() / K_spec.cwiseAbs().maxCoeff();

  // rebuild the wedge loads from scratch: quadrature-node densities pushed
  // through the interpolation transpose, then paired through the spectral
  // kernel (double quadrature of the Green function against both densities)
  Eigen::SparseMatrix<double> N = node_interpolation_matrix(s.mesh);
  Eigen::VectorXd wq = node_area_weights(s.mesh);
  int gn = s.g();
  auto load_of = [&](int i, int j) -> Eigen::VectorXcd {
    Eigen::VectorXcd density = cplx(0.0, -2.0) * s.basis.psi_values.row(i).transpose().cwiseProduct(
                                                     s.basis.psi_values.row(j).transpose().conjugate());
    return N.transpose().cast<cplx>() * density.cwiseProduct(wq.cast<cplx>());
  };
  ATensor A = compute_A(s);
  double entry_err = 0;
  for (auto [i, j, k, l] : {std::array<int, 4>{0, 1, 1, 0}, {0, 0, 1, 1}, {1, 0, 0, 1}}) {
    cplx direct = load_of(i, j).transpose() * K_spec.cast<cplx>() * load_of(k, l);
    entry_err = std::max(entry_err, std::abs(direct - A.entry(i, j, k, l)));
  }
  (void)gn;
  double t = elapsed(t0);
  g.pass = kernel_rel < 1e-10 && entry_err < 1e-4;
  g.detail = fmt("verts=%d kernel_rel=%.1e entry_err=%.1e (%.1fs)", s.n_vertices(), kernel_rel,
                 entry_err, t);
  return g;
}

// ---------------------------------------------------------------- criterion 7
// Diagram engine: the closed two-vertex diagram reproduces the invariant, a
// three-vertex chain is reduction-order independent, and a closed cycle of
// three propagators evaluates within budget on a moderate mesh.
Gate gate07() {
  auto t0 = std::chrono::steady_clock::now();
  SurfaceState s = build_state(roots_of_unity(6), MeshParams{});
  double a2 = kz_invariant(compute_A(s));
  double inv_err = std::abs(
      evaluate_diagram(s, parse_diagram("V1(i,~j) V2(k,~l); V1-V2; i=l, j=k")).scalar() - a2);

  DiagramExpr chain3 =
      parse_diagram("V1(a,~b) V2(c,~d) V3(e,~f); V1-V2 V2-V3; c=b e=d a=f");
  DiagramOptions fwd, rev;
  fwd.order = ReductionOrder::forward;
  rev.order = ReductionOrder::reverse;
  cplx c_f = evaluate_diagram(s, chain3, fwd).scalar();
  cplx c_r = evaluate_diagram(s, chain3, rev).scalar();
  double chain_err = std::abs(c_f - c_r);

  MeshParams pc;
  pc.base_resolution = 9;
  pc.branch_grading_depth = 2;
  pc.refinement_level = 1;
  SurfaceState sc = build_state(roots_of_unity(6), pc);
  auto t_cycle = std::chrono::steady_clock::now();
  DiagramValue cyc = evaluate_diagram(
      sc, parse_diagram("V1(a,~b) V2(c,~d) V3(e,~f); V1-V2 V2-V3 V3-V1; c=b e=d a=f"));
  double cycle_s = elapsed(t_cycle);
  double t = elapsed(t0);
  Gate g;
  g.pass = inv_err < 1e-12 && chain_err < 1e-10 && sc.n_vertices() <= 3000 &&
           std::abs(cyc.scalar()) > 0 && t < 600.0;
  g.detail = fmt("inv_err=%.1e chain_err=%.1e cycle=%.2e%+.2ei on %d verts in %.1fs (%.1fs, limit 600s)",
                 inv_err, chain_err, cyc.scalar().real(), cyc.scalar().imag(), sc.n_vertices(),
                 cycle_s, t);
  return g;
}

// ---------------------------------------------------------------- criterion 8
// Exact cohomology layer: kernel dimensions, nondegenerate pairing, and 100
// random positivity samples on the (1,2) block, all in exact arithmetic.
Gate gate08() {
  auto t0 = std::chrono::steady_clock::now();
  bool dims = u_subspace(2).dim() == 0;
  USubspace u = u_subspace(3);
  dims = dims && u.dim() == 14 && u.block(3, 0).size() == 1 && u.block(2, 1).size() == 6 &&
         u.block(1, 2).size() == 6 && u.block(0, 3).size() == 1;

  std::vector<GQVec> gram;
  for (int a = 0; a < u.dim(); ++a) {
    GQVec row(static_cast<std::size_t>(u.dim()));
    for (int b = 0; b < u.dim(); ++b)
      row[static_cast<std::size_t>(b)] = pairing_M0(u.basis, u.vectors[static_cast<std::size_t>(a)],
                                                    u.vectors[static_cast<std::size_t>(b)]);
    gram.push_back(std::move(row));
  }
  bool nondeg = gq_rank(gram) == 14;

  std::mt19937 rng(314159);
  std::uniform_int_distribution<int> coeff(-5, 5);
  std::vector<int> idx = u.block(1, 2);
  int positive = 0, tested = 0;
  while (tested < 100) {
    GQVec v(static_cast<std::size_t>(u.basis.dim()));
    bool nonzero = false;
    for (int a : idx) {
      GQ c(Rat(coeff(rng)), Rat(coeff(rng)));
      if (!c.is_zero()) nonzero = true;
      const GQVec& base = u.vectors[static_cast<std::size_t>(a)];
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = v[k] + c * base[k];
    }
    if (!nonzero) continue;
    ++tested;
    GQ pr = pairing_M0(u.basis, v, wedge3_conj(u.basis, v));
    if (pr.re == Rat(0) && pr.im > Rat(0)) ++positive;
  }
  double t = elapsed(t0);
  Gate g;
  g.pass = dims && nondeg && positive == 100 && t < 5.0;
  g.detail = fmt("dims_ok=%d pairing_rank14=%d positive=%d/100 (%.2fs, limit 5s)", dims ? 1 : 0,
                 nondeg ? 1 : 0, positive, t);
  return g;
}

// ---------------------------------------------------------------- criterion 9
// The cyclic obstruction map on a genus-3 curve: structural vanishing on
// three type blocks, first-order decay of the non-holomorphy defect on the
// (2,1) block, tiny even-parity leakage, and the rank-1 obstruction form.
Gate gate09() {
  auto t0 = std::chrono::steady_clock::now();
  HyperellipticCurve curve = roots_of_unity(8);
  USubspace u = u_subspace(3);

  bool zeros_ok = true, even_ok = true, rank_ok = false;
  std::vector<double> defect;
  for (int level = 0; level <= 2; ++level) {
    MeshParams p;
    p.refinement_level = level;
    SurfaceState s = build_state(curve, p);
    QuadDiffBasis qd = quad_diff_basis(s);
    QContext ctx = make_q_context(s);

    if (level == 0) {
      for (auto [pp, qq] : {std::pair<int, int>{3, 0}, {0, 3}, {1, 2}})
        for (int idx : u.block(pp, qq)) {
          QValue v = compute_q_wedge(s, qd, ctx, u.basis,
                                     to_cplx(u.vectors[static_cast<std::size_t>(idx)]));
          zeros_ok = zeros_ok && v.norm < 1e-13;
        }
      E1JResult r = e1_johnson(s, qd, ctx);
      rank_ok = r.rank == 1 && r.rank_deficient;
      even_ok = r.max_even_norm < 1e-6 * r.max_q_norm;
    }
    double worst = 0;
    for (int idx : u.block(2, 1)) {
      QValue v = compute_q_wedge(s, qd, ctx, u.basis,
                                 to_cplx(u.vectors[static_cast<std::size_t>(idx)]));
      worst = std::max(worst, v.nonhol_residual);
    }
    defect.push_back(worst);
  }
  double order = 0.5 * (std::log2(defect[0] / defect[1]) + std::log2(defect[1] / defect[2]));
  bool decay_ok = defect[0] > defect[1] && defect[1] > defect[2] && order >= 0.9;
  double t = elapsed(t0);
  Gate g;
  g.pass = zeros_ok && even_ok && rank_ok && decay_ok && t < 600.0;
  g.detail = fmt("zeros=%d even=%d rank1=%d defect=[%.4f %.4f %.4f] order=%.3f (%.0fs, limit 600s)",
                 zeros_ok ? 1 : 0, even_ok ? 1 : 0, rank_ok ? 1 : 0, defect[0], defect[1],
                 defect[2], order, t);
  return g;
}

// --------------------------------------------------------------- criterion 10
// Collision family y^2 = (x^2 - eps^2)(x^4 - 1): the invariant is required to
// increase strictly as eps walks 0.5 -> 0.05 toward the collision.
Gate gate10() {
  auto t0 = std::chrono::steady_clock::now();
  JobConfig cfg;
  cfg.model = roots_of_unity(6);  // replaced per row by the sweep family
  cfg.mesh.refinement_level = 2;
  SweepResult sr = run_sweep(cfg, SweepFamily::epsilon_collision, {0.5, 0.3, 0.2, 0.1, 0.05});
  std::string values;
  bool complete = true;
  for (const SweepRow& row : sr.rows) {
    complete = complete && !row.skipped;
    values += fmt("a(%.2f)=%.4f ", row.param, row.a_g);
  }
  double t = elapsed(t0);
  Gate g;
  g.pass = complete && sr.monotone_increasing;
  g.detail = values + fmt("strictly_increasing=%s (%.0fs)",
                          sr.monotone_increasing ? "yes" : "no", t);
  return g;
}

struct Criterion {
  const char* name;
  Gate (*fn)();
};

const Criterion kCriteria[] = {
    {"genus-1 vanishing", gate01},
    {"torus green-operator convergence", gate02},
    {"genus-2 tensor identities", gate03},
    {"kaehler contraction identity", gate04},
    {"mobius invariance of the invariant", gate05},
    {"small-mesh independent oracles", gate06},
    {"diagram engine consistency", gate07},
    {"exact cohomology algebra", gate08},
    {"obstruction map suite", gate09},
    {"collision-family monotonicity", gate10},
};

}  // namespace

int main(int argc, char** argv) {
  int lo = 1, hi = 10;
  if (argc > 1) {
    int n = std::atoi(argv[1]);
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "usage: %s [1-10]\n", argv[0]);
      return 64;
    }
    lo = hi = n;
  }
  int failures = 0;
  for (int n = lo; n <= hi; ++n) {
    const Criterion& c = kCriteria[n - 1];
    Gate g;
    try {
      g = c.fn();
    } catch (const std::exception& e) {
      g.pass = false;
      g.detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %02d %s: %s\n", g.pass ? "PASS" : "FAIL", n, c.name, g.detail.c_str());
    std::fflush(stdout);
    if (!g.pass) ++failures;
  }
  return failures;
}
