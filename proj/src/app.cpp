#include "mgt/app.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>
#include <variant>

#include "mgt/algebra.hpp"
#include "mgt/johnson.hpp"
#include "mgt/laplace.hpp"

namespace mgt {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void JobConfig::validate() const {
  if (!(tol > 0)) throw config_error("tolerance must be positive");
  if (mesh.refinement_level < 0) throw config_error("refinement level must be >= 0");
  if (mesh.base_resolution < 4) throw config_error("base resolution must be >= 4");
  if (mesh.branch_grading_depth < 0) throw config_error("branch grading depth must be >= 0");
  if (mesh.duffy_order < 2) throw config_error("corner quadrature order must be >= 2");
  if (threads < 0) throw config_error("thread count must be >= 0");
}

std::string config_hash(const JobConfig& cfg) {
  char tol_buf[40];
  std::snprintf(tol_buf, sizeof(tol_buf), "%.17g", cfg.tol);
  std::uint64_t h = fnv1a(kCodeVersion);
  h = fnv1a(surface_canonical_string(cfg.model), h);
  h = fnv1a(cfg.mesh.canonical_string(), h);
  h = fnv1a(tol_buf, h);
  return hex64(h);
}

ResultRecord run_compute(const JobConfig& cfg) {
  cfg.validate();
  ResultRecord rec;
  rec.hash = config_hash(cfg);

  std::string cache_dir = cfg.cache_dir;
  if (cache_dir.empty())
    if (const char* env = std::getenv("MGT_CACHE_DIR")) cache_dir = env;

  namespace fs = std::filesystem;
  fs::path cache_file;
  if (!cache_dir.empty()) {
    cache_file = fs::path(cache_dir) / (rec.hash + ".json");
    std::ifstream in(cache_file);
    if (in) {
      try {
        json j = json::parse(in);
        if (j.value("hash", "") == rec.hash) {
          rec.record = std::move(j);
          rec.cache_hit = true;
          return rec;
        }
      } catch (const json::exception&) {
        // unreadable cache entry: recompute and overwrite
      }
    }
  }

  if (cfg.threads > 0) Eigen::setNbThreads(cfg.threads);

  auto t0 = std::chrono::steady_clock::now();
  SurfaceState state = build_state(cfg.model, cfg.mesh);
  double build_s = seconds_since(t0);

  auto t1 = std::chrono::steady_clock::now();
  ATensor A = compute_A(state);
  double a_g = kz_invariant(A);
  double tensor_s = seconds_since(t1);

  json meta;
  meta["surface"] = surface_to_json(cfg.model);
  meta["params"] = cfg.mesh.to_json();
  meta["n_vertices"] = state.n_vertices();
  meta["n_triangles"] = static_cast<int>(state.mesh.triangles.size());

  rec.record = json{{"schema", "mgt-result-v1"},
                    {"code_version", kCodeVersion},
                    {"hash", rec.hash},
                    {"surface", surface_to_json(cfg.model)},
                    {"params", cfg.mesh.to_json()},
                    {"tol", cfg.tol},
                    {"g", A.g},
                    {"n_vertices", state.n_vertices()},
                    {"a_g", a_g},
                    {"tensor", atensor_to_json(A, meta)},
                    {"timings", json{{"build_s", build_s},
                                     {"tensor_s", tensor_s},
                                     {"total_s", seconds_since(t0)}}}};

  if (!cache_dir.empty()) {
    std::error_code ec;
    fs::create_directories(cache_dir, ec);
    fs::path tmp = cache_file;
    tmp += ".tmp" + std::to_string(static_cast<unsigned long>(::getpid()));
    {
      std::ofstream out(tmp);
      out << rec.record.dump(1) << "\n";
    }
    fs::rename(tmp, cache_file, ec);
    if (ec) fs::remove(tmp, ec);  // cache is best-effort
  }
  return rec;
}

SweepFamily sweep_family_from_name(const std::string& name) {
  if (name == "epsilon-collision" || name == "epsilon_collision") return SweepFamily::epsilon_collision;
  if (name == "constant") return SweepFamily::constant_family;
  if (name == "mobius-orbit" || name == "mobius_orbit") return SweepFamily::mobius_orbit;
  throw config_error("unknown sweep family '" + name +
                     "' (expected epsilon-collision, constant, or mobius-orbit)");
}

namespace {

SurfaceModel collision_curve(double eps) {
  HyperellipticCurve c;
  c.branch_points = {cplx(eps, 0), cplx(-eps, 0), cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)};
  c.cuts = {{0, 1}, {2, 4}, {3, 5}};  // (eps,-eps), (1,i), (-1,-i): non-crossing
  return c;
}

double min_branch_distance(const HyperellipticCurve& c) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < c.branch_points.size(); ++a)
    for (std::size_t b = a + 1; b < c.branch_points.size(); ++b)
      d = std::min(d, std::abs(c.branch_points[a] - c.branch_points[b]));
  return d;
}

}  // namespace

SweepResult run_sweep(const JobConfig& cfg, SweepFamily family, const std::vector<double>& values) {
  cfg.validate();
  if (values.empty()) throw config_error("sweep needs at least one parameter value");
  SweepResult result;
  result.family = family;

  for (double v : values) {
    SweepRow row;
    row.param = v;
    JobConfig job = cfg;
    try {
      switch (family) {
        case SweepFamily::epsilon_collision: {
          if (!(v > 0)) throw validation_error("sweep-param", "collision parameter must be positive");
          SurfaceModel m = collision_curve(v);
          if (min_branch_distance(std::get<HyperellipticCurve>(m)) < 1e-6)
            throw validation_error("sweep-param", "branch points collide");
          job.model = m;
          break;
        }
        case SweepFamily::constant_family:
          break;  // same curve every row
        case SweepFamily::mobius_orbit: {
          const auto* curve = std::get_if<HyperellipticCurve>(&cfg.model);
          if (!curve) throw model_error("mobius orbit needs a hyperelliptic curve");
          const double c = std::cos(v), s = std::sin(v);
          job.model = mobius_transform(*curve, {cplx(c), cplx(s), cplx(-s), cplx(c)});
          break;
        }
      }
      ResultRecord rec = run_compute(job);
      row.a_g = rec.record.at("a_g").get<double>();
      const json& res = rec.record.at("tensor").at("residuals");
      row.max_abs = res.at("max_abs").get<double>();
      row.conj_residual = res.at("conj").get<double>();
    } catch (const validation_error& e) {
      row.skipped = true;
      row.reason = e.what();
    } catch (const model_error& e) {
      row.skipped = true;
      row.reason = e.what();
    }
    result.rows.push_back(std::move(row));
  }

  bool increasing = true;
  bool have_prev = false;
  double prev = 0, first = 0;
  for (const SweepRow& r : result.rows) {
    if (r.skipped) continue;
    if (!have_prev) {
      first = prev = r.a_g;
      have_prev = true;
      continue;
    }
    if (!(r.a_g > prev)) increasing = false;
    prev = r.a_g;
    result.max_spread = std::max(result.max_spread, std::abs(r.a_g - first));
  }
  result.monotone_increasing = have_prev && increasing;
  return result;
}

std::string SweepResult::csv() const {
  std::ostringstream out;
  out << "param,status,a_g,max_abs_entry,conj_residual,reason\n";
  for (const SweepRow& r : rows) {
    out << fmt(r.param) << ',' << (r.skipped ? "skipped" : "ok") << ',';
    if (r.skipped)
      out << ",,," << r.reason << '\n';
    else
      out << fmt(r.a_g) << ',' << fmt(r.max_abs) << ',' << fmt(r.conj_residual) << ",\n";
  }
  return out.str();
}

namespace {

// Relative L2(C) error of the discrete Green operator against the closed-form
// response to the lowest nonconstant Fourier mode on the torus. The solution
// is compared as a function (piecewise-linear interpolant at quadrature
// nodes), not at vertices: on a grid aligned with the mode the nodal values
// are superconvergent and would hide the O(h^2) behavior.
double torus_oracle_error(const SurfaceModel& model, const MeshParams& params) {
  BranchedMesh mesh = build_surface(model, params);
  DifferentialBasis basis = orthonormal_basis(mesh);
  VolumeFormB B = bergman_form(mesh, basis);
  ConformalLaplacian lap(mesh, B);

  Eigen::VectorXcd density(mesh.total_nodes());
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
    for (std::size_t q = 0; q < mesh.node_count(t); ++q)
      density[static_cast<Eigen::Index>(mesh.node_offset[t] + q)] =
          std::cos(2 * kPi * mesh.node_position(t, q).real());
  ScalarField u = lap.green_apply(two_form_from_node_density(mesh, density));

  Eigen::VectorXcd at_nodes = node_interpolation_matrix(mesh).cast<cplx>() * u.values;
  Eigen::VectorXd w = node_area_weights(mesh);
  const double c = 1.0 / (4 * kPi * kPi);
  double err2 = 0, ref2 = 0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
    for (std::size_t q = 0; q < mesh.node_count(t); ++q) {
      const Eigen::Index k = static_cast<Eigen::Index>(mesh.node_offset[t] + q);
      double expect = -c * std::cos(2 * kPi * mesh.node_position(t, q).real());
      err2 += w[k] * std::norm(at_nodes[k] - expect);
      ref2 += w[k] * expect * expect;
    }
  return std::sqrt(err2 / ref2);
}

ConvergenceRow finish_row(std::string name, std::vector<double> samples,
                          std::vector<double> errors, double threshold) {
  ConvergenceRow row;
  row.name = std::move(name);
  row.samples = std::move(samples);
  row.errors = std::move(errors);
  row.conclusive = row.errors.size() >= 2;
  for (std::size_t i = 0; row.conclusive && i < row.errors.size(); ++i)
    if (!(row.errors[i] > 0) || (i > 0 && !(row.errors[i] < row.errors[i - 1])))
      row.conclusive = false;
  double acc = 0;
  int n = 0;
  for (std::size_t i = 0; i + 1 < row.errors.size(); ++i)
    if (row.errors[i] > 0 && row.errors[i + 1] > 0) {
      acc += std::log2(row.errors[i] / row.errors[i + 1]);
      ++n;
    }
  row.order = n ? acc / n : 0;
  row.pass = row.conclusive ? row.order >= threshold : true;  // inconclusive != failed
  return row;
}

std::vector<double> richardson_errors(const std::vector<cplx>& v) {
  std::vector<double> e;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) e.push_back(std::abs(v[i + 1] - v[i]));
  return e;
}

}  // namespace

ConvergenceReport run_convergence(const JobConfig& cfg, int levels, bool include_q) {
  cfg.validate();
  if (levels < 3) throw config_error("convergence study needs at least 3 levels");
  ConvergenceReport report;

  if (std::holds_alternative<TorusSurface>(cfg.model)) {
    std::vector<double> errs;
    for (int l = 0; l < levels; ++l) {
      MeshParams p = cfg.mesh;
      p.refinement_level += l;
      errs.push_back(torus_oracle_error(cfg.model, p));
    }
    report.rows.push_back(finish_row("torus_green_oracle", errs, errs, 1.5));
  } else {
    const int g = genus(cfg.model);
    std::vector<cplx> ag;
    std::vector<std::pair<int, int>> picks;  // (row, col) of tracked A entries
    std::vector<std::vector<cplx>> entries;
    std::vector<double> q_res;

    for (int l = 0; l < levels; ++l) {
      MeshParams p = cfg.mesh;
      p.refinement_level += l;
      SurfaceState state = build_state(cfg.model, p);
      ATensor A = compute_A(state);
      ag.push_back(cplx(kz_invariant(A)));
      if (l == 0) {
        std::vector<std::pair<double, std::pair<int, int>>> mag;
        for (int r = 0; r < A.m.rows(); ++r)
          for (int c = 0; c < A.m.cols(); ++c)
            mag.push_back({std::abs(A.m(r, c)), {r, c}});
        std::sort(mag.begin(), mag.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; k < mag.size() && picks.size() < 3; ++k)
          if (mag[k].first > 1e-12) picks.push_back(mag[k].second);
        entries.resize(picks.size());
      }
      for (std::size_t k = 0; k < picks.size(); ++k)
        entries[k].push_back(A.m(picks[k].first, picks[k].second));

      if (include_q && g >= 3) {
        QuadDiffBasis qd = quad_diff_basis(state);
        QContext ctx = make_q_context(state);
        USubspace U = u_subspace(g);
        std::vector<int> idx = U.block(2, 1);
        if (!idx.empty()) {
          QValue qv = compute_q_wedge(state, qd, ctx, U.basis, to_cplx(U.vectors[idx[0]]));
          q_res.push_back(qv.nonhol_residual / std::max(qv.norm, 1e-300));
        }
      }
    }

    std::vector<double> ag_abs;
    for (const cplx& v : ag) ag_abs.push_back(v.real());
    report.rows.push_back(finish_row("a_g", ag_abs, richardson_errors(ag), 1.5));
    for (std::size_t k = 0; k < picks.size(); ++k) {
      int i = picks[k].first / g, j = picks[k].first % g;
      int kk = picks[k].second / g, ll = picks[k].second % g;
      std::string name = "A[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "," +
                         std::to_string(kk + 1) + "," + std::to_string(ll + 1) + "]";
      std::vector<double> abs_vals;
      for (const cplx& v : entries[k]) abs_vals.push_back(std::abs(v));
      report.rows.push_back(finish_row(name, abs_vals, richardson_errors(entries[k]), 1.5));
    }
    // first-order quantity: the measured order approaches 1 from below, so
    // accept a clear first-order signal rather than requiring >= 1.0 exactly
    if (!q_res.empty())
      report.rows.push_back(finish_row("q_nonhol_residual", q_res, q_res, 0.9));
  }

  report.pass = true;
  for (const ConvergenceRow& r : report.rows) report.pass = report.pass && r.pass;
  return report;
}

json ConvergenceReport::to_json() const {
  json rows_j = json::array();
  for (const ConvergenceRow& r : rows)
    rows_j.push_back(json{{"name", r.name},
                          {"samples", r.samples},
                          {"errors", r.errors},
                          {"order", r.order},
                          {"conclusive", r.conclusive},
                          {"pass", r.pass}});
  return json{{"schema", "mgt-convergence-v1"}, {"rows", rows_j}, {"pass", pass}};
}

namespace {

json check(const std::string& name, bool pass, const std::string& detail) {
  return json{{"name", name}, {"pass", pass}, {"detail", detail}};
}

}  // namespace

json run_selftest() {
  json checks = json::array();

  {
    USubspace u2 = u_subspace(2);
    checks.push_back(check("u_dim_g2", u2.dim() == 0, "dim U = " + std::to_string(u2.dim())));
  }
  USubspace U = u_subspace(3);
  {
    int n30 = static_cast<int>(U.block(3, 0).size());
    int n21 = static_cast<int>(U.block(2, 1).size());
    int n12 = static_cast<int>(U.block(1, 2).size());
    int n03 = static_cast<int>(U.block(0, 3).size());
    bool ok = U.dim() == 14 && n30 == 1 && n21 == 6 && n12 == 6 && n03 == 1;
    checks.push_back(check("u_dim_g3", ok,
                           "dim U = " + std::to_string(U.dim()) + ", blocks " + std::to_string(n30) +
                               "/" + std::to_string(n21) + "/" + std::to_string(n12) + "/" +
                               std::to_string(n03)));
  }
  {
    // frozen pairing of the full holomorphic and antiholomorphic triples
    const Wedge3Basis& W = U.basis;
    GQVec v(W.dim()), w(W.dim());
    v[static_cast<std::size_t>(W.index({0, 1, 2}))] = GQ(1);
    w[static_cast<std::size_t>(W.index({3, 4, 5}))] = GQ(1);
    GQ p = pairing_M0(W, v, w);
    GQ q = pairing_M0(W, w, v);
    bool ok = p.re == Rat(0) && p.im == Rat(48) && q.re == Rat(0) && q.im == Rat(-48);
    checks.push_back(check("pairing_frozen_48i", ok, "got " + std::to_string(p.to_cplx().real()) +
                                                         "+" + std::to_string(p.to_cplx().imag()) + "i"));
  }
  {
    // contraction kills U, and -i<v, conj v> > 0 on the (1,2) block
    bool contract_ok = true;
    for (int a : U.block(2, 1)) {
      GQVec c = contract_wedge3(U.basis, U.vectors[a]);
      for (const GQ& x : c)
        if (!(x.re == Rat(0) && x.im == Rat(0))) contract_ok = false;
    }
    checks.push_back(check("contraction_vanishes_on_u", contract_ok, ""));

    std::mt19937 rng(20240901);
    std::uniform_int_distribution<int> coeff(-4, 4);
    bool pos_ok = true;
    std::vector<int> idx = U.block(1, 2);
    for (int trial = 0; trial < 10 && pos_ok; ++trial) {
      GQVec v(U.basis.dim());
      bool nonzero = false;
      for (int a : idx) {
        GQ c(Rat(coeff(rng)), Rat(coeff(rng)));
        if (!(c.re == Rat(0) && c.im == Rat(0))) nonzero = true;
        for (std::size_t t = 0; t < v.size(); ++t) v[t] = v[t] + c * U.vectors[a][t];
      }
      if (!nonzero) continue;
      GQ h = pairing_M0(U.basis, v, wedge3_conj(U.basis, v)) * GQ(Rat(0), Rat(-1));
      if (!(h.im == Rat(0)) || !(h.re > Rat(0))) pos_ok = false;
    }
    checks.push_back(check("positivity_block_12", pos_ok, "10 random exact samples"));
  }
  {
    MeshParams p;
    p.base_resolution = 64;
    double err = torus_oracle_error(TorusSurface{}, p);
    checks.push_back(
        check("torus_green_oracle", err < 2e-3, "relative L2 error " + fmt(err)));
  }

  bool pass = true;
  for (const json& c : checks) pass = pass && c.at("pass").get<bool>();
  return json{{"schema", "mgt-selftest-v1"}, {"checks", checks}, {"pass", pass}};
}

json run_qcheck(const JobConfig& cfg) {
  cfg.validate();
  SurfaceState state = build_state(cfg.model, cfg.mesh);
  const int g = state.g();
  QuadDiffBasis qd = quad_diff_basis(state);
  QContext ctx = make_q_context(state);
  USubspace U = u_subspace(g);

  json blocks = json::array();
  const std::pair<int, int> types[] = {{3, 0}, {2, 1}, {1, 2}, {0, 3}};
  for (auto [p, q] : types) {
    std::vector<int> idx = U.block(p, q);
    json bj{{"type", std::to_string(p) + "," + std::to_string(q)},
            {"dim", static_cast<int>(idx.size())}};
    double max_norm = 0, max_nonhol = 0, max_even = 0;
    for (int a : idx) {
      QValue qv = compute_q_wedge(state, qd, ctx, U.basis, to_cplx(U.vectors[a]));
      max_norm = std::max(max_norm, qv.norm);
      max_nonhol = std::max(max_nonhol, qv.nonhol_residual);
      max_even = std::max(max_even, qv.even_norm);
    }
    bj["max_norm"] = max_norm;
    bj["max_nonhol_residual"] = max_nonhol;
    bj["max_even_norm"] = max_even;
    blocks.push_back(std::move(bj));
  }

  json out{{"schema", "mgt-qcheck-v1"},
           {"g", g},
           {"n_vertices", state.n_vertices()},
           {"dim_u", U.dim()},
           {"qd_dim", qd.dim()},
           {"qd_even", qd.n_even},
           {"qd_odd", qd.n_odd},
           {"blocks", blocks}};

  if (!U.block(2, 1).empty()) {
    E1JResult e1 = e1_johnson(state, qd, ctx);
    out["first_obstruction"] = json{{"rank", e1.rank},
                                    {"rank_deficient", e1.rank_deficient},
                                    {"max_q_norm", e1.max_q_norm},
                                    {"max_nonhol_residual", e1.max_nonhol_residual},
                                    {"max_even_norm", e1.max_even_norm}};
  }
  return out;
}

}  // namespace mgt
