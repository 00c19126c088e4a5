#pragma once

#include <string>
#include <vector>

#include "mgt/atensor.hpp"
#include "mgt/state.hpp"

namespace mgt {

// One computation job: which surface, how fine a mesh, tolerances, caching.
struct JobConfig {
  SurfaceModel model;
  MeshParams mesh;
  double tol = 1e-8;      // reported target tolerance; must be > 0
  int threads = 0;        // 0 = leave the linear algebra default
  std::string cache_dir;  // empty = no cache (MGT_CACHE_DIR env fills it in)

  void validate() const;  // throws config_error on bad fields
};

// Stable identity of a job: hash of code version + canonical surface string +
// canonical mesh params + tolerance. Thread count and output paths excluded.
std::string config_hash(const JobConfig& cfg);

struct ResultRecord {
  std::string hash;
  bool cache_hit = false;
  json record;  // schema mgt-result-v1
};

// Full pipeline surface -> mesh -> frame -> A -> a_g with identity residuals,
// cached by config hash when a cache directory is set.
ResultRecord run_compute(const JobConfig& cfg);

enum class SweepFamily { epsilon_collision, constant_family, mobius_orbit };
SweepFamily sweep_family_from_name(const std::string& name);

struct SweepRow {
  double param = 0;
  bool skipped = false;
  std::string reason;
  double a_g = 0;
  double max_abs = 0;
  double conj_residual = 0;
};

struct SweepResult {
  SweepFamily family;
  std::vector<SweepRow> rows;
  bool monotone_increasing = false;  // a_g strictly increases along the rows
  double max_spread = 0;             // max |a_g - first a_g| over completed rows
  std::string csv() const;           // header row + one line per parameter
};

// epsilon_collision: y^2 = (x^2 - eps^2)(x^4 - 1), one row per eps value.
// constant_family: the configured curve repeated (values are labels only).
// mobius_orbit: configured curve pushed through x -> (cos t x + sin t)/(-sin t x + cos t).
SweepResult run_sweep(const JobConfig& cfg, SweepFamily family, const std::vector<double>& values);

struct ConvergenceRow {
  std::string name;
  std::vector<double> samples;  // per-level values (quantities) or residuals (errors)
  std::vector<double> errors;   // Richardson differences or direct errors
  double order = 0;             // mean log2 ratio of consecutive errors
  bool conclusive = false;      // errors strictly decreasing
  bool pass = false;            // conclusive && order >= threshold, or inconclusive
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool pass = false;
  json to_json() const;
};

// Refines levels times (levels >= 3) and estimates empirical convergence
// orders: Green oracle error on the torus, Richardson triples on a_g and the
// largest A entries otherwise, plus the Q non-holomorphy residual when
// include_q is set and the surface supports it. Thresholds: 1.5 for
// A-derived quantities, 2.0 expected on the torus oracle, 1.0 for Q residuals.
ConvergenceReport run_convergence(const JobConfig& cfg, int levels, bool include_q);

// Exact-algebra oracles plus a quick torus Green-operator check; returns a
// JSON report with a top-level "pass".
json run_selftest();

// Q restricted to the type blocks of U: norms, non-holomorphy residuals,
// even-parity leakage, and the first-obstruction rank summary.
json run_qcheck(const JobConfig& cfg);

}  // namespace mgt
