// mgt: twisted tensor / graph-diagram calculator on explicit Riemann surfaces.
//
// Verbs: compute, diagram, sweep, convergence, selftest, q-check.
// Exit codes: 0 success, 1 numeric failure, 2 configuration error,
// 3 unsupported model.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgt/app.hpp"
#include "mgt/diagram.hpp"

namespace {

struct CommonOpts {
  std::string surface_path;
  int refine = 0;
  int base_resolution = 10;
  int grading_depth = 4;
  int duffy_order = 12;
  double tol = 1e-8;
  int threads = 0;
  std::string cache_dir;
  std::string out_path;
};

void add_common(CLI::App* sub, CommonOpts& o, bool needs_surface) {
  auto* s = sub->add_option("--surface", o.surface_path, "surface spec JSON file");
  if (needs_surface) s->required();
  sub->add_option("--refine", o.refine, "mesh refinement level")->check(CLI::NonNegativeNumber);
  sub->add_option("--base-resolution", o.base_resolution, "base mesh resolution");
  sub->add_option("--grading-depth", o.grading_depth, "geometric grading depth at branch points");
  sub->add_option("--duffy-order", o.duffy_order, "corner quadrature order");
  sub->add_option("--tol", o.tol, "target tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--threads", o.threads, "linear algebra thread count");
  sub->add_option("--cache-dir", o.cache_dir, "result cache directory (env MGT_CACHE_DIR)");
  sub->add_option("--out", o.out_path, "output file (default stdout)");
}

mgt::SurfaceModel load_surface(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mgt::config_error("cannot open surface spec '" + path + "'");
  mgt::json j;
  try {
    j = mgt::json::parse(in);
  } catch (const mgt::json::exception& e) {
    throw mgt::config_error("surface spec '" + path + "' is not valid JSON: " + e.what());
  }
  return mgt::parse_surface_spec(j);
}

mgt::JobConfig make_config(const CommonOpts& o) {
  mgt::JobConfig cfg;
  cfg.model = load_surface(o.surface_path);
  cfg.mesh.refinement_level = o.refine;
  cfg.mesh.base_resolution = o.base_resolution;
  cfg.mesh.branch_grading_depth = o.grading_depth;
  cfg.mesh.duffy_order = o.duffy_order;
  cfg.tol = o.tol;
  cfg.threads = o.threads;
  cfg.cache_dir = o.cache_dir;
  return cfg;
}

void emit(const CommonOpts& o, const std::string& text) {
  if (o.out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(o.out_path);
  if (!out) throw mgt::config_error("cannot write output file '" + o.out_path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

mgt::json diagram_value_to_json(const mgt::DiagramValue& val) {
  mgt::json j;
  j["g"] = val.g;
  j["labels"] = val.labels;
  j["cost"] = mgt::json{{"green_solves", val.cost.solves},
                        {"dense_kernel", val.cost.dense_kernel},
                        {"terms", val.cost.terms}};
  if (val.labels.empty()) {
    j["value"] = {val.scalar().real(), val.scalar().imag()};
    return j;
  }
  mgt::json entries = mgt::json::array();
  const int g = val.g;
  std::vector<int> idx(val.labels.size(), 0);
  for (std::size_t flat = 0; flat < val.data.size(); ++flat) {
    mgt::json row = mgt::json::array();
    for (int v : idx) row.push_back(v + 1);
    row.push_back(val.data[flat].real());
    row.push_back(val.data[flat].imag());
    entries.push_back(std::move(row));
    for (int k = static_cast<int>(idx.size()) - 1; k >= 0; --k) {
      if (++idx[k] < g) break;
      idx[k] = 0;
    }
  }
  j["values"] = std::move(entries);
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"twisted tensor and graph-diagram calculator on explicit Riemann surfaces"};
  app.require_subcommand(1);

  CommonOpts compute_o, diagram_o, sweep_o, conv_o, self_o, qcheck_o;

  auto* compute = app.add_subcommand("compute", "full pipeline: A tensor, a_g, identity residuals");
  add_common(compute, compute_o, true);

  auto* diagram = app.add_subcommand("diagram", "evaluate a contraction diagram");
  std::string diagram_expr, diagram_order = "auto";
  mgt::DiagramOptions diagram_budget;
  diagram->add_option("expr", diagram_expr, "diagram text, or @file to read it from a file")
      ->required();
  diagram->add_option("--order", diagram_order, "reduction order: auto, forward, reverse")
      ->check(CLI::IsMember({"auto", "forward", "reverse"}));
  diagram->add_option("--max-solves", diagram_budget.max_solves, "Green-solve budget");
  diagram->add_option("--max-dense-vertices", diagram_budget.max_dense_vertices,
                      "vertex cap for the dense kernel (cycle graphs)");
  diagram->add_option("--max-terms", diagram_budget.max_terms, "flop budget for contractions");
  add_common(diagram, diagram_o, true);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep, CSV output");
  std::string family_name;
  std::vector<double> sweep_values;
  sweep->add_option("--family", family_name, "epsilon-collision, constant, or mobius-orbit")
      ->required();
  sweep->add_option("--values", sweep_values, "parameter values (comma or space separated)")
      ->required()
      ->expected(-1)
      ->delimiter(',');
  add_common(sweep, sweep_o, false);

  auto* conv = app.add_subcommand("convergence", "empirical convergence orders across levels");
  int levels = 3;
  bool with_q = false;
  conv->add_option("--levels", levels, "number of refinement levels (>= 3)");
  conv->add_flag("--with-q", with_q, "track the Q non-holomorphy residual too");
  add_common(conv, conv_o, true);

  auto* self = app.add_subcommand("selftest", "exact algebra oracles and the flat-torus Green oracle");
  add_common(self, self_o, false);

  auto* qcheck = app.add_subcommand("q-check", "Q on the type blocks of U, with obstruction rank");
  add_common(qcheck, qcheck_o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (compute->parsed()) {
    mgt::ResultRecord rec = mgt::run_compute(make_config(compute_o));
    emit(compute_o, rec.record.dump(1));
    return 0;
  }
  if (diagram->parsed()) {
    std::string text = diagram_expr;
    if (!text.empty() && text[0] == '@') {
      std::ifstream in(text.substr(1));
      if (!in) throw mgt::config_error("cannot open diagram file '" + text.substr(1) + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    mgt::DiagramExpr expr = mgt::parse_diagram(text);
    mgt::JobConfig cfg = make_config(diagram_o);
    cfg.validate();
    mgt::SurfaceState state = mgt::build_state(cfg.model, cfg.mesh);
    mgt::DiagramOptions opts = diagram_budget;
    if (diagram_order == "forward") opts.order = mgt::ReductionOrder::forward;
    if (diagram_order == "reverse") opts.order = mgt::ReductionOrder::reverse;
    mgt::DiagramValue val = mgt::evaluate_diagram(state, expr, opts);
    emit(diagram_o, diagram_value_to_json(val).dump(1));
    return 0;
  }
  if (sweep->parsed()) {
    mgt::SweepFamily family = mgt::sweep_family_from_name(family_name);
    mgt::JobConfig cfg;
    if (family == mgt::SweepFamily::epsilon_collision && sweep_o.surface_path.empty()) {
      CommonOpts o = sweep_o;  // the family fixes the curve; placeholder model
      cfg.mesh.refinement_level = o.refine;
      cfg.mesh.base_resolution = o.base_resolution;
      cfg.mesh.branch_grading_depth = o.grading_depth;
      cfg.mesh.duffy_order = o.duffy_order;
      cfg.tol = o.tol;
      cfg.threads = o.threads;
      cfg.cache_dir = o.cache_dir;
      cfg.model = mgt::TorusSurface{};  // replaced per row by the family
    } else {
      if (sweep_o.surface_path.empty())
        throw mgt::config_error("sweep family '" + family_name + "' needs --surface");
      cfg = make_config(sweep_o);
    }
    mgt::SweepResult res = mgt::run_sweep(cfg, family, sweep_values);
    emit(sweep_o, res.csv());
    return 0;
  }
  if (conv->parsed()) {
    mgt::ConvergenceReport report = mgt::run_convergence(make_config(conv_o), levels, with_q);
    emit(conv_o, report.to_json().dump(1));
    return report.pass ? 0 : 1;
  }
  if (self->parsed()) {
    mgt::json report = mgt::run_selftest();
    emit(self_o, report.dump(1));
    return report.at("pass").get<bool>() ? 0 : 1;
  }
  if (qcheck->parsed()) {
    mgt::json report = mgt::run_qcheck(make_config(qcheck_o));
    emit(qcheck_o, report.dump(1));
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mgt::model_error& e) {
    std::cerr << "error (model): " << e.what() << "\n";
    return 3;
  } catch (const mgt::config_error& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const mgt::numeric_error& e) {
    std::cerr << "error (numeric): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
