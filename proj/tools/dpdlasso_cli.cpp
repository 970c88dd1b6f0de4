#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpdlasso/io.hpp"

namespace fs = std::filesystem;
using namespace dpdlasso;

namespace {

struct FitArgs {
  std::string data;
  std::string response = "y";
  double alpha = 1.0;
  std::string lambda = "auto";
  double tol = 1e-6;
  int max_iter = 100;
  std::string init = "lasso_fixed";
  bool no_safeguard = false;
  int folds = 5;
  int grid_size = 50;
  std::string out = "fit.json";
  std::string trace;
};

struct PredictArgs {
  std::string model;
  std::string data;
  std::string out = "predictions.csv";
};

struct CvArgs {
  FitArgs fit;
  std::string out_csv = "cv.csv";
  std::string out_json;
  std::string folds_out;
  bool trimmed = false;
};

struct SimulateArgs {
  std::string config;
  std::string out = "sim_results.csv";
  std::string summary = "sim_summary.csv";
  bool timing = false;
};

struct ContourArgs {
  double contamination = 0.1;
  std::vector<double> alphas{0.0, 0.25, 0.5, 1.0, 2.0};
  std::string grid = "-10:10:401";
  std::string out_dir = "contour";
};

std::uint64_t g_seed = 1;
int g_verbose = 0;

void note(const std::string& msg, int level = 1) {
  if (g_verbose >= level) std::cerr << msg << "\n";
}

EstimatorSettings settings_from(const FitArgs& a) {
  EstimatorSettings s;
  s.alpha = a.alpha;
  s.tol = a.tol;
  s.max_iter = a.max_iter;
  s.safeguard = !a.no_safeguard;
  s.init_cv_seed = derive_seed(g_seed, Stream::init);
  if (a.init == "lasso_cv") s.init = Init::lasso_cv();
  else if (a.init == "lasso_fixed") s.init = Init::lasso_fixed();
  else if (a.init == "ols") s.init = Init::ols();
  else throw InvalidArgument("unknown init '" + a.init + "'");
  s.validate();
  return s;
}

std::string file_label(double alpha) {
  std::string s = io::format_double(alpha);
  for (char& ch : s) {
    if (ch == '.') ch = 'p';
  }
  return s;
}

GridAxis parse_axis(const std::string& spec) {
  const auto parts = io::detail::split(spec, ':');
  if (parts.size() != 3) throw BadGrid("grid must be min:max:steps");
  const auto lo = io::detail::parse_double(parts[0]);
  const auto hi = io::detail::parse_double(parts[1]);
  const auto steps = io::detail::parse_double(parts[2]);
  if (!lo || !hi || !steps || *steps != static_cast<int>(*steps)) {
    throw BadGrid("grid must be min:max:steps with integer steps");
  }
  GridAxis axis{*lo, *hi, static_cast<int>(*steps)};
  axis.validate();
  return axis;
}

int cmd_fit(const FitArgs& a) {
  const auto ds = io::read_dataset(a.data, a.response);
  EstimatorSettings s = settings_from(a);
  if (a.lambda == "auto") {
    const auto cv = tune_lambda(ds.data, a.alpha, a.folds, a.grid_size,
                                derive_seed(g_seed, Stream::cv), s);
    s.lambda = cv.best_lambda;
    note("selected lambda " + io::format_double(s.lambda));
  } else {
    const auto v = io::detail::parse_double(a.lambda);
    if (!v || *v < 0.0) throw InvalidArgument("--lambda must be a number >= 0 or 'auto'");
    s.lambda = *v;
  }
  const auto res = fit_dpd_lasso(ds.data, s);
  io::write_atomic(a.out, io::model_to_string({res.fit, ds.feature_names, ds.response}));
  if (!a.trace.empty()) io::write_atomic(a.trace, io::trace_csv(res.trace));
  if (!res.fit.converged) {
    std::cerr << "warning: not converged after " << res.fit.n_iter << " iterations\n";
    return 2;
  }
  return 0;
}

int cmd_predict(const PredictArgs& a) {
  const auto model = io::model_from_string(io::read_file(a.model));
  const auto table = io::parse_csv(io::read_file(a.data), a.data);
  const Matrix X = io::align_features(table, model);
  io::write_atomic(a.out, io::predictions_csv(predict(model.fit, X)));
  return 0;
}

int cmd_cv(const CvArgs& a) {
  const auto ds = io::read_dataset(a.fit.data, a.fit.response);
  const EstimatorSettings s = settings_from(a.fit);
  const std::uint64_t seed = derive_seed(g_seed, Stream::cv);
  const auto cv = tune_lambda(ds.data, a.fit.alpha, a.fit.folds, a.fit.grid_size, seed, s);
  io::write_atomic(a.out_csv, io::cv_csv(cv, a.trimmed));
  if (!a.out_json.empty()) {
    io::write_atomic(a.out_json, io::cv_json(cv, a.fit.alpha, a.fit.folds, seed, a.trimmed));
  }
  if (!a.folds_out.empty()) io::write_atomic(a.folds_out, io::folds_csv(cv.folds[cv.best_index]));
  std::cout << "best_lambda " << io::format_double(cv.best_lambda) << "\n";
  if (a.trimmed) {
    const auto k = select_best(cv.lambda_grid, cv.trimmed_cv_error);
    std::cout << "best_lambda_trimmed " << io::format_double(cv.lambda_grid[k]) << "\n";
  }
  int nc = 0;
  for (int v : cv.not_converged) nc += v;
  if (nc > 0) {
    std::cerr << "warning: " << nc << " fits did not converge\n";
    return 2;
  }
  return 0;
}

int cmd_simulate(const SimulateArgs& a, bool seed_given) {
  auto setup = io::parse_sim_config(io::read_file(a.config), a.config);
  if (seed_given) setup.config.rng_seed = g_seed;
  const auto rows = run_replications(setup.config, setup.methods, {a.timing, setup.trimmed_cv});
  io::write_atomic(a.out, io::sim_results_csv(rows));
  io::write_atomic(a.summary, io::summary_csv(summarize(rows)));
  int nc = 0;
  for (const auto& r : rows) nc += r.converged ? 0 : 1;
  note(std::to_string(rows.size()) + " result rows written to " + a.out);
  if (nc > 0) {
    std::cerr << "warning: " << nc << " selected fits did not converge\n";
    return 2;
  }
  return 0;
}

int cmd_contour(const ContourArgs& a) {
  const GridAxis axis = parse_axis(a.grid);
  const auto sc = contour_scenario(a.contamination, g_seed);
  const fs::path dir = a.out_dir;
  io::write_atomic(dir / "data.csv", io::dataset_csv(sc.data, {"x1", "x2"}, "y"));
  std::string summary = "alpha,argmin_beta1,argmin_beta2,distance\n";
  for (double alpha : a.alphas) {
    const auto surf = loss_surface(sc.data, alpha, axis, axis);
    io::write_atomic(dir / ("surface_alpha_" + file_label(alpha) + ".csv"), io::surface_csv(surf));
    const double dist = (surf.argmin - sc.truth.beta_true).norm();
    summary += io::format_double(alpha) + "," + io::format_double(surf.argmin(0)) + "," +
               io::format_double(surf.argmin(1)) + "," + io::format_double(dist) + "\n";
    std::cout << "alpha " << io::format_double(alpha) << " argmin (" << io::format_double(surf.argmin(0))
              << ", " << io::format_double(surf.argmin(1)) << ") distance "
              << io::format_double(dist) << "\n";
  }
  io::write_atomic(dir / "summary.csv", summary);
  return 0;
}

void add_fit_options(CLI::App* cmd, FitArgs& a, bool with_lambda) {
  cmd->add_option("--data", a.data, "Input CSV with a header row")->required();
  cmd->add_option("--response", a.response, "Response column name")->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "DPD tuning parameter")->capture_default_str();
  if (with_lambda) {
    cmd->add_option("--lambda", a.lambda, "Penalty, or 'auto' for stratified CV")
        ->capture_default_str();
  }
  cmd->add_option("--tol", a.tol, "Convergence tolerance")->capture_default_str();
  cmd->add_option("--max-iter", a.max_iter, "Iteration limit")->capture_default_str();
  cmd->add_option("--init", a.init, "lasso_fixed, lasso_cv or ols")->capture_default_str();
  cmd->add_flag("--no-safeguard", a.no_safeguard, "Disable step halving");
  cmd->add_option("--folds", a.folds, "CV folds")->capture_default_str();
  cmd->add_option("--grid-size", a.grid_size, "Lambda grid size")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust sparse regression with density power divergence"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g_seed, "Master seed for every random stream")->capture_default_str();
  app.add_flag("-v,--verbose", g_verbose, "More messages on stderr");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit one model");
  add_fit_options(fit, fit_args, true);
  fit->add_option("--out", fit_args.out, "Model JSON")->capture_default_str();
  fit->add_option("--trace", fit_args.trace, "Iteration trace CSV");

  PredictArgs pred_args;
  auto* pred = app.add_subcommand("predict", "Predict from a saved model");
  pred->add_option("--model", pred_args.model, "Model JSON")->required();
  pred->add_option("--data", pred_args.data, "Feature CSV")->required();
  pred->add_option("--out", pred_args.out, "Predictions CSV")->capture_default_str();

  CvArgs cv_args;
  auto* cv = app.add_subcommand("cv", "Stratified cross-validation over a lambda path");
  add_fit_options(cv, cv_args.fit, false);
  cv->add_option("--out", cv_args.out_csv, "CV curve CSV")->capture_default_str();
  cv->add_option("--json", cv_args.out_json, "CV result JSON");
  cv->add_option("--folds-out", cv_args.folds_out, "Fold assignment CSV at the chosen lambda");
  cv->add_flag("--trimmed-cv", cv_args.trimmed, "Also report the 10%-trimmed CV error");

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Run the contaminated benchmark");
  sim->add_option("--config", sim_args.config, "key = value config file")->required();
  sim->add_option("--out", sim_args.out, "Per-replication CSV")->capture_default_str();
  sim->add_option("--summary", sim_args.summary, "Median/IQR CSV")->capture_default_str();
  sim->add_flag("--timing", sim_args.timing, "Record runtime_ms");

  ContourArgs con_args;
  auto* con = app.add_subcommand("contour", "Loss surfaces of the two-predictor scenario");
  con->add_option("--contamination", con_args.contamination, "Outlier fraction")
      ->capture_default_str();
  con->add_option("--alpha", con_args.alphas, "Alpha values; 0 is least squares")
      ->delimiter(',');
  con->add_option("--grid", con_args.grid, "min:max:steps per axis")->capture_default_str();
  con->add_option("--out-dir", con_args.out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*fit) return cmd_fit(fit_args);
    if (*pred) return cmd_predict(pred_args);
    if (*cv) return cmd_cv(cv_args);
    if (*sim) return cmd_simulate(sim_args, app.count("--seed") > 0);
    if (*con) return cmd_contour(con_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
