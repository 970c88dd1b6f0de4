// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. argv[1] is the CLI binary used by the
// determinism check.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sys/wait.h>

#include "dpdlasso/experiments.hpp"
#include "dpdlasso/io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dpdlasso;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Contour surfaces ------------------------------------------------------

Outcome contour_reproduction() {
  constexpr double kRobustTol = 0.1;
  constexpr double kLsMin10 = 0.25;
  constexpr double kLsMin20 = 0.5;
  constexpr double kMaxSeconds = 30.0;
  constexpr std::uint64_t kSeed = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const GridAxis axis{-10.0, 10.0, 401};
  bool ok = true;
  std::string worst;
  for (double c : {0.10, 0.20}) {
    const auto sc = contour_scenario(c, kSeed);
    for (double alpha : {0.0, 0.25, 0.5, 1.0, 2.0}) {
      const auto s = loss_surface(sc.data, alpha, axis, axis);
      const double d = (s.argmin - sc.truth.beta_true).norm();
      const bool cell = alpha == 0.0 ? d > (c < 0.15 ? kLsMin10 : kLsMin20) : d <= kRobustTol;
      ok = ok && cell;
      worst += fmt(" c=%.2f/a=%g:%.3f", c, alpha, d);
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kMaxSeconds;
  return {ok, fmt("distances%s; %.1f s", worst.c_str(), secs)};
}

// 2. Simulation ordering ---------------------------------------------------

struct PairStats {
  double median_lasso = 0.0, median_dpd = 0.0;
  int wins_rmspe = 0, wins_l2 = 0, wins_gamma = 0, reps = 0;
  double median_dpd_trimmed = 0.0;
};

PairStats compare(const std::vector<SimResult>& rows) {
  std::map<int, const SimResult*> lasso, dpd;
  std::vector<double> rl, rd, rt;
  for (const auto& r : rows) {
    if (r.method == "lasso") {
      lasso[r.rep] = &r;
      rl.push_back(r.rmspe);
    } else {
      dpd[r.rep] = &r;
      rd.push_back(r.rmspe);
      if (r.rmspe_trimmed_cv) rt.push_back(*r.rmspe_trimmed_cv);
    }
  }
  PairStats s;
  s.median_lasso = quantile(rl, 0.5);
  s.median_dpd = quantile(rd, 0.5);
  if (!rt.empty()) s.median_dpd_trimmed = quantile(rt, 0.5);
  for (const auto& [rep, l] : lasso) {
    const SimResult* d = dpd.at(rep);
    ++s.reps;
    s.wins_rmspe += d->rmspe < l->rmspe;
    s.wins_l2 += d->l2_error < l->l2_error;
    s.wins_gamma += d->gamma < l->gamma;
  }
  return s;
}

Outcome simulation_ordering(std::string& diagnostic) {
  constexpr double kMinRatio = 2.0;
  constexpr double kMinWinShare = 0.9;
  constexpr double kCleanMaxRatio = 1.15;
  constexpr double kMaxSeconds = 600.0;
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig cfg;
  cfg.n_reps = 20;
  const std::vector<Method> methods{Method::lasso(), Method::dpd_lasso(1.0)};

  cfg.contamination = 0.10;
  const auto dirty = compare(run_replications(cfg, methods, {false, true}));
  cfg.contamination = 0.0;
  const auto clean = compare(run_replications(cfg, methods));
  const double secs = seconds_since(t0);

  const double ratio = dirty.median_lasso / dirty.median_dpd;
  const double need = kMinWinShare * dirty.reps;
  const bool ok = ratio >= kMinRatio && dirty.wins_rmspe >= need && dirty.wins_l2 >= need &&
                  dirty.wins_gamma >= need &&
                  clean.median_dpd <= kCleanMaxRatio * clean.median_lasso && secs < kMaxSeconds;
  diagnostic = fmt(
      "trimmed-CV selection (diagnostic only) c=10%%: median RMSPE lasso %.3f, dpd %.3f, ratio %.3f",
      dirty.median_lasso, dirty.median_dpd_trimmed, dirty.median_lasso / dirty.median_dpd_trimmed);
  return {ok, fmt("c=10%%: median RMSPE lasso %.3f dpd %.3f ratio %.3f; wins rmspe %d/%d l2 %d/%d "
                  "gamma %d/%d; c=0: lasso %.3f dpd %.3f ratio %.3f; %.0f s",
                  dirty.median_lasso, dirty.median_dpd, ratio, dirty.wins_rmspe, dirty.reps,
                  dirty.wins_l2, dirty.reps, dirty.wins_gamma, dirty.reps, clean.median_lasso,
                  clean.median_dpd, clean.median_dpd / clean.median_lasso, secs)};
}

// 3. Solver optimality -----------------------------------------------------

Outcome solver_optimality() {
  constexpr double kKktTol = 1e-6;
  constexpr double kGridTol = 1e-3;
  constexpr double kMaxSeconds = 60.0;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240);
  std::uniform_int_distribution<Index> nn(5, 200), pp(1, 50);
  std::uniform_real_distribution<double> frac(0.001, 1.2);
  const SolverSettings tight{.max_sweeps = 100000, .coef_tol = 1e-12, .fit_intercept = true};
  double worst_kkt = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto ins = oracle::random_instance(nn(rng), pp(rng), 500 + k);
    const Dataset d(ins.X, ins.y);
    const SolverSettings s{tight.max_sweeps, tight.coef_tol, k % 2 == 0};
    const double lambda = frac(rng) * lambda_max(d, ins.w, s.fit_intercept);
    const auto sol = solve_weighted_lasso(d, ins.w, lambda, std::nullopt, s);
    worst_kkt = std::max(worst_kkt, kkt_check(d, ins.w, lambda, sol.beta, sol.intercept));
  }
  double worst_grid = 0.0;
  std::uniform_real_distribution<double> gfrac(0.05, 0.8);
  for (int k = 0; k < 50; ++k) {
    const Index p = 1 + k % 3;
    const auto ins = oracle::random_instance(30, p, 7000 + k);
    const Dataset d(ins.X, ins.y);
    const SolverSettings s{tight.max_sweeps, tight.coef_tol, false};
    const double lambda = gfrac(rng) * lambda_max(d, ins.w, false);
    const auto sol = solve_weighted_lasso(d, ins.w, lambda, std::nullopt, s);
    const Vector grid = oracle::brute_force_lasso(ins.X, ins.y, ins.w, lambda, 6.0, 0.1);
    worst_grid = std::max(worst_grid, (sol.beta - grid).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst_kkt <= kKktTol && worst_grid <= kGridTol && secs < kMaxSeconds,
          fmt("max KKT residual %.2e; max grid gap %.2e; %.1f s", worst_kkt, worst_grid, secs)};
}

// 4. Alpha = 0 -------------------------------------------------------------

Outcome alpha_zero() {
  constexpr double kCoefTol = 1e-8;
  constexpr int kMaxIter = 2;
  double worst = 0.0;
  int max_iter = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SimConfig cfg;
    cfg.n = 100;
    cfg.p = 20;
    cfg.p_active = 8;
    cfg.n_test = 10;
    const auto rep = make_replicate(cfg, derive_seed(4000, seed));
    const auto [z, scaler] = standardize(rep.train, true);
    EstimatorSettings s;
    s.alpha = 0.0;
    s.lambda = 0.02 * static_cast<double>(seed) * lambda_max(z, WeightVector::uniform(z.n()), true);
    const auto res = fit_dpd_lasso(rep.train, s);
    const auto sol =
        solve_weighted_lasso(z, WeightVector::uniform(z.n()), s.lambda, std::nullopt, s.solver);
    const auto [beta, b0] = scaler.to_original(sol.beta, sol.intercept);
    worst = std::max({worst, (res.fit.beta - beta).cwiseAbs().maxCoeff(), std::abs(res.fit.intercept - b0)});
    max_iter = std::max(max_iter, res.fit.n_iter);
  }
  return {worst <= kCoefTol && max_iter <= kMaxIter,
          fmt("max coefficient gap %.2e; max iterations %d", worst, max_iter)};
}

// 5. Convergence suite -----------------------------------------------------

Outcome convergence_suite() {
  constexpr double kObjSlack = 1e-8;
  constexpr double kWeightBound = 0.1;  // in units of 1/n
  int converged = 0, total = 0, rises = 0, heavy = 0, max_iter = 0;
  double worst_weight = 0.0;
  for (double c : {0.0, 0.10}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto sc = contour_scenario(c, derive_seed(5, seed));
      EstimatorSettings s;
      s.alpha = 1.0;
      s.lambda = 1e-4;
      s.tol = 1e-6;
      s.max_iter = 100;
      const auto res = fit_dpd_lasso(sc.data, s);
      ++total;
      converged += res.fit.converged;
      max_iter = std::max(max_iter, res.fit.n_iter);
      rises += res.trace.records.back().objective > res.trace.records.front().objective + kObjSlack;
      if (!sc.truth.contaminated_idx.empty()) {
        double sum = 0.0;
        for (Index i : sc.truth.contaminated_idx) sum += res.weights(i);
        const double mean_scaled =
            sum / static_cast<double>(sc.truth.contaminated_idx.size()) * static_cast<double>(sc.data.n());
        worst_weight = std::max(worst_weight, mean_scaled);
        heavy += mean_scaled >= kWeightBound;
      }
    }
  }
  return {converged == total && rises == 0 && heavy == 0,
          fmt("converged %d/%d (max %d iterations); objective rises %d; max contaminated weight "
              "%.3f/n (%d above bound)",
              converged, total, max_iter, rises, worst_weight, heavy)};
}

// 6. Fold invariants -------------------------------------------------------

Outcome fold_fuzz() {
  Rng rng(60606);
  std::uniform_int_distribution<Index> nn(2, 400);
  std::uniform_int_distribution<int> ties(0, 2);
  int failures = 0;
  std::string first;
  for (int k = 0; k < 1000; ++k) {
    const Index n = nn(rng);
    std::uniform_int_distribution<int> kk(2, static_cast<int>(std::min<Index>(n, 20)));
    const int K = kk(rng);
    const std::uint64_t seed = rng();
    Vector scores(n);
    std::exponential_distribution<double> e;
    const bool tied = ties(rng) == 0;
    for (Index i = 0; i < n; ++i) scores(i) = tied ? std::floor(3.0 * e(rng)) : e(rng);

    const auto a = stratified_folds(scores, K, seed);
    const auto b = stratified_folds(scores, K, seed);
    bool ok = a.fold_of == b.fold_of;

    // Partition: every row in exactly one fold in 1..K, no empty fold.
    std::vector<int> sizes(static_cast<std::size_t>(K) + 1, 0);
    for (int f : a.fold_of) {
      if (f < 1 || f > K) ok = false;
      else ++sizes[static_cast<std::size_t>(f)];
    }
    for (int f = 1; f <= K; ++f) ok = ok && sizes[static_cast<std::size_t>(f)] > 0;

    // Strata rebuilt independently from the ranked scores.
    std::vector<std::pair<double, Index>> ranked;
    for (Index i = 0; i < n; ++i) ranked.emplace_back(scores(i), i);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    for (Index start = 0; start < n; start += K) {
      const Index stop = std::min<Index>(start + K, n);
      std::set<int> seen;
      for (Index r = start; r < stop; ++r) {
        const int f = a.fold_of[static_cast<std::size_t>(ranked[static_cast<std::size_t>(r)].second)];
        ok = ok && seen.insert(f).second;
      }
      if (stop - start == K) ok = ok && static_cast<int>(seen.size()) == K;
    }
    if (n % K == 0) {
      for (int f = 1; f <= K; ++f) ok = ok && sizes[static_cast<std::size_t>(f)] == n / K;
    }
    if (!ok) {
      if (failures == 0) first = fmt(" first failure n=%ld K=%d", static_cast<long>(n), K);
      ++failures;
    }
  }
  return {failures == 0, fmt("%d/1000 cases violate an invariant%s", failures, first.c_str())};
}

// 7. Generator calibration -------------------------------------------------

Outcome generator_calibration() {
  constexpr double kSnrRel = 0.10;
  constexpr double kSeMultiple = 5.0;
  SimConfig cfg;
  cfg.n = 10000;
  cfg.n_test = 10;
  const auto rep = make_replicate(cfg, derive_seed(7, 1));
  const Vector mu = rep.train.X() * rep.truth.beta_true;
  const double snr = sample_variance(mu) / sample_variance(rep.truth.noise);
  const Matrix X = generate_ar1_design(cfg.n, cfg.p, cfg.rho, derive_seed(7, 2));
  const double n = static_cast<double>(cfg.n);
  double worst = 0.0;
  for (Index lag = 0; lag <= 3; ++lag) {
    const double target = std::pow(cfg.rho, static_cast<double>(lag));
    const double se = std::sqrt((1.0 + target * target) / n);
    for (Index j = 0; j + lag < cfg.p; ++j) {
      const Vector a = X.col(j).array() - X.col(j).mean();
      const Vector b = X.col(j + lag).array() - X.col(j + lag).mean();
      worst = std::max(worst, std::abs(a.dot(b) / (n - 1.0) - target) / se);
    }
  }
  return {std::abs(snr / cfg.snr - 1.0) <= kSnrRel && worst <= kSeMultiple,
          fmt("empirical SNR %.3f; worst covariance deviation %.2f SE", snr, worst)};
}

// 8. CLI determinism -------------------------------------------------------

int run_cli(const std::string& cli, const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + cli + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return files;
}

Outcome cli_determinism(const std::string& cli) {
  const auto root = fs::temp_directory_path() / "dpdlasso_acceptance";
  fs::remove_all(root);
  std::vector<std::map<std::string, std::string>> runs;
  int bad_exit = 0;
  for (int k = 0; k < 2; ++k) {
    const auto dir = root / ("run" + std::to_string(k));
    fs::create_directories(dir);
    io::write_atomic(dir / "sim.cfg",
                     "n = 100\np = 20\np_active = 10\nn_test = 200\nn_reps = 2\n"
                     "contamination = 0.1\ngrid_size = 20\nmethods = lasso,dpd:1\n");
    bad_exit += run_cli(cli, dir, "--seed 11 simulate --config sim.cfg --out sim.csv --summary summary.csv") != 0;
    bad_exit += run_cli(cli, dir, "--seed 3 contour --contamination 0.2 --out-dir contour") != 0;
    std::error_code ec;
    fs::remove(dir / "sim.cfg", ec);
    runs.push_back(snapshot(dir));
  }
  fs::remove_all(root);
  const bool same = runs[0] == runs[1];
  return {bad_exit == 0 && same && runs[0].size() == 9,
          fmt("%zu files per run; identical %s; failed invocations %d", runs[0].size(),
              same ? "yes" : "no", bad_exit)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path to dpdlasso_cli>\n");
    return 1;
  }
  const std::string cli = argv[1];
  std::string sim_diag;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 contour reproduction", contour_reproduction},
      {"2 simulation robustness ordering", [&] { return simulation_ordering(sim_diag); }},
      {"3 solver optimality", solver_optimality},
      {"4 alpha=0 degeneration", alpha_zero},
      {"5 reweighting convergence suite", convergence_suite},
      {"6 fold invariants", fold_fuzz},
      {"7 generator calibration", generator_calibration},
      {"8 end-to-end determinism", [&] { return cli_determinism(cli); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    if (!sim_diag.empty()) {
      std::printf("  note: %s\n", sim_diag.c_str());
      sim_diag.clear();
    }
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
