#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpdlasso/core_data.hpp"
#include "dpdlasso/dpd_loss.hpp"
#include "dpdlasso/lasso_path.hpp"
#include "dpdlasso/weighted_lasso.hpp"

namespace dpdlasso {

enum class InitKind { lasso_cv, lasso_fixed, ols, provided };

/// Initializer for the reweighting loop.
struct Init {
  InitKind kind = InitKind::lasso_fixed;
  /// Only used by `provided`; expressed on the scale of the data passed to
  /// `fit_dpd_lasso` (the original scale).
  Vector beta;

  static Init lasso_cv() { return {InitKind::lasso_cv, {}}; }
  static Init lasso_fixed() { return {InitKind::lasso_fixed, {}}; }
  static Init ols() { return {InitKind::ols, {}}; }
  static Init provided(Vector beta) { return {InitKind::provided, std::move(beta)}; }
};

struct EstimatorSettings {
  double alpha = 1.0;
  double lambda = 0.0;
  double tol = 1e-6;
  int max_iter = 100;
  SolverSettings solver{.max_sweeps = 1000, .coef_tol = 1e-8, .fit_intercept = true};
  Init init;
  /// Folds and seed for the `lasso_cv` initializer.
  int init_cv_folds = 10;
  std::uint64_t init_cv_seed = 0;
  /// Step halving when an iteration raises the step merit.
  bool safeguard = true;

  void validate() const {
    if (!std::isfinite(alpha) || alpha < 0.0) throw InvalidArgument("alpha must be >= 0");
    if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidArgument("lambda must be >= 0");
    if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
    solver.validate();
  }
};

struct IterationRecord {
  double objective = 0.0;
  double sigma2 = 0.0;
  double beta_rel_change = 0.0;
  double sigma2_rel_change = 0.0;
  int safeguards = 0;
};

/// One record per iterate; entry 0 is the initial fit.
struct IterationTrace {
  std::vector<IterationRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  int safeguard_activations() const {
    int total = 0;
    for (const auto& r : records) total += r.safeguards;
    return total;
  }
};

struct InitialFit {
  Vector beta;
  double intercept = 0.0;
  double sigma2 = 0.0;
};

struct DpdLassoResult {
  ModelFit fit;
  IterationTrace trace;
  /// Softmax weights at the returned iterate, one per training row.
  Vector weights;
  /// Inner solves that hit max_sweeps.
  int inner_not_converged = 0;
};

/// mean_i r_i^2, clamped below at sigma2_floor(y).
inline double update_sigma2(const Dataset& data, const Vector& beta, double intercept = 0.0) {
  const Vector r = residuals(data, beta, intercept);
  return std::max(r.squaredNorm() / static_cast<double>(data.n()), sigma2_floor(data.y()));
}

/// Both relative-change tests of the stopping rule. A null current iterate
/// switches the coefficient test to absolute change.
inline bool check_convergence(const Vector& beta_prev, const Vector& beta_curr, double s2_prev,
                              double s2_curr, double tol) {
  const double diff = (beta_curr - beta_prev).norm();
  const double norm = beta_curr.norm();
  const bool beta_ok = norm > 0.0 ? diff / norm <= tol : diff <= tol;
  const bool sigma_ok = std::abs(1.0 - s2_curr / s2_prev) <= tol;
  return beta_ok && sigma_ok;
}

/// Non-robust starting point. `data` is the working (already standardized)
/// dataset; a `provided` beta must be on that same scale.
inline InitialFit initial_fit(const Dataset& data, const EstimatorSettings& settings) {
  InitialFit out;
  const bool icpt = settings.solver.fit_intercept;
  const auto closed_form_intercept = [&](const Vector& beta) {
    return icpt ? (data.y() - data.X() * beta).mean() : 0.0;
  };
  switch (settings.init.kind) {
    case InitKind::ols: {
      Matrix A(data.n(), data.p() + (icpt ? 1 : 0));
      A.leftCols(data.p()) = data.X();
      if (icpt) A.col(data.p()).setOnes();
      const Vector coef = A.completeOrthogonalDecomposition().solve(data.y());
      out.beta = coef.head(data.p());
      out.intercept = icpt ? coef(data.p()) : 0.0;
      break;
    }
    case InitKind::lasso_fixed:
    case InitKind::lasso_cv: {
      double lambda = settings.lambda;
      if (settings.init.kind == InitKind::lasso_cv) {
        lambda = lasso_cv_lambda(data, settings.init_cv_folds, 50, settings.init_cv_seed,
                                 settings.solver);
      }
      const auto sol = solve_weighted_lasso(data, WeightVector::uniform(data.n()), lambda,
                                            std::nullopt, settings.solver);
      out.beta = sol.beta;
      out.intercept = sol.intercept;
      break;
    }
    case InitKind::provided: {
      if (settings.init.beta.size() != data.p()) {
        throw DimensionMismatch("provided initial beta has wrong length");
      }
      out.beta = settings.init.beta;
      out.intercept = closed_form_intercept(out.beta);
      break;
    }
  }
  out.sigma2 = update_sigma2(data, out.beta, out.intercept);
  return out;
}

namespace detail {

struct Iterate {
  Vector beta;
  double intercept = 0.0;
  double sigma2 = 0.0;
  double objective = 0.0;
};

inline Iterate make_iterate(const Dataset& data, Vector beta, double intercept, double alpha,
                            double lambda) {
  Iterate it;
  it.sigma2 = update_sigma2(data, beta, intercept);
  it.objective = penalized_objective(data, beta, {alpha, it.sigma2}, lambda, intercept);
  it.beta = std::move(beta);
  it.intercept = intercept;
  return it;
}

/// Objective that one reweighted step decreases while sigma^2 stays fixed:
/// (2 sigma^2 / alpha) Q_alpha + lambda ||beta||_1, which is the weighted
/// lasso objective's majorized target. At alpha = 0 it is the plain lasso
/// objective with weights 1/n.
inline double step_merit(const Dataset& data, const Vector& beta, double intercept, double alpha,
                         double sigma2, double lambda) {
  const Vector r = residuals(data, beta, intercept);
  const double fit = alpha == 0.0 ? r.squaredNorm() / static_cast<double>(r.size())
                                  : 2.0 * sigma2 / alpha * dpd_objective(r, {alpha, sigma2});
  return fit + lambda * beta.lpNorm<1>();
}

}  // namespace detail

/// Iteratively reweighted lasso for the DPD-penalized objective.
///
/// Works on the centered/scaled copy of `data`: each iteration forms softmax
/// weights at the current (beta, sigma^2), solves the weighted lasso warm
/// started at the current beta, then recomputes sigma^2 from the new beta.
/// If the new beta raises the step merit at the current sigma^2 by more than
/// 1e-8 it is pulled halfway back toward the previous one, at most ten times.
inline DpdLassoResult fit_dpd_lasso(const Dataset& data, const EstimatorSettings& settings) {
  settings.validate();
  const auto [work, scaler] = standardize(data, /*center_y=*/true);
  const double alpha = settings.alpha;
  const double lambda = settings.lambda;

  EstimatorSettings init_settings = settings;
  if (settings.init.kind == InitKind::provided) {
    if (settings.init.beta.size() != data.p()) {
      throw DimensionMismatch("provided initial beta has wrong length");
    }
    init_settings.init.beta = scaler.to_standardized(settings.init.beta);
  }
  const InitialFit start = initial_fit(work, init_settings);

  DpdLassoResult result;
  detail::Iterate cur = detail::make_iterate(work, start.beta, start.intercept, alpha, lambda);
  result.trace.records.push_back({cur.objective, cur.sigma2, 0.0, 0.0, 0});

  bool converged = false;
  int iter = 0;
  while (iter < settings.max_iter && !converged) {
    ++iter;
    const Vector r = residuals(work, cur.beta, cur.intercept);
    const WeightVector w = dpd_weights(r, {alpha, cur.sigma2});
    const LassoSolution sol = solve_weighted_lasso(work, w, lambda, cur.beta, settings.solver);
    if (!sol.converged) ++result.inner_not_converged;

    detail::Iterate next = detail::make_iterate(work, sol.beta, sol.intercept, alpha, lambda);
    int halvings = 0;
    if (settings.safeguard) {
      const double base =
          detail::step_merit(work, cur.beta, cur.intercept, alpha, cur.sigma2, lambda);
      while (halvings < 10 && detail::step_merit(work, next.beta, next.intercept, alpha,
                                                 cur.sigma2, lambda) > base + 1e-8) {
        next = detail::make_iterate(work, 0.5 * (next.beta + cur.beta),
                                    0.5 * (next.intercept + cur.intercept), alpha, lambda);
        ++halvings;
      }
    }

    const double beta_norm = next.beta.norm();
    const double beta_diff = (next.beta - cur.beta).norm();
    IterationRecord rec;
    rec.objective = next.objective;
    rec.sigma2 = next.sigma2;
    rec.beta_rel_change = beta_norm > 0.0 ? beta_diff / beta_norm : beta_diff;
    rec.sigma2_rel_change = std::abs(1.0 - next.sigma2 / cur.sigma2);
    rec.safeguards = halvings;
    result.trace.records.push_back(rec);

    converged = check_convergence(cur.beta, next.beta, cur.sigma2, next.sigma2, settings.tol);
    cur = std::move(next);
  }

  auto [beta, intercept] = scaler.to_original(cur.beta, cur.intercept);
  result.fit.beta = std::move(beta);
  result.fit.intercept = intercept;
  result.fit.sigma2 = cur.sigma2;
  result.fit.alpha = alpha;
  result.fit.lambda = lambda;
  result.fit.n_iter = iter;
  result.fit.converged = converged;
  result.fit.objective = cur.objective;
  result.weights = dpd_weights(residuals(work, cur.beta, cur.intercept), {alpha, cur.sigma2})
                       .values();
  return result;
}

}  // namespace dpdlasso
