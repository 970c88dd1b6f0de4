#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpdlasso/core_data.hpp"
#include "dpdlasso/dpd_loss.hpp"

namespace dpdlasso {

struct SolverSettings {
  int max_sweeps = 1000;
  /// Stop once the largest absolute coefficient change in a sweep is below this.
  double coef_tol = 1e-8;
  bool fit_intercept = false;

  void validate() const {
    if (max_sweeps < 1) throw InvalidArgument("max_sweeps must be >= 1");
    if (!(coef_tol > 0.0)) throw InvalidArgument("coef_tol must be > 0");
  }
};

struct LassoSolution {
  Vector beta;
  double intercept = 0.0;
  int n_sweeps = 0;
  bool converged = false;
  double kkt_residual = 0.0;
};

/// Called after every sweep with (sweep index, beta, intercept, objective).
using SweepObserver = std::function<void(int, const Vector&, double, double)>;

inline double soft_threshold(double z, double t) {
  const double mag = std::abs(z) - t;
  if (mag <= 0.0) return 0.0;
  return z > 0.0 ? mag : -mag;
}

namespace detail {

inline void check_weights(const Vector& w, Index n) {
  if (w.size() != n) throw DimensionMismatch("weight length does not match n");
  if (!w.allFinite() || (w.array() < 0.0).any() || !(w.sum() > 0.0)) {
    throw InvalidArgument("weights must be finite, non-negative and not all zero");
  }
}

}  // namespace detail

/// sum_i w_i (y_i - b0 - x_i'beta)^2 + lambda * ||beta||_1
inline double weighted_lasso_objective(const Dataset& data, const Vector& weights,
                                       double lambda, const Vector& beta, double intercept = 0.0) {
  const Vector r = residuals(data, beta, intercept);
  return weights.dot(r.cwiseAbs2()) + lambda * beta.lpNorm<1>();
}

namespace detail {

/// Rows of the weighted-centered problem scaled by sqrt(w).
struct CenteredProblem {
  Matrix Xs;
  Vector ys;
  Vector x_bar;
  double y_bar = 0.0;
};

inline CenteredProblem center_problem(const Dataset& data, const Vector& w, bool fit_intercept) {
  CenteredProblem out{Matrix(), Vector(), Vector::Zero(data.p()), 0.0};
  if (fit_intercept) {
    const double w_total = w.sum();
    out.x_bar = data.X().transpose() * w / w_total;
    out.y_bar = w.dot(data.y()) / w_total;
  }
  const Vector sw = w.cwiseSqrt();
  out.Xs = (data.X().rowwise() - out.x_bar.transpose()).array().colwise() * sw.array();
  out.ys = (data.y().array() - out.y_bar) * sw.array();
  return out;
}

}  // namespace detail

/// Smallest lambda at which beta = 0 satisfies the optimality conditions.
/// With an intercept the response is centered by its weighted mean first.
inline double lambda_max(const Dataset& data, const Vector& weights, bool fit_intercept) {
  detail::check_weights(weights, data.n());
  const auto cp = detail::center_problem(data, weights, fit_intercept);
  return 2.0 * (cp.Xs.transpose() * cp.ys).cwiseAbs().maxCoeff();
}

/// Largest violation of the lasso optimality conditions at beta, with
/// g_j = 2 sum_i w_i x_ij r_i.
inline double kkt_check(const Dataset& data, const Vector& weights, double lambda,
                        const Vector& beta, double intercept = 0.0) {
  detail::check_weights(weights, data.n());
  const Vector r = residuals(data, beta, intercept);
  const Vector g = 2.0 * (data.X().transpose() * weights.cwiseProduct(r));
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double v = beta(j) == 0.0 ? std::max(std::abs(g(j)) - lambda, 0.0)
                                    : std::abs(g(j) - lambda * (beta(j) > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

/// Cyclic coordinate descent for
///   min sum_i w_i (y_i - b0 - x_i'beta)^2 + lambda ||beta||_1
/// in covariance form: with the intercept profiled out, the problem only
/// needs G = X_c' W X_c and c = X_c' W y_c for the weighted-centered data.
/// Coordinates are visited in increasing order; the intercept is refreshed
/// after every sweep.
inline LassoSolution solve_weighted_lasso(const Dataset& data, const Vector& weights,
                                          double lambda,
                                          const std::optional<Vector>& warm_start,
                                          const SolverSettings& settings,
                                          const SweepObserver& observer = {}) {
  settings.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
  const Index n = data.n();
  const Index p = data.p();
  detail::check_weights(weights, n);
  if (warm_start && warm_start->size() != p) {
    throw DimensionMismatch("warm start length does not match p");
  }

  const auto [Xs, ys, x_bar, y_bar] = detail::center_problem(data, weights, settings.fit_intercept);
  const Matrix G = Xs.transpose() * Xs;
  const Vector c = Xs.transpose() * ys;

  LassoSolution sol;
  sol.beta = warm_start ? *warm_start : Vector::Zero(p);
  Vector Gb = G * sol.beta;

  auto update = [&](Index j) {
    const double old = sol.beta(j);
    double updated = 0.0;
    if (G(j, j) > 0.0) {
      const double z = 2.0 * (c(j) - Gb(j) + G(j, j) * old);
      updated = soft_threshold(z, lambda) / (2.0 * G(j, j));
    }
    const double delta = updated - old;
    if (delta != 0.0) {
      Gb += delta * G.col(j);
      sol.beta(j) = updated;
    }
    return std::abs(delta);
  };
  auto refresh_intercept = [&] {
    sol.intercept = settings.fit_intercept ? y_bar - x_bar.dot(sol.beta) : 0.0;
  };
  refresh_intercept();

  for (int sweep = 1; sweep <= settings.max_sweeps; ++sweep) {
    const double old_intercept = sol.intercept;
    double max_change = 0.0;
    for (Index j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
    refresh_intercept();
    max_change = std::max(max_change, std::abs(sol.intercept - old_intercept));
    sol.n_sweeps = sweep;
    if (observer) {
      const double loss = (ys - Xs * sol.beta).squaredNorm();
      observer(sweep, sol.beta, sol.intercept, loss + lambda * sol.beta.lpNorm<1>());
    }
    if (max_change <= settings.coef_tol) {
      sol.converged = true;
      break;
    }
  }
  sol.kkt_residual = kkt_check(data, weights, lambda, sol.beta, sol.intercept);
  return sol;
}

inline double weighted_lasso_objective(const Dataset& data, const WeightVector& weights,
                                       double lambda, const Vector& beta, double intercept = 0.0) {
  return weighted_lasso_objective(data, weights.values(), lambda, beta, intercept);
}

inline double lambda_max(const Dataset& data, const WeightVector& weights, bool fit_intercept) {
  return lambda_max(data, weights.values(), fit_intercept);
}

inline double kkt_check(const Dataset& data, const WeightVector& weights, double lambda,
                        const Vector& beta, double intercept = 0.0) {
  return kkt_check(data, weights.values(), lambda, beta, intercept);
}

inline LassoSolution solve_weighted_lasso(const Dataset& data, const WeightVector& weights,
                                          double lambda,
                                          const std::optional<Vector>& warm_start,
                                          const SolverSettings& settings,
                                          const SweepObserver& observer = {}) {
  return solve_weighted_lasso(data, weights.values(), lambda, warm_start, settings, observer);
}

}  // namespace dpdlasso
