#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "dpdlasso/estimator.hpp"
#include "dpdlasso/lasso_path.hpp"
#include "dpdlasso/random.hpp"

namespace dpdlasso {

/// K-fold partition built by l-score stratification.
struct FoldAssignment {
  /// Fold of each row, in 1..K.
  std::vector<int> fold_of;
  int K = 0;
  /// Row indices of each stratum, in ascending-score order.
  std::vector<std::vector<Index>> strata;

  Index n() const noexcept { return static_cast<Index>(fold_of.size()); }
};

struct CvErrorEstimate {
  double error = 0.0;
  /// Mean of the held-out squared errors after dropping the largest 10%.
  double trimmed_error = 0.0;
  int not_converged = 0;
};

struct CvResult {
  std::vector<double> lambda_grid;
  std::vector<double> cv_error;
  std::vector<double> trimmed_cv_error;
  std::vector<int> not_converged;
  double best_lambda = 0.0;
  std::size_t best_index = 0;
  /// Full-data fit at every grid point.
  std::vector<ModelFit> fits;
  std::vector<FoldAssignment> folds;

  const ModelFit& best_fit() const { return fits.at(best_index); }
};

/// l_i = r_i^2 / sigma^2 at the fitted model.
inline Vector l_scores(const Dataset& data, const ModelFit& fit) {
  if (!(fit.sigma2 > 0.0)) throw InvalidSigma("fit.sigma2 must be positive");
  return residuals(data, fit.beta, fit.intercept).array().square() / fit.sigma2;
}

/// Sort rows by score, cut the order into ceil(n/K) consecutive strata of at
/// most K rows, then fill folds 1..K in turn with one uniformly drawn
/// remaining row from every stratum that still has rows.
inline FoldAssignment stratified_folds(const Vector& scores, int K, std::uint64_t seed) {
  const Index n = scores.size();
  if (K < 2 || K > n) throw BadK("K must satisfy 2 <= K <= n (K = " + std::to_string(K) + ")");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores(a) < scores(b); });

  FoldAssignment out;
  out.K = K;
  out.fold_of.assign(static_cast<std::size_t>(n), 0);
  for (Index start = 0; start < n; start += K) {
    const Index stop = std::min<Index>(start + K, n);
    out.strata.emplace_back(order.begin() + start, order.begin() + stop);
  }

  Rng rng(seed);
  auto remaining = out.strata;
  for (int fold = 1; fold <= K; ++fold) {
    for (auto& pool : remaining) {
      if (pool.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t k = pick(rng);
      out.fold_of[static_cast<std::size_t>(pool[k])] = fold;
      pool[k] = pool.back();
      pool.pop_back();
    }
  }
  return out;
}

namespace detail {

inline double trimmed_mean_upper(std::vector<double> v, double frac) {
  std::sort(v.begin(), v.end());
  const auto drop = static_cast<std::size_t>(std::floor(frac * static_cast<double>(v.size())));
  const std::size_t keep = v.size() - drop;
  return std::accumulate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep), 0.0) /
         static_cast<double>(keep);
}

}  // namespace detail

/// Held-out mean squared prediction error over the folds: each fold is
/// predicted by a fit on the complementary rows.
inline CvErrorEstimate cv_error(const Dataset& data, const FoldAssignment& folds, double alpha,
                                double lambda, const EstimatorSettings& settings) {
  if (folds.n() != data.n()) throw DimensionMismatch("fold assignment does not match n");
  EstimatorSettings s = settings;
  s.alpha = alpha;
  s.lambda = lambda;
  std::vector<double> sq(static_cast<std::size_t>(data.n()), 0.0);
  CvErrorEstimate out;
  for (int fold = 1; fold <= folds.K; ++fold) {
    std::vector<Index> train_rows, test_rows;
    for (Index i = 0; i < data.n(); ++i) {
      (folds.fold_of[static_cast<std::size_t>(i)] == fold ? test_rows : train_rows).push_back(i);
    }
    if (test_rows.empty()) continue;
    const auto res = fit_dpd_lasso(data.subset(train_rows), s);
    if (!res.fit.converged) ++out.not_converged;
    const Dataset test = data.subset(test_rows);
    const Vector e = residuals(test, res.fit.beta, res.fit.intercept);
    for (std::size_t k = 0; k < test_rows.size(); ++k) {
      sq[static_cast<std::size_t>(test_rows[k])] = e(static_cast<Index>(k)) * e(static_cast<Index>(k));
    }
  }
  out.error = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(data.n());
  out.trimmed_error = detail::trimmed_mean_upper(sq, 0.10);
  return out;
}

/// Index of the smallest error; among ties the largest lambda wins.
inline std::size_t select_best(const std::vector<double>& grid, const std::vector<double>& err) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < err.size(); ++k) {
    if (err[k] < err[best] || (err[k] == err[best] && grid[k] > grid[best])) best = k;
  }
  return best;
}

/// Default grid: `grid_size` log-spaced values from the null-model lambda
/// (uniform weights, standardized data) down to 1e-4 of it.
inline std::vector<double> default_lambda_grid(const Dataset& data, int grid_size,
                                               bool fit_intercept = true) {
  const auto [work, scaler] = standardize(data, true);
  return log_lambda_grid(lambda_max(work, WeightVector::uniform(work.n()), fit_intercept),
                         grid_size);
}

/// Stratified cross-validation over a lambda path for fixed alpha.
///
/// Full-data fits run down the grid, each warm started at the previous
/// solution. Folds are rebuilt at every lambda from that lambda's l-scores
/// with the same seed, and fold fits start from the full-data solution.
inline CvResult tune_lambda(const Dataset& data, double alpha, int K,
                            const std::vector<double>& grid, std::uint64_t seed,
                            const EstimatorSettings& settings) {
  if (grid.empty()) throw InvalidArgument("lambda grid is empty");
  if (K < 2 || K > data.n()) throw BadK("K must satisfy 2 <= K <= n");
  CvResult out;
  out.lambda_grid = grid;
  EstimatorSettings full = settings;
  full.alpha = alpha;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    full.lambda = grid[k];
    if (k > 0) full.init = Init::provided(out.fits.back().beta);
    const auto res = fit_dpd_lasso(data, full);
    out.fits.push_back(res.fit);

    out.folds.push_back(stratified_folds(l_scores(data, res.fit), K, seed));
    EstimatorSettings fold_settings = full;
    fold_settings.init = Init::provided(res.fit.beta);
    const auto est = cv_error(data, out.folds.back(), alpha, grid[k], fold_settings);
    out.cv_error.push_back(est.error);
    out.trimmed_cv_error.push_back(est.trimmed_error);
    out.not_converged.push_back(est.not_converged + (res.fit.converged ? 0 : 1));
  }
  out.best_index = select_best(out.lambda_grid, out.cv_error);
  out.best_lambda = out.lambda_grid[out.best_index];
  return out;
}

inline CvResult tune_lambda(const Dataset& data, double alpha, int K, int grid_size,
                            std::uint64_t seed, const EstimatorSettings& settings) {
  if (grid_size < 2) throw InvalidArgument("grid_size must be >= 2");
  return tune_lambda(data, alpha, K, default_lambda_grid(data, grid_size), seed, settings);
}

/// Plain lasso tuned by completely random K-fold CV. Every fold runs the
/// lambda path with warm starts.
inline CvResult tune_lasso_random_folds(const Dataset& data, int K,
                                        const std::vector<double>& grid, std::uint64_t seed,
                                        const EstimatorSettings& settings) {
  const auto fold_ids = random_fold_ids(data.n(), K, seed);
  EstimatorSettings s = settings;
  s.alpha = 0.0;
  CvResult out;
  out.lambda_grid = grid;
  std::vector<double> sse(grid.size(), 0.0);
  out.not_converged.assign(grid.size(), 0);
  for (int f = 0; f < K; ++f) {
    const auto [train_rows, test_rows] = split_rows(fold_ids, f);
    const Dataset train = data.subset(train_rows);
    const Dataset test = data.subset(test_rows);
    s.init = settings.init;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      s.lambda = grid[k];
      const auto res = fit_dpd_lasso(train, s);
      if (!res.fit.converged) ++out.not_converged[k];
      s.init = Init::provided(res.fit.beta);
      sse[k] += residuals(test, res.fit.beta, res.fit.intercept).squaredNorm();
    }
  }
  FoldAssignment fa;
  fa.K = K;
  for (int f : fold_ids) fa.fold_of.push_back(f + 1);
  s.init = settings.init;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.cv_error.push_back(sse[k] / static_cast<double>(data.n()));
    out.trimmed_cv_error.push_back(out.cv_error.back());
    s.lambda = grid[k];
    const auto res = fit_dpd_lasso(data, s);
    if (!res.fit.converged) ++out.not_converged[k];
    s.init = Init::provided(res.fit.beta);
    out.fits.push_back(res.fit);
    out.folds.push_back(fa);
  }
  out.best_index = select_best(out.lambda_grid, out.cv_error);
  out.best_lambda = out.lambda_grid[out.best_index];
  return out;
}

}  // namespace dpdlasso
