#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dpdlasso/random.hpp"
#include "dpdlasso/weighted_lasso.hpp"

namespace dpdlasso {

/// `size` log-spaced values from lambda_max down to ratio * lambda_max.
inline std::vector<double> log_lambda_grid(double lambda_max, int size, double ratio = 1e-4) {
  if (size < 2) throw InvalidArgument("grid size must be >= 2");
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    throw InvalidArgument("lambda_max must be positive and finite");
  }
  std::vector<double> grid(static_cast<std::size_t>(size));
  const double lo = std::log(lambda_max * ratio);
  const double hi = std::log(lambda_max);
  for (int k = 0; k < size; ++k) {
    grid[static_cast<std::size_t>(k)] =
        std::exp(hi + (lo - hi) * static_cast<double>(k) / static_cast<double>(size - 1));
  }
  grid.front() = lambda_max;
  return grid;
}

/// Completely random K-fold split: a seeded permutation dealt round-robin.
/// Returns 0-based fold ids.
inline std::vector<int> random_fold_ids(Index n, int K, std::uint64_t seed) {
  if (K < 2 || K > n) throw BadK("K must satisfy 2 <= K <= n");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < perm.size(); ++k) {
    fold[static_cast<std::size_t>(perm[k])] = static_cast<int>(k % static_cast<std::size_t>(K));
  }
  return fold;
}

/// Split rows by fold id into (train, test) index lists.
inline std::pair<std::vector<Index>, std::vector<Index>> split_rows(const std::vector<int>& fold_of,
                                                                    int fold) {
  std::pair<std::vector<Index>, std::vector<Index>> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    (fold_of[i] == fold ? out.second : out.first).push_back(static_cast<Index>(i));
  }
  return out;
}

/// Plain lasso K-fold CV on an already centered/scaled dataset, with
/// warm starts along the path inside every fold. Returns the lambda with
/// the smallest held-out mean squared error (ties toward larger lambda).
inline double lasso_cv_lambda(const Dataset& data, int K, int grid_size, std::uint64_t seed,
                              const SolverSettings& solver) {
  const auto uniform = WeightVector::uniform(data.n());
  const auto grid = log_lambda_grid(lambda_max(data, uniform, solver.fit_intercept), grid_size);
  const auto fold_of = random_fold_ids(data.n(), K, seed);
  std::vector<double> sse(grid.size(), 0.0);
  for (int f = 0; f < K; ++f) {
    const auto [train_rows, test_rows] = split_rows(fold_of, f);
    const Dataset train = data.subset(train_rows);
    const Dataset test = data.subset(test_rows);
    const auto w = WeightVector::uniform(train.n());
    std::optional<Vector> warm;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto sol = solve_weighted_lasso(train, w, grid[k], warm, solver);
      warm = sol.beta;
      sse[k] += residuals(test, sol.beta, sol.intercept).squaredNorm();
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (sse[k] < sse[best]) best = k;
  }
  return grid[best];
}

}  // namespace dpdlasso
