#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dpdlasso/core_data.hpp"
#include "dpdlasso/random.hpp"

namespace dpdlasso {

/// Parameters of the contaminated sparse-regression benchmark.
struct SimConfig {
  Index n = 300;
  Index p = 50;
  Index p_active = 25;
  double rho = 0.7;
  double snr = 5.0;
  double intercept_true = 2.5;
  double coef_low = 0.5;
  double coef_high = 1.5;
  double contamination = 0.0;
  double shift_magnitude = 20.0;
  Index n_test = 1000;
  int n_reps = 20;
  std::uint64_t rng_seed = 1;
  int dpd_cv_folds = 5;
  int lasso_cv_folds = 20;
  int grid_size = 50;

  void validate() const {
    if (n < 2 || p < 1 || n_test < 1 || n_reps < 1) throw BadCounts("n, p, n_test, n_reps too small");
    if (p_active < 0 || p_active > p) throw BadCounts("p_active must lie in [0, p]");
    if (!(std::abs(rho) < 1.0)) throw BadRho("rho must lie in (-1, 1)");
    if (!(snr > 0.0)) throw InvalidArgument("snr must be positive");
    if (!(contamination >= 0.0 && contamination < 0.5)) {
      throw BadFraction("contamination must lie in [0, 0.5)");
    }
    if (!(coef_low <= coef_high)) throw InvalidArgument("coef_low must be <= coef_high");
    if (dpd_cv_folds < 2 || lasso_cv_folds < 2) throw BadK("CV folds must be >= 2");
    if (grid_size < 2) throw InvalidArgument("grid_size must be >= 2");
  }
};

struct GroundTruth {
  Vector beta_true;
  std::vector<Index> active_set;
  double sigma_eps2 = 0.0;
  /// Realized training noise, needed to orient the vertical outliers.
  Vector noise;
  std::vector<Index> contaminated_idx;
};

/// Rows x_i ~ N(0, Sigma) with Sigma_jk = rho^|j-k|, built sequentially as
/// x_1 = z_1, x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j.
inline Matrix generate_ar1_design(Index n, Index p, double rho, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw BadRho("rho must lie in (-1, 1)");
  if (n < 1 || p < 1) throw BadCounts("design needs n >= 1 and p >= 1");
  Rng rng(seed);
  std::normal_distribution<double> z;
  const double innov = std::sqrt(1.0 - rho * rho);
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = z(rng);
    for (Index j = 1; j < p; ++j) X(i, j) = rho * X(i, j - 1) + innov * z(rng);
  }
  return X;
}

/// Sorted indices of k draws without replacement from {0..n-1}.
inline std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Sparse coefficients: a uniformly drawn active set carrying
/// Uniform[coef_low, coef_high] values. Noise fields are left empty.
inline GroundTruth generate_truth(Index p, Index p_active, double coef_low, double coef_high,
                                  std::uint64_t seed) {
  if (p < 1 || p_active < 0 || p_active > p) throw BadCounts("need 0 <= p_active <= p");
  Rng rng(seed);
  GroundTruth truth;
  truth.active_set = sample_without_replacement(p, p_active, rng);
  truth.beta_true = Vector::Zero(p);
  std::uniform_real_distribution<double> coef(coef_low, coef_high);
  for (Index j : truth.active_set) truth.beta_true(j) = coef(rng);
  return truth;
}

/// floor(c n), robust to c n landing just below an integer (0.29 * 100).
inline Index contaminated_count(double c, Index n) {
  return static_cast<Index>(std::floor(c * static_cast<double>(n) + 1e-9));
}

inline double sample_variance(const Vector& v) {
  if (v.size() < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

/// Noise variance that puts var(mu) / var(eps) at `snr`.
inline double calibrate_noise(const Vector& mu, double snr) {
  if (!(snr > 0.0)) throw InvalidArgument("snr must be positive");
  const double v = sample_variance(mu);
  if (!(v > 0.0)) throw DegenerateSignal("signal has zero variance");
  return v / snr;
}

struct Contaminated {
  Dataset data;
  std::vector<Index> rows;
};

/// Bad-leverage plus vertical-outlier contamination of floor(c n) rows.
///
/// Each chosen row gets +/-shift on a random non-empty subset of predictors
/// (each column kept with probability 1/2, redrawn until non-empty) and a
/// response shift of -sign(eps_i) * shift, where eps_i is the true noise.
inline Contaminated contaminate(const Dataset& data, const GroundTruth& truth, double c,
                                double shift, std::uint64_t seed) {
  if (!(c >= 0.0 && c < 0.5)) throw BadFraction("contamination must lie in [0, 0.5)");
  if (truth.noise.size() != data.n()) throw DimensionMismatch("noise length does not match n");
  const auto m = contaminated_count(c, data.n());
  Rng rng(seed);
  auto rows = sample_without_replacement(data.n(), m, rng);
  Matrix X = data.X();
  Vector y = data.y();
  std::bernoulli_distribution coin(0.5);
  for (Index i : rows) {
    std::vector<Index> cols;
    while (cols.empty()) {
      for (Index j = 0; j < data.p(); ++j) {
        if (coin(rng)) cols.push_back(j);
      }
    }
    for (Index j : cols) X(i, j) += coin(rng) ? shift : -shift;
    y(i) += truth.noise(i) >= 0.0 ? -shift : shift;
  }
  return {Dataset(std::move(X), std::move(y)), std::move(rows)};
}

struct Scenario {
  Dataset data;
  GroundTruth truth;
};

/// Two-predictor robustness scenario: n = 100, corr 0.5, beta = (5, -5), no
/// intercept, noise variance 0.05^2 times the sample variance of the mean.
/// floor(c n) rows are replaced by x1 ~ U[-0.1, 0.1], x2 ~ U[1, 2],
/// y = -3 x1 + 3 x2.
inline Scenario contour_scenario(double c, std::uint64_t seed) {
  if (!(c >= 0.0 && c < 0.5)) throw BadFraction("contamination must lie in [0, 0.5)");
  constexpr Index n = 100;
  Matrix X = generate_ar1_design(n, 2, 0.5, derive_seed(seed, Stream::design));
  GroundTruth truth;
  truth.beta_true = Vector{{5.0, -5.0}};
  truth.active_set = {0, 1};
  const Vector mu = X * truth.beta_true;
  truth.sigma_eps2 = 0.05 * 0.05 * sample_variance(mu);
  Rng noise_rng(derive_seed(seed, Stream::noise));
  std::normal_distribution<double> z;
  truth.noise.resize(n);
  for (Index i = 0; i < n; ++i) truth.noise(i) = std::sqrt(truth.sigma_eps2) * z(noise_rng);
  Vector y = mu + truth.noise;

  Rng out_rng(derive_seed(seed, Stream::outliers));
  const auto m = contaminated_count(c, n);
  truth.contaminated_idx = sample_without_replacement(n, m, out_rng);
  std::uniform_real_distribution<double> u1(-0.1, 0.1);
  std::uniform_real_distribution<double> u2(1.0, 2.0);
  for (Index i : truth.contaminated_idx) {
    X(i, 0) = u1(out_rng);
    X(i, 1) = u2(out_rng);
    y(i) = -3.0 * X(i, 0) + 3.0 * X(i, 1);
  }
  return {Dataset(std::move(X), std::move(y)), std::move(truth)};
}

/// Training set, clean test set, and truth for one benchmark replication.
struct Replicate {
  Dataset train;
  Dataset test;
  GroundTruth truth;
};

inline Replicate make_replicate(const SimConfig& cfg, std::uint64_t rep_seed) {
  GroundTruth truth =
      generate_truth(cfg.p, cfg.p_active, cfg.coef_low, cfg.coef_high,
                     derive_seed(rep_seed, Stream::truth));
  const Matrix X = generate_ar1_design(cfg.n, cfg.p, cfg.rho, derive_seed(rep_seed, Stream::design));
  const Vector signal = X * truth.beta_true;
  truth.sigma_eps2 = cfg.p_active > 0 ? calibrate_noise(signal, cfg.snr) : 1.0;
  const double sd = std::sqrt(truth.sigma_eps2);

  std::normal_distribution<double> z;
  Rng noise_rng(derive_seed(rep_seed, Stream::noise));
  truth.noise.resize(cfg.n);
  for (Index i = 0; i < cfg.n; ++i) truth.noise(i) = sd * z(noise_rng);
  const Dataset clean(X, (signal + truth.noise).array() + cfg.intercept_true);
  auto cont = contaminate(clean, truth, cfg.contamination, cfg.shift_magnitude,
                          derive_seed(rep_seed, Stream::contamination));
  truth.contaminated_idx = std::move(cont.rows);

  const Matrix Xt =
      generate_ar1_design(cfg.n_test, cfg.p, cfg.rho, derive_seed(rep_seed, Stream::test_design));
  Rng test_rng(derive_seed(rep_seed, Stream::test_noise));
  Vector yt = (Xt * truth.beta_true).array() + cfg.intercept_true;
  for (Index i = 0; i < cfg.n_test; ++i) yt(i) += sd * z(test_rng);
  return {std::move(cont.data), Dataset(Xt, std::move(yt)), std::move(truth)};
}

inline double rmspe(const Vector& y_test, const Vector& y_pred) {
  if (y_test.size() != y_pred.size() || y_test.size() == 0) {
    throw DimensionMismatch("rmspe needs equal, non-empty lengths");
  }
  return std::sqrt((y_test - y_pred).squaredNorm() / static_cast<double>(y_test.size()));
}

inline double l2_error(const Vector& beta_hat, const Vector& beta_true) {
  if (beta_hat.size() != beta_true.size()) throw DimensionMismatch("l2_error length mismatch");
  return (beta_hat - beta_true).norm();
}

struct SelectionError {
  int fp = 0;
  int fn = 0;
  int gamma = 0;
};

/// A coefficient counts as selected iff it is exactly nonzero.
inline SelectionError selection_error(const Vector& beta_hat, const std::vector<Index>& active_set) {
  std::vector<char> active(static_cast<std::size_t>(beta_hat.size()), 0);
  for (Index j : active_set) {
    if (j < 0 || j >= beta_hat.size()) throw DimensionMismatch("active index out of range");
    active[static_cast<std::size_t>(j)] = 1;
  }
  SelectionError e;
  for (Index j = 0; j < beta_hat.size(); ++j) {
    const bool sel = beta_hat(j) != 0.0;
    if (sel && !active[static_cast<std::size_t>(j)]) ++e.fp;
    if (!sel && active[static_cast<std::size_t>(j)]) ++e.fn;
  }
  e.gamma = e.fp + e.fn;
  return e;
}

}  // namespace dpdlasso
