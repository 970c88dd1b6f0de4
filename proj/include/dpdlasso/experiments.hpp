#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dpdlasso/cv.hpp"
#include "dpdlasso/simulation.hpp"

namespace dpdlasso {

/// Axis definition: `steps` equally spaced points from lo to hi inclusive.
struct GridAxis {
  double lo = -10.0;
  double hi = 10.0;
  int steps = 401;

  void validate() const {
    if (steps < 2) throw BadGrid("grid needs at least 2 points per axis");
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw BadGrid("grid bounds must be finite with lo < hi");
    }
  }
  double at(int k) const { return lo + (hi - lo) * k / (steps - 1); }
  double spacing() const { return (hi - lo) / (steps - 1); }
};

/// Loss values over a 2-D coefficient grid; values(a, b) belongs to
/// (axis1.at(a), axis2.at(b)).
struct LossSurface {
  GridAxis axis1;
  GridAxis axis2;
  double alpha = 0.0;
  Matrix values;
  Vector argmin;
};

/// alpha = 0 gives the mean squared residual. Otherwise Q_alpha with sigma^2
/// replaced by the mean squared residual at each grid point.
inline double surface_loss(const Vector& r, double alpha) {
  const double s2 = r.squaredNorm() / static_cast<double>(r.size());
  if (alpha == 0.0) return s2;
  if (s2 <= 0.0) return 0.0;
  return dpd_objective(r, {alpha, s2});
}

inline LossSurface loss_surface(const Dataset& data, double alpha, const GridAxis& axis1,
                                const GridAxis& axis2) {
  if (data.p() != 2) throw DimensionMismatch("loss_surface needs exactly two predictors");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be >= 0");
  axis1.validate();
  axis2.validate();
  LossSurface out{axis1, axis2, alpha, Matrix(axis1.steps, axis2.steps), Vector(2)};
  double best = std::numeric_limits<double>::infinity();
  Vector beta(2);
  for (int a = 0; a < axis1.steps; ++a) {
    for (int b = 0; b < axis2.steps; ++b) {
      beta << axis1.at(a), axis2.at(b);
      const double v = surface_loss(data.y() - data.X() * beta, alpha);
      out.values(a, b) = v;
      if (v < best) {
        best = v;
        out.argmin = beta;
      }
    }
  }
  return out;
}

/// A method in the benchmark: the plain lasso, or DPD-Lasso at one alpha.
struct Method {
  std::string name;
  double alpha = 0.0;
  bool dpd = false;

  static Method lasso() { return {"lasso", 0.0, false}; }
  static Method dpd_lasso(double alpha) {
    std::string label = std::to_string(alpha);
    label.erase(label.find_last_not_of('0') + 1);
    if (label.back() == '.') label.pop_back();
    return {"dpd_lasso_" + label, alpha, true};
  }
};

/// One (replication, method) outcome.
struct SimResult {
  int rep = 0;
  std::string method;
  double alpha = 0.0;
  double lambda = 0.0;
  double rmspe = 0.0;
  double l2_error = 0.0;
  int gamma = 0;
  int fp = 0;
  int fn = 0;
  std::optional<double> runtime_ms;
  bool converged = true;
  /// Diagnostic: RMSPE when the same path is tuned by the trimmed CV error.
  std::optional<double> rmspe_trimmed_cv;
};

struct RunOptions {
  bool timing = false;
  bool trimmed_cv = false;
};

/// Sub-seeds: replicate data from derive_seed(rng_seed, rep); fold seeds
/// from that replicate seed's cv stream.
inline std::vector<SimResult> run_replications(const SimConfig& cfg,
                                               const std::vector<Method>& methods,
                                               const RunOptions& options = {}) {
  cfg.validate();
  if (methods.empty()) throw InvalidArgument("no methods requested");
  std::vector<SimResult> rows;
  for (int rep = 0; rep < cfg.n_reps; ++rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(rep));
    const Replicate data = make_replicate(cfg, rep_seed);
    const auto grid = default_lambda_grid(data.train, cfg.grid_size);
    const std::uint64_t cv_seed = derive_seed(rep_seed, Stream::cv);
    for (const Method& m : methods) {
      const auto t0 = std::chrono::steady_clock::now();
      EstimatorSettings settings;
      const CvResult cv = m.dpd ? tune_lambda(data.train, m.alpha, cfg.dpd_cv_folds, grid, cv_seed,
                                              settings)
                                : tune_lasso_random_folds(data.train, cfg.lasso_cv_folds, grid,
                                                          cv_seed, settings);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      const ModelFit& fit = cv.best_fit();
      SimResult row;
      row.rep = rep;
      row.method = m.name;
      row.alpha = m.alpha;
      row.lambda = fit.lambda;
      row.rmspe = rmspe(data.test.y(), predict(fit, data.test.X()));
      row.l2_error = l2_error(fit.beta, data.truth.beta_true);
      const auto sel = selection_error(fit.beta, data.truth.active_set);
      row.fp = sel.fp;
      row.fn = sel.fn;
      row.gamma = sel.gamma;
      row.converged = fit.converged;
      if (options.timing) row.runtime_ms = ms;
      if (options.trimmed_cv) {
        const auto k = select_best(cv.lambda_grid, cv.trimmed_cv_error);
        row.rmspe_trimmed_cv = rmspe(data.test.y(), predict(cv.fits[k], data.test.X()));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidArgument("quantile of empty data");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SummaryRow {
  std::string method;
  std::string metric;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

/// Median and quartiles of rmspe, l2_error and gamma for each method, in
/// order of first appearance.
inline std::vector<SummaryRow> summarize(const std::vector<SimResult>& rows) {
  std::vector<std::string> names;
  for (const auto& r : rows) {
    if (std::find(names.begin(), names.end(), r.method) == names.end()) names.push_back(r.method);
  }
  std::vector<SummaryRow> out;
  for (const auto& name : names) {
    std::vector<double> rm, l2, g;
    for (const auto& r : rows) {
      if (r.method != name) continue;
      rm.push_back(r.rmspe);
      l2.push_back(r.l2_error);
      g.push_back(r.gamma);
    }
    for (auto [metric, values] : {std::pair{"rmspe", &rm}, {"l2_error", &l2}, {"gamma", &g}}) {
      out.push_back({name, metric, quantile(*values, 0.5), quantile(*values, 0.25),
                     quantile(*values, 0.75)});
    }
  }
  return out;
}

}  // namespace dpdlasso
