#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "dpdlasso/core_data.hpp"

namespace dpdlasso {

/// Robustness parameter alpha and noise variance sigma^2 of the DPD loss.
struct DpdParams {
  double alpha = 1.0;
  double sigma2 = 1.0;

  void validate() const {
    if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) {
      throw InvalidSigma("sigma2 must be positive and finite, got " + std::to_string(sigma2));
    }
    if (!std::isfinite(alpha) || alpha < 0.0) {
      throw InvalidArgument("alpha must be finite and >= 0, got " + std::to_string(alpha));
    }
  }
};

/// Lower clamp for sigma^2: 1e-12 times the sample variance of y.
inline double sigma2_floor(const Vector& y) {
  double var = 0.0;
  if (y.size() > 1) {
    var = (y.array() - y.mean()).square().sum() / static_cast<double>(y.size() - 1);
  }
  return std::max(1e-12 * var, std::numeric_limits<double>::min());
}

/// Non-negative observation weights summing to one.
class WeightVector {
 public:
  explicit WeightVector(Vector w) : w_(std::move(w)) {
    if (w_.size() < 1) throw InvalidArgument("weight vector is empty");
    if (!w_.allFinite() || (w_.array() < 0.0).any()) {
      throw InvalidArgument("weights must be finite and non-negative");
    }
    if (std::abs(w_.sum() - 1.0) > 1e-12) {
      throw InvalidArgument("weights must sum to one");
    }
  }

  static WeightVector uniform(Index n) {
    return WeightVector(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  /// Rescales arbitrary non-negative values to unit sum.
  static WeightVector normalized(const Vector& v) {
    const double total = v.sum();
    if (!(total > 0.0)) throw InvalidArgument("weights must have positive total");
    return WeightVector(v / total);
  }

  const Vector& values() const noexcept { return w_; }
  Index size() const noexcept { return w_.size(); }
  double operator[](Index i) const { return w_(i); }

 private:
  Vector w_;
};

/// h_i = -r_i^2 / (2 sigma^2).
inline Vector h_scores(const Vector& resid, const DpdParams& params) {
  params.validate();
  return -resid.array().square() / (2.0 * params.sigma2);
}

inline Vector h_scores(const Dataset& data, const Vector& beta, const DpdParams& params,
                       double intercept = 0.0) {
  return h_scores(residuals(data, beta, intercept), params);
}

/// Q_alpha = -log(mean_i exp(alpha h_i)), stabilized by subtracting the
/// largest exponent before exponentiating.
inline double dpd_objective(const Vector& resid, const DpdParams& params) {
  if (resid.size() < 1) throw InvalidArgument("no residuals");
  const Vector a = params.alpha * h_scores(resid, params).array();
  if (params.alpha == 0.0) return 0.0;
  const double top = a.maxCoeff();
  const double mean_shifted = (a.array() - top).exp().mean();
  // Every exponent is <= 0, so Q >= 0; clamp negative rounding to zero.
  return std::max(0.0, -(top + std::log(mean_shifted)));
}

inline double dpd_objective(const Dataset& data, const Vector& beta, const DpdParams& params,
                            double intercept = 0.0) {
  return dpd_objective(residuals(data, beta, intercept), params);
}

inline double penalized_objective(const Dataset& data, const Vector& beta, const DpdParams& params,
                                  double lambda, double intercept = 0.0) {
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  return dpd_objective(data, beta, params, intercept) + lambda * beta.lpNorm<1>();
}

/// Softmax weights w_i = exp(alpha h_i) / sum_j exp(alpha h_j).
inline WeightVector dpd_weights(const Vector& resid, const DpdParams& params) {
  if (resid.size() < 1) throw InvalidArgument("no residuals");
  const Vector a = params.alpha * h_scores(resid, params).array();
  const Vector e = (a.array() - a.maxCoeff()).exp();
  return WeightVector(e / e.sum());
}

inline WeightVector dpd_weights(const Dataset& data, const Vector& beta, const DpdParams& params,
                                double intercept = 0.0) {
  return dpd_weights(residuals(data, beta, intercept), params);
}

}  // namespace dpdlasso
