#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "dpdlasso/errors.hpp"

namespace dpdlasso {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// An n x p design matrix paired with its length-n response.
///
/// Construction validates shape and finiteness; the object is immutable
/// afterwards, so a single instance can be shared by concurrent fits.
class Dataset {
 public:
  Dataset(Matrix X, Vector y) : X_(std::move(X)), y_(std::move(y)) {
    if (X_.rows() < 1 || X_.cols() < 1) {
      throw DimensionMismatch("dataset needs at least one row and one column");
    }
    if (X_.rows() != y_.size()) {
      throw DimensionMismatch("X has " + std::to_string(X_.rows()) + " rows but y has " +
                              std::to_string(y_.size()) + " entries");
    }
    if (!X_.allFinite() || !y_.allFinite()) {
      throw NonFinite("dataset contains NaN or Inf");
    }
  }

  const Matrix& X() const noexcept { return X_; }
  const Vector& y() const noexcept { return y_; }
  Index n() const noexcept { return X_.rows(); }
  Index p() const noexcept { return X_.cols(); }

  /// Rows selected by `rows`, in the given order.
  Dataset subset(std::span<const Index> rows) const {
    Matrix X(static_cast<Index>(rows.size()), p());
    Vector y(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      X.row(static_cast<Index>(k)) = X_.row(rows[k]);
      y(static_cast<Index>(k)) = y_(rows[k]);
    }
    return Dataset(std::move(X), std::move(y));
  }

 private:
  Matrix X_;
  Vector y_;
};

/// Column centering/scaling record. Scales are sample standard deviations
/// (n - 1 denominator).
struct Standardizer {
  Vector col_means;
  Vector col_scales;
  double y_mean = 0.0;

  Matrix apply(const Matrix& X) const {
    return ((X.rowwise() - col_means.transpose()).array().rowwise() /
            col_scales.transpose().array())
        .matrix();
  }
  Matrix invert(const Matrix& Z) const {
    return ((Z.array().rowwise() * col_scales.transpose().array()).matrix().rowwise() +
            col_means.transpose());
  }
  Vector apply_y(const Vector& y) const { return y.array() - y_mean; }
  Vector invert_y(const Vector& y) const { return y.array() + y_mean; }

  /// Maps a fit y_c = b0 + z'b on the standardized scale to the original
  /// scale y = intercept + x'beta.
  std::pair<Vector, double> to_original(const Vector& b, double b0) const {
    Vector beta = b.array() / col_scales.array();
    double intercept = y_mean + b0 - col_means.dot(beta);
    return {std::move(beta), intercept};
  }

  /// Inverse of `to_original` for the slope part.
  Vector to_standardized(const Vector& beta) const {
    return (beta.array() * col_scales.array()).matrix();
  }
};

/// Result of a penalized fit. Coefficients live on the original data scale;
/// `objective` is the penalized objective on the standardized scale.
struct ModelFit {
  Vector beta;
  double intercept = 0.0;
  double sigma2 = 1.0;
  double alpha = 0.0;
  double lambda = 0.0;
  int n_iter = 0;
  bool converged = false;
  double objective = 0.0;
};

inline std::pair<Dataset, Standardizer> standardize(const Dataset& data, bool center_y) {
  const Index n = data.n();
  const Index p = data.p();
  Standardizer s;
  s.col_means = data.X().colwise().mean().transpose();
  s.col_scales.resize(p);
  for (Index j = 0; j < p; ++j) {
    const double ss = (data.X().col(j).array() - s.col_means(j)).square().sum();
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    // Relative test so that a column like (c, c, c) with rounding noise is
    // still reported as constant.
    const double mag = data.X().col(j).cwiseAbs().maxCoeff();
    if (!(sd > 0.0) || sd <= 1e-14 * mag) throw ConstantColumn(static_cast<std::size_t>(j));
    s.col_scales(j) = sd;
  }
  s.y_mean = center_y ? data.y().mean() : 0.0;
  return {Dataset(s.apply(data.X()), s.apply_y(data.y())), std::move(s)};
}

inline Vector predict(const ModelFit& fit, const Matrix& X_new) {
  if (X_new.cols() != fit.beta.size()) {
    throw DimensionMismatch("model has " + std::to_string(fit.beta.size()) +
                            " coefficients but input has " + std::to_string(X_new.cols()) +
                            " columns");
  }
  return (X_new * fit.beta).array() + fit.intercept;
}

inline Vector residuals(const Dataset& data, const Vector& beta, double intercept = 0.0) {
  if (beta.size() != data.p()) {
    throw DimensionMismatch("coefficient length " + std::to_string(beta.size()) +
                            " does not match p = " + std::to_string(data.p()));
  }
  return (data.y() - data.X() * beta).array() - intercept;
}

}  // namespace dpdlasso
