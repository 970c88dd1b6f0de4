#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dpdlasso/core_data.hpp"
#include "dpdlasso/random.hpp"

using namespace dpdlasso;

namespace {

Matrix random_matrix(Index n, Index p, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = z(rng);
  return X;
}

}  // namespace

TEST(Dataset, RejectsShapeMismatch) {
  EXPECT_THROW(Dataset(Matrix::Zero(3, 2), Vector::Zero(2)), DimensionMismatch);
  EXPECT_THROW(Dataset(Matrix(0, 2), Vector(0)), DimensionMismatch);
}

TEST(Dataset, RejectsNonFinite) {
  Matrix X = Matrix::Ones(2, 1);
  X(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Dataset(X, Vector::Zero(2)), NonFinite);
  Vector y = Vector::Zero(2);
  y(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(Dataset(Matrix::Ones(2, 1), y), NonFinite);
}

TEST(Dataset, SubsetKeepsRowOrder) {
  Matrix X(3, 1);
  X << 1, 2, 3;
  const Dataset d(X, Vector{{10.0, 20.0, 30.0}});
  const std::vector<Index> rows{2, 0};
  const Dataset s = d.subset(rows);
  EXPECT_EQ(s.n(), 2);
  EXPECT_EQ(s.X()(0, 0), 3.0);
  EXPECT_EQ(s.y()(1), 10.0);
}

TEST(Standardize, ThreePointColumn) {
  Matrix X(3, 1);
  X << 1, 2, 3;
  const auto [z, s] = standardize(Dataset(X, Vector{{2.0, 4.0, 6.0}}), true);
  EXPECT_DOUBLE_EQ(z.X()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(z.X()(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(z.X()(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(z.y()(0), -2.0);
  EXPECT_DOUBLE_EQ(z.y()(2), 2.0);
  EXPECT_DOUBLE_EQ(s.col_means(0), 2.0);
  EXPECT_DOUBLE_EQ(s.col_scales(0), 1.0);
  EXPECT_DOUBLE_EQ(s.y_mean, 4.0);
}

TEST(Standardize, StandardizedColumnUnchanged) {
  Matrix X(3, 1);
  X << -1, 0, 1;
  const auto [z, s] = standardize(Dataset(X, Vector::Zero(3)), false);
  EXPECT_EQ(z.X(), X);
  EXPECT_EQ(s.col_scales(0), 1.0);
  EXPECT_EQ(s.col_means(0), 0.0);
  EXPECT_EQ(s.y_mean, 0.0);
}

TEST(Standardize, ConstantColumnNamesIndex) {
  Matrix X(3, 2);
  X << 1, 0, 2, 0, 3, 0;
  try {
    standardize(Dataset(X, Vector::Zero(3)), true);
    FAIL() << "expected ConstantColumn";
  } catch (const ConstantColumn& e) {
    EXPECT_EQ(e.column(), 1u);
  }
  Matrix C = Matrix::Constant(4, 1, 0.1 + 0.2);
  EXPECT_THROW(standardize(Dataset(C, Vector::Zero(4)), true), ConstantColumn);
}

TEST(Standardize, RoundTripOnRandomData) {
  Rng rng(11);
  std::uniform_real_distribution<double> loc(-50.0, 50.0), scale(0.01, 100.0);
  for (int rep = 0; rep < 100; ++rep) {
    Matrix X = random_matrix(20, 4, rng);
    for (Index j = 0; j < 4; ++j) X.col(j) = (X.col(j).array() * scale(rng) + loc(rng)).matrix();
    Vector y = random_matrix(20, 1, rng).col(0).array() * 7.0 + 3.0;
    const auto [z, s] = standardize(Dataset(X, y), true);
    const Matrix back = s.invert(z.X());
    EXPECT_LE((back - X).cwiseAbs().maxCoeff() / X.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((s.invert_y(z.y()) - y).cwiseAbs().maxCoeff() / y.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Standardize, CoefficientMappingPreservesPredictions) {
  Rng rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix X = random_matrix(30, 5, rng);
    X.col(2) = X.col(2) * 40.0 + Vector::Constant(30, 9.0);
    const Dataset d(X, random_matrix(30, 1, rng).col(0));
    const auto [z, s] = standardize(d, true);
    const Vector b = random_matrix(5, 1, rng).col(0);
    const double b0 = 0.3;
    const Vector pred_std = (z.X() * b).array() + b0;
    ModelFit fit;
    std::tie(fit.beta, fit.intercept) = s.to_original(b, b0);
    const Vector pred = predict(fit, X);
    EXPECT_LE((s.invert_y(pred_std) - pred).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((s.to_standardized(fit.beta) - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Predict, Examples) {
  ModelFit fit;
  fit.beta = Vector{{5.0, -5.0}};
  Matrix x(1, 2);
  x << 1, 1;
  EXPECT_EQ(predict(fit, x)(0), 0.0);
  x << 1, 0;
  EXPECT_EQ(predict(fit, x)(0), 5.0);
  fit.beta = Vector::Zero(2);
  fit.intercept = 2.5;
  x << -3, 8;
  EXPECT_EQ(predict(fit, x)(0), 2.5);
  EXPECT_THROW(predict(fit, Matrix::Zero(1, 3)), DimensionMismatch);
}

TEST(Residuals, Examples) {
  Matrix X(2, 1);
  X << 0, 1;
  const Dataset d(X, Vector{{1.0, 2.0}});
  const Vector r = residuals(d, Vector{{0.5}});
  EXPECT_EQ(r(0), 1.0);
  EXPECT_EQ(r(1), 1.5);
  EXPECT_EQ(residuals(d, Vector::Zero(1)), d.y());
  const Dataset exact(X, X.col(0) * 3.0);
  EXPECT_EQ(residuals(exact, Vector{{3.0}}).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(residuals(d, Vector::Zero(2)), DimensionMismatch);
}
