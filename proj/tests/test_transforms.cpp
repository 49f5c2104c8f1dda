#include "densreg/rng.hpp"
#include "densreg/transforms.hpp"

#include <gtest/gtest.h>

using namespace densreg;

namespace {

Matrix random_spd(int d, Rng& rng) {
  Matrix A(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
  }
  return A * A.transpose() + 0.3 * Matrix::Identity(d, d);
}

/// log|det d t / d vech(Sigma)| by central differences.
double fd_log_jac_sigma(const Matrix& S, double h = 1e-6) {
  const int d = static_cast<int>(S.rows());
  const int k = sigma_param_count(d);
  Matrix J(k, k);
  int col = 0;
  for (int c = 0; c < d; ++c) {
    for (int r = c; r < d; ++r, ++col) {
      Matrix P = S, M = S;
      P(r, c) += h;
      M(r, c) -= h;
      if (r != c) {
        P(c, r) += h;
        M(c, r) -= h;
      }
      J.col(col) = (sigma_to_t(P) - sigma_to_t(M)) / (2 * h);
    }
  }
  return std::log(std::abs(J.determinant()));
}

}  // namespace

TEST(Ldl, RoundTripAndUnitDiagonal) {
  Rng rng(1);
  for (int d : {1, 2, 4}) {
    const Matrix S = random_spd(d, rng);
    const LdlFactors f = ldl_decompose(S);
    EXPECT_TRUE(f.L.diagonal().isOnes());
    EXPECT_LT((ldl_compose(f) - S).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((t_to_sigma(sigma_to_t(S), d) - S).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Ldl, RejectsIndefinite) {
  Matrix S(2, 2);
  S << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(ldl_decompose(S), NumericError);
}

TEST(Ldl, JacobianMatchesFiniteDifferences) {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 1 + rep % 4;
    const Matrix S = random_spd(d, rng);
    EXPECT_NEAR(log_abs_jacobian_sigma(ldl_decompose(S).D), fd_log_jac_sigma(S), 1e-5);
  }
}

TEST(BoundedTransform, RoundTripAllIntervalShapes) {
  const Interval both{-1.0, 2.0};
  const Interval lo{0.5, kInf};
  const Interval hi{-kInf, 3.0};
  const Interval none{};
  for (double t : {-5.0, -0.3, 0.0, 2.2}) {
    for (const Interval& b : {both, lo, hi, none}) {
      const double y = t_to_bounded(t, b);
      EXPECT_TRUE(b.contains(y));
      EXPECT_NEAR(bounded_to_t(y, b), t, 1e-10);
      const double h = 1e-6;
      const double fd = (bounded_to_t(y + h, b) - bounded_to_t(y - h, b)) / (2 * h);
      EXPECT_NEAR(log_dt_dy(y, b), std::log(std::abs(fd)), 1e-6);
    }
  }
}

// Triangular Jacobian of the sequential transform (later bounds read earlier y).
TEST(RowTransform, JacobianMatchesFiniteDifferences) {
  const LinkSet links = colombia_links();
  Vector x(2);
  x << 1.0, 30.0;
  const std::vector<double> z{17.0, 0.0, 21.0, 1.0};
  const RowTransform tr(links, z, x);
  ASSERT_EQ(tr.size(), 4);
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    Vector t(4);
    for (int a = 0; a < 4; ++a) t(a) = rng.normal();
    Vector y = Vector::Zero(4);
    ASSERT_TRUE(tr.inverse(t, y));
    EXPECT_LT((tr.forward(y) - t).cwiseAbs().maxCoeff(), 1e-9);
    Matrix J(4, 4);
    const double h = 1e-7;
    for (int c = 0; c < 4; ++c) {
      Vector yp = y, ym = y;
      yp(c) += h;
      ym(c) -= h;
      J.col(c) = (tr.forward(yp) - tr.forward(ym)) / (2 * h);
    }
    EXPECT_NEAR(tr.log_abs_jacobian(y), std::log(std::abs(J.determinant())), 1e-5);
  }
}

TEST(RowTransform, IdentityDimsArePinned) {
  const LinkSet links{LinkSpec::identity(), LinkSpec::sign()};
  Vector x(2);
  x << 1.0, 20.0;
  const std::vector<double> z{0.7, 1.0};
  const RowTransform tr(links, z, x);
  EXPECT_EQ(tr.size(), 1);
  Vector y(2);
  y << 0.7, 0.0;
  ASSERT_TRUE(tr.inverse(Vector::Constant(1, -1.0), y));
  EXPECT_EQ(y(0), 0.7);
  EXPECT_NEAR(y(1), std::exp(-1.0), 1e-15);
}
