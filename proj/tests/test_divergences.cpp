#include <gtest/gtest.h>

#include <cmath>

#include "hmclab/divergences.hpp"
#include "hmclab/kernels.hpp"

using namespace hmclab;

namespace {

GaussianLaw g1(double mean, double var) { return GaussianLaw::diag(Vector::Constant(1, mean), Vector::Constant(1, var)); }

double normal_pdf(double x, double m, double v) { return std::exp(-0.5 * (x - m) * (x - m) / v) / std::sqrt(2 * kPi * v); }

// KL and Renyi of two 1-D Gaussians by quadrature of the density ratio.
double kl_quadrature(double m1, double v1, double m2, double v2) {
  auto f = [&](double x) {
    const double p = normal_pdf(x, m1, v1);
    if (p == 0.0) return 0.0;
    return p * (std::log(p) - std::log(normal_pdf(x, m2, v2)));
  };
  return integrate_1d(f, {-40.0, m1, m2, 40.0}, 1e-12);
}

double renyi_quadrature(double q, double m1, double v1, double m2, double v2) {
  auto f = [&](double x) {
    const double lp = -0.5 * (x - m1) * (x - m1) / v1 - 0.5 * std::log(2 * kPi * v1);
    const double lq = -0.5 * (x - m2) * (x - m2) / v2 - 0.5 * std::log(2 * kPi * v2);
    return std::exp(q * lp + (1 - q) * lq);
  };
  return std::log(integrate_1d(f, {-40.0, m1, m2, 40.0}, 1e-12)) / (q - 1);
}

GaussianLaw random_law(RngStream& rng, int d) {
  Matrix A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = 0.4 * rng.normal();
  Matrix S = A * A.transpose() + 0.5 * Matrix::Identity(d, d);
  S = 0.5 * (S + S.transpose());
  return GaussianLaw::full(0.5 * rng.normal_vector(d), S);
}

}  // namespace

TEST(GaussianKl, Examples) {
  EXPECT_NEAR(gaussian_kl(g1(1, 1), g1(0, 1)).value, 0.5, 1e-15);
  const double s2 = gaussian_chain_law(KernelSpec::uhmc_v(make_standard_gaussian(1), 0.1, 0.1),
                                       GaussianLaw::standard(1), kStationary)
                        .cov(0, 0);
  const double kl = gaussian_kl(g1(0, s2), g1(0, 1)).value;
  EXPECT_NEAR(kl, 1.567e-6, 1e-9);
  EXPECT_NEAR(kl, kl_quadrature(0, s2, 0, 1), 1e-11);
  EXPECT_EQ(gaussian_kl(g1(0.3, 2.0), g1(0.3, 2.0)).value, 0.0);
}

TEST(GaussianKl, QuadratureOracle) {
  EXPECT_NEAR(gaussian_kl(g1(0.7, 0.5), g1(-0.2, 1.7)).value, kl_quadrature(0.7, 0.5, -0.2, 1.7), 1e-10);
}

TEST(GaussianKl, FullAndDiagonalPathsAgree) {
  const GaussianLaw a = GaussianLaw::diag(Vector::Constant(3, 0.2), Vector::Constant(3, 0.6));
  const GaussianLaw b = GaussianLaw::diag(Vector::Constant(3, -0.1), Vector::Constant(3, 1.3));
  const GaussianLaw af = GaussianLaw::full(a.mean, a.cov), bf = GaussianLaw::full(b.mean, b.cov);
  EXPECT_NEAR(gaussian_kl(a, b).value, gaussian_kl(af, bf).value, 1e-13);
  EXPECT_NEAR(gaussian_renyi(2.5, a, b).value, gaussian_renyi(2.5, af, bf).value, 1e-12);
}

TEST(GaussianKl, SingularCovarianceRejected) {
  EXPECT_THROW(gaussian_kl(g1(0, 0), g1(0, 1)), PreconditionError);
}

TEST(GaussianRenyi, Examples) {
  EXPECT_NEAR(gaussian_renyi(2, g1(1, 1), g1(0, 1)).value, 1.0, 1e-15);
  EXPECT_NEAR(gaussian_renyi(2, g1(1, 1), g1(0, 1)).value, renyi_quadrature(2, 1, 1, 0, 1), 1e-10);
  EXPECT_TRUE(gaussian_renyi(2, g1(0, 2), g1(0, 1)).infinite());
  EXPECT_TRUE(std::isfinite(gaussian_renyi(1.9, g1(0, 2), g1(0, 1)).value));
  EXPECT_NEAR(gaussian_renyi(1.9, g1(0.3, 2), g1(0, 1)).value, renyi_quadrature(1.9, 0.3, 2, 0, 1), 1e-9);
}

TEST(GaussianRenyi, LimitOrderOneIsKl) {
  const GaussianLaw a = g1(0.4, 0.8), b = g1(-0.1, 1.2);
  EXPECT_NEAR(gaussian_renyi(1.0 + 1e-9, a, b).value, gaussian_kl(a, b).value, 1e-8);
}

TEST(GaussianRenyi, MonotoneInOrderAndWeakTriangle) {
  RngStream rng(31, 0);
  for (int s = 0; s < 200; ++s) {
    const GaussianLaw a = random_law(rng, 2), b = random_law(rng, 2), c = random_law(rng, 2);
    double prev = 0.0;
    for (double q : {1.1, 1.5, 2.0, 3.0, 5.0}) {
      const double r = gaussian_renyi(q, a, c).value;
      EXPECT_GE(r, prev - 1e-10);
      prev = r;
    }
    for (double q : {2.0, 3.0}) {
      const double lhs = gaussian_renyi(q, a, c).value;
      const double rhs = 1.5 * gaussian_renyi(2 * q, a, b).value + gaussian_renyi(2 * q - 1, b, c).value;
      EXPECT_LE(lhs, rhs + 1e-10);
    }
  }
}

TEST(GaussianRenyi, AffineInvariance) {
  RngStream rng(2, 0);
  const GaussianLaw a = random_law(rng, 3), b = random_law(rng, 3);
  Matrix A(3, 3);
  A << 1.0, 0.3, 0.0, -0.2, 0.8, 0.1, 0.5, 0.0, 1.5;
  const Vector t = Vector::Constant(3, 0.7);
  auto push = [&](const GaussianLaw& g) {
    Matrix S = A * g.cov * A.transpose();
    return GaussianLaw::full(A * g.mean + t, 0.5 * (S + S.transpose()));
  };
  EXPECT_NEAR(gaussian_kl(push(a), push(b)).value, gaussian_kl(a, b).value, 1e-10);
  for (double q : {1.5, 2.0}) {
    const DivergenceValue r = gaussian_renyi(q, a, b), rp = gaussian_renyi(q, push(a), push(b));
    EXPECT_EQ(r.infinite(), rp.infinite());
    if (!r.infinite()) EXPECT_NEAR(rp.value, r.value, 1e-10);
  }
}

TEST(Figure1, CaptionThresholds) {
  const MixtureDivergences m = tv_kl_r2_demo({0.99, 0.01}, {0.0, 10.0});
  EXPECT_LE(m.tv.value, 0.01);
  EXPECT_GE(m.kl.value, 0.4);
  EXPECT_GE(m.renyi2.value, 90.0);
  for (const auto* v : {&m.tv, &m.kl, &m.renyi2}) EXPECT_LE(v->quadrature_error, 1e-10);
  EXPECT_LE(m.tv.value * m.tv.value, m.kl.value / 2);
  EXPECT_LE(m.kl.value / 2, m.renyi2.value / 2);
}

TEST(Figure1, ZeroWeightOnFarMode) {
  const MixtureDivergences m = tv_kl_r2_demo({1.0, 0.0}, {0.0, 10.0});
  EXPECT_NEAR(m.tv.value, 0.0, 1e-14);
  EXPECT_NEAR(m.kl.value, 0.0, 1e-14);
  EXPECT_NEAR(m.renyi2.value, 0.0, 1e-14);
}

TEST(W2, Examples) {
  EXPECT_NEAR(w2(g1(0.6, 1), g1(0, 1)).value, 0.6, 1e-15);
  EXPECT_NEAR(w2(g1(0, 4), g1(0, 1)).value, 1.0, 1e-15);
  RngStream rng(3, 0);
  std::vector<double> a, b;
  for (int i = 0; i < 20000; ++i) {
    a.push_back(2.0 * rng.normal());
    b.push_back(rng.normal());
  }
  EXPECT_NEAR(w2(a, b).value, 1.0, 0.05);
  EXPECT_EQ(w2(a, a).value, 0.0);
}

TEST(W2, FullCovarianceBures) {
  RngStream rng(4, 0);
  const GaussianLaw a = random_law(rng, 2);
  EXPECT_NEAR(w2(a, a).value, 0.0, 1e-7);
  const GaussianLaw ad = GaussianLaw::diag(Vector::Zero(2), Vector::Constant(2, 2.0));
  const GaussianLaw bd = GaussianLaw::diag(Vector::Ones(2), Vector::Constant(2, 0.5));
  EXPECT_NEAR(w2(ad, bd).value, w2(GaussianLaw::full(ad.mean, ad.cov), GaussianLaw::full(bd.mean, bd.cov)).value,
              1e-12);
}

TEST(Orlicz, Examples) {
  EXPECT_NEAR(orlicz_norm(std::vector<double>{2.0}), 2.0 / std::sqrt(kLog2), 1e-12);
  EXPECT_NEAR(orlicz_norm(GaussianLaw::standard(1)), std::sqrt(8.0 / 3.0), 1e-10);
  EXPECT_EQ(orlicz_norm(std::vector<double>{0.0, 0.0}), 0.0);
  RngStream rng(6, 0);
  Matrix s(50000, 1);
  for (int i = 0; i < s.rows(); ++i) s(i, 0) = rng.normal();
  EXPECT_NEAR(orlicz_norm(s), std::sqrt(8.0 / 3.0), 0.1);
}

TEST(Orlicz, MultivariateClosedForm) {
  // E exp(|X|^2 / l^2) = (1 - 2/l^2)^{-d/2} = 2  =>  l^2 = 2 / (1 - 2^{-2/d})
  for (int d : {1, 2, 5}) {
    EXPECT_NEAR(orlicz_norm(GaussianLaw::standard(d)), std::sqrt(2.0 / (1.0 - std::pow(2.0, -2.0 / d))), 1e-9);
  }
}

TEST(Orlicz, DominatesScaledW2) {
  RngStream rng(8, 0);
  for (int s = 0; s < 50; ++s) {
    const GaussianLaw a = GaussianLaw::diag(rng.normal_vector(2), (rng.normal_vector(2).array().square() + 0.1).matrix());
    const GaussianLaw b = GaussianLaw::diag(rng.normal_vector(2), (rng.normal_vector(2).array().square() + 0.1).matrix());
    EXPECT_LE(w2(a, b).value / 2.0, orlicz_w_upper(a, b).value + 1e-12);
  }
}

TEST(Orlicz, SubGaussianMgfHelper) {
  RngStream rng(12, 0);
  const int n = 20000;
  Matrix s(n, 2);
  for (int i = 0; i < n; ++i) s.row(i) = rng.normal_vector(2).transpose();
  const double K = orlicz_norm(s);
  for (double frac : {0.25, 0.5, 1.0}) {
    const double c = frac / (K * K);
    const Eigen::ArrayXd e = (c * s.rowwise().squaredNorm().array()).exp();
    const double mean = e.mean();
    const double se = std::sqrt((e - mean).square().sum() / (n - 1) / n) / mean;
    EXPECT_LE(mean, std::pow(2.0, c * K * K) * (1 + 3 * se));
  }
}

TEST(MutualInformation, Examples) {
  Matrix S = Matrix::Identity(2, 2);
  EXPECT_NEAR(mi_gaussian(GaussianLaw::full(Vector::Zero(2), S)).value, 0.0, 1e-15);
  S(0, 1) = S(1, 0) = 0.5;
  const double mi = mi_gaussian(GaussianLaw::full(Vector::Zero(2), S)).value;
  EXPECT_NEAR(mi, -0.5 * std::log(0.75), 1e-14);
  EXPECT_NEAR(mi, 0.14384, 1e-5);
  // KL(joint | product) by nested quadrature
  const double rho = 0.5, det = 1 - rho * rho;
  auto inner = [&](double x) {
    auto f = [&](double y) {
      const double lj = -(x * x - 2 * rho * x * y + y * y) / (2 * det) - std::log(2 * kPi * std::sqrt(det));
      const double lp = -0.5 * (x * x + y * y) - std::log(2 * kPi);
      return std::exp(lj) * (lj - lp);
    };
    return integrate_1d(f, {-12.0, rho * x, 12.0}, 1e-11);
  };
  EXPECT_NEAR(mi, integrate_1d(inner, {-12.0, 0.0, 12.0}, 1e-10), 1e-8);
  S(0, 1) = S(1, 0) = 1.0;
  EXPECT_TRUE(mi_gaussian(GaussianLaw::full(Vector::Zero(2), S)).infinite());
}

TEST(PerturbedGaussian, FormulaValues) {
  EXPECT_EQ(perturbed_gaussian_kl_bound(0, 0, 3), 0.0);
  EXPECT_EQ(perturbed_gaussian_renyi_bound(2, 0, 0, 3), 0.0);
  EXPECT_DOUBLE_EQ(perturbed_gaussian_kl_bound(1, 0, 1), 0.5);
  EXPECT_DOUBLE_EQ(perturbed_gaussian_kl_bound(0, 0.5, 2), 0.5);
  EXPECT_DOUBLE_EQ(perturbed_gaussian_renyi_bound(2, 1, 0, 1), 2.0);
  EXPECT_THROW(perturbed_gaussian_kl_bound(0, 1.0, 1), PreconditionError);
}

TEST(PerturbedGaussian, BoundsDominateSinePerturbation) {
  // psi(v) = v + m + b sin v: |psi(v) - v| <= |m| + |b|, |psi'(v) - 1| <= |b|.
  // Divergences of psi# N(0,1) against N(0,1) by change of variables.
  for (double b : {0.0, 0.1, 0.3, 0.6})
    for (double m : {0.0, 0.5, 1.0}) {
      auto log_ratio = [&](double v) {
        const double y = v + m + b * std::sin(v);
        return -0.5 * v * v - std::log(1.0 + b * std::cos(v)) + 0.5 * y * y;
      };
      const std::vector<double> cuts{-30.0, 0.0, 30.0};
      const double kl = integrate_1d([&](double v) { return normal_pdf(v, 0, 1) * log_ratio(v); }, cuts, 1e-12);
      const double m1 = std::abs(m) + std::abs(b), m2 = std::abs(b);
      EXPECT_LE(kl, perturbed_gaussian_kl_bound(m1, m2, 1) + 1e-10) << b << " " << m;
      for (double q : {1.5, 2.0, 4.0}) {
        const double e = integrate_1d([&](double v) { return normal_pdf(v, 0, 1) * std::exp((q - 1) * log_ratio(v)); },
                                      cuts, 1e-12);
        EXPECT_LE(std::log(e) / (q - 1), perturbed_gaussian_renyi_bound(q, m1, m2, 1) + 1e-10) << q;
      }
    }
  // pure translation attains the KL bound
  EXPECT_NEAR(gaussian_kl(g1(0.7, 1), g1(0, 1)).value, perturbed_gaussian_kl_bound(0.7, 0, 1), 1e-15);
}
