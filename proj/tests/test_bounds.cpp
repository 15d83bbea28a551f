#include <gtest/gtest.h>

#include <cmath>

#include "hmclab/bounds.hpp"
#include "hmclab/divergences.hpp"
#include "hmclab/kernels.hpp"

using namespace hmclab;

namespace {

ModelParams gaussian_params(int d, double T, double h) {
  ModelParams mp;
  mp.d = d;
  mp.L = 1.0;
  mp.alpha = 1.0;
  mp.T = T;
  mp.h = h;
  return mp;
}

ComplexityInputs logcosh_inputs(int d, double eps) {
  ComplexityInputs in;
  in.d = d;
  in.eps = eps;
  in.L = 1.5;
  in.M = 0.5 * 4.0 / (3.0 * std::sqrt(3.0));
  in.N = 1.0;
  return in;
}

}  // namespace

TEST(KlMixingBound, Examples) {
  ModelParams mp = gaussian_params(2, 0.25, 0.0);
  EXPECT_NEAR(kl_mixing_bound(mp, 0, 1.0).get(), 36.0, 1e-12);
  EXPECT_LT(kl_mixing_bound(mp, 100000, 1.0).get(), 1e-300);
  const double c2 = resolved_c2(mp);
  EXPECT_NEAR(kl_mixing_bound(mp, 8, 1.0).get() / kl_mixing_bound(mp, 7, 1.0).get(), std::exp(-2 * c2), 1e-14);
  EXPECT_NEAR(kl_mixing_bound(mp, 10, 1.0).get() / kl_mixing_bound(mp, 5, 1.0).get(), std::exp(-10 * c2), 1e-13);
}

TEST(KlMixingBound, MonotoneInK) {
  const ModelParams mp = gaussian_params(3, 0.2, 0.05);
  double prev = kInf;
  for (int k = 0; k < 50; ++k) {
    const double v = kl_mixing_bound(mp, k, 1.3).get();
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(KlMixingBound, InfeasibleHypothesisSuppressesValue) {
  ModelParams mp = gaussian_params(1, 0.25, 0.05);
  mp.L = 2.0;
  const BoundReport r = kl_mixing_bound(mp, 0, 1.0);
  EXPECT_FALSE(r.value.has_value());
  EXPECT_FALSE(r.flag("L(T^2+Th)<=1/12"));
  EXPECT_THROW(r.get(), PreconditionError);
  EXPECT_FALSE(kl_mixing_bound(gaussian_params(1, 0.25, 0.0), -1, 1.0).value.has_value());
}

TEST(KlBiasBound, GaussianBracketReduction) {
  const ModelParams mp = gaussian_params(1, 0.25, 0.05);
  const double m2 = 1.0, m4 = 3.0, h = 0.05, L = 1.0, T = 0.25;
  const BoundReport r = kl_bias_bound(mp, 0, 0.0, m2, m4, 0.0);
  EXPECT_NEAR(r.component("bias"), 4 * std::pow(h, 4) * (45 * L * L + 4 * L * L / (T * T) * m2 + 4 * L * L), 1e-15);
  EXPECT_NEAR(r.component("mixing") + r.component("bias"), r.get(), 1e-15);
}

TEST(KlBiasBound, ExactFlowHasNoBias) {
  const BoundReport r = kl_bias_bound(gaussian_params(2, 0.25, 0.0), 3, 1.0, 2.0, 8.0, 0.0);
  EXPECT_EQ(r.component("bias"), 0.0);
}

TEST(KlBiasBound, FourthOrderStepScaling) {
  ModelParams a = gaussian_params(2, 0.2, 0.2), b = gaussian_params(2, 0.2, 0.1);
  a.M = b.M = 0.3;
  a.N = b.N = 0.7;
  const double ra = kl_bias_bound(a, 0, 0.0, 2.0, 8.0, 0.0).component("bias");
  const double rb = kl_bias_bound(b, 0, 0.0, 2.0, 8.0, 0.0).component("bias");
  EXPECT_NEAR(ra / rb, 16.0, 1e-12);
}

TEST(KlBiasBound, MonotoneInInputs) {
  ModelParams mp = gaussian_params(2, 0.25, 0.02);
  mp.M = 0.2;
  mp.N = 0.5;
  auto bias = [&](double h, double m2, double m4, double dh) {
    mp.h = h;
    return kl_bias_bound(mp, 0, 0.0, m2, m4, dh).component("bias");
  };
  const double base = bias(0.02, 2.0, 8.0, 0.01);
  EXPECT_GT(bias(0.04, 2.0, 8.0, 0.01), base);
  EXPECT_GT(bias(0.02, 3.0, 8.0, 0.01), base);
  EXPECT_GT(bias(0.02, 2.0, 9.0, 0.01), base);
  EXPECT_GT(bias(0.02, 2.0, 8.0, 0.02), base);
}

TEST(RenyiMixingBound, DeltasAndBurnIn) {
  const ModelParams mp = gaussian_params(1, 0.25, 0.0);
  const BoundReport r = renyi_mixing_bound(mp, 2.0, 1000, 1.0);
  EXPECT_NEAR(r.component("delta1"), 6.0, 1e-12);
  EXPECT_NEAR(r.component("delta2"), 36.0, 1e-12);
  const double c2 = resolved_c2(mp);
  const double k_star = std::log(1.0 / (4.0 * std::sqrt(kLog2)) * (6.0 + std::sqrt(36.0 + 16.0 * kLog2 * 36.0))) / c2;
  EXPECT_NEAR(r.component("k_star"), k_star, 1e-10);
  const auto first = static_cast<std::int64_t>(std::ceil(k_star));
  EXPECT_TRUE(renyi_mixing_bound(mp, 2.0, first, 1.0).value.has_value());
  EXPECT_FALSE(renyi_mixing_bound(mp, 2.0, first - 1, 1.0).value.has_value());
  EXPECT_FALSE(renyi_mixing_bound(mp, 2.0, first - 1, 1.0).flag("k>=k_star"));
}

TEST(RenyiMixingBound, SmallOrliczInitialDistanceIsClamped) {
  const ModelParams mp = gaussian_params(1, 0.25, 0.0);
  EXPECT_EQ(renyi_mixing_bound(mp, 2.0, 2000, 0.3).get(), renyi_mixing_bound(mp, 2.0, 2000, 1.0).get());
  EXPECT_GT(renyi_mixing_bound(mp, 2.0, 2000, 2.0).get(), renyi_mixing_bound(mp, 2.0, 2000, 1.0).get());
}

TEST(RenyiMixingBound, NonincreasingPastBurnIn) {
  const ModelParams mp = gaussian_params(2, 0.25, 0.05);
  const auto k0 = static_cast<std::int64_t>(std::ceil(renyi_mixing_bound(mp, 3.0, 0, 1.5).component("k_star")));
  double prev = kInf;
  for (std::int64_t k = k0; k < k0 + 100; ++k) {
    const double v = renyi_mixing_bound(mp, 3.0, k, 1.5).get();
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(RenyiBiasBound, OrderConstants) {
  const BoundReport r = renyi_bias_bound(gaussian_params(1, 0.25, 0.01), 2.0, 5000, 1.0, 0.0, 1.0);
  EXPECT_EQ(r.component("s"), 3.0);
  EXPECT_NEAR(r.component("u"), std::sqrt(13.0 / 12.0), 1e-15);
}

TEST(RenyiBiasBound, ExactFlowNoDeltaHasNoBias) {
  EXPECT_EQ(renyi_bias_bound(gaussian_params(2, 0.25, 0.0), 2.0, 5000, 1.0, 0.0, 1.5).component("bias"), 0.0);
}

TEST(RenyiBiasBound, QuadraticReduction) {
  const int d = 2;
  const double T = 0.25, h = 0.01, q = 2.0, dh = 0.003, K = 1.7;
  const BoundReport r = renyi_bias_bound(gaussian_params(d, T, h), q, 5000, 1.0, dh, K);
  const RegularityConstants c = regularity_constants(1.0, 0.0, T);
  const double s = 2 * q - 1, u = std::sqrt(1 + 1 / (4 * s)), w = 1 + 3 * s * u * u, sd = std::sqrt(d);
  const double expected = d * h * (6 * c.j_c + h * c.p_v * c.p_v + 2 * c.p_v) + 2 * sd * c.p_xy * u * dh +
                          c.p_xy * c.p_xy * w * dh * dh + 2 * h * sd * c.p_x * u * (dh + K + std::sqrt(dh * dh + K * K)) +
                          2 * h * h * c.p_x * c.p_x * w * (dh * dh + K * K);
  EXPECT_NEAR(r.component("bias"), expected, 1e-12 * expected);
}

TEST(RenyiBiasBound, CeilingsFlaggedIndividually) {
  const ModelParams mp = gaussian_params(1, 0.25, 0.01);
  const double K = orlicz_norm(GaussianLaw::standard(1));
  const BoundReport ok = renyi_bias_bound(mp, 2.0, 5000, 1.0, 0.001, K);
  EXPECT_TRUE(ok.feasible());
  const BoundReport big_delta = renyi_bias_bound(mp, 2.0, 5000, 1.0, 10.0, K);
  EXPECT_FALSE(big_delta.flag("delta_h<=delta_ceiling"));
  EXPECT_TRUE(big_delta.flag("h<=h_ceiling"));
  EXPECT_FALSE(big_delta.value.has_value());
  const BoundReport big_h = renyi_bias_bound(gaussian_params(1, 0.25, 0.05), 2.0, 5000, 1.0, 0.001, K);
  EXPECT_FALSE(big_h.flag("h<=h_ceiling"));
  EXPECT_FALSE(renyi_bias_bound(mp, 2.0, 0, 1.0, 0.001, K).flag("k>=k_star"));
}

TEST(WassersteinProps, ContractionFactors) {
  // The example pair alpha = 1, T = 0.5 is outside L T^2 <= 1/20 for any L >= alpha.
  const BoundReport v = verlet_contraction(1.0, 1.0, 0.5);
  EXPECT_NEAR(v.component("formula"), 0.975, 1e-15);
  EXPECT_FALSE(v.value.has_value());
  const BoundReport s = stratified_contraction(1.0, 1.0, 0.5);
  EXPECT_NEAR(s.component("formula"), 1.0 - 0.25 / 6.0, 1e-15);
  EXPECT_NEAR(s.component("formula"), 0.95833, 1e-5);
  EXPECT_NEAR(verlet_contraction(1.0, 1.0, 0.2).get(), 0.996, 1e-15);
}

TEST(WassersteinProps, OrliczBiasExample) {
  ModelParams mp = gaussian_params(4, 0.25, 0.01);
  const BoundReport r = orlicz_bias_verlet(mp, 2.0);
  EXPECT_NEAR(r.component("formula"), 3.2, 1e-12);
  EXPECT_FALSE(r.flag("L(T^2+Th)<=1/20"));
  mp.L = 0.7;
  EXPECT_NEAR(orlicz_bias_verlet(mp, 2.0).get(), 3.2, 1e-12);
}

TEST(WassersteinProps, ZeroStepHasNoBias) {
  const ModelParams mp = gaussian_params(3, 0.2, 0.0);
  EXPECT_EQ(w2_bias_verlet(mp, 3.0, 15.0).get(), 0.0);
  EXPECT_EQ(orlicz_bias_verlet(mp, 2.0).get(), 0.0);
  EXPECT_EQ(w2_bias_stratified(mp).get(), 0.0);
}

TEST(WassersteinProps, W2BiasDominatesExactGaussianBias) {
  for (double h : {0.1, 0.05, 0.025}) {
    const ModelParams mp = gaussian_params(1, 0.1, h);
    const KernelSpec k = KernelSpec::uhmc_v(make_standard_gaussian(1), 0.1, h);
    const GaussianLaw nu_h = gaussian_chain_law(k, GaussianLaw::standard(1), kStationary);
    EXPECT_LE(w2(nu_h, GaussianLaw::standard(1)).value, w2_bias_verlet(mp, 1.0, 3.0).get());
  }
}

TEST(MixingTime, KlIterations) {
  ModelParams mp = gaussian_params(1, 0.25, 0.0);
  mp.L = 0.8;  // L T^2 <= 1/20
  const double k = kl_mixing_time(mp, 1.0, 1e-3).get();
  EXPECT_NEAR(k, 1.0 + 80.0 * std::log(36000.0), 1e-9);
  EXPECT_NEAR(k, 840.0, 1.0);
  EXPECT_NEAR(kl_mixing_time(mp, 1.0, 1e-3 / std::exp(1.0)).get() - k, 80.0, 1e-9);
  mp.L = 1.0;
  const BoundReport r = kl_mixing_time(mp, 1.0, 1e-3);
  EXPECT_FALSE(r.value.has_value());
  EXPECT_NEAR(r.component("formula"), k, 1e-9);
}

TEST(MixingTime, RenyiIterationsDecreaseInEps) {
  ModelParams mp = gaussian_params(2, 0.2, 0.05);
  EXPECT_GT(renyi_mixing_time(mp, 2.0, 1.0, 1e-3).get(), renyi_mixing_time(mp, 2.0, 1.0, 1e-2).get());
}

TEST(MiContraction, FormulaAndFlags) {
  const ModelParams mp = gaussian_params(1, 0.2, 0.05);
  const double C = 9.0 / (4.0 * 0.04);
  EXPECT_NEAR(mi_contraction_bound(mp, 1, 2.0).get(), 2.0 * C, 1e-12);
  EXPECT_NEAR(mi_contraction_bound(mp, 11, 2.0).get(), 2.0 * C * std::exp(-0.04 / 5.0 * 10.0), 1e-12);
  EXPECT_FALSE(mi_contraction_bound(mp, 0, 2.0).value.has_value());
  EXPECT_FALSE(mi_contraction_bound(gaussian_params(1, 0.25, 0.0), 1, 2.0).value.has_value());
}

TEST(Complexity, KlExponentsInDimensionAndAccuracy) {
  const ComplexityInputs a = logcosh_inputs(1000000, 1e-2);
  ComplexityInputs b = a, c = a;
  b.d *= 16;
  c.eps /= 16;
  const double base = kl_complexity_verlet(a).get();
  const double dr = kl_complexity_verlet(b).get() / base;
  const double er = kl_complexity_verlet(c).get() / base;
  EXPECT_NEAR(dr / (kl_complexity_order(b.d, b.eps) / kl_complexity_order(a.d, a.eps)), 1.0, 0.1);
  EXPECT_NEAR(er / (kl_complexity_order(c.d, c.eps) / kl_complexity_order(a.d, a.eps)), 1.0, 0.1);
}

TEST(Complexity, RenyiExponentsInDimensionAndAccuracy) {
  const ComplexityInputs a = logcosh_inputs(1000000, 1e-2);
  ComplexityInputs b = a, c = a;
  b.d *= 16;
  c.eps /= 16;
  const double base = renyi_complexity_verlet(a).get();
  const double dr = renyi_complexity_verlet(b).get() / base;
  const double er = renyi_complexity_verlet(c).get() / base;
  EXPECT_NEAR(dr / (renyi_complexity_order(b.d, b.eps) / renyi_complexity_order(a.d, a.eps)), 1.0, 0.1);
  EXPECT_NEAR(er / (renyi_complexity_order(c.d, c.eps) / renyi_complexity_order(a.d, a.eps)), 1.0, 0.1);
}

TEST(Complexity, PipelineMeetsAccuracyTarget) {
  const ComplexityInputs in = logcosh_inputs(10, 1e-2);
  for (const BoundReport& r : {kl_complexity_verlet(in), kl_complexity_stratified(in), renyi_complexity_verlet(in)}) {
    EXPECT_TRUE(r.value.has_value()) << r.id;
    EXPECT_LE(r.component("bias"), in.eps / 2 * (1 + 1e-12)) << r.id;
    EXPECT_EQ(r.get(), r.component("iterations") * r.component("steps_per_iteration")) << r.id;
  }
}

TEST(Helpers, ChiMean) {
  EXPECT_NEAR(chi_mean(1), std::sqrt(2.0 / kPi), 1e-15);
  EXPECT_NEAR(chi_mean(2), std::sqrt(kPi / 2.0), 1e-15);
  EXPECT_LE(chi_mean(5), std::sqrt(5.0));
}

TEST(Helpers, ChiMgfBoundDominatesQuadrature) {
  for (double c : {0.1, 0.5, 1.0, 2.0}) {
    // E exp(c|V|) = 2 e^{c^2/2} Phi(c) for d = 1
    const double exact = 2.0 * std::exp(0.5 * c * c) * 0.5 * std::erfc(-c / std::sqrt(2.0));
    EXPECT_LE(exact, chi_mgf_bound(c, 1));
  }
}

TEST(Helpers, QuadraticThreshold) {
  EXPECT_DOUBLE_EQ(quadratic_threshold(1, 1, -1), 0.5);
  const double a = 2.0, b = 0.3, c = -0.7;
  const double x = quadratic_threshold(a, b, c);
  EXPECT_LE(a * x * x + b * x + c, 0.0);
  EXPECT_THROW(quadratic_threshold(1, 1, 1), PreconditionError);
}

TEST(Helpers, OrliczMgfBoundOnGaussian) {
  const double K = orlicz_norm(GaussianLaw::standard(1));
  for (double c : {0.05, 0.2, 0.3, 1.0 / (K * K)}) {
    EXPECT_LE(1.0 / std::sqrt(1.0 - 2.0 * c), orlicz_mgf_bound(c, K) * (1 + 1e-12));
  }
  EXPECT_THROW(orlicz_mgf_bound(1.0, K), PreconditionError);
}

TEST(LogHarnack, Examples) {
  const HarnackResult same = log_harnack_check_1d(1.0, [](double z) { return std::sin(z); }, 0.3, 0.3, 0.0);
  EXPECT_GE(same.slack, 0.0);
  const HarnackResult flat = log_harnack_check_1d(0.5, [](double) { return 1.7; }, 0.0, 2.0, 0.25);
  EXPECT_NEAR(flat.slack, 1.0, 1e-10);
  const HarnackResult ex = log_harnack_check_1d(1.0, [](double z) { return z; }, 0.0, 1.0, 0.5);
  EXPECT_NEAR(ex.p_log_g_x, 0.0, 1e-10);
  EXPECT_NEAR(ex.log_pg_y, 1.5, 1e-10);
  EXPECT_NEAR(ex.slack, 2.0, 1e-10);
}
