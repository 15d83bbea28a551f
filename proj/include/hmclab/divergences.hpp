#pragma once

// Divergences between Gaussian laws in closed form, 1-D quadrature for mixture
// examples, Wasserstein and Orlicz machinery, mutual information and the
// perturbed-Gaussian bounds.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "hmclab/core.hpp"
#include "hmclab/kernels.hpp"

namespace hmclab {

enum class DivergenceKind { kl, renyi, tv, w2, orlicz_w, mi };

inline const char* to_string(DivergenceKind k) {
  switch (k) {
    case DivergenceKind::kl: return "KL";
    case DivergenceKind::renyi: return "Renyi";
    case DivergenceKind::tv: return "TV";
    case DivergenceKind::w2: return "W2";
    case DivergenceKind::orlicz_w: return "OrliczW";
    case DivergenceKind::mi: return "MI";
  }
  return "?";
}

// A nonnegative divergence value; +inf is a legitimate result.
struct DivergenceValue {
  double value = 0.0;
  DivergenceKind kind = DivergenceKind::kl;
  double order = 1.0;  // Renyi order q
  double quadrature_error = 0.0;

  bool infinite() const { return std::isinf(value); }
};

namespace detail {

// x - log(1 + x), accurate near 0.
inline double xm_log1p(double x) {
  if (std::abs(x) < 1e-3) {
    double term = x * x, sum = 0.0;
    for (int n = 2; n < 12; ++n) {
      sum += ((n % 2 == 0) ? 1.0 : -1.0) * term / n;
      term *= x;
    }
    return sum;
  }
  return x - std::log1p(x);
}

// Cholesky log-determinant; returns false when the matrix is not positive definite.
inline bool log_det_pd(const Matrix& A, double& out) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) return false;
  const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
  if (!(diag.array() > 0.0).all()) return false;
  out = 2.0 * diag.array().log().sum();
  return std::isfinite(out);
}

inline bool both_diagonal(const GaussianLaw& a, const GaussianLaw& b) { return a.diagonal && b.diagonal; }

inline void same_dim(const GaussianLaw& a, const GaussianLaw& b, const char* who) {
  require(a.dim() == b.dim(), std::string(who) + ": dimension mismatch");
}

}  // namespace detail

// KL(a | b).
inline DivergenceValue gaussian_kl(const GaussianLaw& a, const GaussianLaw& b) {
  detail::same_dim(a, b, "gaussian_kl");
  DivergenceValue out{0.0, DivergenceKind::kl};
  const Vector dm = a.mean - b.mean;
  if (detail::both_diagonal(a, b)) {
    const Vector va = a.variances(), vb = b.variances();
    require((va.array() > 0.0).all() && (vb.array() > 0.0).all(), "gaussian_kl: singular covariance");
    for (int i = 0; i < a.dim(); ++i) {
      const double x = (va[i] - vb[i]) / vb[i];
      out.value += 0.5 * (detail::xm_log1p(x) + dm[i] * dm[i] / vb[i]);
    }
    return out;
  }
  double lda = 0.0, ldb = 0.0;
  require(detail::log_det_pd(a.cov, lda) && detail::log_det_pd(b.cov, ldb), "gaussian_kl: singular covariance");
  Eigen::LLT<Matrix> lb(b.cov);
  const double tr = lb.solve(a.cov).trace();
  const double quad = dm.dot(lb.solve(dm));
  out.value = std::max(0.0, 0.5 * (tr + quad - a.dim() + ldb - lda));
  return out;
}

// R_q(a | b) = log( integral a^q b^{1-q} ) / (q - 1); +inf when
// q Sigma_b + (1 - q) Sigma_a is not positive definite.
inline DivergenceValue gaussian_renyi(double q, const GaussianLaw& a, const GaussianLaw& b) {
  require(q > 1.0, "gaussian_renyi: order must exceed 1");
  detail::same_dim(a, b, "gaussian_renyi");
  DivergenceValue out{0.0, DivergenceKind::renyi, q};
  const Vector dm = a.mean - b.mean;
  if (detail::both_diagonal(a, b)) {
    const Vector va = a.variances(), vb = b.variances();
    require((va.array() > 0.0).all() && (vb.array() > 0.0).all(), "gaussian_renyi: singular covariance");
    for (int i = 0; i < a.dim(); ++i) {
      const double x = (va[i] - vb[i]) / vb[i];  // r - 1 with r = va / vb
      const double t = -(q - 1.0) * x;
      if (!(t > -1.0)) {
        out.value = kInf;
        return out;
      }
      const double sigma_q = vb[i] * (1.0 + t);
      // -0.5 log r - log1p(t) / (2 (q - 1)) rearranged to avoid cancellation
      const double log_part = 0.5 * detail::xm_log1p(x) + detail::xm_log1p(t) / (2.0 * (q - 1.0));
      out.value += log_part + 0.5 * q * dm[i] * dm[i] / sigma_q;
    }
    out.value = std::max(0.0, out.value);
    return out;
  }
  const Matrix sq = q * b.cov + (1.0 - q) * a.cov;
  double lda = 0.0, ldb = 0.0, ldq = 0.0;
  require(detail::log_det_pd(a.cov, lda) && detail::log_det_pd(b.cov, ldb), "gaussian_renyi: singular covariance");
  if (!detail::log_det_pd(sq, ldq)) {
    out.value = kInf;
    return out;
  }
  Eigen::LLT<Matrix> lq(sq);
  out.value = 0.5 * q * dm.dot(lq.solve(dm)) - (ldq - (1.0 - q) * lda - q * ldb) / (2.0 * (q - 1.0));
  out.value = std::max(0.0, out.value);
  return out;
}

// W2 between Gaussian laws.
inline DivergenceValue w2(const GaussianLaw& a, const GaussianLaw& b) {
  detail::same_dim(a, b, "w2");
  DivergenceValue out{0.0, DivergenceKind::w2};
  double sq = (a.mean - b.mean).squaredNorm();
  if (detail::both_diagonal(a, b)) {
    sq += (a.variances().array().sqrt() - b.variances().array().sqrt()).square().sum();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> ea(a.cov);
    const Matrix ra = ea.operatorSqrt();
    Eigen::SelfAdjointEigenSolver<Matrix> em(ra * b.cov * ra);
    const Vector ev = em.eigenvalues().cwiseMax(0.0);
    sq += a.cov.trace() + b.cov.trace() - 2.0 * ev.array().sqrt().sum();
  }
  out.value = std::sqrt(std::max(0.0, sq));
  return out;
}

// W2 between two 1-D empirical measures via the quantile coupling.
inline DivergenceValue w2(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "w2: empty sample set");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  // Walk the merged quantile breakpoints i/na and j/nb.
  double sum = 0.0, u = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double next = std::min((i + 1) / na, (j + 1) / nb);
    const double diff = a[i] - b[j];
    sum += (next - u) * diff * diff;
    u = next;
    if ((i + 1) / na <= next + 1e-15) ++i;
    if ((j + 1) / nb <= next + 1e-15) ++j;
  }
  return {std::sqrt(sum), DivergenceKind::w2};
}

// Smallest lambda with mean exp(|X_i|^2 / lambda^2) <= 2; rows are samples.
inline double orlicz_norm(const Matrix& samples) {
  require(samples.rows() > 0, "orlicz_norm: empty sample set");
  const Vector r2 = samples.rowwise().squaredNorm();
  const double rmax2 = r2.maxCoeff();
  if (rmax2 == 0.0) return 0.0;
  const double n = static_cast<double>(r2.size());
  // log mean exp(r2 / lambda^2) - log 2, decreasing in lambda
  auto excess = [&](double lambda) {
    const double t = 1.0 / (lambda * lambda);
    const double top = rmax2 * t;
    const double s = (r2.array() * t - top).exp().sum();
    return top + std::log(s / n) - kLog2;
  };
  double lo = std::sqrt(r2.mean() / kLog2);
  double hi = std::sqrt(rmax2 / kLog2);
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

inline double orlicz_norm(const std::vector<double>& samples) {
  return orlicz_norm(Matrix(Eigen::Map<const Vector>(samples.data(), static_cast<Eigen::Index>(samples.size()))));
}

// Orlicz norm of |X| for X ~ N(m, Sigma) from the closed-form moment
// generating function of |X|^2:
// E exp(t|X|^2) = prod_i (1 - 2 t s_i)^{-1/2} exp(t m_i^2 / (1 - 2 t s_i)).
inline double orlicz_norm(const GaussianLaw& law) {
  Vector s;
  Vector m;
  if (law.diagonal) {
    s = law.variances();
    m = law.mean;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(law.cov);
    s = es.eigenvalues().cwiseMax(0.0);
    m = es.eigenvectors().transpose() * law.mean;
  }
  const double smax = s.maxCoeff();
  if (smax == 0.0) return law.mean.norm() / std::sqrt(kLog2);
  auto log_mgf = [&](double lambda) {
    const double t = 1.0 / (lambda * lambda);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double w = 1.0 - 2.0 * t * s[i];
      if (!(w > 0.0)) return kInf;
      acc += -0.5 * std::log(w) + t * m[i] * m[i] / w;
    }
    return acc;
  };
  double lo = std::sqrt(2.0 * smax);
  double hi = 2.0 * lo + law.mean.norm() + 1.0;
  while (log_mgf(hi) > kLog2) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (log_mgf(mid) > kLog2 ? lo : hi) = mid;
  }
  return hi;
}

// Upper bound on the Orlicz-Wasserstein distance from the synchronous
// (quantile) coupling X = m_a + Sa^{1/2} Z, Y = m_b + Sb^{1/2} Z.
inline DivergenceValue orlicz_w_upper(const GaussianLaw& a, const GaussianLaw& b) {
  detail::same_dim(a, b, "orlicz_w_upper");
  GaussianLaw diff;
  if (detail::both_diagonal(a, b)) {
    const Vector sd = a.variances().array().sqrt() - b.variances().array().sqrt();
    diff = GaussianLaw::diag(a.mean - b.mean, sd.array().square());
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> ea(a.cov), eb(b.cov);
    const Matrix D = ea.operatorSqrt() - eb.operatorSqrt();
    const Matrix S = D * D.transpose();
    diff = GaussianLaw::full(a.mean - b.mean, 0.5 * (S + S.transpose()));
  }
  return {orlicz_norm(diff), DivergenceKind::orlicz_w};
}

// Orlicz norm of paired differences: an Orlicz-Wasserstein upper bound for the
// coupling that produced the pairs.
inline DivergenceValue orlicz_w_upper(const Matrix& xs, const Matrix& ys) {
  require(xs.rows() == ys.rows() && xs.cols() == ys.cols(), "orlicz_w_upper: sample shape mismatch");
  return {orlicz_norm(Matrix(xs - ys)), DivergenceKind::orlicz_w};
}

// MI of a joint Gaussian over R^{2d}: (log det S_X + log det S_Y - log det S) / 2.
inline DivergenceValue mi_gaussian(const GaussianLaw& joint) {
  const int n = joint.dim();
  require(n % 2 == 0 && n > 0, "mi_gaussian: joint dimension must be even");
  const int d = n / 2;
  DivergenceValue out{0.0, DivergenceKind::mi};
  const Matrix sx = joint.cov.topLeftCorner(d, d);
  const Matrix sy = joint.cov.bottomRightCorner(d, d);
  // A deterministic block carries no information.
  if (sx.cwiseAbs().maxCoeff() == 0.0 || sy.cwiseAbs().maxCoeff() == 0.0) return out;
  double lx = 0.0, ly = 0.0, lj = 0.0;
  require(detail::log_det_pd(sx, lx) && detail::log_det_pd(sy, ly), "mi_gaussian: singular marginal covariance");
  if (!detail::log_det_pd(joint.cov, lj)) {
    out.value = kInf;
    return out;
  }
  out.value = std::max(0.0, 0.5 * (lx + ly - lj));
  if (!std::isfinite(out.value)) out.value = kInf;
  return out;
}

// KL(phi# gamma_d | gamma_d) <= m1^2/2 + d m2^2 / (2 (1 - m2)).
inline double perturbed_gaussian_kl_bound(double m1, double m2, int d) {
  require(m1 >= 0.0 && m2 >= 0.0, "perturbed_gaussian_kl_bound: m1, m2 must be nonnegative");
  require(m2 < 1.0, "perturbed_gaussian_kl_bound: m2 must be < 1");
  return 0.5 * m1 * m1 + d * m2 * m2 / (2.0 * (1.0 - m2));
}

// R_q(phi# gamma_d | gamma_d) <= d m2 / (1 - m2) + sqrt(d) m1 + q m1^2 / 2.
inline double perturbed_gaussian_renyi_bound(double q, double m1, double m2, int d) {
  require(q > 1.0, "perturbed_gaussian_renyi_bound: order must exceed 1");
  require(m1 >= 0.0 && m2 >= 0.0, "perturbed_gaussian_renyi_bound: m1, m2 must be nonnegative");
  require(m2 < 1.0, "perturbed_gaussian_renyi_bound: m2 must be < 1");
  return d * m2 / (1.0 - m2) + std::sqrt(static_cast<double>(d)) * m1 + 0.5 * q * m1 * m1;
}

// ---------------------------------------------------------------------------
// 1-D quadrature: mixture of unit-variance Gaussians against N(0, 1).

struct MixtureDivergences {
  DivergenceValue tv;
  DivergenceValue kl;
  DivergenceValue renyi2;
  double tolerance;
};

namespace detail {

inline double log_phi(double x) { return -0.5 * x * x - 0.5 * std::log(2.0 * kPi); }

inline double log_sum_exp(const std::vector<double>& terms) {
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return top + std::log(s);
}

}  // namespace detail

// Adaptive Gauss-Kronrod on [-40, 40] split at the mixture centers, their
// doubles (peaks of mu^2/pi) and the crossings of mu and pi.
inline MixtureDivergences tv_kl_r2_demo(const std::vector<double>& weights, const std::vector<double>& centers,
                                        double tol = 1e-10) {
  require(!weights.empty() && weights.size() == centers.size(), "tv_kl_r2_demo: weights/centers size mismatch");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  require(std::abs(total - 1.0) < 1e-12, "tv_kl_r2_demo: weights must sum to 1");
  for (double w : weights) require(w >= 0.0, "tv_kl_r2_demo: negative weight");

  auto log_mu = [&](double x) {
    std::vector<double> t;
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (weights[i] > 0.0) t.push_back(std::log(weights[i]) + detail::log_phi(x - centers[i]));
    return detail::log_sum_exp(t);
  };
  auto gap = [&](double x) { return log_mu(x) - detail::log_phi(x); };

  bool is_reference = true;
  for (std::size_t i = 0; i < weights.size(); ++i) is_reference = is_reference && (weights[i] == 0.0 || centers[i] == 0.0);
  if (is_reference) {
    MixtureDivergences zero;
    zero.tolerance = tol;
    zero.tv = {0.0, DivergenceKind::tv, 1.0, 0.0};
    zero.kl = {0.0, DivergenceKind::kl, 1.0, 0.0};
    zero.renyi2 = {0.0, DivergenceKind::renyi, 2.0, 0.0};
    return zero;
  }

  constexpr double kLo = -40.0, kHi = 40.0;
  std::vector<double> cuts{kLo, kHi, 0.0};
  for (double c : centers) {
    cuts.push_back(std::clamp(c, kLo, kHi));
    cuts.push_back(std::clamp(2.0 * c, kLo, kHi));
  }
  constexpr int kGrid = 8000;
  for (int i = 0; i < kGrid; ++i) {
    const double a = kLo + (kHi - kLo) * i / kGrid, b = kLo + (kHi - kLo) * (i + 1) / kGrid;
    const double ga = gap(a), gb = gap(b);
    if (ga == 0.0 && gb != 0.0) cuts.push_back(a);
    if (std::isfinite(ga) && std::isfinite(gb) && ga * gb < 0.0) {
      boost::uintmax_t iters = 200;
      auto root = boost::math::tools::toms748_solve(gap, a, b, ga, gb,
                                                    boost::math::tools::eps_tolerance<double>(52), iters);
      cuts.push_back(0.5 * (root.first + root.second));
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());

  using boost::math::quadrature::gauss_kronrod;
  auto integrate = [&](const std::function<double(double)>& f, double& err) {
    double sum = 0.0, abs_err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double e = 0.0;
      sum += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 20, tol * 1e-2, &e);
      abs_err += e;
    }
    err = abs_err;
    return sum;
  };

  double e_tv = 0.0, e_kl = 0.0, e_r2 = 0.0;
  const double tv = 0.5 * integrate([&](double x) { return std::abs(std::exp(log_mu(x)) - std::exp(detail::log_phi(x))); }, e_tv);
  const double kl = integrate([&](double x) {
    const double lm = log_mu(x);
    return std::isfinite(lm) ? std::exp(lm) * (lm - detail::log_phi(x)) : 0.0;
  }, e_kl);
  const double r2_int = integrate([&](double x) { return std::exp(2.0 * log_mu(x) - detail::log_phi(x)); }, e_r2);

  MixtureDivergences out;
  out.tolerance = tol;
  out.tv = {std::max(0.0, tv), DivergenceKind::tv, 1.0, 0.5 * e_tv};
  out.kl = {std::max(0.0, kl), DivergenceKind::kl, 1.0, e_kl};
  if (!std::isfinite(r2_int)) {
    out.renyi2 = {kInf, DivergenceKind::renyi, 2.0, 0.0};
  } else {
    out.renyi2 = {std::max(0.0, std::log(r2_int)), DivergenceKind::renyi, 2.0, e_r2 / r2_int};
  }
  // Relative quadrature error of each value.
  out.tv.quadrature_error = tv > 0.0 ? out.tv.quadrature_error / tv : out.tv.quadrature_error;
  out.kl.quadrature_error = kl > 0.0 ? out.kl.quadrature_error / kl : out.kl.quadrature_error;
  if (out.tv.quadrature_error > tol || out.kl.quadrature_error > tol || out.renyi2.quadrature_error > tol) {
    throw NumericalError("tv_kl_r2_demo: quadrature tolerance not met");
  }
  return out;
}

// Generic 1-D density-ratio quadrature used as an oracle in tests:
// integral over [lo, hi] of f, split at the given points.
inline double integrate_1d(const std::function<double(double)>& f, std::vector<double> cuts, double tol,
                           double* err_out = nullptr) {
  using boost::math::quadrature::gauss_kronrod;
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0, abs_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double e = 0.0;
    sum += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 20, tol, &e);
    abs_err += e;
  }
  if (err_out) *err_out = abs_err;
  return sum;
}

}  // namespace hmclab
