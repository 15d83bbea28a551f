#pragma once

// Markov kernels (uHMC with velocity Verlet, exact HMC, unadjusted Langevin),
// chain runners, synchronous coupling and the closed-form Gaussian chain law on
// quadratic targets.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "hmclab/core.hpp"
#include "hmclab/dynamics.hpp"
#include "hmclab/rng.hpp"

namespace hmclab {

enum class KernelKind { uhmc_v, ehmc, ula };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::uhmc_v: return "uhmc_v";
    case KernelKind::ehmc: return "ehmc";
    case KernelKind::ula: return "ula";
  }
  return "?";
}

struct KernelSpec {
  KernelKind kind = KernelKind::uhmc_v;
  FlowParams fp;
  double eta = 0.0;
  Potential potential;

  static KernelSpec uhmc_v(Potential p, double T, double h) {
    return KernelSpec{KernelKind::uhmc_v, FlowParams{T, h}, 0.0, std::move(p)};
  }
  static KernelSpec ehmc(Potential p, double T) {
    return KernelSpec{KernelKind::ehmc, FlowParams{T, 0.0}, 0.0, std::move(p)};
  }
  static KernelSpec ula(Potential p, double eta) {
    return KernelSpec{KernelKind::ula, FlowParams{}, eta, std::move(p)};
  }

  int dim() const { return potential.dim; }

  // Throws PreconditionError for malformed parameters and for the rejected
  // configuration L T^2 > (2/5) pi^2 of the HMC kinds.
  void validate() const {
    switch (kind) {
      case KernelKind::uhmc_v:
        require(fp.h > 0.0, "uhmc_v kernel requires h > 0");
        fp.validate();
        break;
      case KernelKind::ehmc:
        require(fp.h == 0.0, "ehmc kernel requires h = 0");
        require(fp.T > 0.0, "ehmc kernel requires T > 0");
        break;
      case KernelKind::ula:
        require(eta > 0.0, "ula kernel requires eta > 0");
        return;
    }
    if (!fp.coupling_exists(potential.L)) {
      throw PreconditionError("stability violation: L T^2 > (2/5) pi^2");
    }
  }
};

// One transition driven by the supplied standard Gaussian draw `xi`.
inline Vector kernel_step(const KernelSpec& k, const Vector& x, const Vector& xi) {
  require(x.size() == k.dim() && xi.size() == k.dim(), "kernel_step: dimension mismatch");
  switch (k.kind) {
    case KernelKind::uhmc_v: return verlet_flow(k.potential, {x, xi}, k.fp).x;
    case KernelKind::ehmc: return exact_flow(k.potential, {x, xi}, k.fp.T).x;
    case KernelKind::ula: {
      Vector g = k.potential.grad(x);
      if (!g.allFinite()) throw NumericalError("kernel_step: non-finite gradient");
      return x - k.eta * g + std::sqrt(2.0 * k.eta) * xi;
    }
  }
  return x;
}

inline Vector kernel_step(const KernelSpec& k, const Vector& x, RngStream& rng) {
  return kernel_step(k, x, rng.normal_vector(k.dim()));
}

// X_0, ..., X_steps.
inline std::vector<Vector> run_chain(const KernelSpec& k, const Vector& x0, std::int64_t steps, RngStream& rng) {
  require(steps >= 0, "run_chain: steps must be nonnegative");
  k.validate();
  std::vector<Vector> path;
  path.reserve(static_cast<std::size_t>(steps) + 1);
  path.push_back(x0);
  for (std::int64_t i = 0; i < steps; ++i) path.push_back(kernel_step(k, path.back(), rng));
  return path;
}

// Both chains consume the same Gaussian draw.
inline std::pair<Vector, Vector> synchronous_coupled_step(const KernelSpec& k, const Vector& x, const Vector& y,
                                                          RngStream& rng) {
  const Vector xi = rng.normal_vector(k.dim());
  return {kernel_step(k, x, xi), kernel_step(k, y, xi)};
}

// Gaussian law with either a diagonal or a full covariance.
struct GaussianLaw {
  Vector mean;
  Matrix cov;
  bool diagonal = true;

  static GaussianLaw point(const Vector& x) { return {x, Matrix::Zero(x.size(), x.size()), true}; }
  static GaussianLaw diag(const Vector& mean, const Vector& var) {
    require(mean.size() == var.size(), "GaussianLaw: mean/variance size mismatch");
    require((var.array() >= 0.0).all(), "GaussianLaw: negative variance");
    return {mean, var.asDiagonal(), true};
  }
  static GaussianLaw full(const Vector& mean, const Matrix& cov) {
    require(cov.rows() == mean.size() && cov.cols() == mean.size(), "GaussianLaw: covariance shape mismatch");
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff()),
            "GaussianLaw: covariance not symmetric");
    return {mean, cov, false};
  }
  static GaussianLaw standard(int d) { return diag(Vector::Zero(d), Vector::Ones(d)); }

  int dim() const { return static_cast<int>(mean.size()); }
  Vector variances() const { return cov.diagonal(); }

  // E|X|^2
  double second_moment() const { return mean.squaredNorm() + cov.trace(); }
  // E|X|^4 = (tr S + |m|^2)^2 + 2 tr(S^2) + 4 m' S m
  double fourth_moment() const {
    const double a = cov.trace() + mean.squaredNorm();
    return a * a + 2.0 * (cov * cov).trace() + 4.0 * mean.dot(cov * mean);
  }
};

inline constexpr std::int64_t kStationary = -1;

// Per-coordinate (a, b) with X' = a X + b xi on a quadratic-diagonal target.
inline std::vector<std::pair<double, double>> linear_kernel_rows(const KernelSpec& k) {
  const Potential& p = k.potential;
  if (!p.is_quadratic()) throw PreconditionError("gaussian chain law requires a quadratic potential");
  std::vector<std::pair<double, double>> rows(static_cast<std::size_t>(p.dim));
  for (int i = 0; i < p.dim; ++i) {
    const double w2 = p.omega2[i];
    switch (k.kind) {
      case KernelKind::uhmc_v: rows[i] = verlet_row(w2, k.fp); break;
      case KernelKind::ehmc: rows[i] = position_row(w2, FlowParams{k.fp.T, 0.0}); break;
      case KernelKind::ula: rows[i] = {1.0 - k.eta * w2, std::sqrt(2.0 * k.eta)}; break;
    }
  }
  return rows;
}

// Law of X_steps when X_0 ~ init; steps == kStationary gives the invariant law.
inline GaussianLaw gaussian_chain_law(const KernelSpec& k, const GaussianLaw& init, std::int64_t steps) {
  require(init.dim() == k.dim(), "gaussian_chain_law: dimension mismatch");
  require(steps >= 0 || steps == kStationary, "gaussian_chain_law: steps must be nonnegative");
  const auto rows = linear_kernel_rows(k);
  const int d = k.dim();
  Vector ak(d);
  Vector noise(d);
  for (int i = 0; i < d; ++i) {
    const auto [a, b] = rows[i];
    if (steps == kStationary) {
      if (!(std::abs(a) < 1.0)) throw NumericalError("gaussian_chain_law: chain has no stationary law (|a| >= 1)");
      ak[i] = 0.0;
      noise[i] = b * b / (1.0 - a * a);
    } else {
      ak[i] = std::pow(a, static_cast<double>(steps));
      // b^2 (1 - a^{2k}) / (1 - a^2) summed as a geometric series when |a| = 1
      noise[i] = std::abs(1.0 - a * a) < 1e-300 ? b * b * static_cast<double>(steps)
                                                : b * b * (1.0 - ak[i] * ak[i]) / (1.0 - a * a);
    }
  }
  Vector mean = ak.array() * init.mean.array();
  if (init.diagonal) {
    Vector var = ak.array().square() * init.variances().array() + noise.array();
    return GaussianLaw::diag(mean, var);
  }
  Matrix cov = ak.asDiagonal() * init.cov * ak.asDiagonal();
  cov.diagonal() += noise;
  return GaussianLaw::full(mean, cov);
}

inline GaussianLaw gaussian_chain_law(const KernelSpec& k, const Vector& x0, std::int64_t steps) {
  return gaussian_chain_law(k, GaussianLaw::point(x0), steps);
}

// Joint law of (X_0, X_steps) in R^{2d}.
inline GaussianLaw gaussian_joint_law(const KernelSpec& k, const GaussianLaw& init, std::int64_t steps) {
  require(steps >= 0, "gaussian_joint_law: steps must be nonnegative");
  const GaussianLaw marginal = gaussian_chain_law(k, init, steps);
  const auto rows = linear_kernel_rows(k);
  const int d = k.dim();
  Vector ak(d);
  for (int i = 0; i < d; ++i) ak[i] = std::pow(rows[i].first, static_cast<double>(steps));
  Matrix cov(2 * d, 2 * d);
  const Matrix cross = init.cov * ak.asDiagonal();  // Cov(X_0, X_k)
  cov.topLeftCorner(d, d) = init.cov;
  cov.topRightCorner(d, d) = cross;
  cov.bottomLeftCorner(d, d) = cross.transpose();
  cov.bottomRightCorner(d, d) = marginal.cov;
  Vector mean(2 * d);
  mean << init.mean, marginal.mean;
  return GaussianLaw::full(mean, cov);
}

// Per-step synchronous-coupling contraction of uHMC-v/eHMC/uLA on a quadratic
// target: |x' - y'| <= max_i |a_i| |x - y|.
inline double synchronous_contraction_factor(const KernelSpec& k) {
  double worst = 0.0;
  for (const auto& [a, b] : linear_kernel_rows(k)) worst = std::max(worst, std::abs(a));
  return worst;
}

// Law of one uLA step from the point x on a quadratic target.
inline GaussianLaw ula_step_law(const Potential& p, const Vector& x, double eta) {
  return gaussian_chain_law(KernelSpec::ula(p, eta), x, 1);
}

// Law of the overdamped Langevin diffusion at time eta started at y (an
// Ornstein-Uhlenbeck process on a quadratic target).
inline GaussianLaw langevin_law(const Potential& p, const Vector& y, double eta) {
  require(p.is_quadratic(), "langevin_law requires a quadratic potential");
  require(eta > 0.0, "langevin_law: eta must be positive");
  const int d = p.dim;
  Vector mean(d);
  Vector var(d);
  for (int i = 0; i < d; ++i) {
    const double w2 = p.omega2[i];
    mean[i] = y[i] * std::exp(-w2 * eta);
    var[i] = -std::expm1(-2.0 * w2 * eta) / w2;
  }
  return GaussianLaw::diag(mean, var);
}

}  // namespace hmclab
