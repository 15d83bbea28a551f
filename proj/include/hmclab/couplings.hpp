#pragma once

// One-shot coupling maps solved by Newton shooting on the endpoint position,
// their finite-difference Jacobians, and empirical checks of the regularity
// estimates for each map.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hmclab/bounds.hpp"
#include "hmclab/core.hpp"
#include "hmclab/dynamics.hpp"
#include "hmclab/rng.hpp"

namespace hmclab {

enum class MapKind { mixing, bias, cross };

inline const char* to_string(MapKind k) {
  switch (k) {
    case MapKind::mixing: return "mixing";
    case MapKind::bias: return "bias";
    case MapKind::cross: return "cross";
  }
  return "?";
}

struct CouplingSolution {
  Vector v_prime;
  double residual = kInf;
  int iterations = 0;
  MapKind map_kind = MapKind::mixing;
  bool converged = false;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  double damping = 0.5;
  int max_halvings = 40;
};

// Finds v' with q(y, v') = target, where q is the position flow selected by fp.
// Quadratic potentials are solved in one linear step.
inline CouplingSolution shoot(const Potential& p, const Vector& y, const Vector& target, const FlowParams& fp,
                              Vector guess, MapKind kind, const NewtonOptions& opts = {}) {
  require(fp.coupling_exists(p.L), "coupling map: L T^2 exceeds (2/5) pi^2, existence not guaranteed");
  CouplingSolution sol;
  sol.map_kind = kind;
  if (p.is_quadratic()) {
    Vector v(p.dim);
    for (int i = 0; i < p.dim; ++i) {
      const auto [a, b] = position_row(p.omega2[i], fp);
      v[i] = (target[i] - a * y[i]) / b;
    }
    sol.v_prime = v;
    sol.residual = (flow_position(p, y, v, fp) - target).norm();
    sol.iterations = 1;
    sol.converged = sol.residual <= std::max(opts.tol, 1e-14 * target.norm());
    return sol;
  }
  Vector v = std::move(guess);
  Vector r = flow_position(p, y, v, fp) - target;
  double res = r.norm();
  int it = 0;
  for (; it < opts.max_iter && res > opts.tol; ++it) {
    const Matrix J = flow_jacobian_v(p, {y, v}, fp);
    const Vector step = J.partialPivLu().solve(r);
    double scale = 1.0;
    bool improved = false;
    for (int k = 0; k <= opts.max_halvings; ++k) {
      const Vector cand = v - scale * step;
      const Vector rc = flow_position(p, y, cand, fp) - target;
      const double nc = rc.norm();
      if (nc < res) {
        v = cand;
        r = rc;
        res = nc;
        improved = true;
        break;
      }
      scale *= opts.damping;
    }
    if (!improved) break;  // stagnated at the noise floor of the flow
  }
  sol.v_prime = v;
  sol.residual = res;
  sol.iterations = it;
  sol.converged = res <= opts.tol;
  return sol;
}

inline const CouplingSolution& require_converged(const CouplingSolution& s, double tol) {
  if (!(s.residual <= tol)) {
    throw NumericalError(std::string("coupling map (") + to_string(s.map_kind) +
                         ") did not converge; best residual " + std::to_string(s.residual));
  }
  return s;
}

// phi_{x,y}: q~(x, v) = q~(y, phi(v)) for the flow selected by fp.
inline CouplingSolution solve_mixing_map(const Potential& p, const Vector& x, const Vector& y, const Vector& v,
                                         const FlowParams& fp, const NewtonOptions& opts = {}) {
  const Vector target = flow_position(p, x, v, fp);
  if (x == y) return {v, 0.0, 0, MapKind::mixing, true};
  return shoot(p, y, target, fp, v + (x - y) / fp.T, MapKind::mixing, opts);
}

// phi_x: q~_{T,h}(x, v) = q_T(x, phi(v)).
inline CouplingSolution solve_bias_map(const Potential& p, const Vector& x, const Vector& v, const FlowParams& fp,
                                       const NewtonOptions& opts = {}) {
  if (fp.exact()) return {v, 0.0, 0, MapKind::bias, true};
  const Vector target = flow_position(p, x, v, fp);
  return shoot(p, x, target, FlowParams{fp.T, 0.0}, v, MapKind::bias, opts);
}

enum class CrossMethod { direct, composition };

// Phi_{x,y}: q~_{T,h}(x, v) = q_T(y, Phi(v)), by direct shooting or as
// phi_{x,y} (exact flow) applied after phi_x.
inline CouplingSolution solve_cross_map(const Potential& p, const Vector& x, const Vector& y, const Vector& v,
                                        const FlowParams& fp, CrossMethod method = CrossMethod::direct,
                                        const NewtonOptions& opts = {}) {
  const FlowParams exact{fp.T, 0.0};
  const Vector target = flow_position(p, x, v, fp);
  CouplingSolution out;
  if (method == CrossMethod::direct) {
    out = shoot(p, y, target, exact, v + (x - y) / fp.T, MapKind::cross, opts);
  } else {
    const CouplingSolution b = solve_bias_map(p, x, v, fp, opts);
    const CouplingSolution m = solve_mixing_map(p, x, y, b.v_prime, exact, opts);
    out.v_prime = m.v_prime;
    out.iterations = b.iterations + m.iterations;
    out.residual = (flow_position(p, y, out.v_prime, exact) - target).norm();
    out.converged = b.converged && m.converged;
  }
  out.map_kind = MapKind::cross;
  return out;
}

inline CouplingSolution solve_map(MapKind kind, const Potential& p, const Vector& x, const Vector& y,
                                  const Vector& v, const FlowParams& fp, const NewtonOptions& opts = {}) {
  switch (kind) {
    case MapKind::mixing: return solve_mixing_map(p, x, y, v, fp, opts);
    case MapKind::bias: return solve_bias_map(p, x, v, fp, opts);
    case MapKind::cross: return solve_cross_map(p, x, y, v, fp, CrossMethod::direct, opts);
  }
  return {};
}

// Central-difference Jacobian of v -> map(v), step 1e-4.
inline Matrix map_jacobian(MapKind kind, const Potential& p, const Vector& x, const Vector& y, const Vector& v,
                           const FlowParams& fp, double step = 1e-4) {
  const int d = p.dim;
  Matrix J(d, d);
  for (int j = 0; j < d; ++j) {
    Vector vp = v, vm = v;
    vp[j] += step;
    vm[j] -= step;
    const CouplingSolution a = solve_map(kind, p, x, y, vp, fp);
    const CouplingSolution b = solve_map(kind, p, x, y, vm, fp);
    J.col(j) = (a.v_prime - b.v_prime) / (2.0 * step);
  }
  return J;
}

// Operator norm by power iteration on A^T A.
inline double operator_norm(const Matrix& A, int iterations = 30) {
  if (A.size() == 0) return 0.0;
  const Matrix G = A.transpose() * A;
  Vector u = Vector::Ones(A.cols()).normalized();
  double lambda = 0.0;
  for (int i = 0; i < iterations; ++i) {
    Vector w = G * u;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    lambda = n;
    u = w / n;
  }
  return std::sqrt(u.dot(G * u) > 0.0 ? u.dot(G * u) : lambda);
}

// ---------------------------------------------------------------------------
// Regularity verification.

enum class LemmaId {
  mixing_pointwise,
  mixing_jacobian,
  cross_pointwise_second,
  cross_jacobian_second,
  cross_pointwise_first,
  cross_jacobian_first,
  bias_pointwise_second,
  bias_jacobian_second,
  bias_pointwise_first,
  bias_jacobian_first,
  verlet_error_first,
};

inline const std::vector<LemmaId>& all_lemmas() {
  static const std::vector<LemmaId> ids{
      LemmaId::mixing_pointwise,      LemmaId::mixing_jacobian,       LemmaId::cross_pointwise_second,
      LemmaId::cross_jacobian_second, LemmaId::cross_pointwise_first, LemmaId::cross_jacobian_first,
      LemmaId::bias_pointwise_second, LemmaId::bias_jacobian_second,  LemmaId::bias_pointwise_first,
      LemmaId::bias_jacobian_first,   LemmaId::verlet_error_first};
  return ids;
}

inline const char* to_string(LemmaId id) {
  switch (id) {
    case LemmaId::mixing_pointwise: return "mixing_pointwise";
    case LemmaId::mixing_jacobian: return "mixing_jacobian";
    case LemmaId::cross_pointwise_second: return "cross_pointwise_second";
    case LemmaId::cross_jacobian_second: return "cross_jacobian_second";
    case LemmaId::cross_pointwise_first: return "cross_pointwise_first";
    case LemmaId::cross_jacobian_first: return "cross_jacobian_first";
    case LemmaId::bias_pointwise_second: return "bias_pointwise_second";
    case LemmaId::bias_jacobian_second: return "bias_jacobian_second";
    case LemmaId::bias_pointwise_first: return "bias_pointwise_first";
    case LemmaId::bias_jacobian_first: return "bias_jacobian_first";
    case LemmaId::verlet_error_first: return "verlet_error_first";
  }
  return "?";
}

inline LemmaId lemma_from_string(const std::string& s) {
  for (LemmaId id : all_lemmas())
    if (s == to_string(id)) return id;
  throw PreconditionError("unknown lemma id '" + s + "'");
}

inline bool is_jacobian_lemma(LemmaId id) {
  return id == LemmaId::mixing_jacobian || id == LemmaId::cross_jacobian_second ||
         id == LemmaId::cross_jacobian_first || id == LemmaId::bias_jacobian_second ||
         id == LemmaId::bias_jacobian_first;
}

inline MapKind lemma_map(LemmaId id) {
  switch (id) {
    case LemmaId::mixing_pointwise:
    case LemmaId::mixing_jacobian: return MapKind::mixing;
    case LemmaId::bias_pointwise_second:
    case LemmaId::bias_jacobian_second:
    case LemmaId::bias_pointwise_first:
    case LemmaId::bias_jacobian_first:
    case LemmaId::verlet_error_first: return MapKind::bias;
    default: return MapKind::cross;
  }
}

// Ceiling on L (T^2 + T h) assumed by each estimate.
inline double lemma_step_ceiling(LemmaId id) {
  switch (lemma_map(id)) {
    case MapKind::bias: return 1.0 / 6.0;
    default: return 1.0 / 12.0;
  }
}

struct SamplerConfig {
  std::int64_t samples = 1000;
  std::uint64_t seed = 1;
  double x_scale = 1.0;
  double y_scale = 1.0;
  double v_scale = 1.0;
  bool x_equals_y = false;
  int threads = 1;
  // Jacobian deviations below this level are finite-difference noise and count as ratio 0.
  double jacobian_floor = 1e-6;
  // Maximum defining-equation residual before a solve counts as a failure.
  double residual_tol = 1e-10;
};

inline std::string residual_label(double tol) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", tol);
  return buf;
}

struct PreconditionCheck {
  std::string name;
  double ratio;  // observed / allowed, passes when <= 1
  bool pass;
};

struct RegularitySample {
  Vector x, y, v;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct RegularityReport {
  std::string lemma_id;
  std::int64_t samples = 0;
  double max_ratio = 0.0;
  double worst_residual = 0.0;
  std::optional<RegularitySample> violating;
  std::vector<PreconditionCheck> preconditions;

  bool preconditions_ok() const {
    return std::all_of(preconditions.begin(), preconditions.end(), [](const auto& c) { return c.pass; });
  }
  bool holds() const { return samples > 0 && max_ratio <= 1.0; }
};

struct LemmaEvaluation {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

// LHS and RHS of one estimate at (x, y, v).
inline LemmaEvaluation evaluate_lemma(LemmaId id, const Potential& p, const FlowParams& fp, const Vector& x,
                                      const Vector& y, const Vector& v) {
  const double L = p.L, M = p.M, N = p.N, T = fp.T, h = fp.h;
  const double nxy = (x - y).norm(), nx = x.norm(), nv = v.norm();
  LemmaEvaluation e;
  if (id == LemmaId::verlet_error_first) {
    std::vector<Vector> traj;
    verlet_flow(p, {x, v}, fp, &traj);
    double worst = 0.0;
    for (std::size_t j = 1; j < traj.size(); ++j) {
      const Vector q = exact_flow(p, {x, v}, static_cast<double>(j) * h).x;
      worst = std::max(worst, (q - traj[j]).norm());
    }
    e.lhs = worst;
    e.rhs = verlet_error_first_rhs(L, T, h, nx, nv);
    return e;
  }
  const MapKind kind = lemma_map(id);
  const CouplingSolution s = solve_map(kind, p, x, y, v, fp);
  e.residual = s.residual;
  if (is_jacobian_lemma(id)) {
    const Matrix J = map_jacobian(kind, p, x, y, v, fp);
    e.lhs = operator_norm(J - Matrix::Identity(p.dim, p.dim));
  } else {
    e.lhs = (s.v_prime - v).norm();
  }
  switch (id) {
    case LemmaId::mixing_pointwise: e.rhs = mixing_pointwise_rhs(T, nxy); break;
    case LemmaId::mixing_jacobian: e.rhs = mixing_jacobian_rhs(M, T, nxy); break;
    case LemmaId::cross_pointwise_second: e.rhs = cross_pointwise_second_rhs(L, M, T, h, nxy, nx, nv); break;
    case LemmaId::cross_jacobian_second: e.rhs = cross_jacobian_second_rhs(L, M, N, T, h, nxy, nx, nv); break;
    case LemmaId::cross_pointwise_first: e.rhs = cross_pointwise_first_rhs(L, T, h, nxy, nx, nv); break;
    case LemmaId::cross_jacobian_first: e.rhs = cross_jacobian_first_rhs(M, T, h, nxy, nx, nv); break;
    case LemmaId::bias_pointwise_second: e.rhs = bias_pointwise_second_rhs(L, M, T, h, nx, nv); break;
    case LemmaId::bias_jacobian_second: e.rhs = bias_jacobian_second_rhs(L, M, N, T, h, nx, nv); break;
    case LemmaId::bias_pointwise_first: e.rhs = bias_pointwise_first_rhs(L, T, h, nx, nv); break;
    case LemmaId::bias_jacobian_first: e.rhs = bias_jacobian_first_rhs(M, T, h, nx, nv); break;
    case LemmaId::verlet_error_first: break;
  }
  return e;
}

// Largest finite-difference Hessian norm over the sampled points divided by the
// declared L. Used as a detector for understated smoothness metadata.
inline double sampled_hessian_ratio(const Potential& p, const std::vector<Vector>& points) {
  double worst = 0.0;
  const int d = p.dim;
  for (const Vector& x : points) {
    const double step = 1e-5 * std::max(1.0, x.norm());
    Matrix H(d, d);
    for (int j = 0; j < d; ++j) {
      Vector a = x, b = x;
      a[j] += step;
      b[j] -= step;
      H.col(j) = (p.grad(a) - p.grad(b)) / (2.0 * step);
    }
    const Matrix S = 0.5 * (H + H.transpose());
    const double norm = Eigen::SelfAdjointEigenSolver<Matrix>(S).eigenvalues().cwiseAbs().maxCoeff();
    worst = std::max(worst, norm / p.L);
  }
  return worst;
}

// Samples (x, y, v), evaluates the estimate on each and reports the worst
// LHS/RHS ratio. Sample i draws from stream (seed, i), so the report does not
// depend on the thread count.
inline RegularityReport verify_regularity(LemmaId id, const Potential& p, const FlowParams& fp,
                                          const SamplerConfig& cfg) {
  require(cfg.samples >= 0, "verify_regularity: negative sample count");
  if (!fp.exact()) fp.validate();
  RegularityReport rep;
  rep.lemma_id = to_string(id);
  rep.samples = cfg.samples;

  const double step_load = p.L * (fp.T * fp.T + fp.T * fp.h);
  const double ceiling = lemma_step_ceiling(id);
  rep.preconditions.push_back({"L(T^2+Th)<=" + std::string(ceiling < 0.1 ? "1/12" : "1/6"), step_load / ceiling,
                               step_load <= ceiling});
  if (id == LemmaId::verlet_error_first || lemma_map(id) != MapKind::mixing) {
    rep.preconditions.push_back({"h>0", fp.h > 0.0 ? 0.0 : 2.0, fp.h > 0.0});
  }

  const auto n = static_cast<std::size_t>(cfg.samples);
  std::vector<RegularitySample> results(n);
  std::vector<double> residuals(n, 0.0);
  std::vector<std::string> errors(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream rng(cfg.seed, i);
      RegularitySample s;
      s.x = cfg.x_scale * rng.normal_vector(p.dim);
      s.y = cfg.x_equals_y ? s.x : Vector(cfg.y_scale * rng.normal_vector(p.dim));
      s.v = cfg.v_scale * rng.normal_vector(p.dim);
      try {
        const LemmaEvaluation e = evaluate_lemma(id, p, fp, s.x, s.y, s.v);
        s.lhs = e.lhs;
        s.rhs = e.rhs;
        residuals[i] = e.residual;
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
      results[i] = std::move(s);
    }
  };
  const int threads = std::max(1, cfg.threads);
  if (threads == 1 || n < 2) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t b = std::min(n, t * chunk), e = std::min(n, (t + 1) * chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<Vector> points;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      throw NumericalError("verify_regularity(" + rep.lemma_id + "): sample " + std::to_string(i) + ": " + errors[i]);
    }
    const RegularitySample& s = results[i];
    rep.worst_residual = std::max(rep.worst_residual, residuals[i]);
    double ratio = 0.0;
    const bool noise = is_jacobian_lemma(id) && s.lhs <= cfg.jacobian_floor;
    if (!noise && s.lhs > 0.0) ratio = s.rhs > 0.0 ? s.lhs / s.rhs : kInf;
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      if (ratio > 1.0 && !rep.violating) rep.violating = s;
    }
    if (points.size() < 256) points.push_back(s.x);
  }
  if (!points.empty()) {
    const double hr = sampled_hessian_ratio(p, points);
    rep.preconditions.push_back({"|hess f|<=L on samples", hr, hr <= 1.0 + 1e-6});
  }
  rep.preconditions.push_back(
      {"residual<=" + residual_label(cfg.residual_tol), rep.worst_residual / cfg.residual_tol,
       rep.worst_residual <= cfg.residual_tol});
  return rep;
}

}  // namespace hmclab
