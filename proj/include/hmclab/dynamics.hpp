#pragma once

// Target potentials, the velocity Verlet flow, the exact Hamiltonian flow and
// their velocity Jacobians.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "hmclab/core.hpp"

namespace hmclab {

enum class PotentialKind { quadratic, smooth_nonquadratic };

// A potential f with f(0) = 0 and grad f(0) = 0, plus the smoothness constants
// the coupling lemmas consume: L bounds the Hessian, M the third derivative, N
// the fourth, alpha is the strong-convexity constant (0 if none).
struct Potential {
  int dim = 0;
  PotentialKind kind = PotentialKind::quadratic;
  std::string name;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  std::function<Matrix(const Vector&)> hessian;
  double L = 0.0;
  double M = 0.0;
  double N = 0.0;
  double alpha = 0.0;
  // Diagonal of the precision matrix when kind == quadratic.
  Vector omega2;

  bool is_quadratic() const { return kind == PotentialKind::quadratic; }
};

// f(x) = 0.5 * sum_i omega2_i x_i^2.
inline Potential make_quadratic(const Vector& omega2) {
  require(omega2.size() > 0, "make_quadratic: empty precision diagonal");
  require((omega2.array() > 0.0).all(), "make_quadratic: precision entries must be positive");
  Potential p;
  p.dim = static_cast<int>(omega2.size());
  p.kind = PotentialKind::quadratic;
  p.name = "quadratic";
  p.omega2 = omega2;
  p.value = [w = omega2](const Vector& x) { return 0.5 * (w.array() * x.array().square()).sum(); };
  p.grad = [w = omega2](const Vector& x) -> Vector { return w.array() * x.array(); };
  p.hessian = [w = omega2](const Vector&) -> Matrix { return w.asDiagonal(); };
  p.L = omega2.maxCoeff();
  p.alpha = omega2.minCoeff();
  return p;
}

inline Potential make_standard_gaussian(int dim) { return make_quadratic(Vector::Ones(dim)); }

struct LogCoshBounds {
  double third = 0.0;   // max_x |d^3/dx^3 c log cosh x|
  double fourth = 0.0;  // max_x |d^4/dx^4 c log cosh x|
};

// Dense 1-D grid search over the closed-form derivatives of c*log(cosh(x)).
// The potential is separable, so its third and fourth derivative tensors are
// diagonal and their operator norms equal these coordinate maxima.
inline LogCoshBounds logcosh_derivative_bounds(double c) {
  LogCoshBounds out;
  constexpr int kPoints = 400001;
  constexpr double kRange = 10.0;
  for (int i = 0; i < kPoints; ++i) {
    const double x = -kRange + 2.0 * kRange * i / (kPoints - 1);
    const double t = std::tanh(x);
    const double s2 = 1.0 - t * t;  // sech^2
    out.third = std::max(out.third, std::abs(-2.0 * c * s2 * t));
    out.fourth = std::max(out.fourth, std::abs(c * (4.0 * s2 * t * t - 2.0 * s2 * s2)));
  }
  return out;
}

// f(x) = |x|^2/2 + c * sum_i log cosh(x_i). Strongly convex with alpha = 1 and L = 1 + c.
inline Potential make_logcosh(int dim, double c = 0.5) {
  require(dim > 0, "make_logcosh: dim must be positive");
  require(c >= 0.0, "make_logcosh: c must be nonnegative");
  Potential p;
  p.dim = dim;
  p.kind = PotentialKind::smooth_nonquadratic;
  p.name = "logcosh";
  p.value = [c](const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double a = std::abs(x[i]);
      // log cosh a = a + log1p(exp(-2a)) - log 2, stable for large a
      s += 0.5 * x[i] * x[i] + c * (a + std::log1p(std::exp(-2.0 * a)) - kLog2);
    }
    return s;
  };
  p.grad = [c](const Vector& x) -> Vector { return x.array() + c * x.array().tanh(); };
  p.hessian = [c](const Vector& x) -> Matrix {
    const Eigen::ArrayXd t = x.array().tanh();
    Vector diag = 1.0 + c * (1.0 - t.square());
    return diag.asDiagonal();
  };
  const LogCoshBounds b = logcosh_derivative_bounds(c);
  p.L = 1.0 + c;
  p.M = b.third;
  p.N = b.fourth;
  p.alpha = 1.0;
  return p;
}

struct PhasePoint {
  Vector x;
  Vector v;
};

inline double hamiltonian(const Potential& p, const PhasePoint& z) {
  return p.value(z.x) + 0.5 * z.v.squaredNorm();
}

// Integration time T and step size h; h == 0 selects the exact Hamiltonian flow.
struct FlowParams {
  double T = 1.0;
  double h = 0.0;

  bool exact() const { return h == 0.0; }

  // Number of Verlet steps T/h. Throws when h does not divide T.
  std::int64_t steps() const {
    require(T > 0.0, "FlowParams: integration time must be positive");
    require(h >= 0.0, "FlowParams: step size must be nonnegative");
    if (h == 0.0) return 0;
    const double ratio = T / h;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
      throw PreconditionError("FlowParams: step size h=" + std::to_string(h) +
                              " does not divide integration time T=" + std::to_string(T));
    }
    return static_cast<std::int64_t>(n);
  }

  void validate() const { (void)steps(); }

  // L T^2 <= (2/5) pi^2: existence of the one-shot coupling maps.
  bool coupling_exists(double L) const { return L * T * T <= 0.4 * kPi * kPi; }
  // L (T^2 + T h) <= 1/12: hypothesis of the regularity lemmas and main theorems.
  bool regular(double L) const { return L * (T * T + T * h) <= 1.0 / 12.0; }
  // h sqrt(L) < 2: linear stability of velocity Verlet.
  bool verlet_stable(double L) const { return h * std::sqrt(L) < 2.0; }
};

namespace detail {

inline Vector checked_grad(const Potential& p, const Vector& x) {
  Vector g = p.grad(x);
  if (!g.allFinite()) throw NumericalError("non-finite gradient encountered in flow");
  return g;
}

}  // namespace detail

// Velocity Verlet with N = T/h steps. When `trajectory` is non-null it receives
// the positions x_0, ..., x_N.
inline PhasePoint verlet_flow(const Potential& p, const PhasePoint& z, const FlowParams& fp,
                              std::vector<Vector>* trajectory = nullptr) {
  require(fp.h > 0.0, "verlet_flow: step size must be positive");
  require(z.x.size() == p.dim && z.v.size() == p.dim, "verlet_flow: dimension mismatch");
  const std::int64_t n = fp.steps();
  const double h = fp.h;
  Vector x = z.x;
  Vector v = z.v;
  Vector g = detail::checked_grad(p, x);
  if (trajectory) {
    trajectory->clear();
    trajectory->push_back(x);
  }
  for (std::int64_t j = 0; j < n; ++j) {
    x += h * v - 0.5 * h * h * g;
    Vector g_next = detail::checked_grad(p, x);
    v -= 0.5 * h * (g + g_next);
    g = std::move(g_next);
    if (trajectory) trajectory->push_back(x);
  }
  return {std::move(x), std::move(v)};
}

struct ExactFlowOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  // Maximum allowed |H(out) - H(in)| / max(1, |H(in)|).
  double energy_tol = 1e-9;
  int max_steps = 200000;
};

// Exact Hamiltonian flow for time T. Closed-form rotation for quadratic
// potentials; otherwise an embedded Runge-Kutta-Fehlberg 7(8) solve whose
// energy drift is checked against `opts.energy_tol`.
inline PhasePoint exact_flow(const Potential& p, const PhasePoint& z, double T,
                             const ExactFlowOptions& opts = {}) {
  require(T >= 0.0, "exact_flow: time must be nonnegative");
  require(z.x.size() == p.dim && z.v.size() == p.dim, "exact_flow: dimension mismatch");
  if (T == 0.0) return z;
  if (p.is_quadratic()) {
    PhasePoint out{Vector(p.dim), Vector(p.dim)};
    for (int i = 0; i < p.dim; ++i) {
      const double w = std::sqrt(p.omega2[i]);
      const double c = std::cos(w * T);
      const double s = std::sin(w * T);
      out.x[i] = c * z.x[i] + s / w * z.v[i];
      out.v[i] = -w * s * z.x[i] + c * z.v[i];
    }
    return out;
  }

  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  const int d = p.dim;
  State s(2 * static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    s[i] = z.x[i];
    s[d + i] = z.v[i];
  }
  auto rhs = [&p, d](const State& y, State& dy, double) {
    Vector x = Eigen::Map<const Vector>(y.data(), d);
    const Vector g = detail::checked_grad(p, x);
    for (int i = 0; i < d; ++i) {
      dy[i] = y[d + i];
      dy[d + i] = -g[i];
    }
  };
  auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol, ode::runge_kutta_fehlberg78<State>());
  double t = 0.0;
  double dt = std::min(T, 0.05);
  int taken = 0;
  while (T - t > 1e-15 * T) {
    if (t + dt > T) dt = T - t;
    if (++taken > opts.max_steps) throw NumericalError("exact_flow: step budget exhausted");
    const ode::controlled_step_result r = stepper.try_step(rhs, s, t, dt);
    if (r == ode::fail && dt < 1e-14 * T) throw NumericalError("exact_flow: step size underflow");
  }
  PhasePoint out{Vector(d), Vector(d)};
  for (int i = 0; i < d; ++i) {
    out.x[i] = s[i];
    out.v[i] = s[d + i];
  }
  const double h0 = hamiltonian(p, z);
  const double drift = std::abs(hamiltonian(p, out) - h0) / std::max(1.0, std::abs(h0));
  if (!(drift <= opts.energy_tol)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", drift);
    throw NumericalError(std::string("exact_flow: relative energy drift ") + buf + " exceeds tolerance");
  }
  return out;
}

// Flow output together with its derivative along the phase-space direction dz,
// obtained from the linearised (variational) equations rather than finite
// differences.
struct TangentResult {
  PhasePoint z;
  PhasePoint dz;
};

inline TangentResult verlet_tangent(const Potential& p, const PhasePoint& z, const FlowParams& fp,
                                    const PhasePoint& dz) {
  require(fp.h > 0.0, "verlet_tangent: step size must be positive");
  const std::int64_t n = fp.steps();
  const double h = fp.h;
  Vector x = z.x, v = z.v, dx = dz.x, dv = dz.v;
  Vector g = detail::checked_grad(p, x);
  Vector dg = p.hessian(x) * dx;
  for (std::int64_t j = 0; j < n; ++j) {
    x += h * v - 0.5 * h * h * g;
    dx += h * dv - 0.5 * h * h * dg;
    Vector g_next = detail::checked_grad(p, x);
    Vector dg_next = p.hessian(x) * dx;
    v -= 0.5 * h * (g + g_next);
    dv -= 0.5 * h * (dg + dg_next);
    g = std::move(g_next);
    dg = std::move(dg_next);
  }
  return {{x, v}, {dx, dv}};
}

inline TangentResult exact_tangent(const Potential& p, const PhasePoint& z, double T, const PhasePoint& dz,
                                   const ExactFlowOptions& opts = {}) {
  require(T > 0.0, "exact_tangent: time must be positive");
  const int d = p.dim;
  if (p.is_quadratic()) {
    TangentResult out{exact_flow(p, z, T, opts), {Vector(d), Vector(d)}};
    for (int i = 0; i < d; ++i) {
      const double w = std::sqrt(p.omega2[i]);
      const double c = std::cos(w * T);
      const double s = std::sin(w * T);
      out.dz.x[i] = c * dz.x[i] + s / w * dz.v[i];
      out.dz.v[i] = -w * s * dz.x[i] + c * dz.v[i];
    }
    return out;
  }
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  State s(4 * static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    s[i] = z.x[i];
    s[d + i] = z.v[i];
    s[2 * d + i] = dz.x[i];
    s[3 * d + i] = dz.v[i];
  }
  auto rhs = [&p, d](const State& y, State& dy, double) {
    Vector x = Eigen::Map<const Vector>(y.data(), d);
    Vector dx = Eigen::Map<const Vector>(y.data() + 2 * d, d);
    const Vector g = detail::checked_grad(p, x);
    const Vector dg = p.hessian(x) * dx;
    for (int i = 0; i < d; ++i) {
      dy[i] = y[d + i];
      dy[d + i] = -g[i];
      dy[2 * d + i] = y[3 * d + i];
      dy[3 * d + i] = -dg[i];
    }
  };
  auto stepper = ode::make_controlled(opts.abs_tol, opts.rel_tol, ode::runge_kutta_fehlberg78<State>());
  double t = 0.0;
  double dt = std::min(T, 0.05);
  int taken = 0;
  while (T - t > 1e-15 * T) {
    if (t + dt > T) dt = T - t;
    if (++taken > opts.max_steps) throw NumericalError("exact_tangent: step budget exhausted");
    const ode::controlled_step_result r = stepper.try_step(rhs, s, t, dt);
    if (r == ode::fail && dt < 1e-14 * T) throw NumericalError("exact_tangent: step size underflow");
  }
  TangentResult out{{Vector(d), Vector(d)}, {Vector(d), Vector(d)}};
  for (int i = 0; i < d; ++i) {
    out.z.x[i] = s[i];
    out.z.v[i] = s[d + i];
    out.dz.x[i] = s[2 * d + i];
    out.dz.v[i] = s[3 * d + i];
  }
  return out;
}

inline TangentResult flow_tangent(const Potential& p, const PhasePoint& z, const FlowParams& fp,
                                  const PhasePoint& dz) {
  return fp.exact() ? exact_tangent(p, z, fp.T, dz) : verlet_tangent(p, z, fp, dz);
}

// Verlet flow when fp.h > 0, exact flow when fp.h == 0.
inline PhasePoint flow(const Potential& p, const PhasePoint& z, const FlowParams& fp) {
  return fp.exact() ? exact_flow(p, z, fp.T) : verlet_flow(p, z, fp);
}

// Position component of `flow`.
inline Vector flow_position(const Potential& p, const Vector& x, const Vector& v, const FlowParams& fp) {
  return flow(p, PhasePoint{x, v}, fp).x;
}

// First row (a, b) of the one-step Verlet matrix raised to the power T/h, for
// the scalar harmonic oscillator f(x) = omega2 x^2 / 2. Repeated squaring.
inline std::pair<double, double> verlet_row(double omega2, const FlowParams& fp) {
  const std::int64_t n = fp.steps();
  const double h = fp.h;
  const double hw = h * h * omega2;
  Eigen::Matrix2d step;
  step << 1.0 - 0.5 * hw, h, -h * omega2 * (1.0 - 0.25 * hw), 1.0 - 0.5 * hw;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Identity();
  std::int64_t e = n;
  while (e > 0) {
    if (e & 1) acc = acc * step;
    step = step * step;
    e >>= 1;
  }
  return {acc(0, 0), acc(0, 1)};
}

// (a, b) with q_T(x, v) = a x + b v for the scalar harmonic oscillator,
// for either flow.
inline std::pair<double, double> position_row(double omega2, const FlowParams& fp) {
  if (fp.exact()) {
    const double w = std::sqrt(omega2);
    return {std::cos(w * fp.T), std::sin(w * fp.T) / w};
  }
  return verlet_row(omega2, fp);
}

// d q / d v of the position output with respect to the initial velocity.
inline Matrix flow_jacobian_v(const Potential& p, const PhasePoint& z, const FlowParams& fp) {
  const int d = p.dim;
  if (p.is_quadratic()) {
    Vector diag(d);
    for (int i = 0; i < d; ++i) diag[i] = position_row(p.omega2[i], fp).second;
    return diag.asDiagonal();
  }
  const double step = 1e-5 * std::max(1.0, z.v.norm());
  Matrix J(d, d);
  for (int j = 0; j < d; ++j) {
    Vector vp = z.v;
    Vector vm = z.v;
    vp[j] += step;
    vm[j] -= step;
    J.col(j) = (flow_position(p, z.x, vp, fp) - flow_position(p, z.x, vm, fp)) / (2.0 * step);
  }
  return J;
}

// Full 2d x 2d Jacobian of (x, v) -> flow(x, v) by central differences.
inline Matrix phase_jacobian(const Potential& p, const PhasePoint& z, const FlowParams& fp,
                             double rel_step = 1e-5) {
  const int d = p.dim;
  Matrix J(2 * d, 2 * d);
  Vector base(2 * d);
  base << z.x, z.v;
  const double step = rel_step * std::max(1.0, base.norm());
  for (int j = 0; j < 2 * d; ++j) {
    Vector up = base;
    Vector dn = base;
    up[j] += step;
    dn[j] -= step;
    const PhasePoint a = flow(p, {up.head(d), up.tail(d)}, fp);
    const PhasePoint b = flow(p, {dn.head(d), dn.tail(d)}, fp);
    Vector diff(2 * d);
    diff << a.x - b.x, a.v - b.v;
    J.col(j) = diff / (2.0 * step);
  }
  return J;
}

// Full 2d x 2d Jacobian assembled column by column from the variational
// equations.
inline Matrix phase_jacobian_tangent(const Potential& p, const PhasePoint& z, const FlowParams& fp) {
  const int d = p.dim;
  Matrix J(2 * d, 2 * d);
  for (int j = 0; j < 2 * d; ++j) {
    PhasePoint e{Vector::Zero(d), Vector::Zero(d)};
    if (j < d) e.x[j] = 1.0; else e.v[j - d] = 1.0;
    const TangentResult t = flow_tangent(p, z, fp, e);
    J.col(j) << t.dz.x, t.dz.v;
  }
  return J;
}

}  // namespace hmclab
