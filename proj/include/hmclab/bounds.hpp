#pragma once

// Closed-form evaluators for the mixing, bias, contraction and complexity
// bounds of unadjusted HMC, the coupling-map regularity estimates, and a few
// helper inequalities. Every evaluator returns a BoundReport whose value is
// only present when all of its hypotheses hold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hmclab/core.hpp"

namespace hmclab {

// Smoothness constants of the potential together with the HMC parameters.
// c2 <= 0 selects the default rate -log(1 - alpha T^2 / 10).
struct ModelParams {
  int d = 1;
  double L = 1.0;
  double M = 0.0;
  double N = 0.0;
  double alpha = 1.0;
  double T = 0.25;
  double h = 0.0;
  double c1 = 1.0;
  double c2 = 0.0;
};

inline double verlet_contraction_rate(double alpha, double T) { return -std::log1p(-alpha * T * T / 10.0); }
inline double stratified_contraction_rate(double alpha, double T) { return -std::log1p(-alpha * T * T / 6.0); }

inline double resolved_c2(const ModelParams& mp) {
  return mp.c2 > 0.0 ? mp.c2 : verlet_contraction_rate(mp.alpha, mp.T);
}

struct BoundReport {
  std::string id;
  std::vector<std::pair<std::string, double>> params;
  std::vector<std::pair<std::string, bool>> flags;
  std::vector<std::pair<std::string, double>> components;
  std::vector<std::string> notes;
  std::optional<double> value;

  BoundReport() = default;
  explicit BoundReport(std::string name) : id(std::move(name)) {}

  bool feasible() const {
    return std::all_of(flags.begin(), flags.end(), [](const auto& f) { return f.second; });
  }

  std::vector<std::string> failed_flags() const {
    std::vector<std::string> out;
    for (const auto& [name, ok] : flags)
      if (!ok) out.push_back(name);
    return out;
  }

  // Throws PreconditionError naming the failed hypotheses when infeasible.
  double get() const {
    if (value) return *value;
    std::string msg = id + ": infeasible (";
    const auto failed = failed_flags();
    for (std::size_t i = 0; i < failed.size(); ++i) msg += (i ? ", " : "") + failed[i];
    throw PreconditionError(msg + ")");
  }

  double component(const std::string& name) const {
    for (const auto& [k, v] : components)
      if (k == name) return v;
    throw PreconditionError(id + ": no component named " + name);
  }

  bool flag(const std::string& name) const {
    for (const auto& [k, v] : flags)
      if (k == name) return v;
    throw PreconditionError(id + ": no flag named " + name);
  }

  void param(const std::string& name, double v) { params.emplace_back(name, v); }
  void check(const std::string& name, bool ok) { flags.emplace_back(name, ok); }
  void part(const std::string& name, double v) { components.emplace_back(name, v); }
  void finish(double v) {
    if (feasible()) value = v;
  }
};

namespace detail {

inline void model_params(BoundReport& r, const ModelParams& mp) {
  r.param("d", mp.d);
  r.param("L", mp.L);
  r.param("M", mp.M);
  r.param("N", mp.N);
  r.param("alpha", mp.alpha);
  r.param("T", mp.T);
  r.param("h", mp.h);
  r.param("c1", mp.c1);
  r.param("c2", resolved_c2(mp));
}

inline void basic_flags(BoundReport& r, const ModelParams& mp) {
  r.check("d>=1", mp.d >= 1);
  r.check("T>0", mp.T > 0.0);
  r.check("h>=0", mp.h >= 0.0);
  r.check("L(T^2+Th)<=1/12", mp.L * (mp.T * mp.T + mp.T * mp.h) <= 1.0 / 12.0);
  r.check("c1>=1", mp.c1 >= 1.0);
  r.check("c2>0", resolved_c2(mp) > 0.0);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Coupling-map regularity estimates. Arguments are norms: nxy = |x - y|,
// nx = |x|, nv = |v|.

struct RegularityConstants {
  double p_xy, p_v, p_x, j_xy, j_c, j_v, j_x;
};

inline RegularityConstants regularity_constants(double L, double M, double T) {
  return {3.0 / (2.0 * T),       7.0 / (25.0 * T),        49.0 / 180.0 * L,        5.5 * M * T * T,
          44.0 / (135.0 * T),    440.0 / 135.0 * M * T * T, 352.0 / 675.0 * M * T};
}

// |phi_{x,y}(v) - v|
inline double mixing_pointwise_rhs(double T, double nxy) { return 1.5 / T * nxy; }

// |grad phi_{x,y}(v) - I|_op
inline double mixing_jacobian_rhs(double M, double T, double nxy) {
  return std::min(2.0 / 9.0, 5.5 * M * T * T * nxy);
}

// |phi_x(v) - v|, second order in h
inline double bias_pointwise_second_rhs(double L, double M, double T, double h, double nx, double nv) {
  return 2.0 * h * h * (L / T * nx + L * nv + M / T * nx * nx + M * T * nv * nv);
}

inline double jacobian_q_term(double L, double M, double N, double T, double nx, double nv) {
  return L + M * nx + M * T * nv + (M * M * T * T + N) * nx * nx + (M * M * T * T + N) * T * T * nv * nv;
}

// |grad phi_x(v) - I|_op, second order in h
inline double bias_jacobian_second_rhs(double L, double M, double N, double T, double h, double nx, double nv) {
  return std::min(0.5, 2.0 * h * h * jacobian_q_term(L, M, N, T, nx, nv));
}

// |phi_x(v) - v|, first order in h
inline double bias_pointwise_first_rhs(double L, double T, double h, double nx, double nv) {
  return 1.4 * h * (nv / (5.0 * T) + 7.0 / 36.0 * L * nx);
}

// |grad phi_x(v) - I|_op, first order in h
inline double bias_jacobian_first_rhs(double M, double T, double h, double nx, double nv) {
  return std::min(0.5, 2.0 / 15.0 * h * (2.0 / T + 3.2 * M * T * nx + 20.0 * M * T * T * nv));
}

// |Phi_{x,y}(v) - v|, second order in h
inline double cross_pointwise_second_rhs(double L, double M, double T, double h, double nxy, double nx, double nv) {
  return mixing_pointwise_rhs(T, nxy) + bias_pointwise_second_rhs(L, M, T, h, nx, nv);
}

// |grad Phi_{x,y}(v) - I|_op, second order in h
inline double cross_jacobian_second_rhs(double L, double M, double N, double T, double h, double nxy, double nx,
                                        double nv) {
  return std::min(15.0 / 18.0, 5.5 * M * T * T * nxy + 22.0 / 9.0 * h * h * jacobian_q_term(L, M, N, T, nx, nv));
}

// |Phi_{x,y}(v) - v|, first order in h
inline double cross_pointwise_first_rhs(double L, double T, double h, double nxy, double nx, double nv) {
  const RegularityConstants c = regularity_constants(L, 0.0, T);
  return c.p_xy * nxy + h * c.p_v * nv + h * c.p_x * nx;
}

// |grad Phi_{x,y}(v) - I|_op, first order in h
inline double cross_jacobian_first_rhs(double M, double T, double h, double nxy, double nx, double nv) {
  const RegularityConstants c = regularity_constants(0.0, M, T);
  return std::min(15.0 / 18.0, c.j_xy * nxy + h * c.j_c + h * c.j_v * nv + h * c.j_x * nx);
}

// max_{s<=T} |q_s - q~_s|, first order in h
inline double verlet_error_first_rhs(double L, double T, double h, double nx, double nv) {
  return h * (6.0 / 25.0 * nv + 7.0 / 30.0 * L * T * nx);
}

// max_{s<=T} |q_s - q~_s|, second order in h
inline double verlet_error_second_rhs(double L, double M, double T, double h, double nx, double nv) {
  return h * h * (L * nx / 5.0 + 0.9 * L * T * nv + M * nx * nx / 120.0 + 0.3 * M * T * T * nv * nv);
}

// max_{s<=T} |d_v q_s - d_v q~_s|_op
inline double verlet_jacobian_error_rhs(double M, double T, double h, double nx, double nv) {
  return 6.0 / 25.0 * h * (1.0 + 1.4 * M * T * T * nx + 216.0 / 25.0 * M * T * T * T * nv);
}

// ---------------------------------------------------------------------------
// Mixing and bias bounds in KL and Renyi divergence.

// KL(mu P^{k+1} | nu_h) <= c1^2 e^{-2 c2 k} (9/(4T^2) + 20 d M^2 T^4) W2(mu, nu_h)^2
inline BoundReport kl_mixing_bound(const ModelParams& mp, std::int64_t k, double w2_init) {
  BoundReport r{"kl_mixing"};
  detail::model_params(r, mp);
  r.param("k", static_cast<double>(k));
  r.param("w2_init", w2_init);
  detail::basic_flags(r, mp);
  r.check("k>=0", k >= 0);
  r.check("w2_init>=0", w2_init >= 0.0);
  const double c2 = resolved_c2(mp);
  const double C = 9.0 / (4.0 * mp.T * mp.T) + 20.0 * mp.d * mp.M * mp.M * std::pow(mp.T, 4);
  r.part("regularization_constant", C);
  r.notes.push_back("bounds the law after k+1 steps");
  r.finish(mp.c1 * mp.c1 * std::exp(-2.0 * c2 * static_cast<double>(k)) * C * w2_init * w2_init);
  return r;
}

// KL(mu Q^k P | nu) <= mixing + bias, with m2, m4 the second and fourth moments
// of mu Q^k and delta_h a W2 bound between the invariant law of Q and the target.
inline BoundReport kl_bias_bound(const ModelParams& mp, std::int64_t k, double w2_init, double m2, double m4,
                                 double delta_h) {
  BoundReport r{"kl_bias"};
  detail::model_params(r, mp);
  r.param("k", static_cast<double>(k));
  r.param("w2_init", w2_init);
  r.param("m2", m2);
  r.param("m4", m4);
  r.param("delta_h", delta_h);
  detail::basic_flags(r, mp);
  r.check("k>=0", k >= 0);
  r.check("m2>=0", m2 >= 0.0);
  r.check("m4>=0", m4 >= 0.0);
  r.check("delta_h>=0", delta_h >= 0.0);
  const double d = mp.d, L = mp.L, M = mp.M, N = mp.N, T = mp.T, h = mp.h;
  const double T2 = T * T, T4 = T2 * T2;
  const double C = 9.0 / (4.0 * T2) + 363.0 / 2.0 * d * M * M * T4;
  const double mixing = 2.0 * mp.c1 * mp.c1 * std::exp(-2.0 * resolved_c2(mp) * static_cast<double>(k)) * C *
                        w2_init * w2_init;
  const double a = M * M * T2 + N;
  const double b = M * M * T4 + N * T2;
  const double bracket = 45.0 * d * L * L + (4.0 * L * L / T2 + 45.0 * d * M * M) * m2 +
                         (4.0 * L * L + 45.0 * d * M * M * T2) * d +
                         (4.0 * M * M / T2 + 45.0 * d * a * a) * m4 +
                         (4.0 * M * M * T2 + 45.0 * d * b * b) * d * (d + 2.0);
  const double bias_w2 = 2.0 * delta_h * delta_h * C;
  const double bias_h4 = 4.0 * std::pow(h, 4) * bracket;
  r.part("mixing", mixing);
  r.part("bias", bias_w2 + bias_h4);
  r.part("bias_w2_term", bias_w2);
  r.part("bias_h4_term", bias_h4);
  r.finish(mixing + bias_w2 + bias_h4);
  return r;
}

inline double renyi_burn_in(double c1, double c2, double w_psi, double delta1, double delta2) {
  const double arg = c1 * w_psi / (4.0 * std::sqrt(kLog2)) *
                     (delta1 + std::sqrt(delta1 * delta1 + 16.0 * kLog2 * delta2));
  if (arg <= 0.0) return -kInf;
  return std::log(arg) / c2;
}

// R_q(mu P^{k+1} | nu_h) for k past the burn-in threshold k*.
inline BoundReport renyi_mixing_bound(const ModelParams& mp, double q, std::int64_t k, double w_psi_init) {
  BoundReport r{"renyi_mixing"};
  detail::model_params(r, mp);
  r.param("q", q);
  r.param("k", static_cast<double>(k));
  r.param("w_psi_init", w_psi_init);
  detail::basic_flags(r, mp);
  r.check("q>1", q > 1.0);
  r.check("w_psi_init>=0", w_psi_init >= 0.0);
  const double sd = std::sqrt(static_cast<double>(mp.d));
  const double T = mp.T;
  const double delta1 = (q - 1.0) * (8.0 * mp.d * mp.M * T * T + 3.0 * sd / (2.0 * T));
  const double delta2 = 9.0 * q * (q - 1.0) / (8.0 * T * T);
  const double c2 = resolved_c2(mp);
  const double k_star = renyi_burn_in(mp.c1, c2, w_psi_init, delta1, delta2);
  r.part("delta1", delta1);
  r.part("delta2", delta2);
  r.part("k_star", k_star);
  r.check("k>=k_star", static_cast<double>(k) >= k_star);
  r.notes.push_back("bounds the law after k+1 steps");
  r.finish((delta1 + delta2) / (q - 1.0) * std::sqrt(kLog2) * mp.c1 * mp.c1 *
           std::exp(-c2 * static_cast<double>(k)) * std::max(1.0, w_psi_init * w_psi_init));
  return r;
}

// R_q(mu Q^k P | nu) <= mixing + bias with delta_h an Orlicz-Wasserstein bound
// between the invariant law of Q and the target and k_nu the Orlicz norm of
// the target.
inline BoundReport renyi_bias_bound(const ModelParams& mp, double q, std::int64_t k, double w_psi_init,
                                    double delta_h, double k_nu) {
  BoundReport r{"renyi_bias"};
  detail::model_params(r, mp);
  r.param("q", q);
  r.param("k", static_cast<double>(k));
  r.param("w_psi_init", w_psi_init);
  r.param("delta_h", delta_h);
  r.param("K_nu", k_nu);
  detail::basic_flags(r, mp);
  r.check("q>1", q > 1.0);
  r.check("delta_h>=0", delta_h >= 0.0);
  r.check("K_nu>0", k_nu > 0.0);

  const double d = mp.d, sd = std::sqrt(d), T = mp.T, h = mp.h;
  const RegularityConstants c = regularity_constants(mp.L, mp.M, T);
  const double s = 2.0 * q - 1.0;
  const double u = std::sqrt(1.0 + 1.0 / (4.0 * s));
  const double w = 1.0 + 3.0 * s * u * u;
  const double delta1 = s * (8.0 * d * mp.M * T * T + 3.0 * sd / (2.0 * T));
  const double delta2 = 9.0 * q * s / (4.0 * T * T);
  const double axy = sd * (6.0 * sd * c.j_xy + c.p_xy * u);
  const double ax = sd * (6.0 * sd * c.j_x + c.p_x * u);

  const double delta_ceiling =
      std::min(std::sqrt(2.0 * kLog2) / (4.0 * s * (axy / std::sqrt(2.0) + h * ax)),
               1.0 / std::sqrt(8.0 * s * (c.p_xy * c.p_xy * w + 2.0 * h * h * c.p_x * c.p_x * w)));
  const double h_ceiling = std::min({(u - 1.0) / c.p_v, std::sqrt(kLog2) / (2.0 * std::sqrt(2.0) * s * ax * k_nu),
                                     1.0 / (4.0 * k_nu * c.p_x * std::sqrt(w * s))});
  r.check("delta_h<=delta_ceiling", delta_h <= delta_ceiling);
  r.check("h<=h_ceiling", h <= h_ceiling);

  const double c2 = resolved_c2(mp);
  const double k_star = renyi_burn_in(mp.c1, c2, w_psi_init, delta1, delta2);
  r.check("k>=k_star", static_cast<double>(k) >= k_star);

  const double mixing = 3.0 * (delta1 + delta2) / (2.0 * s) * std::sqrt(kLog2) * mp.c1 * mp.c1 *
                        std::exp(-c2 * static_cast<double>(k)) * std::max(1.0, w_psi_init * w_psi_init);
  const double bias = d * h * (6.0 * c.j_c + 6.0 * sd * c.j_v + 108.0 * s * d * h * c.j_v * c.j_v + h * c.p_v * c.p_v +
                               2.0 * c.p_v) +
                      2.0 * axy * delta_h + c.p_xy * c.p_xy * w * delta_h * delta_h +
                      2.0 * h * ax * (delta_h + k_nu + std::hypot(delta_h, k_nu)) +
                      2.0 * h * h * c.p_x * c.p_x * w * (delta_h * delta_h + k_nu * k_nu);
  r.part("s", s);
  r.part("u", u);
  r.part("delta1", delta1);
  r.part("delta2", delta2);
  r.part("k_star", k_star);
  r.part("delta_ceiling", delta_ceiling);
  r.part("h_ceiling", h_ceiling);
  r.part("mixing", mixing);
  r.part("bias", bias);
  r.finish(mixing + bias);
  return r;
}

// ---------------------------------------------------------------------------
// Wasserstein contraction and bias for strongly log-concave targets.

// Per-step synchronous contraction factor of uHMC with velocity Verlet.
inline BoundReport verlet_contraction(double L, double alpha, double T) {
  BoundReport r{"w2_contraction_verlet"};
  r.param("L", L);
  r.param("alpha", alpha);
  r.param("T", T);
  r.check("alpha>0", alpha > 0.0);
  r.check("LT^2<=1/20", L * T * T <= 1.0 / 20.0);
  r.part("formula", 1.0 - alpha * T * T / 10.0);
  r.finish(1.0 - alpha * T * T / 10.0);
  return r;
}

// Per-step contraction factor of the stratified integrator.
inline BoundReport stratified_contraction(double L, double alpha, double T) {
  BoundReport r{"w2_contraction_stratified"};
  r.param("L", L);
  r.param("alpha", alpha);
  r.param("T", T);
  r.check("alpha>0", alpha > 0.0);
  r.check("LT^2<=1/8", L * T * T <= 1.0 / 8.0);
  r.part("formula", 1.0 - alpha * T * T / 6.0);
  r.finish(1.0 - alpha * T * T / 6.0);
  return r;
}

// W2(nu_h, nu) for velocity Verlet; m2, m4 are moments of the target.
inline BoundReport w2_bias_verlet(const ModelParams& mp, double m2, double m4) {
  BoundReport r{"w2_bias_verlet"};
  detail::model_params(r, mp);
  r.param("m2", m2);
  r.param("m4", m4);
  r.check("alpha>0", mp.alpha > 0.0);
  r.check("h>=0", mp.h >= 0.0);
  r.check("L(T^2+Th)<=1/20", mp.L * (mp.T * mp.T + mp.T * mp.h) <= 1.0 / 20.0);
  const double d = mp.d, L = mp.L, M = mp.M, T = mp.T;
  const double inner = L * L * m2 / 25.0 + 0.81 * d * L * L * T * T + M * M * m4 / (120.0 * 120.0) +
                       0.09 * d * (d + 2.0) * M * M * std::pow(T, 4);
  r.part("formula", mp.h * mp.h * 20.0 / (mp.alpha * T * T) * std::sqrt(inner));
  r.finish(r.component("formula"));
  return r;
}

// Orlicz-Wasserstein W_psi(nu_h, nu) for velocity Verlet; k_nu is the Orlicz norm of the target.
inline BoundReport orlicz_bias_verlet(const ModelParams& mp, double k_nu) {
  BoundReport r{"orlicz_bias_verlet"};
  detail::model_params(r, mp);
  r.param("K_nu", k_nu);
  r.check("alpha>0", mp.alpha > 0.0);
  r.check("h>=0", mp.h >= 0.0);
  r.check("L(T^2+Th)<=1/20", mp.L * (mp.T * mp.T + mp.T * mp.h) <= 1.0 / 20.0);
  const double T = mp.T;
  r.part("formula", mp.h * 10.0 / (mp.alpha * T * T) *
                        std::max(std::sqrt(static_cast<double>(mp.d)), 7.0 / 15.0 * mp.L * T * k_nu));
  r.finish(r.component("formula"));
  return r;
}

// W2 bias of the stratified integrator.
inline BoundReport w2_bias_stratified(const ModelParams& mp) {
  BoundReport r{"w2_bias_stratified"};
  detail::model_params(r, mp);
  r.check("alpha>0", mp.alpha > 0.0);
  r.check("h>=0", mp.h >= 0.0);
  r.check("LT^2<=1/8", mp.L * mp.T * mp.T <= 1.0 / 8.0);
  const double T = mp.T;
  r.part("formula", std::pow(mp.h, 1.5) * 142.0 * std::sqrt(static_cast<double>(mp.d)) * 6.0 / (mp.alpha * T * T) *
                        std::sqrt(mp.L / mp.alpha) * std::pow(mp.L, 0.25));
  r.finish(r.component("formula"));
  return r;
}

// ---------------------------------------------------------------------------
// Mixing times, information contraction and oracle complexity.

// Iterations after which KL(law(X_k) | nu_h) <= eps.
inline BoundReport kl_mixing_time(const ModelParams& mp, double w2_init, double eps) {
  BoundReport r{"kl_mixing_time"};
  detail::model_params(r, mp);
  r.param("w2_init", w2_init);
  r.param("eps", eps);
  detail::basic_flags(r, mp);
  r.check("alpha>0", mp.alpha > 0.0);
  r.check("LT^2<=1/20", mp.L * mp.T * mp.T <= 1.0 / 20.0);
  r.check("eps>0", eps > 0.0);
  const double T = mp.T;
  const double C = 9.0 / (4.0 * T * T) + 20.0 * mp.d * mp.M * mp.M * std::pow(T, 4);
  const double k = 1.0 + 5.0 / (mp.alpha * T * T) * std::log(C * w2_init * w2_init / eps);
  r.part("formula", k);
  r.part("iterations", std::max(1.0, std::ceil(k)));
  r.finish(k);
  return r;
}

// Iterations after which R_q(law(X_k) | nu_h) <= eps.
inline BoundReport renyi_mixing_time(const ModelParams& mp, double q, double w_psi_init, double eps) {
  BoundReport r{"renyi_mixing_time"};
  detail::model_params(r, mp);
  r.param("q", q);
  r.param("w_psi_init", w_psi_init);
  r.param("eps", eps);
  detail::basic_flags(r, mp);
  r.check("q>1", q > 1.0);
  r.check("alpha>0", mp.alpha > 0.0);
  r.check("LT^2<=1/20", mp.L * mp.T * mp.T <= 1.0 / 20.0);
  r.check("eps>0", eps > 0.0);
  const double T = mp.T, sd = std::sqrt(static_cast<double>(mp.d));
  const double delta1 = (q - 1.0) * (8.0 * mp.d * mp.M * T * T + 3.0 * sd / (2.0 * T));
  const double delta2 = 9.0 * q * (q - 1.0) / (8.0 * T * T);
  const double k = 1.0 + 10.0 / (mp.alpha * T * T) *
                             std::log(2.0 * (delta1 + 2.0 * std::sqrt(kLog2) * std::max(delta2, std::sqrt(delta2))) *
                                      std::max(1.0, w_psi_init * w_psi_init) / eps);
  r.part("formula", k);
  r.part("iterations", std::max(1.0, std::ceil(k)));
  r.finish(k);
  return r;
}

// MI(X_0; X_k) <= e^{-(alpha T^2/5)(k-1)} (9/(4T^2) + 20 d M^2 T^4) E|X - Y|^2,
// where X ~ mu and Y ~ nu_h independently.
inline BoundReport mi_contraction_bound(const ModelParams& mp, std::int64_t k, double mean_sq_dist) {
  BoundReport r{"mi_contraction"};
  detail::model_params(r, mp);
  r.param("k", static_cast<double>(k));
  r.param("mean_sq_dist", mean_sq_dist);
  detail::basic_flags(r, mp);
  r.check("alpha>0", mp.alpha > 0.0);
  r.check("LT^2<=1/20", mp.L * mp.T * mp.T <= 1.0 / 20.0);
  r.check("k>=1", k >= 1);
  const double T = mp.T;
  const double C = 9.0 / (4.0 * T * T) + 20.0 * mp.d * mp.M * mp.M * std::pow(T, 4);
  r.finish(std::exp(-mp.alpha * T * T / 5.0 * static_cast<double>(k - 1)) * C * mean_sq_dist);
  return r;
}

// Inputs of the oracle-complexity pipelines. Moments and initial distances are
// those of the target and the initial law; defaults suit N(0, I_d)-like targets.
struct ComplexityInputs {
  int d = 1;
  double eps = 1e-2;
  double L = 1.0;
  double M = 0.0;
  double N = 0.0;
  double alpha = 1.0;
  double q = 2.0;
  double m2 = -1.0;          // default d
  double m4 = -1.0;          // default d(d+2)
  double w2_init = -1.0;     // default sqrt(d)
  double k_nu = -1.0;        // default Orlicz norm of N(0, I_d)
  double w_psi_init = -1.0;  // default k_nu
};

namespace detail {

inline ComplexityInputs resolve(ComplexityInputs in) {
  const double d = in.d;
  if (in.m2 < 0.0) in.m2 = d;
  if (in.m4 < 0.0) in.m4 = d * (d + 2.0);
  if (in.w2_init < 0.0) in.w2_init = std::sqrt(d);
  if (in.k_nu < 0.0) in.k_nu = std::sqrt(2.0 / -std::expm1(-2.0 * kLog2 / d));
  if (in.w_psi_init < 0.0) in.w_psi_init = in.k_nu;
  return in;
}

// Largest h in (0, hmax] with ok(h), assuming ok is monotone (true below a threshold).
inline double largest_feasible(const std::function<bool(double)>& ok, double hmax) {
  if (ok(hmax)) return hmax;
  double lo = 0.0, hi = hmax;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

inline void complexity_report(BoundReport& r, const ComplexityInputs& in, double T, double h, std::int64_t n,
                              std::int64_t k) {
  r.param("d", in.d);
  r.param("eps", in.eps);
  r.param("L", in.L);
  r.param("M", in.M);
  r.param("N", in.N);
  r.param("alpha", in.alpha);
  r.part("T", T);
  r.part("h", h);
  r.part("steps_per_iteration", static_cast<double>(n));
  r.part("iterations", static_cast<double>(k + 1));
  r.finish(static_cast<double>(k + 1) * static_cast<double>(n));
}

}  // namespace detail

// Gradient evaluations for KL(law(X) | nu) <= eps with velocity Verlet: T with
// L T^2 = 1/40, h the largest divisor step whose bias is <= eps/2, and k
// steps so the mixing part is <= eps/2. The chain makes k + 1 transitions.
inline BoundReport kl_complexity_verlet(ComplexityInputs in) {
  in = detail::resolve(in);
  BoundReport r{"kl_complexity_verlet"};
  r.check("eps>0", in.eps > 0.0);
  r.check("alpha>0", in.alpha > 0.0);
  const double T = 1.0 / std::sqrt(40.0 * in.L);
  ModelParams mp{in.d, in.L, in.M, in.N, in.alpha, T, 0.0};
  auto bias = [&](double h) {
    mp.h = h;
    const double delta = w2_bias_verlet(mp, in.m2, in.m4).get();
    return kl_bias_bound(mp, 0, 0.0, in.m2, in.m4, delta).component("bias");
  };
  const double h_star = detail::largest_feasible([&](double h) { return bias(h) <= in.eps / 2.0; }, T);
  const auto n = static_cast<std::int64_t>(std::ceil(T / h_star - 1e-9));
  mp.h = T / static_cast<double>(n);
  const double C = 9.0 / (4.0 * T * T) + 363.0 / 2.0 * in.d * in.M * in.M * std::pow(T, 4);
  const double c2 = resolved_c2(mp);
  const double kr = std::log(4.0 * mp.c1 * mp.c1 * C * in.w2_init * in.w2_init / in.eps) / (2.0 * c2);
  const auto k = static_cast<std::int64_t>(std::max(0.0, std::ceil(kr)));
  r.part("bias", bias(mp.h));
  detail::complexity_report(r, in, T, mp.h, n, k);
  return r;
}

// Gradient evaluations for R_q(law(X) | nu) <= eps with velocity Verlet.
inline BoundReport renyi_complexity_verlet(ComplexityInputs in) {
  in = detail::resolve(in);
  BoundReport r{"renyi_complexity_verlet"};
  r.check("eps>0", in.eps > 0.0);
  r.check("alpha>0", in.alpha > 0.0);
  r.check("q>1", in.q > 1.0);
  const double T = 1.0 / std::sqrt(40.0 * in.L);
  ModelParams mp{in.d, in.L, in.M, in.N, in.alpha, T, 0.0};
  auto report = [&](double h, std::int64_t k) {
    mp.h = h;
    const double delta = orlicz_bias_verlet(mp, in.k_nu).get();
    return renyi_bias_bound(mp, in.q, k, in.w_psi_init, delta, in.k_nu);
  };
  // Bias and ceilings do not depend on k; a huge k clears the burn-in flag.
  constexpr std::int64_t kLarge = std::int64_t{1} << 50;
  auto ok = [&](double h) {
    const BoundReport b = report(h, kLarge);
    return b.feasible() && b.component("bias") <= in.eps / 2.0;
  };
  const double h_star = detail::largest_feasible(ok, T);
  r.check("feasible_step_exists", h_star > 0.0);
  if (!(h_star > 0.0)) return r;
  const auto n = static_cast<std::int64_t>(std::ceil(T / h_star - 1e-9));
  const double h = T / static_cast<double>(n);
  const BoundReport probe = report(h, kLarge);
  const double s = probe.component("s");
  const double delta12 = probe.component("delta1") + probe.component("delta2");
  const double c2 = resolved_c2(mp);
  const double kr = std::log(3.0 * delta12 / (2.0 * s) * std::sqrt(kLog2) *
                             std::max(1.0, in.w_psi_init * in.w_psi_init) / (in.eps / 2.0)) /
                    c2;
  const auto k = static_cast<std::int64_t>(std::max({0.0, std::ceil(kr), std::ceil(probe.component("k_star"))}));
  r.part("bias", probe.component("bias"));
  detail::complexity_report(r, in, T, h, n, k);
  return r;
}

// Gradient evaluations for KL(law(X) | nu) <= eps with the stratified
// integrator driving k steps and one final Verlet step.
inline BoundReport kl_complexity_stratified(ComplexityInputs in) {
  in = detail::resolve(in);
  BoundReport r{"kl_complexity_stratified"};
  r.check("eps>0", in.eps > 0.0);
  r.check("alpha>0", in.alpha > 0.0);
  const double T = 1.0 / std::sqrt(24.0 * in.L);
  ModelParams mp{in.d, in.L, in.M, in.N, in.alpha, T, 0.0};
  mp.c2 = stratified_contraction_rate(in.alpha, T);
  auto bias = [&](double h) {
    mp.h = h;
    const double delta = w2_bias_stratified(mp).get();
    return kl_bias_bound(mp, 0, 0.0, in.m2, in.m4, delta).component("bias");
  };
  const double h_star = detail::largest_feasible([&](double h) { return bias(h) <= in.eps / 2.0; }, T);
  const auto n = static_cast<std::int64_t>(std::ceil(T / h_star - 1e-9));
  mp.h = T / static_cast<double>(n);
  const double C = 9.0 / (4.0 * T * T) + 363.0 / 2.0 * in.d * in.M * in.M * std::pow(T, 4);
  const double kr = std::log(4.0 * C * in.w2_init * in.w2_init / in.eps) / (2.0 * mp.c2);
  const auto k = static_cast<std::int64_t>(std::max(0.0, std::ceil(kr)));
  r.part("bias", bias(mp.h));
  detail::complexity_report(r, in, T, mp.h, n, k);
  return r;
}

// Reference growth orders, log factors included.
inline double kl_complexity_order(double d, double eps) {
  return std::pow(d, 0.75) * std::pow(eps, -0.25) * std::log(d / eps);
}
inline double renyi_complexity_order(double d, double eps) { return std::pow(d, 1.5) / eps * std::log(d / eps); }
inline double stratified_complexity_order(double d, double eps) {
  return std::max(std::pow(d, 2.0 / 3.0) * std::pow(eps, -1.0 / 3.0), std::pow(d, 0.75) * std::pow(eps, -0.25)) *
         std::log(d / eps);
}

// ---------------------------------------------------------------------------
// Helper inequalities.

// m_d = E|V| for V ~ N(0, I_d).
inline double chi_mean(int d) {
  require(d >= 1, "chi_mean: d must be positive");
  return std::sqrt(2.0) * std::exp(std::lgamma((d + 1.0) / 2.0) - std::lgamma(d / 2.0));
}

// E exp(c|V|) <= exp(c m_d + c^2/2)
inline double chi_mgf_bound(double c, int d) {
  require(c >= 0.0, "chi_mgf_bound: c must be nonnegative");
  return std::exp(c * chi_mean(d) + 0.5 * c * c);
}

// a x^2 + b x + c <= 0 whenever 0 <= x <= min{-c/(2b), sqrt(-c/(4a))}.
inline double quadratic_threshold(double a, double b, double c) {
  require(a > 0.0 && b > 0.0 && c < 0.0, "quadratic_threshold: needs a > 0, b > 0, c < 0");
  return std::min(-c / (2.0 * b), std::sqrt(-c / (4.0 * a)));
}

// E exp(c|X|^2) <= 2^{c K^2} when |X|_psi <= K and 0 <= c <= K^{-2}.
inline double orlicz_mgf_bound(double c, double K) {
  require(K > 0.0, "orlicz_mgf_bound: K must be positive");
  require(c >= 0.0 && c <= 1.0 / (K * K), "orlicz_mgf_bound: c must lie in [0, K^-2]");
  return std::pow(2.0, c * K * K);
}

// ---------------------------------------------------------------------------
// Log-Harnack certificate for the 1-D Gaussian kernel P(x, .) = N(x, sigma2):
// slack = log (P g)(y) + C |x - y|^2 - (P log g)(x). A nonnegative slack
// certifies the inequality on this instance.
struct HarnackResult {
  double slack;
  double log_pg_y;
  double p_log_g_x;
  double quadrature_error;
};

inline HarnackResult log_harnack_check_1d(double sigma2, const std::function<double(double)>& log_g, double x,
                                          double y, double C) {
  require(sigma2 > 0.0, "log_harnack_check_1d: kernel variance must be positive");
  using boost::math::quadrature::gauss_kronrod;
  const double sd = std::sqrt(sigma2);
  const double norm = 1.0 / std::sqrt(2.0 * kPi * sigma2);
  auto density = [&](double z, double m) { return norm * std::exp(-(z - m) * (z - m) / (2.0 * sigma2)); };
  double e1 = 0.0, e2 = 0.0;
  // Integrate over mean +- 40 sd, split at the mean.
  auto integrate = [&](const std::function<double(double)>& f, double m, double& err) {
    double ea = 0.0, eb = 0.0;
    const double a = gauss_kronrod<double, 61>::integrate(f, m - 40.0 * sd, m, 15, 1e-12, &ea);
    const double b = gauss_kronrod<double, 61>::integrate(f, m, m + 40.0 * sd, 15, 1e-12, &eb);
    err = std::max(ea, eb);
    return a + b;
  };
  const double p_log_g = integrate([&](double z) { return density(z, x) * log_g(z); }, x, e1);
  // log P g(y) with the integrand shifted by its log-maximum on a coarse grid to avoid overflow.
  double shift = -kInf;
  for (int i = -400; i <= 400; ++i) {
    const double z = y + 0.1 * i * sd;
    shift = std::max(shift, log_g(z) - (z - y) * (z - y) / (2.0 * sigma2));
  }
  const double pg = integrate(
      [&](double z) { return norm * std::exp(log_g(z) - (z - y) * (z - y) / (2.0 * sigma2) - shift); }, y, e2);
  if (!(pg > 0.0) || !std::isfinite(pg)) throw NumericalError("log_harnack_check_1d: quadrature failed");
  const double log_pg = std::log(pg) + shift;
  return {log_pg + C * (x - y) * (x - y) - p_log_g, log_pg, p_log_g, std::max(e1, e2)};
}

}  // namespace hmclab
