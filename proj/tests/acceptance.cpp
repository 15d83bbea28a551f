// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hmclab/experiments.hpp"

using namespace hmclab;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ExperimentResult run_json(const char* text) {
  const ExperimentConfig c = parse_config(json::parse(text));
  const ValidationReport v = validate_config(c);
  if (!v.ok) throw ConfigError("acceptance config invalid: " + v.errors.front());
  return run_experiment(c);
}

std::string failed_checks(const ExperimentResult& r) {
  std::string s;
  for (const auto& c : r.checks)
    if (!c.pass) s += (s.empty() ? "" : "; ") + c.name + " (" + fmtg(c.value) + " vs " + fmtg(c.limit) + ")";
  return s;
}

std::vector<Potential> test_potentials(int d) {
  Vector w(d);
  for (int i = 0; i < d; ++i) w[i] = 0.5 + 0.5 * i;
  return {make_standard_gaussian(d), make_quadratic(w / w.maxCoeff()), make_logcosh(d)};
}

// 1. Integrator invariants.
Outcome integrator_invariants() {
  RngStream rng(1001, 0);
  double worst_det = 0.0, worst_rev = 0.0;
  for (int s = 0; s < 100; ++s) {
    const int d = 1 + static_cast<int>(rng.uniform() * 4);
    const auto pots = test_potentials(d);
    const Potential& p = pots[s % 3];
    const double h = (0.05 + 1.4 * rng.uniform()) / std::sqrt(p.L);  // h sqrt(L) < 2
    const int n = 1 + static_cast<int>(rng.uniform() * 8);
    const FlowParams fp{h * n, h};
    const PhasePoint z{rng.normal_vector(d), rng.normal_vector(d)};
    worst_det = std::max(worst_det, std::abs(phase_jacobian_tangent(p, z, fp).determinant() - 1.0));
    const PhasePoint out = flow(p, z, fp);
    const PhasePoint back = flow(p, {out.x, -out.v}, fp);
    worst_rev = std::max(worst_rev, (back.x - z.x).norm() + (back.v + z.v).norm());
  }
  return {worst_det <= 1e-8 && worst_rev <= 1e-10,
          fmt("max |det J - 1| = %.2e (<= 1e-8), max reversal error = %.2e (<= 1e-10), 100 cases", worst_det, worst_rev)};
}

// 2. Coupling construction.
Outcome coupling_construction() {
  const FlowParams fp{0.2, 0.05};
  double worst_res = 0.0, worst_comp = 0.0;
  bool regular = true;
  for (const Potential& p : test_potentials(3)) {
    regular = regular && fp.regular(p.L);
    RngStream rng(2002, static_cast<std::uint64_t>(p.L * 1000));
    for (int s = 0; s < 1000; ++s) {
      const Vector x = rng.normal_vector(3), y = rng.normal_vector(3), v = rng.normal_vector(3);
      const CouplingSolution m = solve_mixing_map(p, x, y, v, fp);
      const CouplingSolution b = solve_bias_map(p, x, v, fp);
      const CouplingSolution c = solve_cross_map(p, x, y, v, fp);
      const CouplingSolution cc = solve_cross_map(p, x, y, v, fp, CrossMethod::composition);
      worst_res = std::max({worst_res, m.residual, b.residual, c.residual});
      worst_comp = std::max(worst_comp, (c.v_prime - cc.v_prime).norm());
    }
  }
  return {regular && worst_res <= 1e-10 && worst_comp <= 1e-9,
          fmt("worst endpoint residual %.2e (<= 1e-10), composition vs direct %.2e (<= 1e-9), 3 potentials x 1000 "
              "draws",
              worst_res, worst_comp)};
}

// 3. Regularity suite with negative control.
Outcome regularity_suite() {
  SamplerConfig cfg;
  cfg.samples = 10000;
  cfg.seed = 3003;
  const Potential p = make_logcosh(2);
  const FlowParams fp{0.2, 0.05};
  bool ok = true;
  double worst = 0.0;
  std::string bad;
  for (LemmaId id : all_lemmas()) {
    const RegularityReport r = verify_regularity(id, p, fp, cfg);
    worst = std::max(worst, r.max_ratio);
    if (!(r.holds() && r.preconditions_ok())) {
      ok = false;
      bad += " " + r.lemma_id;
    }
  }
  Potential halved = p;
  halved.L *= 0.5;
  SamplerConfig neg = cfg;
  neg.samples = 1000;
  const RegularityReport nr = verify_regularity(LemmaId::cross_pointwise_second, halved, fp, neg);
  const bool flagged = !nr.preconditions_ok();
  return {ok && flagged, fmt("max ratio %.4f over %g lemmas x 1e4 samples; halved-L control flagged: ", worst,
                             static_cast<double>(all_lemmas().size())) +
                             (flagged ? "yes" : "no") + (bad.empty() ? "" : "; failing:" + bad)};
}

// 4. W2 contraction.
Outcome w2_contraction() {
  const Potential p = make_logcosh(2);
  const double T = std::sqrt(1.0 / (20.0 * p.L));
  const KernelSpec k = KernelSpec::uhmc_v(p, T, T / 4);
  const double limit = 1.0 - p.alpha * T * T / 10.0;
  RngStream rng(4004, 0);
  double worst = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const Vector x = 2.0 * rng.normal_vector(2), y = 2.0 * rng.normal_vector(2);
    if ((x - y).norm() == 0.0) continue;
    auto [xn, yn] = synchronous_coupled_step(k, x, y, rng);
    worst = std::max(worst, (xn - yn).norm() / (x - y).norm());
  }
  const KernelSpec q = KernelSpec::uhmc_v(make_standard_gaussian(2), 0.2, 0.05);
  const double a = std::abs(verlet_row(1.0, q.fp).first);
  double worst_q = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Vector x = rng.normal_vector(2), y = rng.normal_vector(2);
    auto [xn, yn] = synchronous_coupled_step(q, x, y, rng);
    worst_q = std::max(worst_q, std::abs((xn - yn).norm() / (x - y).norm() - a));
  }
  return {worst <= limit && worst_q <= 1e-12,
          fmt("worst ratio %.6f <= 1 - alpha T^2/10 = %.6f over 1e4 pairs; quadratic |ratio - |a|| = %.1e", worst,
              limit, worst_q)};
}

// 5. KL mixing.
Outcome kl_mixing() {
  const ExperimentResult r = run_json(R"({
    "experiment": "mixing-scan", "seed": 5, "potential": {"kind": "gaussian"},
    "grid": {"d": [1, 2, 10], "T": [0.25], "h": [0.05], "k": {"from": 0, "to": 200}},
    "init": {"mean": 1.0, "var": 0.5}})");
  const Check& dom = r.check("kl_exact<=kl_bound");
  double min_rate_margin = kInf;
  for (const auto& c : r.checks)
    if (c.name.rfind("kl_decay_rate", 0) == 0) min_rate_margin = std::min(min_rate_margin, c.value / c.limit);
  const bool all_rows = dom.detail == std::to_string(3 * 201) + " rows";
  return {r.pass() && all_rows,
          fmt("d in {1,2,10}, k in [0,200]: worst exact/bound %.3e; min fitted rate / (2 c2 (1-5%%)) = %.3f", dom.value,
              min_rate_margin) +
              (r.pass() ? "" : "; " + failed_checks(r))};
}

// 6. KL bias scaling.
Outcome kl_bias() {
  const ExperimentResult r = run_json(R"({
    "experiment": "bias-scan", "potential": {"kind": "gaussian"},
    "grid": {"d": [1, 2, 10], "T": [0.2], "h": [0.2, 0.1, 0.05, 0.025], "q": [2]}})");
  const Check& dom = r.check("kl_bias_exact<=kl_bias_bound");
  double worst_slope = 0.0;
  for (const auto& c : r.checks)
    if (c.name.rfind("kl_bias_slope", 0) == 0) worst_slope = std::max(worst_slope, std::abs(c.value - 4.0));
  return {r.pass() && dom.detail == "12 rows",
          fmt("max |slope - 4| = %.4f (<= 0.1); worst exact/bias-component %.3e over 12 rows", worst_slope, dom.value) +
              (r.pass() ? "" : "; " + failed_checks(r))};
}

// 7. Renyi mixing and bias.
Outcome renyi() {
  const ExperimentResult m = run_json(R"({
    "experiment": "renyi-scan", "potential": {"kind": "gaussian"},
    "grid": {"d": [1, 2, 10], "T": [0.25], "h": [0.05], "q": [2], "k": {"from": 0, "to": 3000, "step": 25}},
    "init": {"mean": 1.0, "var": 0.5}})");
  const ExperimentResult b = run_json(R"({
    "experiment": "bias-scan", "potential": {"kind": "gaussian"},
    "grid": {"d": [1, 2], "T": [0.25], "h": [0.0125, 0.01, 0.005], "q": [2]}})");
  const bool flags = b.infeasible.empty();
  const Check& md = m.check("renyi_exact<=renyi_bound (k>=k*)");
  const Check& bd = b.check("renyi_bias_exact<=renyi_bias_bound");
  return {m.pass() && b.pass() && flags,
          "mixing (k >= k*, " + md.detail + "): worst exact/bound " + fmtg(md.value) + "; bias at T=0.25, h <= 0.0125 (" +
              bd.detail + "): worst " + fmtg(bd.value) + "; all feasibility flags true: " + (flags ? "yes" : "no") +
              (m.pass() && b.pass() ? "" : "; " + failed_checks(m) + failed_checks(b))};
}

// 8. MI contraction.
Outcome mi() {
  const ExperimentResult r = run_json(R"({
    "experiment": "mi-scan", "potential": {"kind": "gaussian"},
    "grid": {"d": [1, 2], "T": [0.2], "h": [0.05], "k": {"from": 1, "to": 100}},
    "init": {"mean": 0.0, "var": 1.0}})");
  const Check& c = r.check("mi_exact<=mi_bound");
  return {r.pass() && c.detail == "200 rows", "k in [1,100], d in {1,2}: worst exact/bound " + fmtg(c.value) +
                                                  " (" + c.detail + ")"};
}

// 9. Two-mode mixture divergences.
Outcome figure1() {
  const ExperimentResult r = run_json(R"({"experiment": "figure1",
    "figure1": {"weights": [0.99, 0.01], "centers": [0.0, 10.0]}})");
  return {r.pass(), "TV " + r.rows[0][0] + " (<= 0.01), KL " + r.rows[0][1] + " (>= 0.4), R2 " + r.rows[0][2] +
                        " (>= 90), quadrature error " + r.rows[0][3] + " (<= 1e-10)"};
}

// 10. uLA cross-regularization scaling.
Outcome ula() {
  const ExperimentResult r = run_json(R"({
    "experiment": "ula-scan", "potential": {"kind": "gaussian"}, "grid": {"d": [2], "eta": [0.0125, 0.025, 0.05, 0.1]},
    "ula": {"x": 1.0, "y": 0.0}})");
  return {r.pass(), "x=y slope " + fmtg(r.check("x=y slope>=2").value) + " (>= 2); x!=y separation exponent " +
                        fmtg(r.extra["separation_exponent"].get<double>()) + " (2 +- 10%), eta exponent " +
                        fmtg(r.extra["eta_exponent"].get<double>()) + " (-1 +- 10%)" +
                        (r.pass() ? "" : "; " + failed_checks(r))};
}

// 11. Complexity exponents.
Outcome complexity() {
  ComplexityInputs base;
  base.d = 1000000;
  base.eps = 1e-2;
  base.L = 1.5;
  base.M = 2.0 / (3.0 * std::sqrt(3.0));
  base.N = 1.0;
  ComplexityInputs bd = base, be = base;
  bd.d *= 16;
  be.eps /= 16;
  auto dev = [&](const std::function<BoundReport(ComplexityInputs)>& f, double (*order)(double, double),
                 const ComplexityInputs& changed) {
    const double got = f(changed).get() / f(base).get();
    const double want = order(changed.d, changed.eps) / order(base.d, base.eps);
    return std::abs(got / want - 1.0);
  };
  const double kd = dev(kl_complexity_verlet, kl_complexity_order, bd);
  const double ke = dev(kl_complexity_verlet, kl_complexity_order, be);
  const double rd = dev(renyi_complexity_verlet, renyi_complexity_order, bd);
  const double re = dev(renyi_complexity_verlet, renyi_complexity_order, be);
  const double worst = std::max({kd, ke, rd, re});
  return {worst <= 0.1, fmt("relative deviation from order ratios: KL d %.3f, KL eps %.3f, ", kd, ke) +
                            fmt("Renyi d %.3f, Renyi eps %.3f (<= 0.1) at d = 1e6, eps = 1e-2", rd, re)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"integrator invariants", integrator_invariants},
      {"coupling construction", coupling_construction},
      {"regularity suite", regularity_suite},
      {"W2 contraction", w2_contraction},
      {"KL mixing", kl_mixing},
      {"KL bias scaling", kl_bias},
      {"Renyi mixing and bias", renyi},
      {"MI contraction", mi},
      {"two-mode mixture divergences", figure1},
      {"uLA cross-regularization scaling", ula},
      {"complexity exponents", complexity},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  [%zu] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
