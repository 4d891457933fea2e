#include "pspde/verify.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "pspde/analytics.hpp"
#include "pspde/csv.hpp"
#include "pspde/harness.hpp"
#include "pspde/philox.hpp"

namespace pspde {

ModeRecursion mode_recursion(const SpectralSpace& space, const SchemeSpec& scheme, std::size_t k) {
  const Nonlinearity zero = Nonlinearity::zero();
  const Stepper stepper(space, zero, scheme);
  auto ws = stepper.workspace();
  const std::size_t n = space.modes();
  std::vector<double> y(n, 0.0), dw(n, 0.0), out(n, 0.0);
  ModeRecursion r;
  y[k] = 1.0;
  stepper.step(y, dw, ws);
  r.a = y[k];
  std::fill(y.begin(), y.end(), 0.0);
  dw[k] = 1.0;
  stepper.step(y, dw, ws);
  r.b = y[k];
  if (scheme.has_postprocessor()) {
    std::fill(y.begin(), y.end(), 0.0);
    stepper.postprocess(y, dw, out);
    r.c = out[k];
  }
  r.noise_scale = stepper.noise_scale()[k];
  return r;
}

double recursion_stationary_variance(const ModeRecursion& r) {
  const double s2 = r.noise_scale * r.noise_scale;
  return r.b * r.b * s2 / (1.0 - r.a * r.a) + r.c * r.c * s2;
}

double max_contraction_ratio(const SpectralSpace& space, const Nonlinearity& nl, double dt,
                             std::size_t pairs, std::uint64_t seed) {
  const std::size_t n = space.modes();
  const NoiseStream stream{seed, 0, 0};
  double worst = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    FieldState x(n), y(n), dw(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double amplitude = 2.0 / (static_cast<double>(k) + 1.0);
      x[k] = amplitude * stream.normal(3 * p, k);
      // Close pairs probe the local Lipschitz constant, far pairs the global one.
      const double spread = (p % 2 == 0) ? 1e-3 : 1.0;
      y[k] = x[k] + spread * amplitude * stream.normal(3 * p + 1, k);
      dw[k] = std::sqrt(dt * space.q()[k]) * stream.normal(3 * p + 2, k);
    }
    const auto fx = step_explicit_euler(space, nl, x, dw, dt);
    const auto fy = step_explicit_euler(space, nl, y, dw, dt);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      num += (fx[k] - fy[k]) * (fx[k] - fy[k]);
      den += (x[k] - y[k]) * (x[k] - y[k]);
    }
    worst = std::max(worst, std::sqrt(num / den));
  }
  return worst;
}

double gradient_consistency(const SpectralSpace& space, const Nonlinearity& nl,
                            std::size_t states, std::uint64_t seed) {
  const std::size_t n = space.modes();
  const NoiseStream stream{seed, 1, 0};
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    FieldState y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = stream.normal(s, k) / (static_cast<double>(k) + 1.0);
    const auto f = apply_F(space, nl, y);
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) scale = std::max(scale, std::abs(f[k]));
    for (std::size_t k = 0; k < n; ++k) {
      FieldState plus = y, minus = y;
      plus[k] += h;
      minus[k] -= h;
      const double dv = (potential_V(space, nl, plus) - potential_V(space, nl, minus)) / (2 * h);
      worst = std::max(worst, std::abs(-dv - f[k]) / std::max(scale, 1e-300));
    }
  }
  return worst;
}

namespace {

class Suite {
 public:
  explicit Suite(const VerifyOptions& options) : options_(options) {}

  // A group runs when the filter could match one of its check names.
  bool wants(const std::string& group) const {
    const auto& f = options_.filter;
    return f.empty() || group.find(f) != std::string::npos || f.rfind(group, 0) == 0;
  }

  void add(std::string name, bool passed, double value, double tolerance, std::string detail = {}) {
    if (!options_.filter.empty() && name.find(options_.filter) == std::string::npos) return;
    results_.push_back({std::move(name), passed, value, tolerance, std::move(detail)});
  }

  /// |value| <= tolerance
  void bound(std::string name, double value, double tolerance, std::string detail = {}) {
    add(std::move(name), std::isfinite(value) && std::abs(value) <= tolerance, value, tolerance,
        std::move(detail));
  }

  /// Records a check that threw instead of producing a value.
  void failure(std::string name, const std::exception& e) {
    add(std::move(name), false, std::numeric_limits<double>::quiet_NaN(), 0.0, e.what());
  }

  const VerifyOptions& options() const { return options_; }
  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  VerifyOptions options_;
  std::vector<CheckResult> results_;
};

std::string num(double v) { return format_double(v); }

double relative_gap(double value, double expected) {
  return std::abs(value - expected) / std::max(std::abs(expected), 1e-300);
}

// Largest relative gap over modes between the stationary factor of the
// recursion, var / (q_k / 2), and an expected factor.
double factor_gap(const SpectralSpace& space, const SchemeSpec& scheme, double expected) {
  double worst = 0.0;
  for (std::size_t k = 0; k < space.modes(); ++k) {
    const auto r = mode_recursion(space, scheme, k);
    const double factor = recursion_stationary_variance(r) / (0.5 * space.q()[k]);
    worst = std::max(worst, relative_gap(factor, expected));
  }
  return worst;
}

void gaussian_checks(Suite& suite) {
  const auto space = SpectralSpace::finite_difference(0.02);
  const double dts[] = {0.5, 0.25, 0.1, 0.01};
  for (double dt : dts) {
    for (double theta : {0.0, 0.5, 1.0}) {
      const auto scheme = SchemeSpec::theta_method(theta, dt);
      const double expected = 2.0 / (2.0 + (2.0 * theta - 1.0) * dt);
      suite.bound("gaussian.theta" + num(theta) + ".dt" + num(dt), factor_gap(space, scheme, expected),
                  1e-12);
    }
    SchemeSpec lm = SchemeSpec::leimkuhler_matthews(dt);
    double chain_gap = 0.0;
    for (std::size_t k = 0; k < space.modes(); ++k) {
      auto r = mode_recursion(space, lm, k);
      r.c = 0.0;
      chain_gap = std::max(chain_gap, relative_gap(recursion_stationary_variance(r) /
                                                       (0.5 * space.q()[k]),
                                                   1.0 - 0.5 * dt));
    }
    suite.bound("gaussian.lm_chain.dt" + num(dt), chain_gap, 1e-12);
    suite.bound("gaussian.lm_post.dt" + num(dt), factor_gap(space, lm, 1.0), 1e-12);
    suite.bound("gaussian.pie_post.dt" + num(dt),
                factor_gap(space, SchemeSpec::postprocessed_implicit_euler(dt), 1.0), 1e-12);
    suite.bound("gaussian.rk2.dt" + num(dt),
                factor_gap(space, SchemeSpec::rk2(dt), rk2_variance_factor(dt)), 1e-12);
    suite.bound("gaussian.pli_alpha1.dt" + num(dt),
                factor_gap(space, SchemeSpec::preconditioned_linear_implicit(1.0, dt),
                           theta_variance_factor(1.0, dt)),
                1e-12);
  }
  // Closed forms exposed by the analytics module.
  for (double dt : dts) {
    suite.bound("gaussian.closed_form.lm.dt" + num(dt),
                relative_gap(lm_variance_factors(dt).chain, 1.0 - 0.5 * dt), 1e-15);
    suite.bound("gaussian.closed_form.pie.dt" + num(dt),
                relative_gap(pie_variance_factors(dt).chain, 2.0 / (2.0 + dt)), 1e-15);
  }
}

void exactness_checks(Suite& suite) {
  const auto space = SpectralSpace::finite_difference(0.1);
  const auto zero = Nonlinearity::zero();
  const EnsembleProblem problem{space, zero, TestFunction(TestFunctionKind::ExpNorm), 10.0};
  const EnsembleRun run{20000, 7, 0, Execution::Parallel};
  const double exact = gaussian_phi_expectation(space, 1.0);
  for (const auto& scheme : {SchemeSpec::crank_nicolson(0.25), SchemeSpec::leimkuhler_matthews(0.25),
                             SchemeSpec::postprocessed_implicit_euler(0.25)}) {
    const auto e = run_ensemble(problem, scheme, run);
    suite.add("exactness." + scheme.name(), std::abs(e.mean - exact) <= 4.0 * e.std_error,
              (e.mean - exact) / e.std_error, 4.0, "bias in units of stderr");
  }
  const auto ee = SchemeSpec::explicit_euler(0.5);
  const auto e = run_ensemble(problem, ee, run);
  const double biased = gaussian_phi_expectation(space, theta_variance_factor(0.0, 0.5));
  suite.add("exactness.ee_biased_law", std::abs(e.mean - biased) <= 4.0 * e.std_error,
            (e.mean - biased) / e.std_error, 4.0, "bias in units of stderr");
}

struct SmallCase {
  std::size_t modes;
  TestFunctionKind phi;
  const char* f;
};

std::string case_name(const SmallCase& c) {
  return "K" + std::to_string(c.modes) + "." + to_string(c.phi) + "." + c.f;
}

std::vector<SmallCase> small_cases() {
  std::vector<SmallCase> cases;
  for (std::size_t k : {1, 2}) {
    for (auto phi : {TestFunctionKind::Quadratic, TestFunctionKind::ExpNorm}) {
      for (const char* f : {"zero", "cos"}) cases.push_back({k, phi, f});
    }
  }
  return cases;
}

void taylor_checks(Suite& suite) {
  const auto space = SpectralSpace::spectral(1);
  const GeneratorConvention convention{suite.options().generator_trace_factor};
  const std::vector<double> dts = {0x1.0p-3, 0x1.0p-4, 0x1.0p-5, 0x1.0p-6, 0x1.0p-7};
  const std::vector<double> y0 = {0.4};
  for (auto phi : {TestFunctionKind::Quadratic, TestFunctionKind::ExpNorm}) {
    for (const char* f : {"zero", "cos"}) {
      const auto nl = Nonlinearity::by_name(f);
      const DerivativeBundle bundle(space, nl, TestFunction(phi));
      const std::string tag = to_string(phi) + "." + f;
      try {
        const auto report = weak_taylor_report(bundle, y0, dts, convention);
        suite.add("taylor.chain." + tag, report.chain_exact || report.chain_slope >= 2.7,
                  report.chain_exact ? 0.0 : report.chain_slope, 2.7,
                  report.chain_exact ? "residuals at round-off" : "residual slope");
        suite.add("taylor.post." + tag, report.postprocessor_exact || report.postprocessor_slope >= 1.7,
                  report.postprocessor_exact ? 0.0 : report.postprocessor_slope, 1.7,
                  report.postprocessor_exact ? "residuals at round-off" : "residual slope");
      } catch (const std::exception& e) {
        suite.failure("taylor." + tag, e);
      }
    }
  }
}

void order2_checks(Suite& suite) {
  for (const auto& c : small_cases()) {
    const auto space = SpectralSpace::spectral(c.modes);
    const auto nl = Nonlinearity::by_name(c.f);
    const DerivativeBundle bundle(space, nl, TestFunction(c.phi));
    try {
      suite.bound("order2." + case_name(c), order2_condition_residual(bundle), 1e-5);
    } catch (const std::exception& e) {
      suite.failure("order2." + case_name(c), e);
    }
  }
}

void ibp_checks(Suite& suite) {
  for (const auto& c : small_cases()) {
    const auto space = SpectralSpace::spectral(c.modes);
    const auto nl = Nonlinearity::by_name(c.f);
    const DerivativeBundle bundle(space, nl, TestFunction(c.phi));
    const auto r = integration_by_parts_residuals(bundle);
    suite.bound("ibp.fourth_third." + case_name(c), r.fourth_vs_third, 1e-6);
    suite.bound("ibp.third_second." + case_name(c), r.third_vs_second, 1e-6);
  }
}

void stationarity_checks(Suite& suite) {
  const GeneratorConvention convention{suite.options().generator_trace_factor};
  for (const auto& c : small_cases()) {
    const auto space = SpectralSpace::spectral(c.modes);
    const auto nl = Nonlinearity::by_name(c.f);
    const DerivativeBundle bundle(space, nl, TestFunction(c.phi));
    suite.bound("stationarity." + case_name(c),
                generator_stationarity_residual(bundle, 40, convention), 1e-6);
  }
}

void commutator_checks(Suite& suite) {
  const auto space = SpectralSpace::spectral(2);
  const auto nl = Nonlinearity::cosine();
  const std::vector<std::vector<double>> points = {{0.3, -0.2}, {-0.5, 0.1}, {1.1, 0.7}};
  for (auto phi : {TestFunctionKind::Quadratic, TestFunctionKind::ExpNorm}) {
    const DerivativeBundle bundle(space, nl, TestFunction(phi));
    double worst = 0.0;
    for (const auto& y : points) {
      worst = std::max(worst, std::abs(commutator_LA1bar(bundle, y) -
                                       commutator_LA1bar_bruteforce(bundle, y)));
    }
    suite.bound("commutator." + to_string(phi), worst, 1e-6);
  }
}

void contraction_checks(Suite& suite) {
  const auto nl = Nonlinearity::cosine();
  const auto spectral = SpectralSpace::spectral(16);
  const auto fd = SpectralSpace::finite_difference(0.02);
  for (double dt : {0.5, 0.25, 0.1}) {
    const double gamma = 1.0 - dt * (1.0 - 2.0 / (std::numbers::pi * std::numbers::pi));
    const double ratio = max_contraction_ratio(spectral, nl, dt, 400, 11);
    suite.add("contraction.spectral.dt" + num(dt), ratio <= gamma + 1e-12, ratio, gamma + 1e-12);
    const double gamma_fd = 1.0 - dt * (1.0 - nl.lip_bound / fd.eigenvalue(0));
    const double ratio_fd = max_contraction_ratio(fd, nl, dt, 100, 12);
    suite.add("contraction.fd.dt" + num(dt), ratio_fd <= gamma_fd + 1e-12, ratio_fd,
              gamma_fd + 1e-12);
  }
}

// sup over steps of the ensemble mean of |Y_n|^2 for explicit Euler.
double sup_second_moment(const SpectralSpace& space, const Nonlinearity& nl, double dt,
                         std::size_t samples, double horizon) {
  const auto scheme = SchemeSpec::explicit_euler(dt);
  const auto n_steps = steps_for_horizon(horizon, dt);
  std::vector<double> sums(n_steps, 0.0);
  for (std::size_t m = 0; m < samples; ++m) {
    NoiseStream stream{21, m, 0};
    run_trajectory(space, nl, scheme, FieldState(space.modes()), stream, n_steps,
                   [&](std::uint64_t n, std::span<const double> y) {
                     double s = 0.0;
                     for (double v : y) s += v * v;
                     sums[n - 1] += s;
                   });
  }
  return *std::max_element(sums.begin(), sums.end()) / static_cast<double>(samples);
}

void moment_checks(Suite& suite) {
  const auto space = SpectralSpace::finite_difference(0.02);
  const auto nl = Nonlinearity::cosine();
  std::vector<double> sups;
  for (double dt : {0.5, 0.25, 0.1}) sups.push_back(sup_second_moment(space, nl, dt, 1000, 10.0));
  const double ratio = *std::max_element(sups.begin(), sups.end()) /
                       *std::min_element(sups.begin(), sups.end());
  suite.add("moments.sup_ratio", ratio <= 2.0, ratio, 2.0,
            "max/min of sup_n E|Y_n|^2 over dt in {0.5, 0.25, 0.1}");
}

void gradient_checks(Suite& suite) {
  for (const char* f : {"cos", "linear"}) {
    const auto nl = Nonlinearity::by_name(f);
    double worst_fd = 0.0, worst_spectral = 0.0;
    for (std::size_t k = 1; k <= 8; ++k) {
      worst_fd = std::max(worst_fd, gradient_consistency(SpectralSpace::finite_difference_modes(k),
                                                         nl, 5, 31));
      worst_spectral =
          std::max(worst_spectral, gradient_consistency(SpectralSpace::spectral(k), nl, 5, 32));
    }
    suite.bound(std::string("gradient.fd.") + f, worst_fd, 1e-5);
    suite.bound(std::string("gradient.spectral.") + f, worst_spectral, 1e-5);
  }
}

std::string ensemble_csv(const EnsembleProblem& problem, const SchemeSpec& scheme,
                         const EnsembleRun& run) {
  std::ostringstream os;
  write_sample_csv(os, run_ensemble(problem, scheme, run));
  return os.str();
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void determinism_checks(Suite& suite) {
  const auto space = SpectralSpace::finite_difference(0.1);
  const auto nl = Nonlinearity::cosine();
  const EnsembleProblem problem{space, nl, TestFunction(TestFunctionKind::ExpNorm), 1.0};
  for (const auto& scheme : {SchemeSpec::explicit_euler(0.125), SchemeSpec::leimkuhler_matthews(0.125)}) {
    const EnsembleRun parallel{2000, 5, 0, Execution::Parallel};
    const EnsembleRun serial{2000, 5, 0, Execution::Serial};
    const auto a = trajectory_observables(problem, scheme, parallel);
    const auto b = trajectory_observables(problem, scheme, serial);
    suite.add("determinism.parallel_vs_serial." + scheme.name(), bitwise_equal(a, b), 0.0, 0.0);

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto one = ensemble_csv(problem, scheme, parallel);
    omp_set_num_threads(4);
    const auto four = ensemble_csv(problem, scheme, parallel);
    const auto again = ensemble_csv(problem, scheme, parallel);
    omp_set_num_threads(saved);
    suite.add("determinism.threads_1_vs_4." + scheme.name(), one == four, 0.0, 0.0);
    suite.add("determinism.rerun." + scheme.name(), four == again, 0.0, 0.0);
  }
}

// Five-point central difference of a vector-valued function along coordinate k.
std::vector<double> central_difference(const std::function<std::vector<double>(std::span<const double>)>& fn,
                                       std::span<const double> y, std::size_t k, double h) {
  std::vector<double> x(y.begin(), y.end());
  auto at = [&](double s) {
    x[k] = y[k] + s;
    return fn(x);
  };
  const auto p2 = at(2 * h), p1 = at(h), m1 = at(-h), m2 = at(-2 * h);
  std::vector<double> d(p1.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = (-p2[i] + 8 * p1[i] - 8 * m1[i] + m2[i]) / (12 * h);
  }
  return d;
}

// Largest gap between the closed-form tensor `next` and the difference of
// `lower` along each coordinate; tensors are flattened with the new index last.
double jet_gap(const std::function<std::vector<double>(std::span<const double>)>& lower,
               const std::function<std::vector<double>(std::span<const double>)>& next,
               std::span<const double> y) {
  const std::size_t n = y.size();
  const auto exact = next(y);
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto d = central_difference(lower, y, k, 1e-3);
    for (std::size_t i = 0; i < d.size(); ++i) {
      worst = std::max(worst, std::abs(d[i] - exact[i * n + k]));
    }
  }
  return worst;
}

void bundle_checks(Suite& suite) {
  const std::vector<double> y = {0.3, -0.2, 0.5};
  const auto nl = Nonlinearity::cosine();
  for (auto phi_kind : {TestFunctionKind::Linear, TestFunctionKind::Quadratic, TestFunctionKind::ExpNorm}) {
    const TestFunction phi(phi_kind);
    auto value = [&](std::span<const double> x) { return std::vector<double>{phi.value(x)}; };
    auto d1 = [&](std::span<const double> x) { return phi.jet(x).d1; };
    auto d2 = [&](std::span<const double> x) { return phi.jet(x).d2; };
    auto d3 = [&](std::span<const double> x) { return phi.jet(x).d3; };
    auto d4 = [&](std::span<const double> x) { return phi.jet(x).d4; };
    double worst = std::max({jet_gap(value, d1, y), jet_gap(d1, d2, y), jet_gap(d2, d3, y),
                             jet_gap(d3, d4, y)});
    suite.bound("bundle.phi." + to_string(phi_kind), worst, 1e-8);
  }
  for (const auto& space : {SpectralSpace::spectral(3), SpectralSpace::finite_difference_modes(3)}) {
    const DerivativeBundle bundle(space, nl, TestFunction(TestFunctionKind::ExpNorm));
    auto g_model = [&](std::span<const double> x) {
      return drift_G(space, nl, FieldState(std::vector<double>(x.begin(), x.end()))).coeffs;
    };
    auto g = [&](std::span<const double> x) { return bundle.drift(x).g; };
    auto dg = [&](std::span<const double> x) { return bundle.drift(x).dg; };
    auto d2g = [&](std::span<const double> x) { return bundle.drift(x).d2g; };
    const auto a = g(y), b = g_model(y);
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
    const std::string tag = to_string(space.flavor());
    suite.bound("bundle.drift_value." + tag, gap, 1e-13);
    suite.bound("bundle.drift_jet." + tag, std::max(jet_gap(g, dg, y), jet_gap(dg, d2g, y)), 1e-8);
  }
}

}  // namespace

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  Suite suite(options);
  const std::vector<std::pair<std::string, std::function<void(Suite&)>>> groups = {
      {"gaussian", gaussian_checks},       {"exactness", exactness_checks},
      {"taylor", taylor_checks},           {"order2", order2_checks},
      {"ibp", ibp_checks},                 {"stationarity", stationarity_checks},
      {"commutator", commutator_checks},   {"contraction", contraction_checks},
      {"moments", moment_checks},          {"gradient", gradient_checks},
      {"determinism", determinism_checks}, {"bundle", bundle_checks},
  };
  for (const auto& [name, run] : groups) {
    if (!suite.wants(name)) continue;
    try {
      run(suite);
    } catch (const std::exception& e) {
      suite.failure(name + ".error", e);
    }
  }
  return suite.take();
}

}  // namespace pspde
