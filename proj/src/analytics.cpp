#include "pspde/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pspde/numerics.hpp"

namespace pspde {

namespace {
constexpr double kRoundOff = 1e-13;
}  // namespace

// ---------------------------------------------------------------------------
// Gaussian laws

double theta_variance_factor(double theta, double dt) {
  if (!(dt > 0.0)) throw ConfigError("theta_variance_factor: dt must be positive");
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0,1]");
  if (theta < 0.5 && !(dt < 2.0 / (1.0 - 2.0 * theta))) {
    std::ostringstream msg;
    msg << "theta_variance_factor: dt=" << dt << " outside the window dt < 2/(1-2 theta) = "
        << 2.0 / (1.0 - 2.0 * theta);
    throw ConfigError(msg.str());
  }
  return 2.0 / (2.0 + (2.0 * theta - 1.0) * dt);
}

VarianceFactors lm_variance_factors(double dt) {
  if (!(dt > 0.0 && dt < 1.0)) {
    throw ConfigError("lm_variance_factors: the chain is ergodic only for 0 < dt < 1");
  }
  const double chain = 1.0 - 0.5 * dt;
  return {chain, chain + 0.5 * dt};
}

VarianceFactors pie_variance_factors(double dt) {
  if (!(dt > 0.0)) throw ConfigError("pie_variance_factors: dt must be positive");
  const double chain = 2.0 / (2.0 + dt);
  return {chain, chain + dt / (2.0 + dt)};
}

double rk2_variance_factor(double dt) {
  if (!(dt > 0.0 && dt <= 1.0)) throw ConfigError("rk2_variance_factor: need 0 < dt <= 1");
  const double a = 1.0 - dt + 0.5 * dt * dt;
  const double b = 1.0 - 0.5 * dt;
  return 2.0 * dt * b * b / (1.0 - a * a);
}

GaussianLaw gaussian_law(const SchemeSpec& scheme) {
  switch (scheme.kind) {
    case SchemeKind::ExplicitEuler:
    case SchemeKind::Theta:
    case SchemeKind::CrankNicolson:
    case SchemeKind::ImplicitEuler:
      return {theta_variance_factor(scheme.resolved_theta(), scheme.dt), scheme};
    case SchemeKind::LeimkuhlerMatthews:
      return {lm_variance_factors(scheme.dt).postprocessed, scheme};
    case SchemeKind::PostprocessedImplicitEuler:
      return {pie_variance_factors(scheme.dt).postprocessed, scheme};
    case SchemeKind::RK2:
      return {rk2_variance_factor(scheme.dt), scheme};
    case SchemeKind::PreconditionedLinearImplicit:
      if (scheme.alpha == 1.0) return {theta_variance_factor(1.0, scheme.dt), scheme};
      throw ConfigError("gaussian_law: the pli factor depends on the mode unless alpha = 1");
  }
  return {1.0, scheme};
}

std::vector<double> stationary_mode_variances(const SpectralSpace& space,
                                              const SchemeSpec& scheme) {
  std::vector<double> v(space.modes());
  if (scheme.kind == SchemeKind::PreconditionedLinearImplicit) {
    const auto precond = Preconditioner::fractional(space, scheme.alpha);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double p = precond.multipliers[k];
      const double a = 1.0 / (1.0 + scheme.dt * p * space.eigenvalue(k));
      v[k] = scheme.dt * p * a * a / (1.0 - a * a);
    }
    return v;
  }
  const double factor = gaussian_law(scheme).variance_factor;
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 * factor * space.q()[k];
  return v;
}

double gaussian_phi_expectation(const SpectralSpace& space, double variance_factor) {
  if (!(variance_factor >= 0.0)) throw ConfigError("variance factor must be non-negative");
  double log_sum = 0.0;
  for (double q : space.q()) log_sum += std::log1p(variance_factor * q);
  return std::exp(-0.5 * log_sum);
}

double gaussian_phi_expectation(std::span<const double> mode_variances) {
  double log_sum = 0.0;
  for (double v : mode_variances) log_sum += std::log1p(2.0 * v);
  return std::exp(-0.5 * log_sum);
}

// ---------------------------------------------------------------------------
// Test functions

std::string to_string(TestFunctionKind kind) {
  switch (kind) {
    case TestFunctionKind::Constant: return "constant";
    case TestFunctionKind::Linear: return "linear";
    case TestFunctionKind::Quadratic: return "quadratic";
    case TestFunctionKind::ExpNorm: return "expnorm";
  }
  return "?";
}

double TestFunction::value(std::span<const double> y) const {
  double s = 0.0;
  switch (kind_) {
    case TestFunctionKind::Constant: return 1.0;
    case TestFunctionKind::Linear: return y[0];
    case TestFunctionKind::Quadratic:
      for (double v : y) s += v * v;
      return s;
    case TestFunctionKind::ExpNorm:
      for (double v : y) s += v * v;
      return std::exp(-s);
  }
  return 0.0;
}

Jet TestFunction::jet(std::span<const double> y) const {
  const std::size_t n = y.size();
  Jet j;
  j.dim = n;
  j.value = value(y);
  j.d1.assign(n, 0.0);
  j.d2.assign(n * n, 0.0);
  j.d3.assign(n * n * n, 0.0);
  j.d4.assign(n * n * n * n, 0.0);
  auto delta = [](std::size_t a, std::size_t b) { return a == b ? 1.0 : 0.0; };
  switch (kind_) {
    case TestFunctionKind::Constant:
      break;
    case TestFunctionKind::Linear:
      j.d1[0] = 1.0;
      break;
    case TestFunctionKind::Quadratic:
      for (std::size_t a = 0; a < n; ++a) {
        j.d1[a] = 2.0 * y[a];
        j.d2[a * n + a] = 2.0;
      }
      break;
    case TestFunctionKind::ExpNorm: {
      // Derivatives of exp(-|y|^2): Hermite-type polynomials times phi.
      const double phi = j.value;
      for (std::size_t a = 0; a < n; ++a) {
        j.d1[a] = -2.0 * y[a] * phi;
        for (std::size_t b = 0; b < n; ++b) {
          j.d2[a * n + b] = (4.0 * y[a] * y[b] - 2.0 * delta(a, b)) * phi;
          for (std::size_t c = 0; c < n; ++c) {
            j.d3[(a * n + b) * n + c] =
                (-8.0 * y[a] * y[b] * y[c] +
                 4.0 * (delta(a, b) * y[c] + delta(a, c) * y[b] + delta(b, c) * y[a])) *
                phi;
            for (std::size_t d = 0; d < n; ++d) {
              const double quartic = 16.0 * y[a] * y[b] * y[c] * y[d];
              const double quadratic =
                  delta(a, b) * y[c] * y[d] + delta(a, c) * y[b] * y[d] +
                  delta(a, d) * y[b] * y[c] + delta(b, c) * y[a] * y[d] +
                  delta(b, d) * y[a] * y[c] + delta(c, d) * y[a] * y[b];
              const double constant =
                  delta(a, b) * delta(c, d) + delta(a, c) * delta(b, d) + delta(a, d) * delta(b, c);
              j.d4[((a * n + b) * n + c) * n + d] =
                  (quartic - 8.0 * quadratic + 4.0 * constant) * phi;
            }
          }
        }
      }
      break;
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// Drift derivatives

DerivativeBundle::DerivativeBundle(const SpectralSpace& space, const Nonlinearity& nl,
                                   TestFunction phi)
    : space_(&space), nl_(&nl), phi_(phi) {
  if (space.modes() > kMaxModes) {
    throw ConfigError("derivative bundle supports at most 3 modes; got " +
                      std::to_string(space.modes()));
  }
}

DriftJet DerivativeBundle::drift(std::span<const double> y) const {
  const std::size_t n = dim();
  const auto& space = *space_;
  const auto q = space.q();
  std::vector<double> grid(n);
  space.to_physical(y, grid);
  DriftJet jet;
  jet.g.assign(n, 0.0);
  jet.dg.assign(n * n, 0.0);
  jet.d2g.assign(n * n * n, 0.0);
  const double dx = space.grid_spacing();
  for (std::size_t k = 0; k < n; ++k) {
    double f_k = 0.0;
    for (std::size_t i = 0; i < n; ++i) f_k += nl_->value(grid[i]) * space.eigenvector(k, i);
    jet.g[k] = -y[k] + q[k] * dx * f_k;
    for (std::size_t l = 0; l < n; ++l) {
      double df = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        df += nl_->derivative(grid[i]) * space.eigenvector(k, i) * space.eigenvector(l, i);
      }
      jet.dg[k * n + l] = (k == l ? -1.0 : 0.0) + q[k] * dx * df;
      for (std::size_t m = 0; m < n; ++m) {
        double d2f = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          d2f += nl_->second_derivative(grid[i]) * space.eigenvector(k, i) *
                 space.eigenvector(l, i) * space.eigenvector(m, i);
        }
        jet.d2g[(k * n + l) * n + m] = q[k] * dx * d2f;
      }
    }
  }
  return jet;
}

// ---------------------------------------------------------------------------
// Expansion operators

namespace {

struct ExpansionTerms {
  double drift = 0.0;             // D phi . G
  double trace = 0.0;             // sum q_k D^2 phi (e_k, e_k)
  double hessian_gg = 0.0;        // D^2 phi (G, G)
  double third_trace_g = 0.0;     // sum q_i D^3 phi (e_i, e_i, G)
  double fourth_trace = 0.0;      // sum q_i q_j D^4 phi (e_i, e_i, e_j, e_j)
  double grad_d2g_trace = 0.0;    // D phi . sum q_i D^2 G (e_i, e_i)
  double hessian_dg_trace = 0.0;  // sum q_i D^2 phi (DG e_i, e_i)
};

ExpansionTerms expansion_terms(const DerivativeBundle& bundle, std::span<const double> y) {
  const std::size_t n = bundle.dim();
  const auto q = bundle.q();
  const Jet j = bundle.phi_jet(y);
  const DriftJet g = bundle.drift(y);
  ExpansionTerms t;
  for (std::size_t k = 0; k < n; ++k) {
    t.drift += j.d1[k] * g.g[k];
    t.trace += q[k] * j.d2[k * n + k];
    for (std::size_t l = 0; l < n; ++l) t.hessian_gg += j.d2[k * n + l] * g.g[k] * g.g[l];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      t.third_trace_g += q[i] * j.d3[(i * n + i) * n + k] * g.g[k];
      t.grad_d2g_trace += q[i] * j.d1[k] * g.d2g[(k * n + i) * n + i];
      t.hessian_dg_trace += q[i] * j.d2[k * n + i] * g.dg[k * n + i];
    }
    for (std::size_t l = 0; l < n; ++l) {
      t.fourth_trace += q[i] * q[l] * j.d4[((i * n + i) * n + l) * n + l];
    }
  }
  return t;
}

}  // namespace

double generator_L(const DerivativeBundle& bundle, std::span<const double> y,
                   GeneratorConvention convention) {
  const auto t = expansion_terms(bundle, y);
  return t.drift + convention.trace_factor * t.trace;
}

double operator_A1(const DerivativeBundle& bundle, std::span<const double> y) {
  const auto t = expansion_terms(bundle, y);
  return 0.5 * t.hessian_gg + 0.5 * t.third_trace_g + 0.125 * t.fourth_trace +
         0.125 * t.grad_d2g_trace + 0.5 * t.hessian_dg_trace;
}

double operator_A1bar(const DerivativeBundle& bundle, std::span<const double> y) {
  return 0.125 * expansion_terms(bundle, y).trace;
}

double commutator_LA1bar(const DerivativeBundle& bundle, std::span<const double> y) {
  const auto t = expansion_terms(bundle, y);
  return -0.125 * t.grad_d2g_trace - 0.25 * t.hessian_dg_trace;
}

double commutator_LA1bar_bruteforce(const DerivativeBundle& bundle, std::span<const double> y,
                                    double h) {
  const std::size_t n = bundle.dim();
  const auto q = bundle.q();
  std::vector<double> point(y.begin(), y.end());

  auto a1bar = [&](std::span<const double> x) { return operator_A1bar(bundle, x); };
  auto generator = [&](std::span<const double> x) { return generator_L(bundle, x); };

  // Five-point stencils along coordinate k.
  auto shifted = [&](const auto& fn, std::size_t k, double s) {
    std::vector<double> x = point;
    x[k] += s;
    return fn(std::span<const double>(x));
  };
  auto first = [&](const auto& fn, std::size_t k) {
    return (-shifted(fn, k, 2 * h) + 8 * shifted(fn, k, h) - 8 * shifted(fn, k, -h) +
            shifted(fn, k, -2 * h)) /
           (12 * h);
  };
  auto second = [&](const auto& fn, std::size_t k) {
    return (-shifted(fn, k, 2 * h) + 16 * shifted(fn, k, h) - 30 * fn(std::span<const double>(point)) +
            16 * shifted(fn, k, -h) - shifted(fn, k, -2 * h)) /
           (12 * h * h);
  };

  const DriftJet g = bundle.drift(y);
  double l_of_a1bar = 0.0;
  double a1bar_of_l = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    l_of_a1bar += first(a1bar, k) * g.g[k] + 0.5 * q[k] * second(a1bar, k);
    a1bar_of_l += 0.125 * q[k] * second(generator, k);
  }
  return l_of_a1bar - a1bar_of_l;
}

// ---------------------------------------------------------------------------
// Quadrature against the Gibbs measure

GibbsQuadrature::GibbsQuadrature(const SpectralSpace& space, const Nonlinearity& nl,
                                 std::size_t nodes_per_dim)
    : dim_(space.modes()) {
  if (dim_ > DerivativeBundle::kMaxModes) {
    throw ConfigError("Gibbs quadrature supports at most 3 modes");
  }
  const auto rule = gauss_hermite(nodes_per_dim);
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim_; ++d) total *= nodes_per_dim;
  points_.resize(total * dim_);
  weights_.resize(total);
  std::vector<double> log_w(total);
  FieldState y(dim_);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double lw = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      const std::size_t j = rem % nodes_per_dim;
      rem /= nodes_per_dim;
      // nu^K has density proportional to exp(-y_k^2 / q_k) in mode k.
      y[d] = std::sqrt(space.q()[d]) * rule.nodes[j];
      lw += std::log(rule.weights[j]);
      points_[idx * dim_ + d] = y[d];
    }
    log_w[idx] = lw - 2.0 * potential_V(space, nl, y);
  }
  const double shift = *std::max_element(log_w.begin(), log_w.end());
  double z = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    weights_[idx] = std::exp(log_w[idx] - shift);
    z += weights_[idx];
  }
  for (double& w : weights_) w /= z;
}

double GibbsQuadrature::expectation(
    const std::function<double(std::span<const double>)>& fn) const {
  double acc = 0.0;
  for (std::size_t idx = 0; idx < weights_.size(); ++idx) {
    acc += weights_[idx] * fn(std::span<const double>(&points_[idx * dim_], dim_));
  }
  return acc;
}

double order2_condition_residual(const DerivativeBundle& bundle, std::size_t nodes,
                                 std::size_t refined_nodes) {
  if (bundle.dim() > 2) throw ConfigError("order2_condition_residual: K <= 2 required");
  auto integrand = [&](std::span<const double> y) {
    return operator_A1(bundle, y) + commutator_LA1bar(bundle, y);
  };
  const GibbsQuadrature coarse(bundle.space(), bundle.nonlinearity(), nodes);
  const GibbsQuadrature fine(bundle.space(), bundle.nonlinearity(), refined_nodes);
  const double r_coarse = coarse.expectation(integrand);
  const double r_fine = fine.expectation(integrand);
  if (std::abs(r_coarse - r_fine) > 1e-6) {
    std::ostringstream msg;
    msg << "order-2 residual not converged: " << r_coarse << " with " << nodes << " nodes, "
        << r_fine << " with " << refined_nodes;
    throw QuadratureError(msg.str());
  }
  return std::abs(r_fine);
}

IntegrationByPartsResiduals integration_by_parts_residuals(const DerivativeBundle& bundle,
                                                           std::size_t nodes) {
  const GibbsQuadrature quad(bundle.space(), bundle.nonlinearity(), nodes);
  const double fourth = quad.expectation(
      [&](std::span<const double> y) { return expansion_terms(bundle, y).fourth_trace; });
  const double third = quad.expectation(
      [&](std::span<const double> y) { return expansion_terms(bundle, y).third_trace_g; });
  const double second = quad.expectation([&](std::span<const double> y) {
    const auto t = expansion_terms(bundle, y);
    return t.hessian_dg_trace + 2.0 * t.hessian_gg;
  });
  return {fourth + 2.0 * third, third + second};
}

double generator_stationarity_residual(const DerivativeBundle& bundle, std::size_t nodes,
                                       GeneratorConvention convention) {
  const GibbsQuadrature quad(bundle.space(), bundle.nonlinearity(), nodes);
  return quad.expectation(
      [&](std::span<const double> y) { return generator_L(bundle, y, convention); });
}

// ---------------------------------------------------------------------------
// Weak Taylor expansions

OneStepExpectation lm_one_step_expectation(const DerivativeBundle& bundle,
                                           std::span<const double> y0, double dt,
                                           std::size_t nodes) {
  const std::size_t n = bundle.dim();
  const auto& space = bundle.space();
  const auto rule = gauss_hermite(nodes);
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= nodes;
  const FieldState start(std::vector<double>(y0.begin(), y0.end()));
  FieldState dw(n);
  OneStepExpectation e;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double w = 1.0;
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t j = rem % nodes;
      rem /= nodes;
      // Standard normal xi = sqrt(2) x against weight exp(-x^2)/sqrt(pi).
      const double xi = std::numbers::sqrt2 * rule.nodes[j];
      w *= rule.weights[j] / std::sqrt(std::numbers::pi);
      dw[d] = std::sqrt(dt * space.q()[d]) * xi;
    }
    const auto out = step_lm(space, bundle.nonlinearity(), start, dw, dt);
    e.chain += w * bundle.phi().value(out.next_state.span());
    e.postprocessed += w * bundle.phi().value(out.postprocessed_state->span());
  }
  return e;
}

WeakTaylorReport weak_taylor_report(const DerivativeBundle& bundle, std::span<const double> y0,
                                    std::span<const double> dts,
                                    GeneratorConvention convention) {
  const double phi = bundle.phi().value(y0);
  const double l_phi = generator_L(bundle, y0, convention);
  const double a1 = operator_A1(bundle, y0);
  const double a1bar = operator_A1bar(bundle, y0);
  WeakTaylorReport report;
  std::vector<double> xs, chain, post;
  for (double dt : dts) {
    const auto e = lm_one_step_expectation(bundle, y0, dt);
    WeakTaylorRow row;
    row.dt = dt;
    row.chain_residual = std::abs(e.chain - phi - dt * l_phi - dt * dt * a1);
    row.postprocessor_residual = std::abs(e.postprocessed - phi - dt * a1bar);
    report.rows.push_back(row);
    xs.push_back(dt);
    chain.push_back(std::max(row.chain_residual, 1e-300));
    post.push_back(std::max(row.postprocessor_residual, 1e-300));
  }
  report.chain_exact = std::all_of(report.rows.begin(), report.rows.end(),
                                   [](const auto& r) { return r.chain_residual < kRoundOff; });
  report.postprocessor_exact =
      std::all_of(report.rows.begin(), report.rows.end(),
                  [](const auto& r) { return r.postprocessor_residual < kRoundOff; });
  if (xs.size() >= 2) {
    report.chain_slope = loglog_slope(xs, chain);
    report.postprocessor_slope = loglog_slope(xs, post);
  }
  return report;
}

}  // namespace pspde
