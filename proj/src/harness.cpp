#include "pspde/harness.hpp"

#include <cmath>
#include <sstream>

#include "pspde/numerics.hpp"

namespace pspde {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
};

// Two passes in index order, so the result depends only on the values.
MeanStd mean_and_stderr(std::span<const double> values) {
  MeanStd r;
  double sum = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++r.n;
    }
  }
  if (r.n == 0) return r;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n < 2) return r;
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - r.mean) * (v - r.mean);
  }
  const double n = static_cast<double>(r.n);
  r.std_error = std::sqrt(ss / (n - 1.0) / n);
  return r;
}

}  // namespace

EnsembleEstimate summarize(std::span<const double> values, const SchemeSpec& scheme,
                           std::uint64_t seed, double T) {
  const auto stats = mean_and_stderr(values);
  EnsembleEstimate e;
  e.n_samples = values.size();
  e.n_diverged = values.size() - stats.n;
  if (stats.n == 0) {
    throw DivergenceError("all " + std::to_string(values.size()) + " trajectories of " +
                          scheme.name() + " diverged");
  }
  e.mean = stats.mean;
  e.std_error = stats.std_error;
  e.scheme = scheme;
  e.seed = seed;
  e.T = T;
  return e;
}

EnsembleEstimate run_ensemble(const EnsembleProblem& problem, const SchemeSpec& scheme,
                              const EnsembleRun& run) {
  const auto values = trajectory_observables(problem, scheme, run);
  return summarize(values, scheme, run.seed, problem.T);
}

ReferenceValue reference_value(const EnsembleProblem& problem, const ReferenceSpec& spec,
                               std::uint64_t seed, Execution execution) {
  switch (spec.mode) {
    case ReferenceMode::Analytic:
      if (problem.nl.kind != NonlinearityKind::Zero) {
        throw ConfigError("the analytic reference requires the zero nonlinearity");
      }
      if (problem.phi.kind() != TestFunctionKind::ExpNorm) {
        throw ConfigError("the analytic reference is available for phi = expnorm only");
      }
      return {gaussian_phi_expectation(problem.space, 1.0), 0.0};
    case ReferenceMode::FineLM:
    case ReferenceMode::FinePLI: {
      const SchemeSpec scheme = spec.mode == ReferenceMode::FineLM
                                    ? SchemeSpec::leimkuhler_matthews(spec.dt)
                                    : SchemeSpec::preconditioned_linear_implicit(spec.alpha, spec.dt);
      const auto e =
          run_ensemble(problem, scheme, {spec.samples, seed, kReferenceOffset, execution});
      return {e.mean, e.std_error};
    }
  }
  throw ConfigError("unknown reference mode");
}

void fit_order(ConvergenceReport& report, double flag_threshold) {
  std::vector<double> xs, ys;
  for (auto& row : report.rows) {
    const double combined = std::hypot(row.std_error, row.reference_stderr);
    row.flagged = row.bias == 0.0 || std::abs(row.bias) < flag_threshold * combined;
    if (!row.flagged) {
      xs.push_back(row.dt);
      ys.push_back(std::abs(row.bias));
    }
  }
  report.rows_in_fit = xs.size();
  report.fitted_order.reset();
  if (xs.size() >= 3) report.fitted_order = loglog_slope(xs, ys);
}

ConvergenceReport dt_sweep(const EnsembleProblem& problem, const SchemeSpec& scheme,
                           std::span<const double> dts, const ReferenceValue& reference,
                           const SweepOptions& options) {
  for (std::size_t i = 1; i < dts.size(); ++i) {
    if (!(dts[i] < dts[i - 1])) throw ConfigError("dts must be strictly decreasing");
  }
  for (double dt : dts) {
    scheme.with_dt(dt).validate();
    steps_for_horizon(problem.T, dt);
  }
  ConvergenceReport report;
  report.scheme = scheme;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const SchemeSpec s = scheme.with_dt(dts[i]);
    const EnsembleRun run{options.samples, options.seed, i * options.samples, options.execution};
    const auto e = run_ensemble(problem, s, run);
    ConvergenceRow row;
    row.dt = dts[i];
    row.estimate = e.mean;
    row.std_error = e.std_error;
    row.reference = reference.value;
    row.reference_stderr = reference.std_error;
    row.bias = e.mean - reference.value;
    row.n_diverged = e.n_diverged;
    report.rows.push_back(row);
  }
  fit_order(report, options.flag_threshold);
  return report;
}

std::vector<ConvergenceReport> alpha_sweep(const EnsembleProblem& problem,
                                           std::span<const double> alphas,
                                           std::span<const double> dts,
                                           const ReferenceValue& reference,
                                           const SweepOptions& options) {
  if (dts.empty()) throw ConfigError("alpha sweep needs at least one dt");
  std::vector<ConvergenceReport> reports;
  for (double alpha : alphas) {
    const auto scheme = SchemeSpec::preconditioned_linear_implicit(alpha, dts[0]);
    reports.push_back(dt_sweep(problem, scheme, dts, reference, options));
  }
  return reports;
}

CoupledComparison coupled_bias_comparison(const EnsembleProblem& problem,
                                          const SchemeSpec& scheme_a, const SchemeSpec& scheme_b,
                                          double reference, const EnsembleRun& run) {
  const auto a = trajectory_observables(problem, scheme_a, run);
  const auto b = trajectory_observables(problem, scheme_b, run);
  std::vector<double> used_a, used_b, diff;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (std::isfinite(a[m]) && std::isfinite(b[m])) {
      used_a.push_back(a[m]);
      used_b.push_back(b[m]);
      diff.push_back(a[m] - b[m]);
    }
  }
  if (diff.empty()) throw DivergenceError("coupled comparison: no trajectory survived both schemes");
  const auto sa = mean_and_stderr(used_a);
  const auto sb = mean_and_stderr(used_b);
  const auto sd = mean_and_stderr(diff);
  CoupledComparison c;
  c.bias_a = sa.mean - reference;
  c.bias_b = sb.mean - reference;
  c.stderr_a = sa.std_error;
  c.stderr_b = sb.std_error;
  c.stderr_difference = sd.std_error;
  c.n_used = diff.size();
  return c;
}

}  // namespace pspde
