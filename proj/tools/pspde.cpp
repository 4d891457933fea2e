#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pspde/csv.hpp"
#include "pspde/harness.hpp"
#include "pspde/philox.hpp"
#include "pspde/run_config.hpp"
#include "pspde/verify.hpp"

namespace {

using namespace pspde;

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitVerify = 4;

// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<double> sweep_dts(const RunConfig& config) {
  if (config.dts.size() < 3) throw ConfigError("a sweep needs at least 3 values in --dts");
  return config.dts;
}

int cmd_sample(const RunConfig& config) {
  const auto space = make_space(config);
  const auto nl = make_nonlinearity(config);
  const auto scheme = make_scheme(config, config.dt);
  const EnsembleProblem problem{space, nl, make_phi(config), horizon(config, config.dt)};
  const auto e = run_ensemble(problem, scheme, {config.samples, config.seed, 0, Execution::Parallel});
  Output out(config.out);
  write_sample_csv(out.stream(), e);
  std::cout << "# mean=" << format_double(e.mean) << " stderr=" << format_double(e.std_error)
            << " n_diverged=" << e.n_diverged << '\n';
  return config.strict && e.n_diverged > 0 ? kExitDivergence : 0;
}

ReferenceValue resolve_reference(const EnsembleProblem& problem, const RunConfig& config,
                                 ReferenceSpec spec) {
  const auto ref = reference_value(problem, spec, config.seed);
  std::cout << "# reference=" << format_double(ref.value)
            << " reference_stderr=" << format_double(ref.std_error) << '\n';
  return ref;
}

bool any_diverged(const ConvergenceReport& report) {
  for (const auto& row : report.rows) {
    if (row.n_diverged > 0) return true;
  }
  return false;
}

int cmd_sweep(const RunConfig& config) {
  const auto dts = sweep_dts(config);
  const auto space = make_space(config);
  const auto nl = make_nonlinearity(config);
  const auto scheme = make_scheme(config, dts.front());
  const EnsembleProblem problem{space, nl, make_phi(config), horizon(config, dts.front())};
  const auto ref = resolve_reference(problem, config, make_reference(config));
  const auto report =
      dt_sweep(problem, scheme, dts, ref, {config.samples, config.seed, 3.0, Execution::Parallel});
  Output out(config.out);
  write_sweep_csv(out.stream(), report);
  return config.strict && any_diverged(report) ? kExitDivergence : 0;
}

int cmd_alpha_sweep(const RunConfig& config, bool reference_given) {
  const auto dts = sweep_dts(config);
  for (double a : config.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("every alpha must lie in [0,1]");
  }
  const auto space = make_space(config);
  const auto nl = make_nonlinearity(config);
  const EnsembleProblem problem{space, nl, make_phi(config), horizon(config, dts.front())};
  ReferenceSpec spec = make_reference(config);
  if (!reference_given) spec.mode = ReferenceMode::FinePLI;
  const auto ref = resolve_reference(problem, config, spec);
  const auto reports = alpha_sweep(problem, config.alphas, dts, ref,
                                   {config.samples, config.seed, 3.0, Execution::Parallel});
  Output out(config.out);
  bool diverged = false;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out.stream() << "# alpha=" << format_double(config.alphas[i]) << '\n';
    write_sweep_csv(out.stream(), reports[i]);
    diverged = diverged || any_diverged(reports[i]);
  }
  out.stream() << "# summary alpha,fitted_order\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& order = reports[i].fitted_order;
    out.stream() << "# " << format_double(config.alphas[i]) << ','
                 << (order ? format_double(*order) : std::string("unavailable")) << '\n';
  }
  return config.strict && diverged ? kExitDivergence : 0;
}

int cmd_verify(const RunConfig& config) {
  const auto results = run_verification({config.filter, config.generator_trace_factor});
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << format_double(r.value)
              << " tol=" << format_double(r.tolerance);
    if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << '\n';
    if (!r.passed) ++failed;
  }
  std::cout << "# " << results.size() - failed << " passed, " << failed << " failed\n";
  return failed > 0 ? kExitVerify : 0;
}

int cmd_traj(const RunConfig& config) {
  const auto space = make_space(config);
  const auto nl = make_nonlinearity(config);
  const auto scheme = make_scheme(config, config.dt);
  const auto n_steps = steps_for_horizon(horizon(config, config.dt), config.dt);
  Output out(config.out);
  auto& os = out.stream();
  os << "step,t";
  for (std::size_t i = 1; i <= space.modes(); ++i) os << ",x_" << i;
  os << '\n';
  auto emit = [&](std::uint64_t n, std::span<const double> y) {
    const auto grid = space.to_physical(FieldState(std::vector<double>(y.begin(), y.end())));
    os << n << ',' << format_double(static_cast<double>(n) * config.dt);
    for (double v : grid) os << ',' << format_double(v);
    os << '\n';
  };
  const FieldState origin(space.modes());
  emit(0, origin.coeffs);
  NoiseStream stream{config.seed, 0, 0};
  const auto result = run_trajectory(space, nl, scheme, origin, stream, n_steps, emit);
  if (result.diverged) {
    std::cerr << "trajectory diverged at step " << result.diverged_at_step << '\n';
    return kExitDivergence;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampling the invariant law of preconditioned parabolic SPDEs"};
  app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig config;
  std::size_t modes = 0;
  std::string alpha_text, dts_text;
  std::uint64_t steps = 0;

  app.add_option("--flavor", config.flavor, "discretization")
      ->check(CLI::IsMember({"fd", "spectral"}))
      ->capture_default_str();
  app.add_option("--dx", config.dx, "grid spacing, 1/(K+1)")->capture_default_str();
  auto* modes_opt = app.add_option("--modes", modes, "number of modes K (overrides --dx)");
  app.add_option("--nonlinearity", config.nonlinearity, "f")
      ->check(CLI::IsMember({"zero", "cos", "linear"}))
      ->capture_default_str();
  app.add_option("--scheme", config.scheme, "time integrator")
      ->check(CLI::IsMember({"ee", "ie", "theta", "cn", "lm", "pie", "rk2", "pli"}))
      ->capture_default_str();
  app.add_option("--theta", config.theta, "theta of the theta method")->capture_default_str();
  app.add_option("--alpha", alpha_text, "preconditioner exponent; comma list for alpha-sweep");
  app.add_option("--dt", config.dt, "time step")->capture_default_str();
  app.add_option("--dts", dts_text, "comma list of time steps, decreasing");
  app.add_option("--T", config.T, "final time")->capture_default_str();
  auto* steps_opt = app.add_option("--steps", steps, "number of steps (overrides --T)");
  app.add_option("--samples", config.samples, "trajectories M")->capture_default_str();
  app.add_option("--seed", config.seed, "master seed")->capture_default_str();
  app.add_option("--phi", config.phi, "test function")
      ->check(CLI::IsMember({"expnorm", "quadratic", "linear", "constant"}))
      ->capture_default_str();
  auto* reference_opt = app.add_option("--reference", config.reference, "reference value")
                            ->check(CLI::IsMember({"analytic", "fine-lm", "fine-pli"}))
                            ->capture_default_str();
  app.add_option("--ref-dt", config.ref_dt, "time step of the reference ensemble")
      ->capture_default_str();
  app.add_option("--ref-samples", config.ref_samples, "trajectories of the reference ensemble")
      ->capture_default_str();
  app.add_option("--out", config.out, "output CSV path (default stdout)");
  app.add_flag("--strict", config.strict, "exit 3 when any trajectory diverges");
  app.add_option("--filter", config.filter, "verify: run checks whose name contains this");
  app.add_option("--generator-trace-factor", config.generator_trace_factor)
      ->group("");  // test hook, hidden from --help

  auto* sample = app.add_subcommand("sample", "one ensemble estimate");
  auto* sweep = app.add_subcommand("sweep", "bias against a reference over --dts");
  auto* alpha = app.add_subcommand("alpha-sweep", "preconditioned sweep over --alpha values");
  auto* verify = app.add_subcommand("verify", "identity and property checks");
  auto* traj = app.add_subcommand("traj", "one trajectory as physical grid values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (modes_opt->count() > 0) config.modes = modes;
    if (steps_opt->count() > 0) config.steps = steps;
    if (!alpha_text.empty()) config.alphas = parse_number_list(alpha_text);
    if (!dts_text.empty()) config.dts = parse_number_list(dts_text);
    if (alpha_text.find(',') != std::string::npos && !alpha->parsed()) {
      throw ConfigError("--alpha takes a list only with alpha-sweep");
    }
    if (sample->parsed()) return cmd_sample(config);
    if (sweep->parsed()) return cmd_sweep(config);
    if (alpha->parsed()) return cmd_alpha_sweep(config, reference_opt->count() > 0);
    if (verify->parsed()) return cmd_verify(config);
    if (traj->parsed()) return cmd_traj(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
