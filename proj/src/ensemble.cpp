#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "pspde/harness.hpp"
#include "pspde/philox.hpp"

namespace pspde {

namespace {

bool finite(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::vector<double> trajectory_observables(const EnsembleProblem& problem,
                                           const SchemeSpec& scheme, const EnsembleRun& run) {
  if (run.execution == Execution::Serial) {
    return trajectory_observables_serial(problem, scheme, run);
  }
  scheme.validate();
  if (run.samples == 0) throw ConfigError("ensemble needs at least one sample");
  const std::uint64_t n_steps = steps_for_horizon(problem.T, scheme.dt);
  const Stepper stepper(problem.space, problem.nl, scheme);
  const bool postprocess = scheme.has_postprocessor();
  const std::size_t modes = problem.space.modes();
  const auto samples = static_cast<std::int64_t>(run.samples);
  std::vector<double> out(run.samples);

#pragma omp parallel
  {
    auto ws = stepper.workspace();
    std::vector<double> y(modes), observed(modes);
#pragma omp for schedule(dynamic, 256)
    for (std::int64_t m = 0; m < samples; ++m) {
      NoiseStream stream{run.seed, run.offset + static_cast<std::uint64_t>(m), 0};
      std::fill(y.begin(), y.end(), 0.0);
      bool diverged = false;
      for (std::uint64_t n = 0; n < n_steps; ++n) {
        stream.next(ws.xi);
        stepper.scale_noise(ws.xi, ws.dw);
        stepper.step(y, ws.dw, ws);
        if (!finite(y)) {
          diverged = true;
          break;
        }
      }
      if (diverged) {
        out[m] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      if (postprocess) {
        stream.next(ws.xi);
        stepper.scale_noise(ws.xi, ws.dw);
        stepper.postprocess(y, ws.dw, observed);
        out[m] = problem.phi.value(observed);
      } else {
        out[m] = problem.phi.value(y);
      }
    }
  }
  return out;
}

}  // namespace pspde
