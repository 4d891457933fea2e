#include <limits>
#include <vector>

#include "pspde/harness.hpp"
#include "pspde/philox.hpp"

namespace pspde {

std::vector<double> trajectory_observables_serial(const EnsembleProblem& problem,
                                                  const SchemeSpec& scheme,
                                                  const EnsembleRun& run) {
  scheme.validate();
  if (run.samples == 0) throw ConfigError("ensemble needs at least one sample");
  const std::uint64_t n_steps = steps_for_horizon(problem.T, scheme.dt);
  const FieldState origin(problem.space.modes());
  std::vector<double> out(run.samples);
  for (std::uint64_t m = 0; m < run.samples; ++m) {
    NoiseStream stream{run.seed, run.offset + m, 0};
    const auto result = run_trajectory(problem.space, problem.nl, scheme, origin, stream, n_steps);
    if (result.diverged) {
      out[m] = std::numeric_limits<double>::quiet_NaN();
    } else if (result.output.postprocessed_state) {
      out[m] = problem.phi.value(result.output.postprocessed_state->span());
    } else {
      out[m] = problem.phi.value(result.output.next_state.span());
    }
  }
  return out;
}

}  // namespace pspde
