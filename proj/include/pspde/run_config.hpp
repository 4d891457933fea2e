#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pspde/analytics.hpp"
#include "pspde/harness.hpp"
#include "pspde/integrators.hpp"
#include "pspde/model.hpp"
#include "pspde/spectral_space.hpp"

namespace pspde {

/// Every knob of a command-line run. Defaults follow the reference setup:
/// finite differences with dx = 0.02, f(x) = -x + cos(x), T = 10,
/// phi = exp(-|y|^2), seed 0.
struct RunConfig {
  std::string flavor = "fd";
  double dx = 0.02;
  std::optional<std::size_t> modes;  // overrides dx when set
  std::string nonlinearity = "cos";
  std::string scheme = "ee";
  double theta = 0.5;
  std::vector<double> alphas{1.0};
  double dt = 0.0625;
  std::vector<double> dts;
  double T = 10.0;
  std::optional<std::uint64_t> steps;  // overrides T with steps * dt
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  std::string phi = "expnorm";
  std::string reference = "fine-lm";
  double ref_dt = 0x1.0p-8;
  std::uint64_t ref_samples = 1000000;
  std::string out;
  bool strict = false;
  std::string filter;
  double generator_trace_factor = 0.5;  // test hook for the verifier
};

SpectralSpace make_space(const RunConfig& config);
Nonlinearity make_nonlinearity(const RunConfig& config);
TestFunction make_phi(const RunConfig& config);
/// Scheme named by the config at step dt, with alpha = alphas.front().
SchemeSpec make_scheme(const RunConfig& config, double dt);
/// Final time for a run at step dt: steps * dt when --steps is given, T otherwise.
double horizon(const RunConfig& config, double dt);
ReferenceSpec make_reference(const RunConfig& config);

/// Parses "0.5,0.25,0.125"; rejects empty and non-numeric entries.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace pspde
