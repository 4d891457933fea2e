#include "pspde/run_config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace pspde {

SpectralSpace make_space(const RunConfig& config) {
  if (config.flavor == "fd") {
    if (config.modes) return SpectralSpace::finite_difference_modes(*config.modes);
    return SpectralSpace::finite_difference(config.dx);
  }
  if (config.flavor == "spectral") {
    if (config.modes) return SpectralSpace::spectral(*config.modes);
    const double k = 1.0 / config.dx - 1.0;
    if (!(k >= 1.0)) throw ConfigError("spectral flavor: dx too large for a single mode");
    return SpectralSpace::spectral(static_cast<std::size_t>(std::lround(k)));
  }
  throw ConfigError("unknown flavor '" + config.flavor + "'; expected fd or spectral");
}

Nonlinearity make_nonlinearity(const RunConfig& config) {
  return Nonlinearity::by_name(config.nonlinearity);
}

TestFunction make_phi(const RunConfig& config) {
  for (auto kind : {TestFunctionKind::ExpNorm, TestFunctionKind::Quadratic,
                    TestFunctionKind::Linear, TestFunctionKind::Constant}) {
    if (config.phi == to_string(kind)) return TestFunction(kind);
  }
  throw ConfigError("unknown phi '" + config.phi +
                    "'; expected expnorm, quadratic, linear or constant");
}

SchemeSpec make_scheme(const RunConfig& config, double dt) {
  const double alpha = config.alphas.empty() ? 1.0 : config.alphas.front();
  return SchemeSpec::from_name(config.scheme, dt, config.theta, alpha);
}

double horizon(const RunConfig& config, double dt) {
  if (config.steps) return static_cast<double>(*config.steps) * dt;
  return config.T;
}

ReferenceSpec make_reference(const RunConfig& config) {
  ReferenceSpec spec;
  spec.dt = config.ref_dt;
  spec.samples = config.ref_samples;
  if (config.reference == "analytic") {
    spec.mode = ReferenceMode::Analytic;
  } else if (config.reference == "fine-lm") {
    spec.mode = ReferenceMode::FineLM;
  } else if (config.reference == "fine-pli") {
    spec.mode = ReferenceMode::FinePLI;
    spec.alpha = 1.0;
  } else {
    throw ConfigError("unknown reference '" + config.reference +
                      "'; expected analytic, fine-lm or fine-pli");
  }
  return spec;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const char* first = item.data();
    const char* last = item.data() + item.size();
    while (first != last && *first == ' ') ++first;
    while (last != first && last[-1] == ' ') --last;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) {
      throw ConfigError("cannot parse '" + item + "' as a number in list '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

}  // namespace pspde
