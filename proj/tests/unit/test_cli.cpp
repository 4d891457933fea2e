#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pspde/analytics.hpp"

using namespace pspde;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is folded into the output when asked.
Result run(const std::string& args, bool merge_stderr = false, const std::string& env = "") {
  const std::string cmd = env + " \"" PSPDE_CLI_PATH "\" " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Result r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// Value after "key=" in the "# mean=... stderr=..." summary line.
double summary_value(const std::string& out, const std::string& key) {
  const auto pos = out.find(key + "=");
  REQUIRE(pos != std::string::npos);
  return std::stod(out.substr(pos + key.size() + 1));
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pspde_cli_test_" + name);
}

}  // namespace

TEST_CASE("cli: Crank-Nicolson is exact for the Gaussian case") {
  const auto r = run("sample --scheme cn --dt 0.25 --nonlinearity zero");
  REQUIRE(r.code == 0);
  const double mean = summary_value(r.out, "# mean");
  const double se = summary_value(r.out, "stderr");
  const double exact = gaussian_phi_expectation(SpectralSpace::finite_difference(0.02), 1.0);
  CHECK(std::abs(mean - exact) <= 4.0 * se);
  CHECK(r.out.rfind("scheme,dt,T,samples,seed,estimate,stderr,n_diverged\n", 0) == 0);
}

TEST_CASE("cli: validation errors") {
  const auto ee = run("sample --scheme ee --dt 1.5", true);
  CHECK(ee.code == 2);
  CHECK(ee.out.find("dt <= 1") != std::string::npos);
  CHECK(run("sample --dx 0.03 --steps 1 --samples 1").code == 2);
  CHECK(run("sample --scheme nope").code == 2);
  CHECK(run("sample --alpha 0,1 --scheme pli").code == 2);
  CHECK(run("sample --dt 0.3").code == 2);  // T/dt not integral
  CHECK(run("sweep --dts 0.5,0.25").code == 2);
  CHECK(run("").code == 2);
}

TEST_CASE("cli: zero steps return phi(0)") {
  const auto r = run("sample --steps 0 --samples 5");
  REQUIRE(r.code == 0);
  CHECK(summary_value(r.out, "# mean") == 1.0);
}

TEST_CASE("cli: sweep output is deterministic across runs and thread counts") {
  const std::string args =
      "sweep --dx 0.1 --scheme ee --dts 0.5,0.25,0.125 --samples 2000 --ref-dt 0.0625 "
      "--ref-samples 2000 --seed 3";
  const auto a = run(args, false, "OMP_NUM_THREADS=1");
  const auto b = run(args, false, "OMP_NUM_THREADS=4");
  const auto c = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  CHECK(a.out.find("scheme,dt,estimate,stderr,reference,bias,flagged\n") != std::string::npos);
  CHECK(a.out.find("# fitted_order=") != std::string::npos);
  CHECK(a.out.find('"') == std::string::npos);
  const auto other = run(args + " --seed 4");
  CHECK(other.out != a.out);
}

TEST_CASE("cli: --out writes the CSV to a file") {
  const auto path = temp_path("sample.csv");
  std::filesystem::remove(path);
  const auto r = run("sample --dx 0.1 --samples 100 --out " + path.string());
  REQUIRE(r.code == 0);
  std::ifstream in(path);
  std::stringstream content;
  content << in.rdbuf();
  CHECK(content.str().rfind("scheme,dt,T,samples,seed,estimate,stderr,n_diverged\nee,0.0625,10,100,0,", 0) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("cli: config file with command-line override") {
  const auto path = temp_path("config.ini");
  {
    std::ofstream cfg(path);
    cfg << "dx=0.1\nscheme=lm\ndt=0.25\nsamples=300\nseed=9\n";
  }
  const auto from_file = run("sample --config " + path.string());
  REQUIRE(from_file.code == 0);
  CHECK(from_file.out.find("\nlm,0.25,10,300,9,") != std::string::npos);
  const auto overridden = run("sample --config " + path.string() + " --samples 200");
  CHECK(overridden.out.find("\nlm,0.25,10,200,9,") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("cli: verify filter and mutation hook") {
  const auto g = run("verify --filter gaussian");
  CHECK(g.code == 0);
  CHECK(g.out.find("PASS gaussian.") != std::string::npos);
  CHECK(g.out.find("taylor") == std::string::npos);
  CHECK(g.out.find("FAIL") == std::string::npos);
  const auto bad = run("verify --filter taylor --generator-trace-factor 1.0");
  CHECK(bad.code == 4);
  CHECK(bad.out.find("FAIL taylor.chain") != std::string::npos);
}

TEST_CASE("cli: traj schema") {
  const auto r = run("traj --dx 0.25 --dt 0.5 --steps 3 --scheme ie");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,t,x_1,x_2,x_3");
  std::getline(in, line);
  CHECK(line == "0,0,0,0,0");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("cli: alpha sweep summary") {
  const auto r = run(
      "alpha-sweep --dx 0.1 --alpha 0,1 --dts 0.5,0.25,0.125 --samples 500 --ref-dt 0.0625 "
      "--ref-samples 500");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# alpha=0\n") != std::string::npos);
  CHECK(r.out.find("# alpha=1\n") != std::string::npos);
  CHECK(r.out.find("# summary alpha,fitted_order\n") != std::string::npos);
  CHECK(r.out.find("\npli,0.5,") != std::string::npos);
  CHECK(run("alpha-sweep --dx 0.1 --alpha 0,2 --dts 0.5,0.25,0.125").code == 2);
}
