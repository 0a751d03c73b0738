#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grushin/cli/config.hpp"
#include "grushin/cli/run.hpp"

using namespace grushin;
using namespace grushin::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grushin-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(GRUSHIN_CLI_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse the documented density example") {
  const auto c = parse_args({"density", "--gamma", "1", "--d", "1", "--dprime", "1", "--x", "1",
                             "--xi", "1", "--y", "0", "--eta", "0", "--T", "0.5", "--samples",
                             "100000", "--grid", "256", "--seed", "42"});
  CHECK(c.command == Command::density);
  CHECK(c.params.gamma == 1.0);
  CHECK(c.x == std::vector<double>{1.0});
  CHECK(c.horizon == 0.5);
  CHECK(c.n_samples == 100000);
  CHECK(c.grid_n == 256);
  CHECK(c.seed == 42);
  RunConfig v = c;
  CHECK_NOTHROW(validate(v));
}

TEST_CASE("errors name the field") {
  auto fails_with = [](std::vector<std::string> args, const std::string& field) {
    try {
      RunConfig c = parse_args(args);
      validate(c);
    } catch (const ConfigError& e) {
      return std::string(e.what()).find(field) != std::string::npos;
    } catch (const std::invalid_argument& e) {
      return std::string(e.what()).find(field) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_with({"density", "--gamma", "0"}, "gamma"));
  CHECK(fails_with({"density", "--T", "-1"}, "T"));
  CHECK(fails_with({"density", "--samples", "abc"}, "samples"));
  CHECK(fails_with({"density", "--d", "2", "--x", "1,2,3"}, "x"));
  CHECK(fails_with({"off-diag", "--T-list", "0.1,-1"}, "T"));
  CHECK(fails_with({"density", "--format", "xml"}, "format"));
  CHECK(fails_with({"nonsense"}, "command"));
  CHECK_THROWS_AS(parse_args({"density", "--bogus", "1"}), std::invalid_argument);
}

TEST_CASE("validate broadcasts single values") {
  RunConfig c = parse_args({"density", "--d", "3", "--dprime", "2", "--x", "0.5", "--eta", "1"});
  validate(c);
  CHECK(c.x == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(c.eta == std::vector<double>{1.0, 1.0});
  CHECK(c.zeta.size() == 3);
}

TEST_CASE("config text round trip") {
  RunConfig c;
  c.command = Command::off_diag;
  c.params = {2, 3, 0.7};
  c.x = {0.1, -1.0 / 3.0};
  c.xi = {1e-17, 2.5};
  c.eta = {0.3, 0.2, 0.1};
  c.horizons = {0.2, 0.1, 0.05};
  c.a_list = {0.5};
  c.n_samples = 1234;
  c.seed = 18446744073709551615ull;
  c.workers = 3;
  c.shift = ShiftPolicy::on;
  c.formula = DensityFormula::unit_horizon;
  c.delta0 = 0.123456789012345678;
  c.out_dir = "/tmp/some where";
  c.format = OutputFormat::json;
  validate(c);
  CHECK(parse_config_text(emit_config(c)) == c);
  RunConfig d;
  validate(d);
  CHECK(parse_config_text(emit_config(d)) == d);
}

TEST_CASE("file values, comments and flag overrides") {
  const std::string text =
      "# a comment\n"
      "command = rate\n"
      "gamma = 2   # trailing\n"
      "\n"
      "a = 3\n"
      "seed = 7\n";
  const auto c = parse_config_text(text, {"--a", "5"});
  CHECK(c.command == Command::rate);
  CHECK(c.params.gamma == 2.0);
  CHECK(c.a == 5.0);
  CHECK(c.seed == 7);
  CHECK(parse_config_text(text, {"cgamma"}).command == Command::cgamma);

  const fs::path dir = scratch("config");
  std::ofstream(dir / "run.cfg") << text;
  const auto f = parse_args({"--config", (dir / "run.cfg").string(), "--seed", "9"});
  CHECK(f.command == Command::rate);
  CHECK(f.seed == 9);
  CHECK(f.params.gamma == 2.0);
  CHECK_THROWS_AS(parse_args({"rate", "--config", (dir / "missing.cfg").string()}),
                  std::invalid_argument);
}

TEST_CASE("out_dir default comes from the environment") {
  setenv("GRUSHIN_OUT_DIR", "/tmp/from-env", 1);
  CHECK(parse_args({"rate"}).out_dir == "/tmp/from-env");
  CHECK(parse_args({"rate", "--out-dir", "elsewhere"}).out_dir == "elsewhere");
  unsetenv("GRUSHIN_OUT_DIR");
  CHECK(parse_args({"rate"}).out_dir == "runs");
}

TEST_CASE("rate run writes results, summary and manifest") {
  const fs::path dir = scratch("rate");
  RunConfig c = parse_args({"rate", "--x", "0", "--xi", "0", "--a", "1", "--format", "json",
                            "--out-dir", dir.string()});
  const auto m = run(c);
  CHECK(m.exit_code == 0);
  CHECK(fs::exists(m.run_dir / "results.json"));
  CHECK(fs::exists(m.run_dir / "minimizer.json"));
  CHECK(fs::exists(m.manifest_path));
  const auto results = nlohmann::json::parse(slurp(m.run_dir / "results.json"));
  CHECK(results.at(0).at("m").get<double>() == doctest::Approx(2.0 * std::numbers::pi).epsilon(0.01));
  const auto manifest = nlohmann::json::parse(slurp(m.manifest_path));
  CHECK(manifest.at("output_digest") == m.output_digest);
  CHECK(manifest.at("config").at("a").get<double>() == 1.0);
  for (const auto& f : manifest.at("files")) {
    CHECK(sha256_hex(slurp(m.run_dir / f.at("path").get<std::string>())) == f.at("sha256"));
  }
  CHECK(std::distance(fs::directory_iterator(m.run_dir), fs::directory_iterator{}) == 4);
}

TEST_CASE("csv schema and reproducible digests") {
  const fs::path dir = scratch("density");
  const std::vector<std::string> base{"density", "--x", "1", "--xi", "0.5", "--eta", "0.2",
                                      "--T", "0.5", "--samples", "20000", "--grid", "64",
                                      "--out-dir", dir.string()};
  auto with_workers = [&](const char* w) {
    auto args = base;
    args.push_back("--workers");
    args.push_back(w);
    return run(parse_args(args));
  };
  const auto a = with_workers("1");
  const auto b = with_workers("1");
  const auto c = with_workers("4");
  CHECK(a.run_dir != b.run_dir);
  CHECK(a.output_digest == b.output_digest);
  CHECK(a.output_digest == c.output_digest);
  const std::string csv = slurp(a.run_dir / "results.csv");
  CHECK(csv.rfind("T,value,stderr,n_samples,log_value,relative_stderr,tail_ratio\r\n", 0) == 0);
  // Earlier runs are left untouched.
  CHECK(slurp(a.run_dir / "results.csv") == slurp(b.run_dir / "results.csv"));
  auto d_args = base;
  d_args.push_back("--seed");
  d_args.push_back("43");
  CHECK(run(parse_args(d_args)).output_digest != a.output_digest);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("exit codes of the binary") {
  const fs::path dir = scratch("exit");
  const std::string out = " --out-dir " + dir.string();
  CHECK(run_binary("rate --x 0 --xi 0 --a 1" + out) == 0);
  CHECK(run_binary("rate --gamma 0" + out) == 1);
  CHECK(run_binary("density --T -1" + out) == 1);
  CHECK(run_binary("density --bogus 3" + out) == 1);
  CHECK(run_binary("" + out) == 1);
  CHECK(run_binary("--help") == 0);
  // Ran but failed its predicate: far from the small-T limit.
  CHECK(run_binary("on-diag --gamma 2 --x 0.5 --T-list 1 --samples 2000 --grid 32" + out) == 2);
}
