#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grushin/asymptotics.hpp"
#include "grushin/density.hpp"
#include "grushin/functionals.hpp"

namespace grushin::cli {

enum class Command { density, rate, cgamma, on_diag, off_diag, degenerate, taylor, bounds_check };

const char* to_string(Command command);
Command parse_command(const std::string& text);

enum class OutputFormat { csv, json };

const char* to_string(OutputFormat format);

/// Invalid or inconsistent configuration. The message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  Command command = Command::density;
  GrushinParams params{};
  /// Endpoint vectors; a single value broadcasts to the full dimension.
  std::vector<double> x{0.0};
  std::vector<double> xi{0.0};
  std::vector<double> y{0.0};
  std::vector<double> eta{0.0};
  std::vector<double> zeta{0.0};
  double horizon = 1.0;
  std::vector<double> horizons{0.5, 0.1, 0.02};
  double a = 1.0;
  std::vector<double> a_list{0.1, 0.2, 0.3, 0.4};
  std::size_t n_samples = 100000;
  std::size_t grid_n = 256;
  std::size_t var_grid = 256;
  std::uint64_t seed = 42;
  unsigned workers = 1;
  ShiftPolicy shift = ShiftPolicy::automatic;
  DensityFormula formula = DensityFormula::horizon_t;
  int max_order = 2;
  /// Used by `degenerate`; estimated from bridge samples when absent.
  std::optional<double> delta0;
  std::size_t delta0_samples = 20000;
  std::size_t delta0_grid = 64;
  std::string out_dir = "runs";
  OutputFormat format = OutputFormat::csv;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses `command [--flag value ...]` (argv without the program name).
/// `--config FILE` reads `key = value` lines first; flags override the file.
/// The default out_dir comes from $GRUSHIN_OUT_DIR when set.
RunConfig parse_args(const std::vector<std::string>& args);

/// Parses config-file text, then applies `overrides` (flag arguments).
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});

/// key = value text that parse_config_text maps back to the same RunConfig.
std::string emit_config(const RunConfig& config);

/// Checks every field used by config.command and broadcasts endpoint vectors.
/// Throws ConfigError naming the first offending field.
void validate(RunConfig& config);

/// Usage text for --help.
std::string usage();

}  // namespace grushin::cli
