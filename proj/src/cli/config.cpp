#include "grushin/cli/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace grushin::cli {

namespace {

struct CommandName {
  Command command;
  const char* name;
};

constexpr CommandName kCommands[] = {
    {Command::density, "density"},   {Command::rate, "rate"},
    {Command::cgamma, "cgamma"},     {Command::on_diag, "on-diag"},
    {Command::off_diag, "off-diag"}, {Command::degenerate, "degenerate"},
    {Command::taylor, "taylor"},     {Command::bounds_check, "bounds-check"},
};

// Flag names, also the keys of the config file.
const std::vector<std::string> kKeys = {
    "gamma", "d", "dprime", "x", "xi", "y", "eta", "zeta", "T", "T-list", "a", "a-list",
    "samples", "grid", "var-grid", "seed", "workers", "shift", "formula", "max-order",
    "delta0", "delta0-samples", "delta0-grid", "out-dir", "format"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(field + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::vector<double> to_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(field, item));
  if (out.empty()) throw ConfigError(field + ": expected a comma-separated list of numbers");
  return out;
}

std::uint64_t to_count(const std::string& field, const std::string& text) {
  const double v = to_double(field, text);
  if (v < 0.0 || v != std::floor(v) || v > 9.0e15) {
    throw ConfigError(field + ": expected a nonnegative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::uint64_t to_seed(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("seed: expected a nonnegative integer, got '" + text + "'");
  }
  errno = 0;
  const unsigned long long v = std::strtoull(t.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError("seed: out of range");
  return v;
}

// Shortest text that reads back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

/// "key = value" lines to ["--key=value", ...]; a `command` key becomes a positional.
std::vector<std::string> file_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "T-list" || key == "t-list") key = "T-list";
    if (key == "command") {
      out.insert(out.begin(), value);
    } else {
      out.push_back("--" + key + "=" + value);
    }
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_tokens(const std::vector<std::string>& tokens) {
  CLI::App app{"grushin"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::vector<std::string> commands;
  app.add_option("command", commands)->expected(0, -1);
  std::map<std::string, std::string> values;
  for (const auto& key : kKeys) app.add_option("--" + key, values[key]);
  std::string config_path;
  app.add_option("--config", config_path);

  std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  if (!config_path.empty()) {
    throw ConfigError("config: nested --config is not supported");
  }

  RunConfig c;
  if (const char* env = std::getenv("GRUSHIN_OUT_DIR"); env != nullptr && *env != '\0') {
    c.out_dir = env;
  }
  if (commands.empty()) throw ConfigError("command: missing (one of density, rate, cgamma, on-diag, off-diag, degenerate, taylor, bounds-check)");
  if (commands.size() > 1) throw ConfigError("command: unexpected argument '" + commands[1] + "'");
  c.command = parse_command(commands.front());

  auto has = [&](const char* key) { return app.count(std::string("--") + key) > 0; };
  auto get = [&](const char* key) { return values.at(key); };
  if (has("gamma")) c.params.gamma = to_double("gamma", get("gamma"));
  if (has("d")) c.params.d = to_count("d", get("d"));
  if (has("dprime")) c.params.d_prime = to_count("dprime", get("dprime"));
  if (has("x")) c.x = to_list("x", get("x"));
  if (has("xi")) c.xi = to_list("xi", get("xi"));
  if (has("y")) c.y = to_list("y", get("y"));
  if (has("eta")) c.eta = to_list("eta", get("eta"));
  if (has("zeta")) c.zeta = to_list("zeta", get("zeta"));
  if (has("T")) c.horizon = to_double("T", get("T"));
  if (has("T-list")) c.horizons = to_list("T-list", get("T-list"));
  if (has("a")) c.a = to_double("a", get("a"));
  if (has("a-list")) c.a_list = to_list("a-list", get("a-list"));
  if (has("samples")) c.n_samples = to_count("samples", get("samples"));
  if (has("grid")) c.grid_n = to_count("grid", get("grid"));
  if (has("var-grid")) c.var_grid = to_count("var-grid", get("var-grid"));
  if (has("seed")) c.seed = to_seed(get("seed"));
  if (has("workers")) {
    const auto w = to_count("workers", get("workers"));
    if (w > 1024) throw ConfigError("workers: at most 1024");
    c.workers = static_cast<unsigned>(w);
  }
  if (has("shift")) {
    try {
      c.shift = parse_shift_policy(trim(get("shift")));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (has("formula")) {
    const std::string f = trim(get("formula"));
    if (f == "horizon-T" || f == "horizon-t") {
      c.formula = DensityFormula::horizon_t;
    } else if (f == "unit-horizon") {
      c.formula = DensityFormula::unit_horizon;
    } else {
      throw ConfigError("formula: expected horizon-T or unit-horizon, got '" + f + "'");
    }
  }
  if (has("max-order")) c.max_order = static_cast<int>(to_count("max-order", get("max-order")));
  if (has("delta0")) {
    const std::string v = trim(get("delta0"));
    if (v == "auto" || v.empty()) {
      c.delta0.reset();
    } else {
      c.delta0 = to_double("delta0", v);
    }
  }
  if (has("delta0-samples")) c.delta0_samples = to_count("delta0-samples", get("delta0-samples"));
  if (has("delta0-grid")) c.delta0_grid = to_count("delta0-grid", get("delta0-grid"));
  if (has("out-dir")) c.out_dir = trim(get("out-dir"));
  if (has("format")) {
    const std::string f = trim(get("format"));
    if (f == "csv") {
      c.format = OutputFormat::csv;
    } else if (f == "json") {
      c.format = OutputFormat::json;
    } else {
      throw ConfigError("format: expected csv or json, got '" + f + "'");
    }
  }
  validate(c);
  return c;
}

void broadcast(std::vector<double>& v, std::size_t dim, const char* field) {
  if (v.size() == 1 && dim > 1) v.assign(dim, v.front());
  if (v.size() != dim) {
    throw ConfigError(std::string(field) + ": expected 1 or " + std::to_string(dim) +
                      " components, got " + std::to_string(v.size()));
  }
}

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double e) { return e == 0.0; });
}

}  // namespace

const char* to_string(Command command) {
  for (const auto& c : kCommands) {
    if (c.command == command) return c.name;
  }
  return "unknown";
}

Command parse_command(const std::string& text) {
  for (const auto& c : kCommands) {
    if (text == c.name) return c.command;
  }
  throw ConfigError("command: unknown command '" + text + "'");
}

const char* to_string(OutputFormat format) { return format == OutputFormat::csv ? "csv" : "json"; }

void validate(RunConfig& c) {
  try {
    c.params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  broadcast(c.x, c.params.d, "x");
  broadcast(c.xi, c.params.d, "xi");
  broadcast(c.zeta, c.params.d, "zeta");
  broadcast(c.y, c.params.d_prime, "y");
  broadcast(c.eta, c.params.d_prime, "eta");
  if (!(c.horizon > 0.0)) throw ConfigError("T must be positive, got " + format_double(c.horizon));
  if (c.n_samples < 1) throw ConfigError("samples must be >= 1");
  if (c.grid_n < 1) throw ConfigError("grid must be >= 1");
  if (c.var_grid < 2) throw ConfigError("var-grid must be >= 2");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.out_dir.empty()) throw ConfigError("out-dir must not be empty");

  switch (c.command) {
    case Command::density:
      break;
    case Command::rate:
      if (!(c.a >= 0.0)) throw ConfigError("a must be nonnegative");
      break;
    case Command::cgamma:
      if (c.var_grid < 8) throw ConfigError("var-grid must be >= 8 for cgamma");
      break;
    case Command::on_diag:
    case Command::off_diag:
    case Command::degenerate:
      if (c.horizons.empty()) throw ConfigError("T-list must not be empty");
      for (double t : c.horizons) {
        if (!(t > 0.0)) throw ConfigError("T-list entries must be positive, got " + format_double(t));
      }
      if (c.command == Command::off_diag && all_zero(c.x) && all_zero(c.xi)) {
        throw ConfigError("x, xi: off-diag needs (x, xi) != (0, 0); use degenerate");
      }
      if (c.command == Command::degenerate) {
        if (c.delta0 && !(*c.delta0 > 0.0)) throw ConfigError("delta0 must be positive");
        if (!c.delta0 && c.delta0_samples < 10000) {
          throw ConfigError("delta0-samples must be >= 10000");
        }
        if (c.delta0_grid < 2) throw ConfigError("delta0-grid must be >= 2");
      }
      break;
    case Command::taylor: {
      if (all_zero(c.x) && all_zero(c.xi)) throw ConfigError("x, xi: taylor needs (x, xi) != (0, 0)");
      if (c.max_order < 2) throw ConfigError("max-order must be >= 2");
      const int cap = taylor_order_cap(c.params.gamma);
      if (cap >= 0 && c.max_order >= cap) {
        throw ConfigError("max-order must be below m(gamma) = " + std::to_string(cap));
      }
      if (c.a_list.size() < static_cast<std::size_t>(c.max_order / 2)) {
        throw ConfigError("a-list needs at least max-order / 2 entries");
      }
      for (double a : c.a_list) {
        if (!(a >= 0.0)) throw ConfigError("a-list entries must be nonnegative");
      }
      break;
    }
    case Command::bounds_check:
      for (double a : c.a_list) {
        if (!(a > 0.0)) throw ConfigError("a-list entries must be positive");
      }
      break;
  }
}

RunConfig parse_args(const std::vector<std::string>& args) {
  // Pull --config out first so its contents can be placed before the flags.
  std::vector<std::string> rest;
  std::string text;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("config: missing file name");
      text += read_file(args[++i]) + "\n";
    } else if (arg.rfind("--config=", 0) == 0) {
      text += read_file(arg.substr(9)) + "\n";
    } else {
      rest.push_back(arg);
    }
  }
  return parse_config_text(text, rest);
}

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  std::vector<std::string> tokens = file_tokens(text);
  // The command-line command beats the one in the file.
  std::vector<std::string> flags;
  std::vector<std::string> positional;
  for (const auto& t : overrides) {
    if (positional.empty() && flags.empty() && !t.empty() && t[0] != '-') {
      positional.push_back(t);
    } else {
      flags.push_back(t);
    }
  }
  std::vector<std::string> all;
  std::vector<std::string> file_flags;
  for (const auto& t : tokens) {
    if (!t.empty() && t[0] == '-') {
      file_flags.push_back(t);
    } else if (positional.empty()) {
      positional.push_back(t);
    }
  }
  all.insert(all.end(), positional.begin(), positional.end());
  all.insert(all.end(), file_flags.begin(), file_flags.end());
  all.insert(all.end(), flags.begin(), flags.end());
  return parse_tokens(all);
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream os;
  os << "command = " << to_string(c.command) << "\n";
  os << "gamma = " << format_double(c.params.gamma) << "\n";
  os << "d = " << c.params.d << "\n";
  os << "dprime = " << c.params.d_prime << "\n";
  os << "x = " << format_list(c.x) << "\n";
  os << "xi = " << format_list(c.xi) << "\n";
  os << "y = " << format_list(c.y) << "\n";
  os << "eta = " << format_list(c.eta) << "\n";
  os << "zeta = " << format_list(c.zeta) << "\n";
  os << "T = " << format_double(c.horizon) << "\n";
  os << "T-list = " << format_list(c.horizons) << "\n";
  os << "a = " << format_double(c.a) << "\n";
  os << "a-list = " << format_list(c.a_list) << "\n";
  os << "samples = " << c.n_samples << "\n";
  os << "grid = " << c.grid_n << "\n";
  os << "var-grid = " << c.var_grid << "\n";
  os << "seed = " << c.seed << "\n";
  os << "workers = " << c.workers << "\n";
  os << "shift = " << to_string(c.shift) << "\n";
  os << "formula = " << to_string(c.formula) << "\n";
  os << "max-order = " << c.max_order << "\n";
  os << "delta0 = " << (c.delta0 ? format_double(*c.delta0) : std::string("auto")) << "\n";
  os << "delta0-samples = " << c.delta0_samples << "\n";
  os << "delta0-grid = " << c.delta0_grid << "\n";
  os << "out-dir = " << c.out_dir << "\n";
  os << "format = " << to_string(c.format) << "\n";
  return os.str();
}

std::string usage() {
  return R"(usage: grushin COMMAND [--flag value ...] [--config FILE]

commands:
  density       Monte Carlo estimate of p_T((x,y),(xi,eta))
  rate          rate function m(x, xi, a) and its minimising path
  cgamma        sharp constant c_gamma and the large-gap rate constant
  on-diag       scaled on-diagonal densities over T-list
  off-diag      T log p_T over T-list with an extrapolated limit
  degenerate    bounds on the degenerate axis x = xi = 0
  taylor        even expansion of f_{x,xi}(a)
  bounds-check  bridge-maximum probabilities against their bounds

flags:
  --gamma G --d N --dprime N           operator parameters
  --x --xi --y --eta --zeta V          comma-separated vectors (one value broadcasts)
  --T T --T-list T1,T2,...             horizons
  --a A --a-list A1,A2,...             gap |eta - y| or Taylor/bound levels
  --samples N --grid N --var-grid N    Monte Carlo and path resolutions
  --seed S --workers N                 reproducible parallel sampling
  --shift on|off|auto                  importance shift (auto: T < 0.1)
  --formula horizon-T|unit-horizon     density estimator
  --max-order K                        Taylor fit order (even)
  --delta0 D|auto --delta0-samples N --delta0-grid N
  --out-dir DIR                        default $GRUSHIN_OUT_DIR or ./runs
  --format csv|json
  --config FILE                        key = value lines, flags override

exit status: 0 pass, 2 acceptance predicate failed, 1 error
)";
}

}  // namespace grushin::cli
