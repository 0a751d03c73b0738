#include "grushin/cli/run.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <variant>

#include "grushin/asymptotics.hpp"
#include "grushin/density.hpp"
#include "grushin/variational.hpp"

#ifndef GRUSHIN_VERSION
#define GRUSHIN_VERSION "0.0.0"
#endif

namespace grushin::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

using Cell = std::variant<double, std::int64_t, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// Scalars for summary.json, in insertion order.
using Summary = std::vector<std::pair<std::string, Cell>>;

std::string csv_cell(const Cell& cell) {
  if (const double* d = std::get_if<double>(&cell)) {
    if (std::isnan(*d)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << *d;
    return os.str();
  }
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const bool* b = std::get_if<bool>(&cell)) return *b ? "true" : "false";
  const std::string& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

ordered_json json_cell(const Cell& cell) {
  return std::visit([](const auto& v) -> ordered_json {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, double>) {
      if (!std::isfinite(v)) return nullptr;
    }
    return v;
  }, cell);
}

std::string render(const Table& table, OutputFormat format) {
  if (format == OutputFormat::csv) {
    std::string out;
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      out += (j ? "," : "") + table.columns[j];
    }
    out += "\r\n";
    for (const auto& row : table.rows) {
      for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + csv_cell(row[j]);
      out += "\r\n";
    }
    return out;
  }
  ordered_json arr = ordered_json::array();
  for (const auto& row : table.rows) {
    ordered_json obj = ordered_json::object();
    for (std::size_t j = 0; j < row.size(); ++j) obj[table.columns[j]] = json_cell(row[j]);
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

std::string render(const Summary& summary) {
  ordered_json obj = ordered_json::object();
  for (const auto& [key, value] : summary) obj[key] = json_cell(value);
  return obj.dump(2) + "\n";
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
}

fs::path fresh_run_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create out-dir " + config.out_dir + ": " + ec.message());
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream stamp;
  stamp << to_string(config.command) << "-" << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  for (int k = 0; k < 10000; ++k) {
    const fs::path dir = fs::path(config.out_dir) / (k == 0 ? stamp.str() : stamp.str() + "-" + std::to_string(k));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw std::runtime_error("cannot create run directory " + dir.string() + ": " + ec.message());
  }
  throw std::runtime_error("no free run directory name under " + config.out_dir);
}

McOptions mc_options(const RunConfig& c) {
  McOptions o;
  o.n_samples = c.n_samples;
  o.grid_n = c.grid_n;
  o.rng = RngStream{c.seed, 0};
  o.workers = c.workers;
  return o;
}

double gap_of(const RunConfig& c) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.eta.size(); ++k) s += (c.eta[k] - c.y[k]) * (c.eta[k] - c.y[k]);
  return std::sqrt(s);
}

Table path_table(const DiscretePath& h) {
  Table t;
  t.columns.push_back("t");
  for (std::size_t k = 0; k < h.dim(); ++k) t.columns.push_back("h_" + std::to_string(k + 1));
  for (std::size_t i = 0; i < h.nodes(); ++i) {
    std::vector<Cell> row{h.grid().times[i]};
    for (std::size_t k = 0; k < h.dim(); ++k) row.emplace_back(h(i, k));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table report_table(const AsymptoticsReport& report) {
  Table t{{"T", "value", "stderr", "flagged", "tail_ratio"}, {}};
  for (const auto& row : report.rows) {
    t.rows.push_back({row.horizon, row.scaled_value, row.std_error, row.flagged, row.tail_ratio});
  }
  return t;
}

void summarize(Summary& s, const AsymptoticsReport& report) {
  s.emplace_back("fitted_limit", report.fitted_limit);
  s.emplace_back("fitted_limit_raw", report.fitted_limit_raw);
  s.emplace_back("fit_method", std::string(to_string(report.fit_method)));
  s.emplace_back("fit_residual", report.fit_residual);
  s.emplace_back("theory_value", report.theory_value);
  s.emplace_back("theory_stderr", report.theory_std_error);
  s.emplace_back("alt_theory_value", report.alt_theory_value);
}

struct Outputs {
  Table results;
  Summary summary;
  std::vector<std::pair<std::string, Table>> extras;
  bool passes = true;
};

Outputs run_density(const RunConfig& c) {
  Outputs o;
  const EndPoint from{c.x, c.y}, to{c.xi, c.eta};
  const double gap = gap_of(c);
  const bool shifted = gap > 0.0 && (c.shift == ShiftPolicy::on ||
                                     (c.shift == ShiftPolicy::automatic && c.horizon < 0.1));
  DensityEstimate est;
  if (shifted) {
    const RateResult rate = minimize_phi({c.x, c.xi, gap, c.params.gamma, c.var_grid});
    const DiscretePath shift = importance_shift(rate.minimizer, c.horizon, c.formula, c.grid_n);
    est = estimate_density(c.params, c.horizon, from, to, mc_options(c), c.formula, &shift);
  } else {
    est = estimate_density(c.params, c.horizon, from, to, mc_options(c), c.formula);
  }
  o.results = {{"T", "value", "stderr", "n_samples", "log_value", "relative_stderr", "tail_ratio"},
               {{est.horizon, est.mean, est.std_error, static_cast<std::int64_t>(est.n_samples),
                 est.log_mean, est.relative_stderr, est.tail_ratio}}};
  o.summary = {{"command", std::string("density")},
               {"value", est.mean},
               {"stderr", est.std_error},
               {"log_value", est.log_mean},
               {"formula", std::string(to_string(est.formula))},
               {"shifted", shifted},
               {"underflow", est.underflow}};
  return o;
}

Outputs run_rate(const RunConfig& c) {
  Outputs o;
  const RateResult r = minimize_phi({c.x, c.xi, c.a, c.params.gamma, c.var_grid});
  o.results = {{"a", "m", "iterations", "grad_norm", "converged"},
               {{c.a, r.m, static_cast<std::int64_t>(r.iterations), r.grad_norm, r.converged}}};
  o.summary = {{"command", std::string("rate")}, {"a", c.a}, {"m", r.m},
               {"iterations", static_cast<std::int64_t>(r.iterations)},
               {"grad_norm", r.grad_norm}, {"converged", r.converged}};
  o.extras.emplace_back("minimizer", path_table(r.minimizer));
  o.passes = r.converged;
  return o;
}

Outputs run_cgamma(const RunConfig& c) {
  Outputs o;
  const CGammaResult r = c_gamma_solve(c.params.gamma, c.var_grid);
  const double bound = c_gamma_upper_bound(c.params.gamma);
  const double k = asymptotic_rate_constant(c.params.gamma, r.value);
  o.results = {{"gamma", "c_gamma", "upper_bound", "rate_constant", "signed_limit", "iterations",
                "converged"},
               {{c.params.gamma, r.value, bound, k, -0.5 * k,
                 static_cast<std::int64_t>(r.iterations), r.converged}}};
  o.summary = {{"command", std::string("cgamma")}, {"c_gamma", r.value}, {"upper_bound", bound},
               {"rate_constant", k}, {"signed_limit", -0.5 * k}, {"display_limit", k},
               {"converged", r.converged}};
  o.extras.emplace_back("maximizer", path_table(r.maximizer));
  o.passes = r.converged && r.value <= bound;
  return o;
}

Outputs run_on_diag(const RunConfig& c) {
  Outputs o;
  const auto report = on_diagonal_experiment(c.params, c.x, c.horizons, mc_options(c));
  o.results = report_table(report);
  o.summary = {{"command", std::string("on-diag")}};
  summarize(o.summary, report);
  o.passes = report.passes;
  return o;
}

Outputs run_off_diag(const RunConfig& c) {
  Outputs o;
  OffDiagonalOptions off;
  off.shift = c.shift;
  off.var_grid = c.var_grid;
  const auto report =
      off_diagonal_experiment(c.params, {c.x, c.y}, {c.xi, c.eta}, c.horizons, mc_options(c), off);
  o.results = report_table(report);
  o.summary = {{"command", std::string("off-diag")}, {"gap", gap_of(c)}};
  summarize(o.summary, report);
  o.passes = report.passes;
  return o;
}

Outputs run_degenerate(const RunConfig& c) {
  Outputs o;
  o.summary = {{"command", std::string("degenerate")}};
  double delta0 = 0.0;
  if (c.delta0) {
    delta0 = *c.delta0;
    o.summary.emplace_back("delta0_source", std::string("given"));
  } else {
    McOptions d0 = mc_options(c);
    d0.n_samples = c.delta0_samples;
    d0.grid_n = c.delta0_grid;
    d0.rng = d0.rng.substream(std::uint64_t{1} << 48);
    const Delta0Estimate est = estimate_delta0(c.params.d, d0);
    delta0 = est.delta;
    o.summary.emplace_back("delta0_source", std::string("estimated"));
    o.summary.emplace_back("delta0_low_confidence", est.low_confidence);
    if (!(delta0 > 0.0)) throw std::runtime_error("delta0 estimate is not positive; pass --delta0");
  }
  const double gap = gap_of(c);
  const auto rep = degenerate_experiment(c.params, gap, delta0, c.horizons, mc_options(c), c.var_grid);
  o.results = report_table(rep.trend);
  o.summary.emplace_back("gap", gap);
  o.summary.emplace_back("delta0", rep.bounds.delta0_est);
  o.summary.emplace_back("eps_delta0", rep.bounds.eps_delta0);
  o.summary.emplace_back("lower_const", rep.bounds.lower_const);
  o.summary.emplace_back("upper_const", rep.bounds.upper_const);
  o.summary.emplace_back("lower_bound", rep.bounds.lower_bound);
  o.summary.emplace_back("upper_bound", rep.bounds.upper_bound);
  summarize(o.summary, rep.trend);
  o.passes = rep.trend.passes;
  return o;
}

Outputs run_taylor(const RunConfig& c) {
  Outputs o;
  const TaylorFit fit = taylor_experiment(c.params, c.x, c.xi, c.a_list, c.max_order, mc_options(c));
  o.results.columns = {"a", "f_plus", "f_minus", "stderr"};
  for (const auto& row : fit.rows) o.results.rows.push_back({row.a, row.f_plus, row.f_minus, row.std_error});
  Table coeffs{{"order", "coefficient", "stderr"}, {}};
  for (const auto& k : fit.even_coeffs) {
    coeffs.rows.push_back({static_cast<std::int64_t>(k.order), k.coefficient, k.std_error});
  }
  o.extras.emplace_back("coefficients", std::move(coeffs));
  o.summary = {{"command", std::string("taylor")}, {"f0_exact", fit.f0_exact},
               {"max_order", static_cast<std::int64_t>(fit.max_order)},
               {"evenness_residual", fit.evenness_residual}};
  o.passes = fit.evenness_residual == 0.0;
  return o;
}

Outputs run_bounds(const RunConfig& c) {
  Outputs o;
  const MaxProbReport rep = max_prob_check(c.params.d, c.horizon, c.zeta, c.a_list, mc_options(c));
  o.results.columns = {"a", "n", "p_ge", "ge_lo", "ge_hi", "exact_ge", "upper_ge", "p_band",
                       "band_lo", "band_hi", "lower_band", "p_le", "le_lo", "le_hi", "upper_le",
                       "passes"};
  for (const auto& r : rep.rows) {
    o.results.rows.push_back({r.a, static_cast<std::int64_t>(r.n), r.p_ge, r.ge_lo, r.ge_hi,
                              r.exact_ge, r.upper_ge, r.p_band, r.band_lo, r.band_hi, r.lower_band,
                              r.p_le, r.le_lo, r.le_hi, r.upper_le, r.passes});
  }
  o.summary = {{"command", std::string("bounds-check")}, {"passes", rep.passes}};
  o.passes = rep.passes;
  return o;
}

Outputs dispatch(const RunConfig& c) {
  switch (c.command) {
    case Command::density: return run_density(c);
    case Command::rate: return run_rate(c);
    case Command::cgamma: return run_cgamma(c);
    case Command::on_diag: return run_on_diag(c);
    case Command::off_diag: return run_off_diag(c);
    case Command::degenerate: return run_degenerate(c);
    case Command::taylor: return run_taylor(c);
    case Command::bounds_check: return run_bounds(c);
  }
  throw std::logic_error("unhandled command");
}

ordered_json config_echo(const RunConfig& c) {
  ordered_json o = ordered_json::object();
  o["command"] = to_string(c.command);
  o["gamma"] = c.params.gamma;
  o["d"] = c.params.d;
  o["dprime"] = c.params.d_prime;
  o["x"] = c.x;
  o["xi"] = c.xi;
  o["y"] = c.y;
  o["eta"] = c.eta;
  o["zeta"] = c.zeta;
  o["t"] = c.horizon;
  o["t_list"] = c.horizons;
  o["a"] = c.a;
  o["a_list"] = c.a_list;
  o["samples"] = c.n_samples;
  o["grid"] = c.grid_n;
  o["var_grid"] = c.var_grid;
  o["seed"] = c.seed;
  o["workers"] = c.workers;
  o["shift"] = to_string(c.shift);
  o["formula"] = to_string(c.formula);
  o["max_order"] = c.max_order;
  if (c.delta0) {
    o["delta0"] = *c.delta0;
  } else {
    o["delta0"] = nullptr;
  }
  o["delta0_samples"] = c.delta0_samples;
  o["delta0_grid"] = c.delta0_grid;
  o["out_dir"] = c.out_dir;
  o["format"] = to_string(c.format);
  return o;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return os.str();
}

RunManifest run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig c = config;
  validate(c);
  Outputs outputs = dispatch(c);
  outputs.summary.emplace_back("passes", outputs.passes);

  RunManifest manifest;
  manifest.run_dir = fresh_run_dir(c);
  const std::string ext = c.format == OutputFormat::csv ? ".csv" : ".json";
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("results" + ext, render(outputs.results, c.format));
  for (const auto& [name, table] : outputs.extras) files.emplace_back(name + ext, render(table, c.format));
  files.emplace_back("summary.json", render(outputs.summary));

  std::string digest_input;
  for (const auto& [name, content] : files) {
    write_atomic(manifest.run_dir / name, content);
    OutputFile f{name, sha256_hex(content), content.size()};
    digest_input += f.name + ":" + f.sha256 + "\n";
    manifest.files.push_back(std::move(f));
  }
  manifest.output_digest = sha256_hex(digest_input);
  manifest.passes = outputs.passes;
  manifest.exit_code = outputs.passes ? 0 : 2;
  manifest.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ordered_json m = ordered_json::object();
  m["tool"] = "grushin";
  m["version"] = GRUSHIN_VERSION;
  m["command"] = to_string(c.command);
  m["config"] = config_echo(c);
  m["wall_time_seconds"] = manifest.wall_time_seconds;
  m["passes"] = manifest.passes;
  m["exit_code"] = manifest.exit_code;
  ordered_json listed = ordered_json::array();
  for (const auto& f : manifest.files) {
    listed.push_back({{"path", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  m["files"] = std::move(listed);
  m["output_digest"] = manifest.output_digest;
  manifest.manifest_path = manifest.run_dir / "manifest.json";
  write_atomic(manifest.manifest_path, m.dump(2) + "\n");
  return manifest;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage();
    return 1;
  }
  if (args.front() == "--help" || args.front() == "-h" || args.front() == "help") {
    out << usage();
    return 0;
  }
  if (args.front() == "--version") {
    out << "grushin " << GRUSHIN_VERSION << "\n";
    return 0;
  }
  try {
    const RunConfig config = parse_args(args);
    const RunManifest manifest = run(config);
    out << manifest.run_dir.string() << "\n";
    out << "passes=" << (manifest.passes ? "true" : "false")
        << " digest=" << manifest.output_digest << "\n";
    return manifest.exit_code;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace grushin::cli
