#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "grushin/cli/config.hpp"

namespace grushin::cli {

struct OutputFile {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::filesystem::path run_dir;
  std::filesystem::path manifest_path;
  std::vector<OutputFile> files;
  /// Digest over the (name, sha256) list; equal across reruns of one config.
  std::string output_digest;
  double wall_time_seconds = 0.0;
  bool passes = true;
  /// 0 when the acceptance predicate held (or the command has none), 2 otherwise.
  int exit_code = 0;
};

/// Runs `config` (already validated) into a fresh subdirectory of out_dir:
/// results.{csv,json}, summary.json, command-specific extras, then
/// manifest.json written last via rename.
RunManifest run(const RunConfig& config);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& data);

/// Whole CLI: parse, run, report. Returns the process exit status.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grushin::cli
