#pragma once

// Shared plumbing for the xarb subcommands: global flags, staged output
// directories and the run manifest.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xarb/chaindata.hpp"

namespace xarb::cli {

inline constexpr const char* kToolVersion = XARB_VERSION;

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool strict = false;
  std::vector<std::string> argv;

  /// --threads, else XARB_THREADS, else 0 (all hardware threads).
  unsigned resolved_threads() const;
  chain::LoadOptions load_options() const { return {strict}; }
};

/// Accumulates what the manifest records about a run.
struct RunInfo {
  explicit RunInfo(std::string sub) : subcommand(std::move(sub)) {}

  std::string subcommand;
  std::map<std::string, std::string> configs;  // role -> path
  std::map<std::string, std::string> inputs;   // role -> path
  std::optional<std::uint64_t> seed;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();
};

/// Outputs are written into a hidden staging directory next to `out_dir` and
/// moved into place by commit(), together with manifest.json. A stage that is
/// never committed is deleted, so a failed run leaves no partial outputs.
class OutputStage {
 public:
  explicit OutputStage(std::filesystem::path out_dir);
  ~OutputStage();
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  /// Path to write `name` to; registers it as an output.
  std::filesystem::path file(const std::string& name);
  void write_text(const std::string& name, const std::string& text);
  void commit(const RunInfo& info, const Globals& globals);

  const std::filesystem::path& out_dir() const { return out_dir_; }
  /// The staging directory, for writers that take a directory.
  const std::filesystem::path& stage_dir() const { return stage_; }

 private:
  std::filesystem::path out_dir_;
  std::filesystem::path stage_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::string iso_utc(std::chrono::system_clock::time_point t);

void add_model_commands(CLI::App& app, Globals& g);
void add_pipeline_commands(CLI::App& app, Globals& g);
void add_stats_commands(CLI::App& app, Globals& g);

}  // namespace xarb::cli
