#pragma once

// Commands behind the vfoa-skf tool. Every command writes a run manifest before
// any result file, and every result file carries the manifest's SHA-256.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <vfoa/dynamics.hpp>
#include <vfoa/em.hpp>
#include <vfoa/synth.hpp>
#include <vfoa/transitions.hpp>

namespace vfoa::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string command;
  std::string command_line;
  std::map<std::string, std::string> config_paths;  // role -> path
  std::optional<std::uint64_t> seed;
  std::string params_file;
  std::string out;
  std::string tool_version = kToolVersion;
  std::string wall_clock;  // UTC start time, ISO 8601
  std::map<std::string, std::string> settings;  // effective option values

  std::string to_json() const;
};

std::string sha256_hex(std::string_view data);
std::string utc_timestamp();
/// Writes `m` to `path` and returns the SHA-256 of the bytes written.
std::string write_manifest(const fs::path& path, const RunManifest& m);

/// VFOA_SKF_THREADS when set to a positive integer, else the hardware concurrency.
int worker_threads();

// ---- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
  std::optional<std::string> name;
  fs::path out;
};

/// Effective configuration: flag over config file over the easy preset.
SynthConfig simulate_config(const SimulateOptions& opts);

struct SimulateOutputs {
  fs::path manifest;
  fs::path scene;
  fs::path recording;
  fs::path truth;
  fs::path params;
  fs::path table;
};

SimulateOutputs cmd_simulate(const SimulateOptions& opts, std::string_view command_line = {});

// ---- learn ------------------------------------------------------------------

struct LearnOptions {
  std::vector<fs::path> data;
  fs::path out;
  std::optional<fs::path> init;
  int max_iters = 50;
  double tol = 1e-6;
  bool leave_one_out = false;
  bool add_one = false;
};

struct RecordingFiles {
  std::string name;
  fs::path scene;
  fs::path csv;
};

/// Every `<stem>.csv` with a sibling `<stem>.json`, sorted by path.
std::vector<RecordingFiles> discover_recordings(const std::vector<fs::path>& dirs);

struct LearnFold {
  std::string held_out;  // empty when trained on everything
  fs::path dir;
  TransitionTable table;
  EmResult em;
};

std::vector<LearnFold> cmd_learn(const LearnOptions& opts, std::string_view command_line = {});

// ---- track ------------------------------------------------------------------

struct TrackCommandOptions {
  fs::path scene;
  fs::path recording;
  std::optional<fs::path> params;
  std::optional<fs::path> table;
  fs::path out;  // track CSV; the manifest goes to <out>.manifest.json
};

void cmd_track(const TrackCommandOptions& opts, std::string_view command_line = {});

// ---- evaluate ---------------------------------------------------------------

struct EvaluateOptions {
  fs::path track;
  std::optional<fs::path> truth;  // ground-truth CSV written by simulate
  std::optional<fs::path> scene;  // or an annotated recording
  std::optional<fs::path> recording;
  std::vector<std::string> metrics{"frr", "confusion"};
  double srr_threshold = 0.25;
  int shot_frames = 20;
  fs::path out;
};

void cmd_evaluate(const EvaluateOptions& opts, std::string_view command_line = {});

// ---- bench ------------------------------------------------------------------

struct BenchOptions {
  std::vector<int> n_active{1, 2, 3};
  std::vector<int> m_passive{0, 1, 2, 3, 4, 5, 6};
  int frames = 200;
  int repeats = 3;
  std::uint64_t seed = 1;
  std::optional<fs::path> out;
};

struct BenchPoint {
  int n_active = 0;
  int m_passive = 0;
  double seconds_per_update = 0.0;
};

struct BenchReport {
  std::vector<BenchPoint> points;
  /// Least-squares fit of log t = c + a log N + b log(N + M); the log N term is
  /// dropped when N does not vary.
  double exponent_nm = 0.0;
  double exponent_n = 0.0;
  double intercept = 0.0;
};

/// Times update() on synthetic scenes with N tracked persons and M objects.
BenchReport run_bench(const BenchOptions& opts);
/// The fit used by run_bench. Leaves NaN when the grid cannot determine it.
void fit_bench_exponents(BenchReport& report);

BenchReport cmd_bench(const BenchOptions& opts, std::string_view command_line = {});

}  // namespace vfoa::cli
