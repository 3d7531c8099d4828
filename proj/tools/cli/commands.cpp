#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <vfoa/dataio.hpp>
#include <vfoa/metrics.hpp>
#include <vfoa/parallel.hpp>
#include <vfoa/tracker.hpp>

namespace vfoa::cli {

using json = nlohmann::json;

namespace {

std::string manifest_comment(const std::string& hash) { return "manifest-sha256=" + hash; }

// Params or table JSON with the manifest hash (and extra fields) merged in.
std::string tagged_json(const std::string& body, const std::string& hash, const json& extra = json::object()) {
  json j = json::parse(body);
  j["manifest_sha256"] = hash;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string s;
  for (std::size_t k = 0; k < parts.size(); ++k) s += (k ? sep : "") + parts[k];
  return s;
}

}  // namespace

// ---- manifest ---------------------------------------------------------------

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["command_line"] = command_line;
  j["config_paths"] = config_paths;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["params_file"] = params_file;
  j["out"] = out;
  j["tool_version"] = tool_version;
  j["wall_clock"] = wall_clock;
  j["settings"] = settings;
  return j.dump(2) + "\n";
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string write_manifest(const fs::path& path, const RunManifest& m) {
  const std::string text = m.to_json();
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path, text);
  return sha256_hex(text);
}

int worker_threads() {
  if (const char* env = std::getenv("VFOA_SKF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    throw InvalidArgument("VFOA_SKF_THREADS must be a positive integer, got \"" + std::string(env) + "\"");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---- simulate ---------------------------------------------------------------

SynthConfig simulate_config(const SimulateOptions& opts) {
  SynthConfig cfg = easy_scene_preset();
  if (opts.config) {
    json j;
    try {
      j = json::parse(read_text_file(*opts.config));
    } catch (const json::exception& e) {
      throw DataError(opts.config->string() + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw DataError(opts.config->string() + ": expected an object");
    static const std::set<std::string> known{"preset", "T", "seed", "name", "scripted_dwell", "dt", "params", "table"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!known.count(it.key())) throw DataError(opts.config->string() + ": unknown field \"" + it.key() + "\"");
    }
    try {
      if (j.contains("preset") && j["preset"].get<std::string>() != "easy")
        throw DataError("field \"preset\": only \"easy\" is available");
      if (j.contains("T")) cfg.T = j["T"].get<int>();
      if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("name")) cfg.name = j["name"].get<std::string>();
      if (j.contains("scripted_dwell")) cfg.scripted_dwell = j["scripted_dwell"].get<int>();
      if (j.contains("dt")) cfg.dt = j["dt"].get<double>();
      if (j.contains("params")) cfg.params = params_from_json(j["params"].dump());
      if (j.contains("table")) cfg.table = table_from_json(j["table"].dump());
    } catch (const json::exception& e) {
      throw DataError(opts.config->string() + ": " + e.what());
    } catch (const Error& e) {
      throw DataError(opts.config->string() + ": " + e.what());
    }
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.frames) cfg.T = *opts.frames;
  if (opts.name) cfg.name = *opts.name;
  if (cfg.scripted_dwell < 1) throw InvalidArgument("scripted_dwell must be at least 1");
  if (!(cfg.dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos)
    throw InvalidArgument("name must be a non-empty file stem");
  cfg.validate();
  return cfg;
}

SimulateOutputs cmd_simulate(const SimulateOptions& opts, std::string_view command_line) {
  const SynthConfig cfg = simulate_config(opts);

  RunManifest m;
  m.command = "simulate";
  m.command_line = command_line;
  if (opts.config) m.config_paths["config"] = opts.config->string();
  m.seed = cfg.seed;
  m.out = opts.out.string();
  m.wall_clock = utc_timestamp();
  m.settings = {{"T", std::to_string(cfg.T)}, {"name", cfg.name}, {"scripted_dwell", std::to_string(cfg.scripted_dwell)}};

  SimulateOutputs out;
  out.manifest = opts.out / "manifest.json";
  out.scene = opts.out / (cfg.name + ".json");
  out.recording = opts.out / (cfg.name + ".csv");
  out.truth = opts.out / (cfg.name + ".truth.csv");
  out.params = opts.out / (cfg.name + ".params.json");
  out.table = opts.out / (cfg.name + ".table.json");

  const std::string hash = write_manifest(out.manifest, m);
  const SynthResult res = sample_recording(cfg);
  save_recording(out.scene, out.recording, res.recording, manifest_comment(hash));
  write_text_file(out.truth, ground_truth_to_csv(res.truth, manifest_comment(hash)));
  write_text_file(out.params, tagged_json(params_to_json(cfg.params), hash));
  write_text_file(out.table, tagged_json(table_to_json(cfg.table), hash));

  // read everything back
  const Recording back = load_recording(out.scene, out.recording);
  if (back.n_frames() != cfg.T || !fully_annotated(back)) throw DataError("simulate: recording failed validation");
  if (ground_truth_from_csv(read_text_file(out.truth)).size() != res.truth.size())
    throw DataError("simulate: ground truth failed validation");
  if (load_params(out.params).alpha != cfg.params.alpha || !(load_table(out.table) == cfg.table))
    throw DataError("simulate: parameter files failed validation");
  return out;
}

// ---- learn ------------------------------------------------------------------

std::vector<RecordingFiles> discover_recordings(const std::vector<fs::path>& dirs) {
  std::vector<RecordingFiles> found;
  for (const auto& dir : dirs) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
      fs::path scene = entry.path();
      scene.replace_extension(".json");
      if (!fs::exists(scene)) continue;
      found.push_back({entry.path().stem().string(), scene, entry.path()});
    }
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.csv < b.csv; });
  // fold directories are named after recordings, so names must be unique
  std::map<std::string, int> seen;
  for (auto& f : found) {
    const int n = seen[f.name]++;
    if (n > 0) f.name += "-" + std::to_string(n + 1);
  }
  return found;
}

namespace {

void write_learn_outputs(const fs::path& dir, const LearnFold& fold, const std::string& hash) {
  fs::create_directories(dir);
  json extra = {{"iterations", fold.em.iterations}, {"converged", fold.em.converged}};
  if (!fold.held_out.empty()) extra["held_out"] = fold.held_out;
  write_text_file(dir / "params.json", tagged_json(params_to_json(fold.em.params), hash, extra));
  write_text_file(dir / "table.json", tagged_json(table_to_json(fold.table), hash, extra));
  std::string csv = "# " + manifest_comment(hash) + "\niteration,loglik\n";
  for (std::size_t k = 0; k < fold.em.loglik.size(); ++k)
    csv += std::to_string(k) + "," + format_double(fold.em.loglik[k]) + "\n";
  write_text_file(dir / "loglik.csv", csv);

  load_params(dir / "params.json").validate();
  load_table(dir / "table.json");
}

}  // namespace

std::vector<LearnFold> cmd_learn(const LearnOptions& opts, std::string_view command_line) {
  if (opts.data.empty()) throw InvalidArgument("learn: at least one --data directory is required");
  if (opts.max_iters < 1) throw InvalidArgument("learn: --max-iters must be at least 1");
  const auto files = discover_recordings(opts.data);
  if (files.empty()) throw DataError("learn: no recordings (<stem>.csv with <stem>.json) found");
  if (opts.leave_one_out && files.size() < 2)
    throw InvalidArgument("learn: --leave-one-out needs at least two recordings");

  RecordingSet data;
  for (const auto& f : files) {
    Recording rec = load_recording(f.scene, f.csv);
    if (!fully_annotated(rec)) throw DataError("learn: " + f.csv.string() + " is not fully annotated");
    data.push_back(std::move(rec));
  }
  const ModelParams init = opts.init ? load_params(*opts.init) : ModelParams::standard_init();
  init.validate();
  const int threads = worker_threads();

  RunManifest m;
  m.command = "learn";
  m.command_line = command_line;
  for (std::size_t k = 0; k < opts.data.size(); ++k) m.config_paths["data" + std::to_string(k)] = opts.data[k].string();
  if (opts.init) m.params_file = opts.init->string();
  m.out = opts.out.string();
  m.wall_clock = utc_timestamp();
  m.settings = {{"max_iters", std::to_string(opts.max_iters)},
                {"tol", format_double(opts.tol)},
                {"leave_one_out", opts.leave_one_out ? "true" : "false"},
                {"add_one", opts.add_one ? "true" : "false"},
                {"recordings", std::to_string(files.size())}};
  const std::string hash = write_manifest(opts.out / "manifest.json", m);

  const LearnTableOptions table_opts{opts.add_one};
  auto fit = [&](const RecordingSet& train, int em_threads) {
    LearnFold fold;
    fold.table = learn_table(train, table_opts);
    fold.em = em_fit(train, init, EmOptions{opts.max_iters, opts.tol, em_threads});
    return fold;
  };

  std::vector<LearnFold> folds;
  if (!opts.leave_one_out) {
    LearnFold fold = fit(data, threads);
    fold.dir = opts.out;
    folds.push_back(std::move(fold));
  } else {
    folds.resize(files.size());
    parallel_for(files.size(), threads, [&](std::size_t q) {
      RecordingSet train;
      for (std::size_t r = 0; r < data.size(); ++r) {
        if (r != q) train.push_back(data[r]);
      }
      LearnFold fold = fit(train, 1);
      fold.held_out = files[q].name;
      fold.dir = opts.out / ("loo-" + files[q].name);
      folds[q] = std::move(fold);
    });
  }
  for (const auto& fold : folds) {
    for (const auto& w : fold.em.warnings) std::cerr << "warning: " << w << "\n";
    write_learn_outputs(fold.dir, fold, hash);
  }
  return folds;
}

// ---- track ------------------------------------------------------------------

void cmd_track(const TrackCommandOptions& opts, std::string_view command_line) {
  const Recording rec = load_recording(opts.scene, opts.recording);
  const ModelParams params = opts.params ? load_params(*opts.params) : ModelParams::standard_init();
  const TransitionTable table = opts.table ? load_table(*opts.table) : TransitionTable();

  RunManifest m;
  m.command = "track";
  m.command_line = command_line;
  m.config_paths = {{"scene", opts.scene.string()}, {"recording", opts.recording.string()}};
  if (opts.table) m.config_paths["table"] = opts.table->string();
  if (opts.params) m.params_file = opts.params->string();
  m.out = opts.out.string();
  m.wall_clock = utc_timestamp();
  fs::path manifest_path = opts.out;
  manifest_path += ".manifest.json";
  const std::string hash = write_manifest(manifest_path, m);

  const TrackResult res = track(rec, params, table);
  for (int f : res.degenerate_frames) std::cerr << "warning: degenerate update at frame " << f << "\n";
  write_text_file(opts.out, track_to_csv(res, rec.scene, manifest_comment(hash)));

  const TrackTable back = track_from_csv(read_text_file(opts.out));
  if (back.persons.size() != rec.scene.tracked().size()) throw DataError("track: output failed validation");
  for (const auto& per_person : back.weights) {
    if (static_cast<int>(per_person.size()) != rec.n_frames()) throw DataError("track: output failed validation");
    for (const auto& w : per_person) {
      double s = 0.0;
      for (double v : w) s += v;
      if (std::abs(s - 1.0) > 1e-9) throw DataError("track: weights do not sum to 1");
    }
  }
}

// ---- evaluate ---------------------------------------------------------------

namespace {

struct TruthView {
  std::vector<AnnotatedSeq> vfoa;            // per track person
  std::vector<std::vector<Vec2>> gaze;        // empty when unknown
};

TruthView load_truth(const EvaluateOptions& opts, const TrackTable& tt) {
  TruthView tv;
  const std::size_t T = tt.vfoa.empty() ? 0 : tt.vfoa.front().size();
  if (opts.truth) {
    const auto truth = ground_truth_from_csv(read_text_file(*opts.truth));
    for (int person : tt.persons) {
      const auto it = std::find_if(truth.begin(), truth.end(), [&](const auto& pt) { return pt.person == person; });
      if (it == truth.end()) throw DataError("evaluate: no ground truth for person " + std::to_string(person));
      if (it->vfoa.size() != T) throw DataError("evaluate: ground truth length differs from the track");
      tv.vfoa.emplace_back(it->vfoa.begin(), it->vfoa.end());
      std::vector<Vec2> g;
      for (const auto& L : it->latent) g.push_back(L.segment<2>(kGaze));
      tv.gaze.push_back(std::move(g));
    }
  } else if (opts.scene && opts.recording) {
    const Recording rec = load_recording(*opts.scene, *opts.recording);
    if (static_cast<std::size_t>(rec.n_frames()) != T)
      throw DataError("evaluate: recording length differs from the track");
    for (int person : tt.persons) {
      if (!rec.scene.is_tracked(person))
        throw DataError("evaluate: person " + std::to_string(person) + " is not tracked in the recording");
      AnnotatedSeq seq;
      for (const auto& f : rec.frames) seq.push_back(f.vfoa[person]);
      tv.vfoa.push_back(std::move(seq));
    }
  } else {
    throw InvalidArgument("evaluate: ground truth is required (--truth, or --scene with --recording)");
  }
  return tv;
}

}  // namespace

void cmd_evaluate(const EvaluateOptions& opts, std::string_view command_line) {
  static const std::set<std::string> known{"frr", "confusion", "srr", "ap"};
  const std::set<std::string> metrics(opts.metrics.begin(), opts.metrics.end());
  for (const auto& name : metrics) {
    if (!known.count(name)) throw InvalidArgument("evaluate: unknown metric \"" + name + "\"");
  }
  if (opts.shot_frames < 1) throw InvalidArgument("evaluate: --shot-frames must be at least 1");

  const TrackTable tt = track_from_csv(read_text_file(opts.track));
  const TruthView truth = load_truth(opts, tt);
  const bool shots = metrics.count("srr") || metrics.count("ap");
  if (shots && tt.persons.size() < 2) throw InvalidArgument("evaluate: srr and ap need at least two tracked persons");

  RunManifest m;
  m.command = "evaluate";
  m.command_line = command_line;
  m.config_paths["track"] = opts.track.string();
  if (opts.truth) m.config_paths["truth"] = opts.truth->string();
  if (opts.scene) m.config_paths["scene"] = opts.scene->string();
  if (opts.recording) m.config_paths["recording"] = opts.recording->string();
  m.out = opts.out.string();
  m.wall_clock = utc_timestamp();
  m.settings = {{"metrics", join(opts.metrics, ",")},
                {"srr_threshold", format_double(opts.srr_threshold)},
                {"shot_frames", std::to_string(opts.shot_frames)}};
  const std::string hash = write_manifest(opts.out / "manifest.json", m);
  const std::string tag = "# " + manifest_comment(hash) + "\n";

  json report;
  report["manifest_sha256"] = hash;
  report["track"] = opts.track.string();
  report["persons"] = tt.persons;
  json warnings = json::array();

  if (metrics.count("frr")) {
    std::string csv = tag + "person_id,frr\n";
    json per = json::object();
    double sum = 0.0;
    for (std::size_t p = 0; p < tt.persons.size(); ++p) {
      const double v = frr(tt.vfoa[p], truth.vfoa[p]);
      per[std::to_string(tt.persons[p])] = v;
      sum += v;
      csv += std::to_string(tt.persons[p]) + "," + format_double(v) + "\n";
    }
    const double mean = sum / static_cast<double>(tt.persons.size());
    csv += "mean," + format_double(mean) + "\n";
    report["frr"] = {{"per_person", per}, {"mean", mean}};
    write_text_file(opts.out / "frr.csv", csv);
  }

  if (metrics.count("confusion")) {
    json per = json::object();
    for (std::size_t p = 0; p < tt.persons.size(); ++p) {
      const int n_labels = tt.weights[p].empty() ? 0 : static_cast<int>(tt.weights[p].front().size());
      std::vector<int> labels;
      for (int l = 0; l < n_labels; ++l) {
        if (l != tt.persons[p]) labels.push_back(l);
      }
      const ConfusionMatrix cm = confusion(tt.vfoa[p], truth.vfoa[p], labels);
      const auto norm = cm.normalized();
      std::string csv = tag + "truth\\pred";
      for (int l : labels) csv += "," + std::to_string(l);
      csv += "\n";
      for (std::size_t r = 0; r < labels.size(); ++r) {
        csv += std::to_string(labels[r]);
        for (double v : norm[r]) csv += "," + format_double(v);
        csv += "\n";
      }
      const std::string id = std::to_string(tt.persons[p]);
      write_text_file(opts.out / ("confusion_" + id + ".csv"), csv);
      per[id] = {{"labels", labels}, {"counts", cm.counts}, {"normalized", norm}};
    }
    report["confusion"] = per;
  }

  if (!truth.gaze.empty()) {
    json per = json::object();
    for (std::size_t p = 0; p < tt.persons.size(); ++p) {
      double ss = 0.0;
      for (std::size_t t = 0; t < truth.gaze[p].size(); ++t)
        ss += wrap_delta(tt.gaze[p][t].vec(), truth.gaze[p][t]).squaredNorm();
      per[std::to_string(tt.persons[p])] = std::sqrt(ss / static_cast<double>(truth.gaze[p].size()));
    }
    report["gaze_rmse_deg"] = per;
  }

  if (shots) {
    std::vector<double> scores;
    std::vector<int> labels;
    std::string csv = tag + "shot,first_frame,last_frame,score,label\n";
    const std::size_t T = tt.vfoa.front().size();
    const std::size_t len = static_cast<std::size_t>(opts.shot_frames);
    for (std::size_t start = 0; start < T; start += len) {
      const std::size_t stop = std::min(T, start + len);
      std::vector<LabelSeq> pred, gt;
      bool complete = true;
      for (std::size_t p = 0; p < tt.persons.size(); ++p) {
        pred.emplace_back(tt.vfoa[p].begin() + static_cast<long>(start), tt.vfoa[p].begin() + static_cast<long>(stop));
        LabelSeq g;
        for (std::size_t t = start; t < stop; ++t) {
          if (!truth.vfoa[p][t]) complete = false;
          g.push_back(truth.vfoa[p][t].value_or(0));
        }
        gt.push_back(std::move(g));
      }
      if (!complete) continue;
      const double score = mutual_gaze_score(pred, tt.persons);
      const int label = mutual_gaze_score(gt, tt.persons) >= opts.srr_threshold ? 1 : 0;
      csv += std::to_string(scores.size()) + "," + std::to_string(start + 1) + "," + std::to_string(stop) + "," +
             format_double(score) + "," + std::to_string(label) + "\n";
      scores.push_back(score);
      labels.push_back(label);
    }
    if (scores.empty()) throw DataError("evaluate: no fully annotated shot");
    write_text_file(opts.out / "shots.csv", csv);
    report["shots"] = {{"count", scores.size()},
                       {"positives", std::count(labels.begin(), labels.end(), 1)},
                       {"frames", opts.shot_frames}};
    if (metrics.count("srr")) report["srr"] = srr(scores, labels, opts.srr_threshold);
    if (metrics.count("ap")) {
      if (std::count(labels.begin(), labels.end(), 1) == 0) {
        report["ap"] = nullptr;
        warnings.push_back("ap: no positive shot in the ground truth");
      } else {
        report["ap"] = average_precision(scores, labels);
      }
    }
  }

  report["warnings"] = warnings;
  write_text_file(opts.out / "report.json", report.dump(2) + "\n");
  if (!json::parse(read_text_file(opts.out / "report.json")).is_object()) throw DataError("evaluate: report failed validation");
}

// ---- bench ------------------------------------------------------------------

namespace {

SynthConfig bench_config(int n_active, int m_passive, int frames, std::uint64_t seed) {
  std::vector<Target> targets;
  for (int k = 1; k <= n_active; ++k) targets.push_back({k, TargetKind::Active, true, ""});
  for (int k = 1; k <= m_passive; ++k) targets.push_back({n_active + k, TargetKind::Passive, false, ""});
  SynthConfig cfg;
  cfg.scene = Scene(targets);
  cfg.params = easy_preset_params();
  cfg.table = easy_preset_table();
  cfg.T = frames + 1;
  cfg.seed = seed;
  cfg.name = "bench";
  // persons on a small inner circle, objects on an outer one
  cfg.motion.resize(static_cast<std::size_t>(n_active + m_passive + 1));
  for (int k = 1; k <= n_active; ++k) {
    const double a = 2.0 * std::numbers::pi * (k - 1) / n_active;
    cfg.motion[k] = TargetMotion{{std::cos(a), std::sin(a), 1.7}};
  }
  for (int k = 1; k <= m_passive; ++k) {
    const double a = 2.0 * std::numbers::pi * (k - 0.5) / m_passive;
    cfg.motion[n_active + k] = TargetMotion{{4.0 * std::cos(a), 4.0 * std::sin(a), 1.5}};
  }
  return cfg;
}

}  // namespace

BenchReport run_bench(const BenchOptions& opts) {
  if (opts.frames < 1 || opts.repeats < 1) throw InvalidArgument("bench: frames and repeats must be positive");
  BenchReport report;
  for (int n : opts.n_active) {
    for (int m : opts.m_passive) {
      if (n < 1 || m < 0) throw InvalidArgument("bench: need N >= 1 and M >= 0");
      const SynthConfig cfg = bench_config(n, m, opts.frames, opts.seed);
      const Recording rec = sample_recording(cfg).recording;
      const TrackerState start = initialize(rec.scene, rec.frames.front(), cfg.params, cfg.table);
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < opts.repeats; ++r) {
        TrackerState st = start;
        const auto t0 = std::chrono::steady_clock::now();
        for (int f = 1; f <= opts.frames; ++f) st = update(st, rec.frames[f], cfg.params, cfg.table);
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count() / opts.frames);
      }
      report.points.push_back({n, m, best});
    }
  }
  fit_bench_exponents(report);
  return report;
}

void fit_bench_exponents(BenchReport& report) {
  const int n = static_cast<int>(report.points.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int r = 0; r < n; ++r) {
    const auto& p = report.points[r];
    X(r, 0) = 1.0;
    X(r, 1) = std::log(static_cast<double>(p.n_active));
    X(r, 2) = std::log(static_cast<double>(p.n_active + p.m_passive));
    y[r] = std::log(p.seconds_per_update);
  }
  // with a single N the log N column is constant and drops out
  const bool vary_n = X.col(1).maxCoeff() > X.col(1).minCoeff();
  Eigen::MatrixXd D = vary_n ? X : Eigen::MatrixXd(X(Eigen::all, std::vector<int>{0, 2}));
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
  if (qr.rank() < D.cols()) {
    report.intercept = report.exponent_n = report.exponent_nm = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const Eigen::VectorXd c = qr.solve(y);
  report.intercept = c[0];
  report.exponent_n = vary_n ? c[1] : 0.0;
  report.exponent_nm = c[D.cols() - 1];
}

BenchReport cmd_bench(const BenchOptions& opts, std::string_view command_line) {
  std::string hash;
  if (opts.out) {
    RunManifest m;
    m.command = "bench";
    m.command_line = command_line;
    m.seed = opts.seed;
    m.out = opts.out->string();
    m.wall_clock = utc_timestamp();
    std::vector<std::string> ns, ms;
    for (int v : opts.n_active) ns.push_back(std::to_string(v));
    for (int v : opts.m_passive) ms.push_back(std::to_string(v));
    m.settings = {{"n_active", join(ns, ",")},
                  {"m_passive", join(ms, ",")},
                  {"frames", std::to_string(opts.frames)},
                  {"repeats", std::to_string(opts.repeats)}};
    hash = write_manifest(*opts.out / "manifest.json", m);
  }

  const BenchReport report = run_bench(opts);

  std::cout << "   N    M  N+M  us/update\n";
  for (const auto& p : report.points) {
    std::cout << std::setw(4) << p.n_active << std::setw(5) << p.m_passive << std::setw(5) << p.n_active + p.m_passive
              << std::setw(11) << std::fixed << std::setprecision(2) << 1e6 * p.seconds_per_update << "\n";
  }
  if (std::isnan(report.exponent_nm)) {
    std::cout << "fitted exponent of (N+M): n/a (grid too small)\n";
  } else {
    std::cout << std::setprecision(3) << "fitted exponent of (N+M): " << report.exponent_nm
              << "  (of N: " << report.exponent_n << ")\n";
  }
  std::cout.unsetf(std::ios::floatfield);

  if (opts.out) {
    std::string csv = "# " + manifest_comment(hash) + "\nn_active,m_passive,seconds_per_update\n";
    json points = json::array();
    for (const auto& p : report.points) {
      csv += std::to_string(p.n_active) + "," + std::to_string(p.m_passive) + "," + format_double(p.seconds_per_update) +
             "\n";
      points.push_back({{"n_active", p.n_active}, {"m_passive", p.m_passive}, {"seconds_per_update", p.seconds_per_update}});
    }
    write_text_file(*opts.out / "bench.csv", csv);
    auto number = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    const json j = {{"manifest_sha256", hash},
                    {"model", "log t = c + a log N + b log(N+M)"},
                    {"exponent_nm", number(report.exponent_nm)},
                    {"exponent_n", number(report.exponent_n)},
                    {"intercept", number(report.intercept)},
                    {"points", points}};
    write_text_file(*opts.out / "bench.json", j.dump(2) + "\n");
  }
  return report;
}

}  // namespace vfoa::cli
