#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"

namespace cli = vfoa::cli;

int main(int argc, char** argv) {
  std::string command_line;
  for (int k = 0; k < argc; ++k) command_line += (k ? " " : "") + std::string(argv[k]);

  CLI::App app{"Joint gaze and visual-focus-of-attention tracking with a switching Kalman filter"};
  app.set_version_flag("--version", cli::kToolVersion);
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Sample a synthetic recording with ground truth");
  simulate->add_option("--config", sim.config, "JSON overrides of the easy preset")->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--frames", sim.frames, "Number of frames");
  simulate->add_option("--name", sim.name, "File stem of the outputs");
  simulate->add_option("--out", sim_out, "Output directory")->required();

  cli::LearnOptions learn_opts;
  std::string learn_out;
  auto* learn = app.add_subcommand("learn", "Fit the transition table and the dynamics by EM");
  learn->add_option("--data", learn_opts.data, "Directory of recordings (repeatable)")->required();
  learn->add_option("--out", learn_out, "Output directory")->required();
  learn->add_option("--init", learn_opts.init, "Initial parameters (default: the standard initialization)")
      ->check(CLI::ExistingFile);
  learn->add_option("--max-iters", learn_opts.max_iters, "EM iteration cap")->capture_default_str();
  learn->add_option("--tol", learn_opts.tol, "Relative log-likelihood tolerance")->capture_default_str();
  learn->add_flag("--leave-one-out", learn_opts.leave_one_out, "One parameter set per held-out recording");
  learn->add_flag("--add-one", learn_opts.add_one, "Add one pseudo-count per transition category");

  cli::TrackCommandOptions trk;
  std::string trk_scene, trk_rec, trk_out;
  auto* track = app.add_subcommand("track", "Run the tracker over a recording");
  track->add_option("--scene", trk_scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  track->add_option("--recording", trk_rec, "Recording CSV")->required()->check(CLI::ExistingFile);
  track->add_option("--params", trk.params, "Model parameters JSON")->check(CLI::ExistingFile);
  track->add_option("--table", trk.table, "Transition table JSON")->check(CLI::ExistingFile);
  track->add_option("--out", trk_out, "Track CSV")->required();

  cli::EvaluateOptions ev;
  std::string ev_track, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score a track against ground truth");
  evaluate->add_option("--track", ev_track, "Track CSV")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--truth", ev.truth, "Ground-truth CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--scene", ev.scene, "Scene JSON of an annotated recording")->check(CLI::ExistingFile);
  evaluate->add_option("--recording", ev.recording, "Annotated recording CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--metrics", ev.metrics, "Comma-separated: frr,confusion,srr,ap")
      ->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--srr-threshold", ev.srr_threshold, "Shot decision threshold")->capture_default_str();
  evaluate->add_option("--shot-frames", ev.shot_frames, "Frames per shot")->capture_default_str();
  evaluate->add_option("--out", ev_out, "Output directory")->required();

  cli::BenchOptions bo;
  std::optional<std::string> bench_out;
  auto* bench = app.add_subcommand("bench", "Time the filter update over an (N, M) grid");
  bench->add_option("--n-active", bo.n_active, "Tracked persons (comma-separated)")->delimiter(',')->capture_default_str();
  bench->add_option("--m-passive", bo.m_passive, "Passive targets (comma-separated)")->delimiter(',')->capture_default_str();
  bench->add_option("--frames", bo.frames, "Timed updates per grid point")->capture_default_str();
  bench->add_option("--repeats", bo.repeats, "Repetitions, the fastest is kept")->capture_default_str();
  bench->add_option("--seed", bo.seed, "RNG seed")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory for bench.csv and bench.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      sim.out = sim_out;
      const auto out = cli::cmd_simulate(sim, command_line);
      std::cout << "wrote " << out.scene.string() << ", " << out.recording.string() << ", " << out.truth.string()
                << "\n";
    } else if (*learn) {
      learn_opts.out = learn_out;
      const auto folds = cli::cmd_learn(learn_opts, command_line);
      for (const auto& f : folds) {
        std::cout << (f.held_out.empty() ? std::string("all recordings") : "held out " + f.held_out) << ": "
                  << f.em.iterations << " EM iterations, loglik " << f.em.loglik.back() << " -> "
                  << f.dir.string() << "\n";
      }
    } else if (*track) {
      trk.scene = trk_scene;
      trk.recording = trk_rec;
      trk.out = trk_out;
      cli::cmd_track(trk, command_line);
      std::cout << "wrote " << trk.out.string() << "\n";
    } else if (*evaluate) {
      ev.track = ev_track;
      ev.out = ev_out;
      cli::cmd_evaluate(ev, command_line);
      std::cout << "wrote " << (ev.out / "report.json").string() << "\n";
    } else if (*bench) {
      if (bench_out) bo.out = *bench_out;
      cli::cmd_bench(bo, command_line);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
