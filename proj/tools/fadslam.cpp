// fadslam: simulate, calibrate, run and eval.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fadslam/commands.hpp"

namespace fs = std::filesystem;
using namespace fadslam;

namespace {

int fail(const Error& e) {
  std::cerr << "fadslam: " << e.what() << "\n";
  return exit_code_for(e.code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-aware dynamic visual SLAM on synthetic sequences"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string sim_config;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic sequence");
  simulate->add_option("config", sim_config, "Config file (must set seed)")->required();
  simulate->add_option("outdir", sim_out, "Output directory")->required();

  std::vector<std::string> cal_dirs;
  std::string cal_out;
  std::string cal_config;
  std::string cal_report;
  auto* calib = app.add_subcommand("calibrate", "Derive c_base and th from stable sequences");
  calib->add_option("sequences", cal_dirs, "Sequence directories")->required();
  calib->add_option("-o,--output", cal_out, "Config file to write")->required();
  calib->add_option("-c,--config", cal_config, "Pipeline config used while tracking the stable sequences");
  calib->add_option("--report", cal_report, "Write the per-frame Q report here instead of stdout");

  std::string run_seq;
  std::string run_config;
  std::string run_out;
  RunFlags flags;
  auto* run = app.add_subcommand("run", "Track a sequence and evaluate it");
  run->add_option("sequence", run_seq, "Sequence directory")->required();
  run->add_option("config", run_config, "Pipeline config or run manifest")->required();
  run->add_option("outdir", run_out, "Output directory")->required();
  run->add_flag("--no-removal", flags.no_removal, "Skip dynamic feature removal");
  run->add_flag("--always-lines", flags.always_lines, "Point-Line mode on every frame");
  run->add_flag("--never-lines", flags.never_lines, "Point mode on every frame");

  std::string est_path;
  std::string gt_path;
  std::string eval_out;
  bool align = false;
  std::size_t rpe_delta = 1;
  auto* eval = app.add_subcommand("eval", "ATE and T.RPE of a trajectory against ground truth");
  eval->add_option("estimate", est_path, "Estimated trajectory")->required();
  eval->add_option("groundtruth", gt_path, "Ground-truth trajectory")->required();
  eval->add_flag("--align", align, "Rigidly align before ATE");
  eval->add_option("--rpe-delta", rpe_delta, "RPE frame delta")->check(CLI::PositiveNumber);
  eval->add_option("-o,--output", eval_out, "Also write metrics CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*simulate) {
      simulate_command(read_config(sim_config), sim_out);
      std::cout << "wrote " << (fs::path(sim_out) / kFramesFile).string() << "\n";
    } else if (*calib) {
      const Settings base = cal_config.empty() ? Settings{} : read_config(cal_config);
      std::vector<fs::path> dirs(cal_dirs.begin(), cal_dirs.end());
      const CalibrationReport r = calibrate_command(dirs, base);
      write_file_atomic(cal_out, calibration_config_text(r.awareness));
      if (cal_report.empty())
        std::cout << r.text;
      else
        write_file_atomic(cal_report, r.text);
    } else if (*run) {
      const RunResult r = run_command(run_seq, read_config(run_config), flags, run_out);
      std::cout << metrics_table(r.metrics);
    } else if (*eval) {
      const MetricReport m = eval_command(est_path, gt_path, align, rpe_delta);
      std::cout << metrics_table(m);
      if (!eval_out.empty()) write_file_atomic(eval_out, metrics_csv(m));
    }
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "fadslam: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
