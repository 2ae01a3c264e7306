// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Argument parsing and exit-code mapping for the stereoaccel tool, callable
// in-process so tests can drive it.

#ifndef STEREOACCEL_CLI_MAIN_HPP_
#define STEREOACCEL_CLI_MAIN_HPP_

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stereoaccel/cli.hpp"

namespace stereoaccel::cli {

enum ExitCode : int { kOk = 0, kInputFailure = 2, kInfeasible = 3, kInternal = 4 };

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Deconvolution transform, tile scheduling, latency model and stereo propagation toolkit",
               "stereoaccel"};
  app.require_subcommand(1);

  std::string network, hardware, out_dir = ".", manifest, baseline;
  std::vector<std::string> mode_names, run_args;
  bool strict = false, svg = false;
  ism::IsmParams ism_params;
  synth::SceneParams scene;

  auto network_opts = [&](CLI::App* sub) {
    sub->add_option("--network", network, "Network description (JSON)")->required();
    sub->add_option("--hardware", hardware, "Hardware description (JSON); defaults apply when omitted");
    sub->add_option("--out-dir", out_dir, "Output directory");
    sub->add_flag("--strict", strict, "Reject unknown fields and channel mismatches between layers");
  };

  CLI::App* transform = app.add_subcommand("transform", "Write the sub-kernel manifest");
  network_opts(transform);
  CLI::App* schedule = app.add_subcommand("schedule", "Write one schedule file per layer per mode");
  network_opts(schedule);
  schedule->add_option("--mode", mode_names, "baseline, dct, convr or ilar (repeatable; default all)");
  CLI::App* model = app.add_subcommand("model", "Write the latency model report (model.csv)");
  network_opts(model);
  model->add_option("--mode", mode_names, "baseline, dct, convr or ilar (repeatable; default all)");

  CLI::App* report = app.add_subcommand("report", "Join model reports into report.csv");
  report->add_option("--run", run_args, "name=path/to/model.csv (repeatable)")->required();
  report->add_option("--baseline", baseline, "Run label the speedups are relative to");
  report->add_option("--out-dir", out_dir, "Output directory");
  report->add_flag("--svg", svg, "Also write report.svg");

  CLI::App* ismcmd = app.add_subcommand("ism", "Propagate key-frame disparity through a stereo sequence");
  ismcmd->add_option("--manifest", manifest, "Sequence manifest (JSON)")->required();
  ismcmd->add_option("--out-dir", out_dir, "Output directory");
  ismcmd->add_option("--pw", ism_params.pw, "Propagation window: one key frame every pw frames");
  ismcmd->add_option("--block", ism_params.refine.block, "Refinement block size (odd)");
  ismcmd->add_option("--radius", ism_params.refine.radius, "Refinement search radius");
  ismcmd->add_flag("--strict", strict, "Reject unknown manifest fields");

  CLI::App* synthcmd = app.add_subcommand("synth", "Write a synthetic stereo sequence and its manifest");
  synthcmd->add_option("--out-dir", out_dir, "Output directory");
  synthcmd->add_option("--width", scene.width, "Frame width");
  synthcmd->add_option("--height", scene.height, "Frame height");
  synthcmd->add_option("--frames", scene.frames, "Number of frames");
  synthcmd->add_option("--motion-x", scene.motion_x, "Horizontal motion in pixels per frame");
  synthcmd->add_option("--motion-y", scene.motion_y, "Vertical motion in pixels per frame");
  synthcmd->add_option("--seed", scene.seed, "Texture seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputFailure;
  }

  try {
    auto modes = [&] {
      std::vector<RunMode> m;
      for (const auto& s : mode_names) m.push_back(parse_mode(s));
      return m.empty() ? all_modes() : m;
    };
    auto inputs = [&] {
      return ingest(network, hardware.empty() ? std::nullopt : std::optional<fs::path>(hardware), strict);
    };
    if (transform->parsed()) {
      out << cmd_transform(inputs(), out_dir).string() << "\n";
    } else if (schedule->parsed()) {
      for (const auto& p : cmd_schedule(inputs(), modes(), out_dir)) out << p.string() << "\n";
    } else if (model->parsed()) {
      out << cmd_model(inputs(), modes(), out_dir).string() << "\n";
    } else if (report->parsed()) {
      std::vector<RunArg> runs;
      for (const auto& r : run_args) runs.push_back(parse_run_arg(r));
      for (const auto& p : cmd_report(runs, baseline, out_dir, svg)) out << p.string() << "\n";
    } else if (ismcmd->parsed()) {
      const IsmOutput o = cmd_ism(manifest, ism_params, out_dir, strict);
      out << o.metrics.string() << "\n";
    } else if (synthcmd->parsed()) {
      out << cmd_synth(scene, out_dir).string() << "\n";
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

}  // namespace stereoaccel::cli

#endif  // STEREOACCEL_CLI_MAIN_HPP_
