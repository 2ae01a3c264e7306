// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Subcommand implementations behind the stereoaccel tool. Each command reads
// its inputs, delegates to the library, and writes its artifacts under an
// output directory.

#ifndef STEREOACCEL_CLI_HPP_
#define STEREOACCEL_CLI_HPP_

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stereoaccel/deconv.hpp"
#include "stereoaccel/error.hpp"
#include "stereoaccel/io.hpp"
#include "stereoaccel/ism.hpp"
#include "stereoaccel/perfmodel.hpp"
#include "stereoaccel/report.hpp"
#include "stereoaccel/scheduler.hpp"
#include "stereoaccel/synth.hpp"

namespace stereoaccel::cli {

namespace fs = std::filesystem;

// baseline: dense convolution over the zero-upsampled ifmap, default policy.
// dct:      sub-kernel decomposition, default policy.
// convr:    sub-kernel decomposition, per-phase tiles from the solver.
// ilar:     convr plus the shared-tile option; conv layers fall back to convr.
enum class RunMode { kBaseline, kDct, kConvR, kIlar };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::kBaseline: return "baseline";
    case RunMode::kDct: return "dct";
    case RunMode::kConvR: return "convr";
    case RunMode::kIlar: return "ilar";
  }
  return "?";
}

inline RunMode parse_mode(const std::string& s) {
  if (s == "baseline") return RunMode::kBaseline;
  if (s == "dct") return RunMode::kDct;
  if (s == "convr") return RunMode::kConvR;
  if (s == "ilar") return RunMode::kIlar;
  throw InputError("unknown mode '" + s + "' (expected baseline, dct, convr or ilar)");
}

inline std::vector<RunMode> all_modes() { return {RunMode::kBaseline, RunMode::kDct, RunMode::kConvR, RunMode::kIlar}; }

struct NetworkInputs {
  std::vector<LayerSpec> layers;
  HardwareConfig hw;
};

inline NetworkInputs ingest(const fs::path& network, const std::optional<fs::path>& hardware, bool strict) {
  NetworkInputs in;
  in.layers = io::read_network(network, strict);
  if (hardware) in.hw = io::read_hardware(*hardware, strict);
  return in;
}

// The layer a mode actually runs, with its schedule and modelled latency.
struct LayerRun {
  LayerSpec layer;
  std::optional<SubKernelSet> set;
  TileSchedule schedule;
  LatencyReport report;

  const SubKernelSet* set_ptr() const { return set ? &*set : nullptr; }
};

inline std::optional<SubKernelSet> phase_set(const LayerSpec& layer) {
  if (layer.kind != LayerKind::kDeconv) return std::nullopt;
  return decompose_shape(layer.kernel);
}

inline LayerRun run_layer(const LayerSpec& layer, RunMode mode, const HardwareConfig& hw) {
  layer.validate();
  LayerRun r;
  if (mode == RunMode::kBaseline) {
    r.layer = naive_equivalent(layer);
  } else {
    r.layer = layer;
    r.set = phase_set(layer);
  }
  const SubKernelSet* set = r.set_ptr();
  switch (mode) {
    case RunMode::kBaseline:
    case RunMode::kDct: r.schedule = default_schedule(r.layer, set, hw); break;
    case RunMode::kConvR: r.schedule = solve(r.layer, set, hw, ScheduleMode::kConvR); break;
    case RunMode::kIlar:
      r.schedule = solve(r.layer, set, hw, layer.kind == LayerKind::kDeconv ? ScheduleMode::kIlar : ScheduleMode::kConvR);
      break;
  }
  r.report = total_latency(r.schedule, r.layer, set, hw);
  return r;
}

inline io::ModelRow model_row(const std::string& name, RunMode mode, const LayerRun& r, const HardwareConfig& hw) {
  io::ModelRow row;
  row.layer = name;
  row.mode = to_string(mode);
  row.beta = r.schedule.beta;
  row.rounds = r.schedule.rounds.size();
  row.latency = r.report.total;
  row.compute = r.report.compute_total;
  row.memory = r.report.memory_total;
  row.d_if = r.report.ifmap_traffic;
  row.d_w = r.report.weight_traffic;
  row.d_of = r.report.ofmap_traffic;
  row.dram_elements = r.report.dram_elements;
  row.dram_bytes = static_cast<double>(r.report.dram_elements) * hw.bytes_per_element;
  row.macs = r.report.macs;
  row.utilization = r.report.utilization;
  return row;
}

// Layer names become file stems; anything outside [A-Za-z0-9._-] maps to '_'.
inline std::string file_stem(const std::string& name) {
  std::string s = name;
  for (char& ch : s) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '.' ||
                    ch == '_' || ch == '-';
    if (!ok) ch = '_';
  }
  return s;
}

inline fs::path schedule_path(const fs::path& out_dir, const std::string& layer, RunMode mode) {
  return out_dir / "schedules" / (file_stem(layer) + "." + to_string(mode) + ".json");
}

// ---- commands ----

inline fs::path cmd_transform(const NetworkInputs& in, const fs::path& out_dir) {
  const fs::path path = out_dir / "transform.json";
  io::write_text(path, io::dump(io::transform_manifest(in.layers)));
  return path;
}

inline std::vector<fs::path> cmd_schedule(const NetworkInputs& in, const std::vector<RunMode>& modes,
                                          const fs::path& out_dir) {
  std::set<std::string> stems;
  for (const auto& l : in.layers)
    if (!stems.insert(file_stem(l.name)).second)
      throw InputError("layer '" + l.name + "': name collides with another layer after file-name mapping");
  std::vector<fs::path> written;
  for (const auto& l : in.layers) {
    for (RunMode m : modes) {
      const LayerRun r = run_layer(l, m, in.hw);
      const fs::path path = schedule_path(out_dir, l.name, m);
      io::write_text(path, io::dump(io::schedule_to_json(r.layer, to_string(m), r.schedule)));
      written.push_back(path);
    }
  }
  return written;
}

// Re-evaluates a schedule file against a hardware description.
inline LatencyReport evaluate_schedule(const io::ScheduleFile& f, const HardwareConfig& hw) {
  const auto set = phase_set(f.layer);
  return total_latency(f.schedule, f.layer, set ? &*set : nullptr, hw);
}

inline std::vector<io::ModelRow> model_rows(const NetworkInputs& in, const std::vector<RunMode>& modes) {
  std::vector<io::ModelRow> rows;
  for (const auto& l : in.layers)
    for (RunMode m : modes) rows.push_back(model_row(l.name, m, run_layer(l, m, in.hw), in.hw));
  return report::with_totals(rows, in.hw.bytes_per_element, in.hw.pe_count());
}

inline fs::path cmd_model(const NetworkInputs& in, const std::vector<RunMode>& modes, const fs::path& out_dir) {
  const fs::path path = out_dir / "model.csv";
  io::write_text(path, io::model_csv(model_rows(in, modes)));
  return path;
}

struct RunArg {
  std::string name;
  fs::path csv;
};

// "name=path" or a bare path, which is named after its parent directory.
inline RunArg parse_run_arg(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) {
    fs::path p(s);
    std::string name = p.parent_path().filename().string();
    return {name.empty() ? p.stem().string() : name, p};
  }
  if (eq == 0 || eq + 1 == s.size()) throw InputError("run '" + s + "' must look like name=path");
  return {s.substr(0, eq), fs::path(s.substr(eq + 1))};
}

inline std::vector<fs::path> cmd_report(const std::vector<RunArg>& runs, const std::string& baseline,
                                        const fs::path& out_dir, bool svg) {
  std::vector<report::NamedRun> named;
  std::set<std::string> names;
  for (const auto& r : runs) {
    if (!names.insert(r.name).second) throw InputError("report: duplicate run name '" + r.name + "'");
    named.push_back({r.name, io::read_model_csv(r.csv)});
  }
  const report::Comparison c = report::compare(named, baseline);
  std::vector<fs::path> written{out_dir / "report.csv"};
  io::write_text(written.back(), report::comparison_csv(c));
  if (svg) {
    written.push_back(out_dir / "report.svg");
    io::write_text(written.back(), report::speedup_svg(c));
  }
  return written;
}

// ---- ISM ----

inline constexpr const char* kIsmMetricsHeader = "frame,key,three_pixel_error,ops";

struct ManifestFrame {
  fs::path left;
  fs::path right;
  std::optional<fs::path> key_disparity;
  std::optional<fs::path> ground_truth;
};

inline std::vector<ManifestFrame> read_manifest(const fs::path& path, bool strict) {
  const io::Json j = io::parse_json(io::read_text(path), path.string());
  io::detail::check_version(j, "manifest");
  io::detail::check_fields(j, {"format_version", "frames"}, strict, "manifest: ");
  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty())
    throw InputError("manifest: 'frames' must be a non-empty array");
  const fs::path base = path.parent_path();
  auto get_path = [&](const io::Json& f, const char* key, const std::string& where) -> std::optional<fs::path> {
    if (!f.contains(key)) return std::nullopt;
    if (!f[key].is_string()) throw InputError(where + "field '" + key + "' must be a path string");
    fs::path p(f[key].get<std::string>());
    return p.is_absolute() ? p : base / p;
  };
  std::vector<ManifestFrame> frames;
  for (std::size_t i = 0; i < j["frames"].size(); ++i) {
    const io::Json& f = j["frames"][i];
    const std::string where = "manifest frame " + std::to_string(i) + ": ";
    if (!f.is_object()) throw InputError(where + "must be an object");
    io::detail::check_fields(f, {"left", "right", "key_disparity", "ground_truth"}, strict, where);
    ManifestFrame m;
    auto left = get_path(f, "left", where), right = get_path(f, "right", where);
    if (!left || !right) throw InputError(where + "needs 'left' and 'right'");
    m.left = *left;
    m.right = *right;
    m.key_disparity = get_path(f, "key_disparity", where);
    m.ground_truth = get_path(f, "ground_truth", where);
    frames.push_back(std::move(m));
  }
  return frames;
}

inline std::string frame_name(const char* prefix, std::size_t t, const char* ext = ".pgm") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu%s", prefix, t, ext);
  return buf;
}

struct IsmOutput {
  std::vector<fs::path> disparity;
  fs::path metrics;
};

inline IsmOutput cmd_ism(const fs::path& manifest, const ism::IsmParams& params, const fs::path& out_dir,
                         bool strict) {
  params.validate();
  const auto frames = read_manifest(manifest, strict);
  std::vector<ism::StereoPair> pairs;
  std::map<std::size_t, ism::DisparityMap> keys;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    pairs.push_back({io::read_frame(frames[t].left), io::read_frame(frames[t].right)});
    if (ism::is_key_frame(t, params.pw)) {
      if (!frames[t].key_disparity)
        throw InputError("manifest frame " + std::to_string(t) + ": key frame needs 'key_disparity'");
      keys.emplace(t, io::read_disparity(*frames[t].key_disparity));
    }
  }
  const ism::IsmResult res = ism::ism_run(pairs, keys, params);
  IsmOutput out;
  std::string csv = std::string(kIsmMetricsHeader) + "\n";
  for (std::size_t t = 0; t < frames.size(); ++t) {
    out.disparity.push_back(out_dir / frame_name("disparity", t));
    io::write_disparity(out.disparity.back(), res.disparity[t]);
    std::string err;
    if (frames[t].ground_truth)
      err = io::format_fixed(ism::three_pixel_error(res.disparity[t], io::read_disparity(*frames[t].ground_truth)), 6);
    csv += std::to_string(t) + "," + (res.key[t] ? "1" : "0") + "," + err + "," + std::to_string(res.ops[t].total()) +
           "\n";
  }
  out.metrics = out_dir / "ism_metrics.csv";
  io::write_text(out.metrics, csv);
  return out;
}

// Writes a synthetic sequence as 8-bit PGM pairs with ground-truth disparity
// and a manifest that names the ground truth as every frame's key disparity.
inline fs::path cmd_synth(const synth::SceneParams& p, const fs::path& out_dir) {
  const synth::Sequence seq = synth::make_sequence(p);
  io::Json j;
  j["format_version"] = io::kFormatVersion;
  j["frames"] = io::Json::array();
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const std::string left = frame_name("left", t), right = frame_name("right", t), gt = frame_name("gt", t);
    io::write_pgm(out_dir / left, io::frame_to_pgm(seq.frames[t].left));
    io::write_pgm(out_dir / right, io::frame_to_pgm(seq.frames[t].right));
    io::write_disparity(out_dir / gt, seq.ground_truth[t]);
    io::Json f;
    f["left"] = left;
    f["right"] = right;
    f["key_disparity"] = gt;
    f["ground_truth"] = gt;
    j["frames"].push_back(std::move(f));
  }
  const fs::path path = out_dir / "manifest.json";
  io::write_text(path, io::dump(j));
  return path;
}

}  // namespace stereoaccel::cli

#endif  // STEREOACCEL_CLI_HPP_
