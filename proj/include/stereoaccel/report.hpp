// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// Joins model reports from named runs into a comparison table and renders an
// optional SVG bar chart of the speedups.

#ifndef STEREOACCEL_REPORT_HPP_
#define STEREOACCEL_REPORT_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stereoaccel/error.hpp"
#include "stereoaccel/io.hpp"

namespace stereoaccel::report {

inline constexpr const char* kTotalLayer = "TOTAL";
inline constexpr const char* kComparisonHeader = "layer,run,L_cycles,dram_elements,speedup,traffic_reduction";

// One model CSV under a user-chosen name.
struct NamedRun {
  std::string name;
  std::vector<io::ModelRow> rows;
};

struct ComparisonRow {
  std::string layer;
  std::string run;
  std::uint64_t latency = 0;
  std::uint64_t dram_elements = 0;
  double speedup = 0.0;            // L_baseline / L_run
  double traffic_reduction = 0.0;  // dram_baseline / dram_run
};

struct Comparison {
  std::string baseline;
  std::vector<std::string> runs;
  std::vector<ComparisonRow> rows;
};

// Per-mode TOTAL rows: column sums over the layers of that mode.
inline std::vector<io::ModelRow> with_totals(const std::vector<io::ModelRow>& layers,
                                             double bytes_per_element, std::uint64_t pe_count) {
  std::vector<io::ModelRow> out = layers;
  std::vector<std::string> modes;
  for (const auto& r : layers)
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  for (const auto& m : modes) {
    io::ModelRow t;
    t.layer = kTotalLayer;
    t.mode = m;
    t.beta = 0;
    std::uint64_t beta_sum = 0, count = 0;
    for (const auto& r : layers) {
      if (r.mode != m) continue;
      t.rounds += r.rounds;
      t.latency += r.latency;
      t.compute += r.compute;
      t.memory += r.memory;
      t.d_if += r.d_if;
      t.d_w += r.d_w;
      t.d_of += r.d_of;
      t.dram_elements += r.dram_elements;
      t.macs += r.macs;
      beta_sum += static_cast<std::uint64_t>(r.beta);
      ++count;
    }
    // beta on a TOTAL row is 1 only when every layer streams the ifmap.
    t.beta = beta_sum == count ? 1 : 0;
    t.dram_bytes = static_cast<double>(t.dram_elements) * bytes_per_element;
    if (t.latency > 0)
      t.utilization = static_cast<double>(t.macs) / (static_cast<double>(t.latency) * static_cast<double>(pe_count));
    out.push_back(t);
  }
  return out;
}

inline std::string run_label(const NamedRun& run, const std::string& mode, bool single) {
  return single ? mode : run.name + ":" + mode;
}

inline double ratio(std::uint64_t base, std::uint64_t value) {
  if (value == 0) return base == 0 ? 1.0 : 0.0;
  return static_cast<double>(base) / static_cast<double>(value);
}

// Every (run, mode) pair becomes a column labelled "<run>:<mode>", or just
// "<mode>" for a single run. Without an explicit baseline the first label
// whose mode is "baseline" is used, else the first label.
inline Comparison compare(const std::vector<NamedRun>& runs, const std::string& baseline = {}) {
  if (runs.empty()) throw InputError("report: no runs given");
  const bool single = runs.size() == 1;
  struct Entry {
    std::uint64_t latency, dram;
  };
  std::map<std::pair<std::string, std::string>, Entry> table;  // (label, layer)
  std::vector<std::string> layers;
  Comparison c;
  std::string default_base;
  for (const auto& run : runs) {
    if (run.rows.empty()) throw InputError("report: run '" + run.name + "' has no rows");
    for (const auto& r : run.rows) {
      const std::string label = run_label(run, r.mode, single);
      if (std::find(c.runs.begin(), c.runs.end(), label) == c.runs.end()) {
        c.runs.push_back(label);
        if (default_base.empty() && r.mode == "baseline") default_base = label;
      }
      if (std::find(layers.begin(), layers.end(), r.layer) == layers.end()) layers.push_back(r.layer);
      if (!table.emplace(std::make_pair(label, r.layer), Entry{r.latency, r.dram_elements}).second)
        throw InputError("report: duplicate row for layer '" + r.layer + "' in run '" + label + "'");
    }
  }
  c.baseline = !baseline.empty() ? baseline : (!default_base.empty() ? default_base : c.runs.front());
  if (std::find(c.runs.begin(), c.runs.end(), c.baseline) == c.runs.end())
    throw InputError("report: baseline '" + c.baseline + "' is not among the runs");
  for (const auto& layer : layers) {
    auto base = table.find({c.baseline, layer});
    if (base == table.end()) continue;
    for (const auto& label : c.runs) {
      auto it = table.find({label, layer});
      if (it == table.end()) continue;
      c.rows.push_back({layer, label, it->second.latency, it->second.dram,
                        ratio(base->second.latency, it->second.latency), ratio(base->second.dram, it->second.dram)});
    }
  }
  return c;
}

inline std::string comparison_csv(const Comparison& c) {
  std::string out = std::string(kComparisonHeader) + "\n";
  for (const auto& r : c.rows) {
    out += r.layer + "," + r.run + "," + std::to_string(r.latency) + "," + std::to_string(r.dram_elements) + "," +
           io::format_fixed(r.speedup, 6) + "," + io::format_fixed(r.traffic_reduction, 6) + "\n";
  }
  return out;
}

inline std::vector<ComparisonRow> parse_comparison_csv(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kComparisonHeader) throw InputError(what + ": unexpected comparison header");
  std::vector<ComparisonRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = io::split_csv_line(line);
    if (c.size() != 6) throw InputError(what + ": expected 6 columns");
    try {
      rows.push_back({c[0], c[1], std::stoull(c[2]), std::stoull(c[3]), std::stod(c[4]), std::stod(c[5])});
    } catch (const std::logic_error&) {
      throw InputError(what + ": malformed number");
    }
  }
  return rows;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

inline std::string fmt(double v) { return io::format_fixed(v, 2); }

}  // namespace detail

// Grouped bars: one group per layer, one bar per run, height = speedup.
inline std::string speedup_svg(const Comparison& c) {
  static const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1"};
  std::vector<std::string> layers;
  double peak = 1.0;
  for (const auto& r : c.rows) {
    if (std::find(layers.begin(), layers.end(), r.layer) == layers.end()) layers.push_back(r.layer);
    peak = std::max(peak, r.speedup);
  }
  const double bar = 14.0, gap = 18.0, left = 60.0, top = 20.0, plot_h = 240.0;
  const double group_w = bar * static_cast<double>(c.runs.size()) + gap;
  const double width = left + group_w * static_cast<double>(layers.size()) + 160.0;
  const double height = top + plot_h + 90.0;
  const double scale = plot_h / (peak * 1.1);
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width) + "\" height=\"" +
                  detail::fmt(height) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + detail::fmt(width) + "\" height=\"" + detail::fmt(height) +
       "\" fill=\"white\"/>\n";
  const double base_y = top + plot_h;
  s += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(base_y) + "\" x2=\"" +
       detail::fmt(left + group_w * static_cast<double>(layers.size())) + "\" y2=\"" + detail::fmt(base_y) +
       "\" stroke=\"black\"/>\n";
  const double one_y = base_y - scale;
  s += "<line x1=\"" + detail::fmt(left) + "\" y1=\"" + detail::fmt(one_y) + "\" x2=\"" +
       detail::fmt(left + group_w * static_cast<double>(layers.size())) + "\" y2=\"" + detail::fmt(one_y) +
       "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  s += "<text x=\"" + detail::fmt(left - 6) + "\" y=\"" + detail::fmt(one_y + 3) + "\" text-anchor=\"end\">1.0x</text>\n";
  s += "<text x=\"" + detail::fmt(left) + "\" y=\"12\">speedup vs " + detail::xml_escape(c.baseline) + "</text>\n";
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const double gx = left + gap / 2 + group_w * static_cast<double>(li);
    for (const auto& r : c.rows) {
      if (r.layer != layers[li]) continue;
      const auto ri = static_cast<std::size_t>(std::find(c.runs.begin(), c.runs.end(), r.run) - c.runs.begin());
      const double h = r.speedup * scale;
      s += "<rect x=\"" + detail::fmt(gx + bar * static_cast<double>(ri)) + "\" y=\"" + detail::fmt(base_y - h) +
           "\" width=\"" + detail::fmt(bar - 2) + "\" height=\"" + detail::fmt(h) + "\" fill=\"" +
           kPalette[ri % std::size(kPalette)] + "\"><title>" + detail::xml_escape(r.layer + " " + r.run) + " " +
           io::format_fixed(r.speedup, 3) + "x</title></rect>\n";
    }
    const double lx = gx + bar * static_cast<double>(c.runs.size()) / 2;
    s += "<text x=\"" + detail::fmt(lx) + "\" y=\"" + detail::fmt(base_y + 12) + "\" text-anchor=\"end\" transform=\"rotate(-40 " +
         detail::fmt(lx) + " " + detail::fmt(base_y + 12) + ")\">" + detail::xml_escape(layers[li]) + "</text>\n";
  }
  const double kx = left + group_w * static_cast<double>(layers.size()) + 16;
  for (std::size_t ri = 0; ri < c.runs.size(); ++ri) {
    const double ky = top + 14.0 * static_cast<double>(ri);
    s += "<rect x=\"" + detail::fmt(kx) + "\" y=\"" + detail::fmt(ky) + "\" width=\"10\" height=\"10\" fill=\"" +
         kPalette[ri % std::size(kPalette)] + "\"/>\n";
    s += "<text x=\"" + detail::fmt(kx + 14) + "\" y=\"" + detail::fmt(ky + 9) + "\">" +
         detail::xml_escape(c.runs[ri]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace stereoaccel::report

#endif  // STEREOACCEL_REPORT_HPP_
