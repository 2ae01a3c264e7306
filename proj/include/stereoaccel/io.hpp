// Copyright 2026 The stereoaccel Authors
// SPDX-License-Identifier: Apache-2.0
//
// File formats: JSON network, hardware, schedule and transform manifests
// (each with a top-level "format_version"), PGM images with a JSON sidecar for
// disparity maps, and the fixed-column model report CSV.

#ifndef STEREOACCEL_IO_HPP_
#define STEREOACCEL_IO_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stereoaccel/deconv.hpp"
#include "stereoaccel/error.hpp"
#include "stereoaccel/ism.hpp"
#include "stereoaccel/perfmodel.hpp"

namespace stereoaccel::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(what + ": " + e.what());
  }
}

namespace detail {

inline void check_version(const Json& j, const std::string& what) {
  if (!j.is_object()) throw InputError(what + ": top level must be an object");
  if (!j.contains("format_version")) throw InputError(what + ": missing 'format_version'");
  if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kFormatVersion)
    throw InputError(what + ": unsupported format_version (expected " + std::to_string(kFormatVersion) + ")");
}

inline void check_fields(const Json& j, const std::set<std::string>& allowed, bool strict, const std::string& where) {
  if (!strict) return;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw InputError(where + "unknown field '" + it.key() + "'");
}

inline const Json& field(const Json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw InputError(where + "missing field '" + name + "'");
  return j[name];
}

inline std::uint64_t get_uint(const Json& j, const char* name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw InputError(where + "field '" + name + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline Shape get_shape(const Json& j, const char* name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (!v.is_array()) throw InputError(where + "field '" + name + "' must be an array of extents");
  Shape s;
  for (const Json& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
      throw InputError(where + "field '" + name + "' must hold non-negative integers");
    s.push_back(e.get<std::size_t>());
  }
  return s;
}

inline bool get_bool(const Json& j, const char* name, const std::string& where, bool fallback) {
  if (!j.contains(name)) return fallback;
  if (!j[name].is_boolean()) throw InputError(where + "field '" + name + "' must be true or false");
  return j[name].get<bool>();
}

inline double get_positive(const Json& j, const char* name, const std::string& where, double fallback) {
  if (!j.contains(name)) return fallback;
  const Json& v = j[name];
  if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw InputError(where + "field '" + name + "' must be a number");
  return v.get<double>();
}

// Integral values print without a fraction so files stay stable.
inline Json number(double v) {
  if (std::isinf(v)) return "inf";
  if (v == std::floor(v) && std::fabs(v) < 9e15) return static_cast<std::int64_t>(v);
  return v;
}

}  // namespace detail

// ---- layers and networks ----

inline LayerKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "conv") return LayerKind::kConv;
  if (s == "deconv") return LayerKind::kDeconv;
  throw InputError(where + "field 'kind' must be \"conv\" or \"deconv\", got \"" + s + "\"");
}

inline Json layer_to_json(const LayerSpec& l) {
  Json j;
  j["name"] = l.name;
  j["kind"] = to_string(l.kind);
  j["kernel"] = l.kernel;
  j["in_channels"] = l.in_channels;
  j["out_channels"] = l.out_channels;
  j["ifmap"] = l.ifmap;
  j["stride"] = l.stride;
  return j;
}

inline LayerSpec layer_from_json(const Json& j, bool strict, std::size_t index) {
  std::string where = "layer #" + std::to_string(index) + ": ";
  if (!j.is_object()) throw InputError(where + "must be an object");
  LayerSpec l;
  const Json& name = detail::field(j, "name", where);
  if (!name.is_string() || name.get<std::string>().empty()) throw InputError(where + "field 'name' must be a non-empty string");
  l.name = name.get<std::string>();
  where = "layer '" + l.name + "': ";
  detail::check_fields(j, {"name", "kind", "kernel", "in_channels", "out_channels", "ifmap", "stride"}, strict, where);
  const Json& kind = detail::field(j, "kind", where);
  if (!kind.is_string()) throw InputError(where + "field 'kind' must be a string");
  l.kind = parse_kind(kind.get<std::string>(), where);
  l.kernel = detail::get_shape(j, "kernel", where);
  l.in_channels = detail::get_uint(j, "in_channels", where);
  l.out_channels = detail::get_uint(j, "out_channels", where);
  l.ifmap = detail::get_shape(j, "ifmap", where);
  l.stride = j.contains("stride") ? detail::get_uint(j, "stride", where) : (l.kind == LayerKind::kDeconv ? 2 : 1);
  l.validate();
  return l;
}

// Ranks must agree across the network; with `strict`, each layer's input
// channels must also equal the previous layer's output channels.
inline void check_network(const std::vector<LayerSpec>& layers, bool strict) {
  if (layers.empty()) throw InputError("network has no layers");
  std::set<std::string> names;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (!names.insert(l.name).second) throw InputError("layer '" + l.name + "': duplicate layer name");
    if (i == 0) continue;
    const LayerSpec& p = layers[i - 1];
    if (l.rank() != p.rank())
      throw InputError("layer '" + l.name + "': field 'ifmap' rank differs from layer '" + p.name + "'");
    if (strict && l.in_channels != p.out_channels) {
      throw InputError("layer '" + l.name + "': field 'in_channels' is " + std::to_string(l.in_channels) +
                       " but layer '" + p.name + "' produces " + std::to_string(p.out_channels));
    }
  }
}

inline Json network_to_json(const std::vector<LayerSpec>& layers) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["layers"] = Json::array();
  for (const auto& l : layers) j["layers"].push_back(layer_to_json(l));
  return j;
}

inline std::vector<LayerSpec> network_from_json(const Json& j, bool strict) {
  detail::check_version(j, "network");
  detail::check_fields(j, {"format_version", "layers"}, strict, "network: ");
  if (!j.contains("layers") || !j["layers"].is_array()) throw InputError("network: 'layers' must be an array");
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < j["layers"].size(); ++i) layers.push_back(layer_from_json(j["layers"][i], strict, i));
  check_network(layers, strict);
  return layers;
}

inline std::vector<LayerSpec> read_network(const std::filesystem::path& path, bool strict = false) {
  return network_from_json(parse_json(read_text(path), path.string()), strict);
}

inline void write_network(const std::filesystem::path& path, const std::vector<LayerSpec>& layers) {
  write_text(path, dump(network_to_json(layers)));
}

// ---- hardware ----

inline Json hardware_to_json(const HardwareConfig& hw) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["pe_rows"] = hw.pe_rows;
  j["pe_cols"] = hw.pe_cols;
  j["buffer_capacity"] = hw.buffer_capacity;
  j["bandwidth"] = detail::number(hw.bandwidth);
  j["double_buffered"] = hw.double_buffered;
  j["weights_include_input_channels"] = hw.weights_include_input_channels;
  j["bytes_per_element"] = detail::number(hw.bytes_per_element);
  return j;
}

inline HardwareConfig hardware_from_json(const Json& j, bool strict) {
  const std::string where = "hardware: ";
  detail::check_version(j, "hardware");
  detail::check_fields(j,
                       {"format_version", "pe_rows", "pe_cols", "buffer_capacity", "bandwidth", "double_buffered",
                        "weights_include_input_channels", "bytes_per_element"},
                       strict, where);
  HardwareConfig hw;
  hw.pe_rows = detail::get_uint(j, "pe_rows", where);
  hw.pe_cols = detail::get_uint(j, "pe_cols", where);
  hw.buffer_capacity = detail::get_uint(j, "buffer_capacity", where);
  hw.bandwidth = detail::get_positive(j, "bandwidth", where, hw.bandwidth);
  hw.double_buffered = detail::get_bool(j, "double_buffered", where, hw.double_buffered);
  hw.weights_include_input_channels =
      detail::get_bool(j, "weights_include_input_channels", where, hw.weights_include_input_channels);
  hw.bytes_per_element = detail::get_positive(j, "bytes_per_element", where, hw.bytes_per_element);
  hw.validate();
  return hw;
}

inline HardwareConfig read_hardware(const std::filesystem::path& path, bool strict = false) {
  return hardware_from_json(parse_json(read_text(path), path.string()), strict);
}

inline void write_hardware(const std::filesystem::path& path, const HardwareConfig& hw) {
  write_text(path, dump(hardware_to_json(hw)));
}

// ---- schedules ----

inline Json schedule_to_json(const LayerSpec& layer, const std::string& mode, const TileSchedule& s) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["layer"] = layer_to_json(layer);
  j["mode"] = mode;
  j["beta"] = s.beta;
  j["rounds"] = Json::array();
  for (const auto& r : s.rounds) {
    Json jr;
    jr["origin"] = r.tile_origin;
    jr["tile"] = r.tile;
    jr["filters"] = r.filters;
    j["rounds"].push_back(std::move(jr));
  }
  return j;
}

struct ScheduleFile {
  LayerSpec layer;
  std::string mode;
  TileSchedule schedule;
};

inline ScheduleFile schedule_from_json(const Json& j, bool strict) {
  detail::check_version(j, "schedule");
  detail::check_fields(j, {"format_version", "layer", "mode", "beta", "rounds"}, strict, "schedule: ");
  ScheduleFile f;
  f.layer = layer_from_json(detail::field(j, "layer", "schedule: "), strict, 0);
  const std::string where = "schedule for layer '" + f.layer.name + "': ";
  const Json& mode = detail::field(j, "mode", where);
  if (!mode.is_string()) throw InputError(where + "field 'mode' must be a string");
  f.mode = mode.get<std::string>();
  const std::uint64_t beta = detail::get_uint(j, "beta", where);
  if (beta > 1) throw InputError(where + "field 'beta' must be 0 or 1");
  f.schedule.beta = static_cast<int>(beta);
  const Json& rounds = detail::field(j, "rounds", where);
  if (!rounds.is_array()) throw InputError(where + "field 'rounds' must be an array");
  for (const Json& jr : rounds) {
    detail::check_fields(jr, {"origin", "tile", "filters"}, strict, where + "round: ");
    RoundPlan r;
    r.tile_origin = detail::get_shape(jr, "origin", where);
    r.tile = detail::get_shape(jr, "tile", where);
    for (std::size_t c : detail::get_shape(jr, "filters", where)) r.filters.push_back(c);
    f.schedule.rounds.push_back(std::move(r));
  }
  return f;
}

inline ScheduleFile read_schedule(const std::filesystem::path& path, bool strict = false) {
  return schedule_from_json(parse_json(read_text(path), path.string()), strict);
}

// ---- transform manifest ----

inline Json transform_manifest(const std::vector<LayerSpec>& layers) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["layers"] = Json::array();
  for (const auto& l : layers) {
    Json jl;
    jl["name"] = l.name;
    jl["kind"] = to_string(l.kind);
    jl["kernel"] = l.kernel;
    jl["sub_kernels"] = Json::array();
    if (l.kind == LayerKind::kDeconv) {
      const SubKernelSet set = decompose_shape(l.kernel);
      for (const auto& s : set.kernels) {
        Json js;
        js["phase"] = s.phase;
        js["delta"] = std::vector<int>(s.delta.begin(), s.delta.end());
        js["extents"] = s.extents;
        js["elements"] = s.elements();
        jl["sub_kernels"].push_back(std::move(js));
      }
      const MacCount macs = count_deconv_macs(l.ifmap, l.kernel, kDeconvFactor, true);
      jl["dense_macs_per_channel_pair"] = macs.total;
      jl["structural_zero_macs_per_channel_pair"] = macs.structural_zero;
    }
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

// ---- PGM ----

struct Pgm {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint32_t maxval = 255;
  std::vector<std::uint16_t> pixels;
};

namespace detail {

inline std::string pgm_token(const std::string& s, std::size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  return s.substr(start, pos - start);
}

inline std::uint64_t pgm_number(const std::string& s, std::size_t& pos, const std::string& what) {
  const std::string tok = pgm_token(s, pos);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw InputError(what + ": malformed PGM header or pixel value '" + tok + "'");
  return std::stoull(tok);
}

}  // namespace detail

inline Pgm read_pgm(const std::filesystem::path& path) {
  const std::string s = read_text(path);
  const std::string what = path.string();
  std::size_t pos = 0;
  const std::string magic = detail::pgm_token(s, pos);
  if (magic != "P2" && magic != "P5") throw InputError(what + ": not a P2 or P5 PGM");
  Pgm p;
  p.width = detail::pgm_number(s, pos, what);
  p.height = detail::pgm_number(s, pos, what);
  const std::uint64_t maxval = detail::pgm_number(s, pos, what);
  if (p.width == 0 || p.height == 0) throw InputError(what + ": PGM extents must be positive");
  if (maxval == 0 || maxval > 65535) throw InputError(what + ": PGM maxval must be in 1..65535");
  p.maxval = static_cast<std::uint32_t>(maxval);
  const std::size_t n = p.width * p.height;
  p.pixels.resize(n);
  if (magic == "P2") {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t v = detail::pgm_number(s, pos, what);
      if (v > maxval) throw InputError(what + ": pixel exceeds maxval");
      p.pixels[i] = static_cast<std::uint16_t>(v);
    }
  } else {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    if (s.size() < pos + n * bpp) throw InputError(what + ": truncated PGM raster");
    for (std::size_t i = 0; i < n; ++i) {
      const auto* b = reinterpret_cast<const unsigned char*>(s.data() + pos + i * bpp);
      const std::uint16_t v = bpp == 2 ? static_cast<std::uint16_t>(b[0] << 8 | b[1]) : b[0];
      if (v > maxval) throw InputError(what + ": pixel exceeds maxval");
      p.pixels[i] = v;
    }
  }
  return p;
}

inline std::string encode_pgm(const Pgm& p, bool binary) {
  std::string out = (binary ? "P5\n" : "P2\n") + std::to_string(p.width) + " " + std::to_string(p.height) + "\n" +
                    std::to_string(p.maxval) + "\n";
  if (binary) {
    for (std::uint16_t v : p.pixels) {
      if (p.maxval > 255) out.push_back(static_cast<char>(v >> 8));
      out.push_back(static_cast<char>(v & 0xff));
    }
  } else {
    for (std::size_t y = 0; y < p.height; ++y) {
      for (std::size_t x = 0; x < p.width; ++x) {
        if (x) out.push_back(' ');
        out += std::to_string(p.pixels[y * p.width + x]);
      }
      out.push_back('\n');
    }
  }
  return out;
}

inline void write_pgm(const std::filesystem::path& path, const Pgm& p, bool binary = true) {
  write_text(path, encode_pgm(p, binary));
}

inline ism::Frame frame_from_pgm(const Pgm& p) {
  ism::Frame f(p.width, p.height);
  for (std::size_t i = 0; i < p.pixels.size(); ++i) f.luma[i] = static_cast<float>(p.pixels[i]) / static_cast<float>(p.maxval);
  return f;
}

inline Pgm frame_to_pgm(const ism::Frame& f, std::uint32_t maxval = 255) {
  Pgm p{f.width, f.height, maxval, std::vector<std::uint16_t>(f.luma.size())};
  for (std::size_t i = 0; i < f.luma.size(); ++i) {
    const float v = std::clamp(f.luma[i], 0.0f, 1.0f);
    p.pixels[i] = static_cast<std::uint16_t>(std::lround(v * static_cast<float>(maxval)));
  }
  return p;
}

inline ism::Frame read_frame(const std::filesystem::path& path) { return frame_from_pgm(read_pgm(path)); }

// Disparity maps are 16-bit PGMs holding d * scale, with `invalid` marking
// pixels without a disparity; both live in "<image>.json".
struct DisparityEncoding {
  std::uint32_t scale = 1;
  std::uint32_t invalid = 65535;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& image) {
  return std::filesystem::path(image.string() + ".json");
}

inline void write_disparity(const std::filesystem::path& path, const ism::DisparityMap& m,
                            DisparityEncoding enc = {}, bool binary = true) {
  Pgm p{m.width, m.height, 65535, std::vector<std::uint16_t>(m.d.size())};
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x) {
      const std::size_t i = y * m.width + x;
      if (!m.valid(x, y)) {
        p.pixels[i] = static_cast<std::uint16_t>(enc.invalid);
        continue;
      }
      const std::uint64_t v = static_cast<std::uint64_t>(m.d[i]) * enc.scale;
      if (v >= enc.invalid || v > 65535) throw InputError(path.string() + ": disparity too large for 16-bit encoding");
      p.pixels[i] = static_cast<std::uint16_t>(v);
    }
  write_pgm(path, p, binary);
  Json j;
  j["format_version"] = kFormatVersion;
  j["scale"] = enc.scale;
  j["invalid"] = enc.invalid;
  write_text(sidecar_path(path), dump(j));
}

inline ism::DisparityMap read_disparity(const std::filesystem::path& path) {
  DisparityEncoding enc;
  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    const Json j = parse_json(read_text(side), side.string());
    detail::check_version(j, side.string());
    enc.scale = static_cast<std::uint32_t>(detail::get_uint(j, "scale", side.string() + ": "));
    enc.invalid = static_cast<std::uint32_t>(detail::get_uint(j, "invalid", side.string() + ": "));
    if (enc.scale == 0) throw InputError(side.string() + ": scale must be positive");
  }
  const Pgm p = read_pgm(path);
  ism::DisparityMap m(p.width, p.height);
  for (std::size_t i = 0; i < p.pixels.size(); ++i) {
    const std::uint32_t v = p.pixels[i];
    m.d[i] = v == enc.invalid ? ism::DisparityMap::kInvalid
                              : static_cast<std::int32_t>((v + enc.scale / 2) / enc.scale);
  }
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x)
      if (!m.valid(x, y)) m.at(x, y) = ism::DisparityMap::kInvalid;
  return m;
}

// ---- model report CSV ----

inline const char* kModelCsvHeader =
    "layer,mode,beta,rounds,L_cycles,lc_cycles,lm_cycles,dIF,dW,dOF,dram_elements,dram_bytes,macs,utilization";

struct ModelRow {
  std::string layer;
  std::string mode;
  int beta = 1;
  std::uint64_t rounds = 0;
  std::uint64_t latency = 0;
  std::uint64_t compute = 0;
  std::uint64_t memory = 0;
  std::uint64_t d_if = 0;
  std::uint64_t d_w = 0;
  std::uint64_t d_of = 0;
  std::uint64_t dram_elements = 0;
  double dram_bytes = 0.0;
  std::uint64_t macs = 0;
  double utilization = 0.0;
};

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string model_row_csv(const ModelRow& r) {
  std::ostringstream s;
  s << r.layer << ',' << r.mode << ',' << r.beta << ',' << r.rounds << ',' << r.latency << ',' << r.compute << ','
    << r.memory << ',' << r.d_if << ',' << r.d_w << ',' << r.d_of << ',' << r.dram_elements << ','
    << format_fixed(r.dram_bytes, 6) << ',' << r.macs << ',' << format_fixed(r.utilization, 6) << '\n';
  return s.str();
}

inline std::string model_csv(const std::vector<ModelRow>& rows) {
  std::string out = std::string(kModelCsvHeader) + "\n";
  for (const auto& r : rows) out += model_row_csv(r);
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::vector<ModelRow> parse_model_csv(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kModelCsvHeader) throw InputError(what + ": unexpected model CSV header");
  std::vector<ModelRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 14) throw InputError(what + ":" + std::to_string(lineno) + ": expected 14 columns");
    try {
      ModelRow r;
      r.layer = c[0];
      r.mode = c[1];
      r.beta = std::stoi(c[2]);
      r.rounds = std::stoull(c[3]);
      r.latency = std::stoull(c[4]);
      r.compute = std::stoull(c[5]);
      r.memory = std::stoull(c[6]);
      r.d_if = std::stoull(c[7]);
      r.d_w = std::stoull(c[8]);
      r.d_of = std::stoull(c[9]);
      r.dram_elements = std::stoull(c[10]);
      r.dram_bytes = std::stod(c[11]);
      r.macs = std::stoull(c[12]);
      r.utilization = std::stod(c[13]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw InputError(what + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

inline std::vector<ModelRow> read_model_csv(const std::filesystem::path& path) {
  return parse_model_csv(read_text(path), path.string());
}

}  // namespace stereoaccel::io

#endif  // STEREOACCEL_IO_HPP_
