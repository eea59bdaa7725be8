#include "irkit/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "irkit/errors.hpp"

namespace irkit {

namespace {

std::size_t pixel_of(const GridSpec& spec, const NodeId& n) {
  return static_cast<std::size_t>(spec.row_of(n.y)) * spec.width + spec.column_of(n.x);
}

std::map<std::uint32_t, std::size_t> layer_positions(const PdnGraph& g) {
  std::map<std::uint32_t, std::size_t> pos;
  for (std::size_t i = 0; i < g.layers().size(); ++i) pos[g.layers()[i]] = i;
  return pos;
}

}  // namespace

ScalarGrid current_map(const PdnGraph& g, const GridSpec& spec) {
  ScalarGrid grid(spec.width, spec.height, "A");
  for (const auto& s : g.sinks()) grid[pixel_of(spec, g.node(s.node))] += s.current;
  return grid;
}

ScalarGrid effective_distance_map(const PdnGraph& g, const GridSpec& spec) {
  if (g.pads().empty()) throw Error("effective distance needs at least one pad");
  std::vector<std::pair<double, double>> pads;
  pads.reserve(g.pads().size());
  for (const auto& p : g.pads()) {
    const auto& id = g.node(p.node);
    pads.emplace_back(g.to_microns(id.x), g.to_microns(id.y));
  }
  ScalarGrid grid(spec.width, spec.height, "um");
  const double floor_d = spec.pixel_pitch / 2.0;
  for (int y = 0; y < spec.height; ++y) {
    const double cy = (y + 0.5) * spec.pixel_pitch;
    for (int x = 0; x < spec.width; ++x) {
      const double cx = (x + 0.5) * spec.pixel_pitch;
      double inv = 0.0;
      for (const auto& [px, py] : pads) inv += 1.0 / std::max(std::hypot(cx - px, cy - py), floor_d);
      grid.at(x, y) = 1.0 / inv;
    }
  }
  return grid;
}

ScalarGrid pdn_density_map(const PdnGraph& g, const GridSpec& spec) {
  ScalarGrid grid(spec.width, spec.height, "1");
  const auto stripes = extract_stripes(g);
  // Stamp per stripe so a stripe counts once per pixel.
  std::vector<std::int64_t> stamp(grid.size(), -1);
  for (std::size_t si = 0; si < stripes.stripes.size(); ++si) {
    const auto& s = stripes.stripes[si];
    for (std::size_t j = 0; j + 1 < s.size(); ++j) {
      rasterize_wire(g, spec, g.node(s.nodes[j]), g.node(s.nodes[j + 1]), [&](int x, int y) {
        const auto idx = static_cast<std::size_t>(y) * spec.width + x;
        if (stamp[idx] != static_cast<std::int64_t>(si)) {
          stamp[idx] = static_cast<std::int64_t>(si);
          grid[idx] += 1.0;
        }
      });
    }
  }
  const double peak = grid.max();
  if (peak > 0.0) {
    for (auto& v : grid.values()) v /= peak;
  }
  return grid;
}

WireResistanceMaps wire_resistance_maps(const PdnGraph& g, const GridSpec& spec) {
  WireResistanceMaps out;
  out.layers = g.layers();
  const auto pos = layer_positions(g);
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    out.wire.emplace_back(spec.width, spec.height, "ohm/um");
    out.via.emplace_back(spec.width, spec.height, "S");
  }
  for (const auto& e : g.edges()) {
    const auto& a = g.node(e.a);
    const auto& b = g.node(e.b);
    if (e.kind == EdgeKind::Wire) {
      const std::int64_t len_dbu = std::abs(a.x - b.x) + std::abs(a.y - b.y);
      const double per_um = e.resistance / g.to_microns(len_dbu);
      auto& grid = out.wire[pos.at(a.layer)];
      rasterize_wire(g, spec, a, b, [&](int x, int y) {
        grid.at(x, y) = std::max(grid.at(x, y), per_um);
      });
    } else {
      const auto p = pixel_of(spec, a);
      out.via[pos.at(a.layer)][p] += 1.0 / e.resistance;
      out.via[pos.at(b.layer)][p] += 1.0 / e.resistance;
    }
  }
  return out;
}

std::optional<std::vector<std::int32_t>> l1_distance_transform(std::span<const std::uint8_t> occupied,
                                                                int width, int height) {
  const auto total = static_cast<std::size_t>(width) * height;
  if (occupied.size() != total) throw DimensionError("occupancy size does not match grid");
  const std::int32_t inf = width + height + 1;
  std::vector<std::int32_t> d(total);
  bool any = false;
  for (std::size_t i = 0; i < total; ++i) {
    d[i] = occupied[i] ? 0 : inf;
    any = any || occupied[i];
  }
  if (!any) return std::nullopt;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      auto& v = d[static_cast<std::size_t>(y) * width + x];
      if (x > 0) v = std::min(v, d[static_cast<std::size_t>(y) * width + x - 1] + 1);
      if (y > 0) v = std::min(v, d[static_cast<std::size_t>(y - 1) * width + x] + 1);
    }
  }
  for (int y = height - 1; y >= 0; --y) {
    for (int x = width - 1; x >= 0; --x) {
      auto& v = d[static_cast<std::size_t>(y) * width + x];
      if (x + 1 < width) v = std::min(v, d[static_cast<std::size_t>(y) * width + x + 1] + 1);
      if (y + 1 < height) v = std::min(v, d[static_cast<std::size_t>(y + 1) * width + x] + 1);
    }
  }
  return d;
}

DistanceMaps resistive_distance_maps(const PdnGraph& g, const GridSpec& spec) {
  DistanceMaps out;
  out.layers = g.layers();
  const auto pos = layer_positions(g);
  const auto total = static_cast<std::size_t>(spec.width) * spec.height;
  std::vector<std::vector<std::uint8_t>> occ(out.layers.size(), std::vector<std::uint8_t>(total, 0));
  std::vector<std::uint8_t> via_occ(total, 0);
  for (const auto& e : g.edges()) {
    const auto& a = g.node(e.a);
    if (e.kind == EdgeKind::Wire) {
      auto& o = occ[pos.at(a.layer)];
      rasterize_wire(g, spec, a, g.node(e.b),
                     [&](int x, int y) { o[static_cast<std::size_t>(y) * spec.width + x] = 1; });
    } else {
      via_occ[pixel_of(spec, a)] = 1;
    }
  }

  const double sentinel = (spec.width + spec.height) * spec.pixel_pitch;
  auto to_grid = [&](const std::vector<std::uint8_t>& o, const std::string& what) {
    ScalarGrid grid(spec.width, spec.height, "um", sentinel);
    if (auto d = l1_distance_transform(o, spec.width, spec.height)) {
      for (std::size_t i = 0; i < total; ++i) grid[i] = (*d)[i] * spec.pixel_pitch;
    } else {
      out.diagnostics.push_back({DiagnosticKind::DegenerateLayer,
                                 what + " has no wire pixels; distance map set to grid diameter",
                                 kNoNode});
    }
    return grid;
  };
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    out.layer.push_back(to_grid(occ[i], "layer m" + std::to_string(out.layers[i])));
  }
  out.via = to_grid(via_occ, "via set");
  return out;
}

// ------------------------------------------------------------------ stack

void FeatureStack::add(std::string name, ScalarGrid grid) {
  if (!channels_.empty() && !channels_.front().grid.same_shape(grid)) {
    throw DimensionError("channel '" + name + "' does not match the stack's grid size");
  }
  FeatureChannel ch;
  ch.name = std::move(name);
  const auto vals = grid.values();
  const double lo = grid.min();
  const double hi = grid.max();
  if (lo == hi) {
    ch.mean = lo;
    ch.stddev = kMinStddev;
  } else {
    const double n = static_cast<double>(vals.size());
    ch.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : vals) ss += (v - ch.mean) * (v - ch.mean);
    ch.stddev = std::max(std::sqrt(ss / n), kMinStddev);
  }
  ch.grid = std::move(grid);
  channels_.push_back(std::move(ch));
}

const FeatureChannel* FeatureStack::find(std::string_view name) const {
  for (const auto& c : channels_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::vector<std::string> FeatureStack::names() const {
  std::vector<std::string> out;
  for (const auto& c : channels_) out.push_back(c.name);
  return out;
}

ScalarGrid FeatureStack::normalized(std::size_t i) const {
  const auto& c = channels_.at(i);
  ScalarGrid out(c.grid.width(), c.grid.height(), "1");
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (c.grid[k] - c.mean) / c.stddev;
  return out;
}

FeatureStack assemble_features(const PdnGraph& g, const GridSpec& spec, const HirdMaps& hird,
                               bool include_current) {
  FeatureStack stack;
  stack.add("pdn_density", pdn_density_map(g, spec));
  stack.add("eff_distance", effective_distance_map(g, spec));
  if (include_current) stack.add("current", current_map(g, spec));

  auto wr = wire_resistance_maps(g, spec);
  for (std::size_t i = 0; i < wr.layers.size(); ++i) {
    stack.add("wire_R_m" + std::to_string(wr.layers[i]), std::move(wr.wire[i]));
  }
  for (std::size_t i = 0; i < wr.layers.size(); ++i) {
    stack.add("via_C_" + std::to_string(wr.layers[i]), std::move(wr.via[i]));
  }
  auto rd = resistive_distance_maps(g, spec);
  for (std::size_t i = 0; i < rd.layers.size(); ++i) {
    stack.add("rdist_m" + std::to_string(rd.layers[i]), std::move(rd.layer[i]));
  }
  stack.add("rdist_via", std::move(rd.via));
  for (std::size_t i = 0; i < hird.layers.size(); ++i) {
    stack.add("hird_m" + std::to_string(hird.layers[i]), hird.maps[i]);
  }
  return stack;
}

std::vector<std::string> export_stack(const FeatureStack& stack, const std::string& dir, int size) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  std::ostringstream manifest;
  manifest.precision(17);
  for (const auto& c : stack.channels()) {
    const std::string file = c.name + ".sgrd";
    const auto path = (fs::path(dir) / file).string();
    if (size > 0) {
      write_sgrd_file(resize_bilinear(c.grid, size, size), path);
    } else {
      write_sgrd_file(c.grid, path);
    }
    written.push_back(path);
    manifest << c.name << ',' << file << ',' << c.mean << ',' << c.stddev << '\n';
  }
  const auto mpath = (fs::path(dir) / kManifestName).string();
  std::ofstream out(mpath);
  if (!out) throw Error("cannot write '" + mpath + "'");
  out << manifest.str();
  written.push_back(mpath);
  return written;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest '" + path + "'");
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    std::string mean;
    std::string sd;
    if (!std::getline(ss, e.name, ',') || !std::getline(ss, e.file, ',') ||
        !std::getline(ss, mean, ',') || !std::getline(ss, sd)) {
      throw Error("malformed manifest line '" + line + "'");
    }
    e.mean = std::stod(mean);
    e.stddev = std::stod(sd);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace irkit
