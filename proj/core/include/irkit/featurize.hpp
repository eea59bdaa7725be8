#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irkit/grid.hpp"
#include "irkit/hird.hpp"
#include "irkit/netlist.hpp"

namespace irkit {

// Sum of sink currents per pixel (amperes).
ScalarGrid current_map(const PdnGraph& g, const GridSpec& spec);

// Harmonic combination of Euclidean pixel-centre-to-pad distances, each
// clamped below at pitch / 2 (microns). Throws Error when there are no pads.
ScalarGrid effective_distance_map(const PdnGraph& g, const GridSpec& spec);

// Number of distinct stripes crossing each pixel over the per-grid maximum.
ScalarGrid pdn_density_map(const PdnGraph& g, const GridSpec& spec);

struct WireResistanceMaps {
  std::vector<std::uint32_t> layers;
  std::vector<ScalarGrid> wire;  // ohms per micron, max on overlap
  std::vector<ScalarGrid> via;   // siemens, summed over vias landing on the layer
};

WireResistanceMaps wire_resistance_maps(const PdnGraph& g, const GridSpec& spec);

struct DistanceMaps {
  std::vector<std::uint32_t> layers;
  std::vector<ScalarGrid> layer;  // microns to nearest wire pixel of that layer
  ScalarGrid via;                 // microns to nearest via pixel
  std::vector<Diagnostic> diagnostics;
};

DistanceMaps resistive_distance_maps(const PdnGraph& g, const GridSpec& spec);

// Exact L1 distance (in pixels) to the nearest occupied pixel, by a forward
// and a backward chamfer sweep. Returns nullopt when nothing is occupied.
std::optional<std::vector<std::int32_t>> l1_distance_transform(std::span<const std::uint8_t> occupied,
                                                                int width, int height);

// Pixels whose centre lies on the segment between two same-layer nodes.
// A segment too short to cover any centre marks the pixel of its midpoint.
template <class F>
void rasterize_wire(const PdnGraph& g, const GridSpec& spec, const NodeId& a, const NodeId& b, F&& paint);

struct FeatureChannel {
  std::string name;
  ScalarGrid grid;
  double mean = 0.0;
  double stddev = 1.0;
};

inline constexpr double kMinStddev = 1e-12;

class FeatureStack {
 public:
  void add(std::string name, ScalarGrid grid);

  std::size_t size() const { return channels_.size(); }
  const std::vector<FeatureChannel>& channels() const { return channels_; }
  const FeatureChannel* find(std::string_view name) const;
  std::vector<std::string> names() const;

  // (value - mean) / stddev of channel i.
  ScalarGrid normalized(std::size_t i) const;

 private:
  std::vector<FeatureChannel> channels_;
};

// Channel order: pdn_density, eff_distance, [current], wire_R_m*, via_C_*,
// rdist_m*, rdist_via, hird_m*. Throws DimensionError on mismatched grids.
FeatureStack assemble_features(const PdnGraph& g, const GridSpec& spec, const HirdMaps& hird,
                               bool include_current = false);

struct ManifestEntry {
  std::string name;
  std::string file;
  double mean = 0.0;
  double stddev = 1.0;
};

inline constexpr const char* kManifestName = "features.manifest";

// Writes <dir>/<name>.sgrd per channel (resized to size x size when size > 0)
// and <dir>/features.manifest with "name,file,mean,std" lines. Returns the
// paths written.
std::vector<std::string> export_stack(const FeatureStack& stack, const std::string& dir, int size = 0);

std::vector<ManifestEntry> read_manifest(const std::string& path);

// ---------------------------------------------------------------- inline

template <class F>
void rasterize_wire(const PdnGraph& g, const GridSpec& spec, const NodeId& a, const NodeId& b, F&& paint) {
  const bool horiz = a.y == b.y;
  const std::int64_t lo_dbu = horiz ? std::min(a.x, b.x) : std::min(a.y, b.y);
  const std::int64_t hi_dbu = horiz ? std::max(a.x, b.x) : std::max(a.y, b.y);
  const double lo = g.to_microns(lo_dbu) / spec.pixel_pitch;
  const double hi = g.to_microns(hi_dbu) / spec.pixel_pitch;
  const int limit = horiz ? spec.width : spec.height;
  const int fixed_px = horiz ? spec.row_of(a.y) : spec.column_of(a.x);
  // Centres c + 0.5 inside [lo, hi].
  int first = static_cast<int>(std::ceil(lo - 0.5 - 1e-9));
  int last = static_cast<int>(std::floor(hi - 0.5 + 1e-9));
  first = std::max(first, 0);
  last = std::min(last, limit - 1);
  if (first > last) {
    const int mid = std::clamp(static_cast<int>(std::floor((lo + hi) / 2.0)), 0, limit - 1);
    first = last = mid;
  }
  for (int c = first; c <= last; ++c) {
    if (horiz) {
      paint(c, fixed_px);
    } else {
      paint(fixed_px, c);
    }
  }
}

}  // namespace irkit
