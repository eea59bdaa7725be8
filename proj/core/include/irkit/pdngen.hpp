#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "irkit/netlist.hpp"

namespace irkit {

struct LayerSpec {
  std::uint32_t index = 1;
  Axis axis = Axis::Horizontal;
  double pitch_um = 10.0;
  double ohm_per_um = 0.05;
};

enum class PadRule : std::uint8_t { Grid, Random, StripeEnds };
enum class SinkDistribution : std::uint8_t { Uniform, Clustered };

struct GenConfig {
  double chip_width_um = 100.0;
  double chip_height_um = 100.0;
  std::vector<LayerSpec> layers{{1, Axis::Horizontal, 5.0, 0.08},
                                {2, Axis::Vertical, 10.0, 0.04},
                                {3, Axis::Horizontal, 20.0, 0.02}};
  double via_resistance = 0.5;  // ohms
  int pad_count = 4;
  PadRule pad_rule = PadRule::Grid;
  int sink_count = 200;
  double current_min = 1e-5;  // amperes
  double current_max = 1e-4;
  SinkDistribution distribution = SinkDistribution::Uniform;
  int cluster_count = 3;
  double cluster_sigma_um = 10.0;
  double irregularity = 0.0;  // fraction of stripes dropped per layer
  double tap_step_um = 0.0;   // extra layer-1 nodes every tap_step microns
  double vdd = kDefaultVdd;
  int dbu_per_micron = kDefaultDbuPerMicron;
  std::uint64_t seed = 1;

  // Throws ConfigError describing the first violated constraint.
  void validate() const;
};

// key=value lines, '#' comments. Repeated "layer=<index>,<H|V>,<pitch_um>,<ohm_per_um>"
// lines replace the default stack. Throws ConfigError.
GenConfig parse_gen_config(std::istream& in);
GenConfig read_gen_config(const std::string& path);
std::string to_config_text(const GenConfig& cfg);

// Deterministic in cfg.seed. Throws ConfigError when the configuration
// leaves no sink connected to a pad.
PdnGraph generate(const GenConfig& cfg);

}  // namespace irkit
