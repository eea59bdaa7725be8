#pragma once

// Hypothetical IR drop distillation.
//
// Each metal stripe is solved on its own in linear time: upward vias and
// pads act as ideal sources, sinks and current arriving from the layer
// below act as taps. The bottom-up pass hands every pin's current to the
// layer above; the top-down pass then walks back down, anchoring each
// stripe's pins at the voltage seen through its vias and interpolating the
// nodes in between by resistive division.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "irkit/grid.hpp"
#include "irkit/netlist.hpp"

namespace irkit {

// Contiguous node range of a stripe bounded by one or two pins.
struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;              // inclusive
  std::vector<std::size_t> pinned;  // subset of {start, end}, size 1 or 2

  bool operator==(const Segment&) const = default;
};

// Throws Error("unanchored stripe") when pins is empty.
std::vector<Segment> segment_stripe(std::size_t node_count, std::span<const std::size_t> pins);

struct StripeProblem {
  std::span<const double> segment_resistances;  // ohms, node_count - 1
  std::span<const std::size_t> pins;            // ascending node indices
  std::span<const double> pin_voltages;         // aligned with pins
  std::span<const double> taps;                 // amperes per node
  std::span<const double> via_resistance;       // ohms per node; empty = no vias
};

struct StripeSolution {
  std::vector<double> voltage;                // V_n
  std::vector<double> span_current;           // current k -> k+1, size N-1
  std::vector<double> pin_current;            // current supplied by each pin, 0 elsewhere
  std::vector<double> via_drop;               // pin_current * via resistance
  std::vector<double> equivalent_resistance;  // to the segment's pins, 0 at pins
  std::uint64_t operations = 0;               // loop-body count, for complexity checks
};

// Superposition solve of one stripe. Exact for an isolated chain whose pins
// are held at the given voltages. Throws Error on a non-positive segment
// resistance, bad pin indices, or an empty pin set.
StripeSolution localized_solve(const StripeProblem& p);

struct BottomUpResult {
  StripeSet stripes;
  // Aligned with stripes.stripes. Pins are held at 0 V, so each voltage is
  // minus the node's drop relative to its pins.
  std::vector<StripeSolution> solutions;
  std::vector<std::uint8_t> degenerate;   // stripe had no pin
  std::vector<double> inflow;             // current arriving at each node from below
  std::vector<double> pin_current;        // summed over stripes, per node
  std::vector<double> via_drop;           // per node with upward vias
  std::vector<double> pad_current;        // current drawn from each pad node
  std::vector<Diagnostic> diagnostics;
  double vdd = kDefaultVdd;
};

// Layers are processed in ascending order with every upward via and pad
// treated as an ideal source.
BottomUpResult bottom_up_pass(const PdnGraph& g);

struct TopDownState {
  std::vector<double> drop;           // vdd - voltage, carried without cancellation
  std::vector<double> upstream_drop;  // vdd - upstream
  std::vector<double> voltage;       // propagated node voltage
  std::vector<double> interpolated;  // resistive division over the anchors
  std::vector<double> pin_voltage;   // NaN for nodes that are not pinned
  // Voltage above each node before its own layer's via and wire drops,
  // divided over the same anchors. Drives the incremental map mode.
  std::vector<double> upstream;
  std::vector<std::array<NodeIndex, 2>> anchors;  // N_p; kNoNode when absent
  std::vector<Diagnostic> diagnostics;
  double vdd = kDefaultVdd;
};

TopDownState top_down_pass(const PdnGraph& g, const BottomUpResult& bottom_up);

enum class HirdMapMode : std::uint8_t {
  Cumulative,   // vdd - V: total drop seen at that layer
  Incremental,  // drop added by the layer and its vias to the layer above
};

struct HirdMaps {
  std::vector<std::uint32_t> layers;
  std::vector<ScalarGrid> maps;  // volts, aligned with layers
  std::vector<Diagnostic> diagnostics;
};

HirdMaps hird_maps(const PdnGraph& g, const BottomUpResult& bottom_up, const TopDownState& state,
                   const GridSpec& spec, HirdMapMode mode = HirdMapMode::Cumulative);

struct HirdAnalysis {
  BottomUpResult bottom_up;
  TopDownState top_down;
  HirdMaps maps;
};

HirdAnalysis run_hird(const PdnGraph& g, const GridSpec& spec,
                      HirdMapMode mode = HirdMapMode::Cumulative);

}  // namespace irkit
