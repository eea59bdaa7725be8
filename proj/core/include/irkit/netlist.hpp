#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace irkit {

using NodeIndex = std::uint32_t;
inline constexpr NodeIndex kNoNode = 0xffffffffu;

inline constexpr int kDefaultDbuPerMicron = 2000;
inline constexpr double kDefaultVdd = 1.1;

// Physical location of a PDN node. Coordinates are database units.
struct NodeId {
  std::uint32_t net = 1;
  std::uint32_t layer = 1;  // 1 = lowest metal
  std::int64_t x = 0;
  std::int64_t y = 0;

  auto operator<=>(const NodeId&) const = default;
};

struct NodeIdHash {
  std::size_t operator()(const NodeId& n) const noexcept;
};

// n<net>_m<layer>_<x>_<y>
std::string format_node_name(const NodeId& n);
std::optional<NodeId> parse_node_name(std::string_view name);

enum class EdgeKind : std::uint8_t { Wire, Via };

struct ResistorEdge {
  NodeIndex a = kNoNode;
  NodeIndex b = kNoNode;
  double resistance = 0.0;  // ohms
  EdgeKind kind = EdgeKind::Wire;

  NodeIndex other(NodeIndex n) const { return n == a ? b : a; }
};

// Sink convention: current flows from the node to ground.
struct CurrentSource {
  NodeIndex node = kNoNode;
  double current = 0.0;  // amperes
};

struct VoltageSource {
  NodeIndex node = kNoNode;
  double voltage = kDefaultVdd;  // volts
};

struct Extent {
  std::int64_t min_x = 0;
  std::int64_t min_y = 0;
  std::int64_t max_x = 0;
  std::int64_t max_y = 0;
  bool empty = true;
};

// Returns the edge kind for a resistor joining a and b, or nullopt when the
// pair is neither a wire (same layer, one coordinate differs) nor a via
// (different layers, same x/y).
std::optional<EdgeKind> classify_edge(const NodeId& a, const NodeId& b);

// Immutable resistive network. Nodes are stored in canonical order
// (net, layer, x, y), so a NodeIndex is stable for a given node set
// regardless of the order the netlist listed them in.
class PdnGraph {
 public:
  class Builder;

  PdnGraph() = default;

  std::span<const NodeId> nodes() const { return nodes_; }
  std::span<const ResistorEdge> edges() const { return edges_; }
  std::span<const CurrentSource> sinks() const { return sinks_; }
  std::span<const VoltageSource> pads() const { return pads_; }

  const NodeId& node(NodeIndex i) const { return nodes_[i]; }
  std::size_t node_count() const { return nodes_.size(); }
  int dbu_per_micron() const { return dbu_per_micron_; }
  const Extent& extent() const { return extent_; }

  std::optional<NodeIndex> find(const NodeId& id) const;

  // Indices into edges() of every resistor touching node i.
  std::span<const std::uint32_t> incident(NodeIndex i) const {
    return {incident_.data() + incident_offset_[i],
            incident_offset_[i + 1] - incident_offset_[i]};
  }

  // Pad voltage shared by all sources; kDefaultVdd when there are no pads.
  double vdd() const { return vdd_; }

  // Distinct metal layers in ascending order.
  const std::vector<std::uint32_t>& layers() const { return layers_; }

  // Per-node summed sink current and pad flag.
  const std::vector<double>& node_current() const { return node_current_; }
  bool is_pad(NodeIndex i) const { return is_pad_[i] != 0; }

  double to_microns(std::int64_t dbu) const {
    return static_cast<double>(dbu) / static_cast<double>(dbu_per_micron_);
  }

  // Copy containing only nodes (and everything attached) on one net.
  PdnGraph restrict_to_net(std::uint32_t net) const;

 private:
  std::vector<NodeId> nodes_;
  std::vector<ResistorEdge> edges_;
  std::vector<CurrentSource> sinks_;
  std::vector<VoltageSource> pads_;
  int dbu_per_micron_ = kDefaultDbuPerMicron;
  Extent extent_;
  double vdd_ = kDefaultVdd;
  std::vector<std::uint32_t> layers_;
  std::vector<std::uint32_t> incident_offset_{0};
  std::vector<std::uint32_t> incident_;
  std::vector<double> node_current_;
  std::vector<std::uint8_t> is_pad_;
};

class PdnGraph::Builder {
 public:
  explicit Builder(int dbu_per_micron = kDefaultDbuPerMicron);

  // Throws GraphError on non-positive resistance or a pair that is neither
  // a wire nor a via.
  void add_resistor(const NodeId& a, const NodeId& b, double ohms);
  // Throws GraphError on negative current.
  void add_sink(const NodeId& n, double amps);
  // Throws GraphError on non-positive voltage or a voltage that disagrees
  // with an earlier source.
  void add_pad(const NodeId& n, double volts);

  PdnGraph build() &&;

 private:
  NodeIndex intern(const NodeId& n);

  int dbu_per_micron_;
  std::vector<NodeId> nodes_;
  std::unordered_map<NodeId, NodeIndex, NodeIdHash> index_;
  std::vector<ResistorEdge> edges_;
  std::vector<CurrentSource> sinks_;
  std::vector<VoltageSource> pads_;
};

// Netlist text. Grammar: '*' comments, blank lines, optional ".end",
//   R<id> <node> <node> <ohms>
//   I<id> <node> 0 <amps>
//   V<id> <node> 0 <volts>
PdnGraph parse_netlist(std::istream& in, int dbu_per_micron = kDefaultDbuPerMicron);
PdnGraph parse_netlist(std::string_view text, int dbu_per_micron = kDefaultDbuPerMicron);
PdnGraph read_netlist_file(const std::string& path, int dbu_per_micron = kDefaultDbuPerMicron);

// Emits R lines, then I lines, then V lines, then ".end". Values use the
// shortest representation that parses back to the same double.
void serialize_netlist(const PdnGraph& g, std::ostream& out);
std::string serialize_netlist(const PdnGraph& g);

// ---------------------------------------------------------------- stripes

enum class Axis : std::uint8_t { Horizontal, Vertical };

enum class PinKind : std::uint8_t { None = 0, Via = 1, Pad = 2, ViaAndPad = 3 };

inline bool is_pinned(PinKind k) { return k != PinKind::None; }

struct Stripe {
  std::uint32_t layer = 1;
  Axis axis = Axis::Horizontal;
  std::vector<NodeIndex> nodes;               // ascending in the varying coordinate
  std::vector<double> segment_resistances;    // nodes.size() - 1
  std::vector<std::uint32_t> wire_edges;      // edge index per segment
  std::vector<double> taps;                   // cell sink current per node
  std::vector<PinKind> pins;                  // upward via / pad marker per node

  std::size_t size() const { return nodes.size(); }
  bool anchored() const;
  std::vector<std::size_t> pin_indices() const;
};

enum class DiagnosticKind : std::uint8_t {
  DisconnectedSink,
  DanglingNode,
  DuplicateEdge,
  UnanchoredStripe,
  BranchNode,
  DegenerateLayer,
  NoPinnedNodes,
  StrandedCurrent,
};

std::string_view to_string(DiagnosticKind k);

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
  NodeIndex node = kNoNode;
};

struct StripeSet {
  std::vector<Stripe> stripes;
  // First stripe (by position in `stripes`) containing each node, or -1.
  // Sink current of a node is attached to this stripe only.
  std::vector<std::int32_t> owner;
  std::vector<Diagnostic> diagnostics;
};

// Splits all wire edges into maximal collinear chains. A node with more
// than one wire on either side, or wires of both axes on its layer, ends
// every chain through it (reported as BranchNode).
StripeSet extract_stripes(const PdnGraph& g);

// Empty result means the graph is clean.
std::vector<Diagnostic> validate(const PdnGraph& g);

}  // namespace irkit
