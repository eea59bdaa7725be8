#include "irkit/netlist.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "irkit/errors.hpp"

namespace irkit {

std::size_t NodeIdHash::operator()(const NodeId& n) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  mix(n.net);
  mix(n.layer);
  mix(static_cast<std::uint64_t>(n.x));
  mix(static_cast<std::uint64_t>(n.y));
  return static_cast<std::size_t>(h);
}

std::string format_node_name(const NodeId& n) {
  std::string s;
  s.reserve(32);
  s += 'n';
  s += std::to_string(n.net);
  s += "_m";
  s += std::to_string(n.layer);
  s += '_';
  s += std::to_string(n.x);
  s += '_';
  s += std::to_string(n.y);
  return s;
}

namespace {

template <class T>
bool parse_uint(std::string_view s, T& out) {
  if (s.empty() || s.front() == '-' || s.front() == '+') return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::optional<NodeId> parse_node_name(std::string_view name) {
  if (name.size() < 2 || name.front() != 'n') return std::nullopt;
  name.remove_prefix(1);
  std::string_view parts[4];
  for (int i = 0; i < 4; ++i) {
    auto pos = name.find('_');
    if (i < 3) {
      if (pos == std::string_view::npos) return std::nullopt;
      parts[i] = name.substr(0, pos);
      name.remove_prefix(pos + 1);
    } else {
      if (pos != std::string_view::npos) return std::nullopt;
      parts[i] = name;
    }
  }
  if (parts[1].size() < 2 || parts[1].front() != 'm') return std::nullopt;
  parts[1].remove_prefix(1);

  NodeId id;
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  if (!parse_uint(parts[0], id.net) || !parse_uint(parts[1], id.layer) ||
      !parse_uint(parts[2], x) || !parse_uint(parts[3], y)) {
    return std::nullopt;
  }
  if (id.layer < 1 || x > static_cast<std::uint64_t>(INT64_MAX) ||
      y > static_cast<std::uint64_t>(INT64_MAX)) {
    return std::nullopt;
  }
  id.x = static_cast<std::int64_t>(x);
  id.y = static_cast<std::int64_t>(y);
  return id;
}

std::optional<EdgeKind> classify_edge(const NodeId& a, const NodeId& b) {
  if (a.net != b.net) return std::nullopt;
  if (a.layer == b.layer) {
    const bool dx = a.x != b.x;
    const bool dy = a.y != b.y;
    if (dx != dy) return EdgeKind::Wire;
    return std::nullopt;
  }
  if (a.x == b.x && a.y == b.y) return EdgeKind::Via;
  return std::nullopt;
}

// ------------------------------------------------------------------ graph

std::optional<NodeIndex> PdnGraph::find(const NodeId& id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end() || *it != id) return std::nullopt;
  return static_cast<NodeIndex>(it - nodes_.begin());
}

PdnGraph PdnGraph::restrict_to_net(std::uint32_t net) const {
  Builder b(dbu_per_micron_);
  for (const auto& e : edges_) {
    if (nodes_[e.a].net == net) b.add_resistor(nodes_[e.a], nodes_[e.b], e.resistance);
  }
  for (const auto& s : sinks_) {
    if (nodes_[s.node].net == net) b.add_sink(nodes_[s.node], s.current);
  }
  for (const auto& p : pads_) {
    if (nodes_[p.node].net == net) b.add_pad(nodes_[p.node], p.voltage);
  }
  return std::move(b).build();
}

PdnGraph::Builder::Builder(int dbu_per_micron) : dbu_per_micron_(dbu_per_micron) {
  if (dbu_per_micron <= 0) throw GraphError("dbu_per_micron must be positive");
}

NodeIndex PdnGraph::Builder::intern(const NodeId& n) {
  auto [it, inserted] = index_.try_emplace(n, static_cast<NodeIndex>(nodes_.size()));
  if (inserted) nodes_.push_back(n);
  return it->second;
}

void PdnGraph::Builder::add_resistor(const NodeId& a, const NodeId& b, double ohms) {
  if (!(ohms > 0.0) || !std::isfinite(ohms)) {
    throw GraphError("resistance must be positive, got " + format_double(ohms));
  }
  auto kind = classify_edge(a, b);
  if (!kind) {
    throw GraphError("resistor " + format_node_name(a) + " - " + format_node_name(b) +
                     " is neither a wire nor a via");
  }
  edges_.push_back({intern(a), intern(b), ohms, *kind});
}

void PdnGraph::Builder::add_sink(const NodeId& n, double amps) {
  if (!(amps >= 0.0) || !std::isfinite(amps)) {
    throw GraphError("sink current must be non-negative, got " + format_double(amps));
  }
  sinks_.push_back({intern(n), amps});
}

void PdnGraph::Builder::add_pad(const NodeId& n, double volts) {
  if (!(volts > 0.0) || !std::isfinite(volts)) {
    throw GraphError("pad voltage must be positive, got " + format_double(volts));
  }
  if (!pads_.empty() && pads_.front().voltage != volts) {
    throw GraphError("pad voltage " + format_double(volts) + " differs from " +
                     format_double(pads_.front().voltage));
  }
  pads_.push_back({intern(n), volts});
}

PdnGraph PdnGraph::Builder::build() && {
  PdnGraph g;
  g.dbu_per_micron_ = dbu_per_micron_;

  const auto n = nodes_.size();
  std::vector<NodeIndex> order(n);
  std::iota(order.begin(), order.end(), NodeIndex{0});
  std::sort(order.begin(), order.end(),
            [this](NodeIndex l, NodeIndex r) { return nodes_[l] < nodes_[r]; });
  std::vector<NodeIndex> remap(n);
  g.nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    remap[order[i]] = static_cast<NodeIndex>(i);
    g.nodes_[i] = nodes_[order[i]];
  }

  g.edges_ = std::move(edges_);
  for (auto& e : g.edges_) {
    e.a = remap[e.a];
    e.b = remap[e.b];
  }
  g.sinks_ = std::move(sinks_);
  for (auto& s : g.sinks_) s.node = remap[s.node];
  g.pads_ = std::move(pads_);
  for (auto& p : g.pads_) p.node = remap[p.node];

  std::vector<std::uint32_t> degree(n, 0);
  for (const auto& e : g.edges_) {
    ++degree[e.a];
    ++degree[e.b];
  }
  g.incident_offset_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.incident_offset_[i + 1] = g.incident_offset_[i] + degree[i];
  g.incident_.resize(g.incident_offset_[n]);
  std::vector<std::uint32_t> fill(g.incident_offset_.begin(), g.incident_offset_.end() - 1);
  for (std::uint32_t k = 0; k < g.edges_.size(); ++k) {
    g.incident_[fill[g.edges_[k].a]++] = k;
    g.incident_[fill[g.edges_[k].b]++] = k;
  }

  for (const auto& node : g.nodes_) {
    if (g.extent_.empty) {
      g.extent_ = {node.x, node.y, node.x, node.y, false};
    } else {
      g.extent_.min_x = std::min(g.extent_.min_x, node.x);
      g.extent_.min_y = std::min(g.extent_.min_y, node.y);
      g.extent_.max_x = std::max(g.extent_.max_x, node.x);
      g.extent_.max_y = std::max(g.extent_.max_y, node.y);
    }
    g.layers_.push_back(node.layer);
  }
  std::sort(g.layers_.begin(), g.layers_.end());
  g.layers_.erase(std::unique(g.layers_.begin(), g.layers_.end()), g.layers_.end());

  g.node_current_.assign(n, 0.0);
  for (const auto& s : g.sinks_) g.node_current_[s.node] += s.current;
  g.is_pad_.assign(n, 0);
  for (const auto& p : g.pads_) g.is_pad_[p.node] = 1;
  g.vdd_ = g.pads_.empty() ? kDefaultVdd : g.pads_.front().voltage;
  return g;
}

// ----------------------------------------------------------------- parser

PdnGraph parse_netlist(std::istream& in, int dbu_per_micron) {
  PdnGraph::Builder builder(dbu_per_micron);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(std::move(t));
    if (tok.empty() || tok.front().front() == '*') continue;
    if (tok.front() == ".end" || tok.front() == ".END") break;

    const char kind = static_cast<char>(std::toupper(static_cast<unsigned char>(tok[0][0])));
    if (kind != 'R' && kind != 'I' && kind != 'V') {
      throw ParseError(lineno, tok[0], "unknown element");
    }
    if (tok.size() != 4) {
      throw ParseError(lineno, tok.size() > 4 ? tok[4] : tok.back(),
                       "expected 4 fields, got " + std::to_string(tok.size()));
    }
    auto a = parse_node_name(tok[1]);
    if (!a) throw ParseError(lineno, tok[1], "malformed node name");
    double value = 0.0;
    if (!parse_double(tok[3], value)) throw ParseError(lineno, tok[3], "malformed number");

    try {
      if (kind == 'R') {
        auto b = parse_node_name(tok[2]);
        if (!b) throw ParseError(lineno, tok[2], "malformed node name");
        builder.add_resistor(*a, *b, value);
      } else {
        if (tok[2] != "0") throw ParseError(lineno, tok[2], "second terminal must be ground '0'");
        if (kind == 'I') {
          builder.add_sink(*a, value);
        } else {
          builder.add_pad(*a, value);
        }
      }
    } catch (const GraphError& e) {
      throw ParseError(lineno, tok[0], e.what());
    }
  }
  return std::move(builder).build();
}

PdnGraph parse_netlist(std::string_view text, int dbu_per_micron) {
  std::istringstream in{std::string(text)};
  return parse_netlist(in, dbu_per_micron);
}

PdnGraph read_netlist_file(const std::string& path, int dbu_per_micron) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open netlist '" + path + "'");
  return parse_netlist(in, dbu_per_micron);
}

void serialize_netlist(const PdnGraph& g, std::ostream& out) {
  std::size_t k = 0;
  for (const auto& e : g.edges()) {
    out << 'R' << ++k << ' ' << format_node_name(g.node(e.a)) << ' '
        << format_node_name(g.node(e.b)) << ' ' << format_double(e.resistance) << '\n';
  }
  k = 0;
  for (const auto& s : g.sinks()) {
    out << 'I' << ++k << ' ' << format_node_name(g.node(s.node)) << " 0 "
        << format_double(s.current) << '\n';
  }
  k = 0;
  for (const auto& p : g.pads()) {
    out << 'V' << ++k << ' ' << format_node_name(g.node(p.node)) << " 0 "
        << format_double(p.voltage) << '\n';
  }
  out << ".end\n";
}

std::string serialize_netlist(const PdnGraph& g) {
  std::ostringstream out;
  serialize_netlist(g, out);
  return out.str();
}

// ---------------------------------------------------------------- stripes

bool Stripe::anchored() const {
  return std::any_of(pins.begin(), pins.end(), is_pinned);
}

std::vector<std::size_t> Stripe::pin_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pins.size(); ++i) {
    if (is_pinned(pins[i])) out.push_back(i);
  }
  return out;
}

std::string_view to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::DisconnectedSink: return "disconnected sink";
    case DiagnosticKind::DanglingNode: return "dangling node";
    case DiagnosticKind::DuplicateEdge: return "duplicate edge";
    case DiagnosticKind::UnanchoredStripe: return "unanchored stripe";
    case DiagnosticKind::BranchNode: return "branch node";
    case DiagnosticKind::DegenerateLayer: return "degenerate layer";
    case DiagnosticKind::NoPinnedNodes: return "no pinned nodes";
    case DiagnosticKind::StrandedCurrent: return "stranded current";
  }
  return "unknown";
}

namespace {

Axis wire_axis(const NodeId& a, const NodeId& b) {
  return a.y == b.y ? Axis::Horizontal : Axis::Vertical;
}

std::int64_t varying(const NodeId& n, Axis axis) { return axis == Axis::Horizontal ? n.x : n.y; }
std::int64_t fixed(const NodeId& n, Axis axis) { return axis == Axis::Horizontal ? n.y : n.x; }

PinKind pin_kind(const PdnGraph& g, NodeIndex n) {
  bool via = false;
  for (auto k : g.incident(n)) {
    const auto& e = g.edges()[k];
    if (e.kind == EdgeKind::Via && g.node(e.other(n)).layer > g.node(n).layer) {
      via = true;
      break;
    }
  }
  const bool pad = g.is_pad(n);
  if (via && pad) return PinKind::ViaAndPad;
  if (pad) return PinKind::Pad;
  if (via) return PinKind::Via;
  return PinKind::None;
}

}  // namespace

StripeSet extract_stripes(const PdnGraph& g) {
  const auto n = g.node_count();
  // Per node and axis: wires leaving toward higher / lower coordinate.
  struct Side {
    std::uint32_t up_count = 0;
    std::uint32_t down_count = 0;
    std::uint32_t up_edge = 0;
  };
  std::vector<Side> side(2 * n);
  auto at = [&side](NodeIndex node, Axis axis) -> Side& {
    return side[2 * node + static_cast<std::size_t>(axis)];
  };

  for (std::uint32_t k = 0; k < g.edges().size(); ++k) {
    const auto& e = g.edges()[k];
    if (e.kind != EdgeKind::Wire) continue;
    const Axis axis = wire_axis(g.node(e.a), g.node(e.b));
    NodeIndex lo = e.a;
    NodeIndex hi = e.b;
    if (varying(g.node(lo), axis) > varying(g.node(hi), axis)) std::swap(lo, hi);
    auto& s = at(lo, axis);
    ++s.up_count;
    s.up_edge = k;
    ++at(hi, axis).down_count;
  }

  StripeSet out;
  std::vector<std::uint8_t> mixed(n, 0);
  for (NodeIndex i = 0; i < n; ++i) {
    const auto& h = at(i, Axis::Horizontal);
    const auto& v = at(i, Axis::Vertical);
    const bool has_h = h.up_count + h.down_count > 0;
    const bool has_v = v.up_count + v.down_count > 0;
    mixed[i] = has_h && has_v;
    if (mixed[i] || h.up_count > 1 || h.down_count > 1 || v.up_count > 1 || v.down_count > 1) {
      out.diagnostics.push_back({DiagnosticKind::BranchNode,
                                 "wire branch at " + format_node_name(g.node(i)) +
                                     "; stripes split here",
                                 i});
    }
  }
  auto pass_through = [&](NodeIndex i, Axis axis) {
    const auto& s = at(i, axis);
    return !mixed[i] && s.up_count == 1 && s.down_count == 1;
  };

  for (std::uint32_t k = 0; k < g.edges().size(); ++k) {
    const auto& e = g.edges()[k];
    if (e.kind != EdgeKind::Wire) continue;
    const Axis axis = wire_axis(g.node(e.a), g.node(e.b));
    NodeIndex lo = e.a;
    NodeIndex hi = e.b;
    if (varying(g.node(lo), axis) > varying(g.node(hi), axis)) std::swap(lo, hi);
    if (pass_through(lo, axis)) continue;  // reached from its predecessor

    Stripe s;
    s.layer = g.node(lo).layer;
    s.axis = axis;
    s.nodes.push_back(lo);
    std::uint32_t edge = k;
    NodeIndex cur = hi;
    while (true) {
      s.nodes.push_back(cur);
      s.segment_resistances.push_back(g.edges()[edge].resistance);
      s.wire_edges.push_back(edge);
      if (!pass_through(cur, axis)) break;
      edge = at(cur, axis).up_edge;
      cur = g.edges()[edge].other(cur);
    }
    out.stripes.push_back(std::move(s));
  }

  std::sort(out.stripes.begin(), out.stripes.end(), [&g](const Stripe& l, const Stripe& r) {
    const auto& a = g.node(l.nodes.front());
    const auto& b = g.node(r.nodes.front());
    auto key = [](const NodeId& id, const Stripe& s) {
      return std::tuple(id.net, s.layer, static_cast<int>(s.axis), fixed(id, s.axis),
                        varying(id, s.axis));
    };
    return key(a, l) < key(b, r);
  });

  out.owner.assign(n, -1);
  for (std::size_t si = 0; si < out.stripes.size(); ++si) {
    auto& s = out.stripes[si];
    s.taps.resize(s.nodes.size(), 0.0);
    s.pins.resize(s.nodes.size(), PinKind::None);
    for (std::size_t j = 0; j < s.nodes.size(); ++j) {
      const NodeIndex node = s.nodes[j];
      if (out.owner[node] < 0) {
        out.owner[node] = static_cast<std::int32_t>(si);
        s.taps[j] = g.node_current()[node];
      }
      s.pins[j] = pin_kind(g, node);
    }
    if (!s.anchored()) {
      out.diagnostics.push_back({DiagnosticKind::UnanchoredStripe,
                                 "stripe starting at " + format_node_name(g.node(s.nodes.front())) +
                                     " has no upward via or pad",
                                 s.nodes.front()});
    }
  }
  return out;
}

std::vector<Diagnostic> validate(const PdnGraph& g) {
  std::vector<Diagnostic> out;
  const auto n = g.node_count();

  std::vector<std::pair<NodeIndex, NodeIndex>> pairs;
  pairs.reserve(g.edges().size());
  for (const auto& e : g.edges()) pairs.emplace_back(std::min(e.a, e.b), std::max(e.a, e.b));
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i] == pairs[i - 1]) {
      out.push_back({DiagnosticKind::DuplicateEdge,
                     "duplicate resistor " + format_node_name(g.node(pairs[i].first)) + " - " +
                         format_node_name(g.node(pairs[i].second)),
                     pairs[i].first});
    }
  }

  std::vector<std::uint8_t> has_sink(n, 0);
  for (const auto& s : g.sinks()) has_sink[s.node] = 1;
  for (NodeIndex i = 0; i < n; ++i) {
    if (g.incident(i).empty() && !has_sink[i]) {
      out.push_back({DiagnosticKind::DanglingNode,
                     "node " + format_node_name(g.node(i)) + " has no resistor", i});
    }
  }

  std::vector<std::uint8_t> reached(n, 0);
  std::queue<NodeIndex> frontier;
  for (const auto& p : g.pads()) {
    if (!reached[p.node]) {
      reached[p.node] = 1;
      frontier.push(p.node);
    }
  }
  while (!frontier.empty()) {
    const NodeIndex cur = frontier.front();
    frontier.pop();
    for (auto k : g.incident(cur)) {
      const NodeIndex nb = g.edges()[k].other(cur);
      if (!reached[nb]) {
        reached[nb] = 1;
        frontier.push(nb);
      }
    }
  }
  for (const auto& s : g.sinks()) {
    if (!reached[s.node]) {
      out.push_back({DiagnosticKind::DisconnectedSink,
                     "sink at " + format_node_name(g.node(s.node)) + " has no path to a pad",
                     s.node});
    }
  }

  auto stripes = extract_stripes(g);
  for (auto& d : stripes.diagnostics) out.push_back(std::move(d));
  return out;
}

}  // namespace irkit
