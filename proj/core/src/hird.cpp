#include "irkit/hird.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "irkit/errors.hpp"

namespace irkit {

std::vector<Segment> segment_stripe(std::size_t node_count, std::span<const std::size_t> pins) {
  if (pins.empty()) throw Error("unanchored stripe: no pinned node");
  for (std::size_t i = 0; i < pins.size(); ++i) {
    if (pins[i] >= node_count || (i > 0 && pins[i] <= pins[i - 1])) {
      throw Error("pin indices must be ascending and inside the stripe");
    }
  }
  std::vector<Segment> out;
  if (pins.front() > 0) out.push_back({0, pins.front(), {pins.front()}});
  for (std::size_t i = 1; i < pins.size(); ++i) {
    out.push_back({pins[i - 1], pins[i], {pins[i - 1], pins[i]}});
  }
  if (pins.back() + 1 < node_count) out.push_back({pins.back(), node_count - 1, {pins.back()}});
  if (out.empty()) out.push_back({pins.front(), pins.front(), {pins.front()}});
  return out;
}

StripeSolution localized_solve(const StripeProblem& p) {
  const std::size_t n = p.taps.size();
  if (n == 0) throw Error("stripe has no nodes");
  if (p.segment_resistances.size() + 1 != n) throw Error("segment count must be node count - 1");
  if (p.pin_voltages.size() != p.pins.size()) throw Error("pin voltage count mismatch");
  if (!p.via_resistance.empty() && p.via_resistance.size() != n) {
    throw Error("via resistance count mismatch");
  }
  const auto segments = segment_stripe(n, p.pins);  // validates pins

  StripeSolution s;
  std::uint64_t ops = 0;
  std::vector<double> cum(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double r = p.segment_resistances[k];
    if (!(r > 0.0)) throw Error("segment resistance must be positive");
    cum[k + 1] = cum[k] + r;
    ++ops;
  }

  // Each span's current is the difference of two sums of non-negative
  // shares (drawn from the left pin, drawn from the right pin), so spans that
  // carry no current come out exactly zero.
  s.equivalent_resistance.assign(n, 0.0);
  s.span_current.assign(n - 1, 0.0);
  std::vector<double> pinned_v(n, 0.0);
  for (std::size_t i = 0; i < p.pins.size(); ++i) pinned_v[p.pins[i]] = p.pin_voltages[i];

  for (const auto& seg : segments) {
    if (seg.pinned.size() == 2) {
      const std::size_t a = seg.start;
      const std::size_t b = seg.end;
      const double rab = cum[b] - cum[a];
      double from_a = 0.0;
      for (std::size_t k = b - 1; k > a; --k) {
        ++ops;
        const double ra = cum[k] - cum[a];
        const double rb = cum[b] - cum[k];
        s.equivalent_resistance[k] = 1.0 / (1.0 / ra + 1.0 / rb);
        // Share drawn through pin a, in divider form.
        from_a += p.taps[k] * (rb / (ra + rb));
        s.span_current[k - 1] = from_a;
      }
      const double circulating = (pinned_v[a] - pinned_v[b]) / rab;
      double from_b = 0.0;
      for (std::size_t j = a; j < b; ++j) {
        ++ops;
        if (j > a) {
          const double tap = p.taps[j];
          const double ra = cum[j] - cum[a];
          const double rb = cum[b] - cum[j];
          from_b += tap - tap * (rb / (ra + rb));
        }
        s.span_current[j] = circulating + (s.span_current[j] - from_b);
      }
    } else if (seg.pinned.front() == seg.end) {
      const std::size_t pin = seg.end;
      double drawn = 0.0;
      for (std::size_t k = seg.start; k < pin; ++k) {
        ++ops;
        s.equivalent_resistance[k] = cum[pin] - cum[k];
        drawn += p.taps[k];
        s.span_current[k] = -drawn;
      }
    } else {
      const std::size_t pin = seg.start;
      double drawn = 0.0;
      for (std::size_t k = seg.end; k > pin; --k) {
        ++ops;
        s.equivalent_resistance[k] = cum[k] - cum[pin];
        drawn += p.taps[k];
        s.span_current[k - 1] = drawn;
      }
    }
  }

  // KVL from each segment's pin outward.
  s.voltage.assign(n, 0.0);
  for (const auto& seg : segments) {
    if (seg.pinned.size() == 2 || seg.pinned.front() == seg.start) {
      s.voltage[seg.start] = pinned_v[seg.start];
      const std::size_t last = seg.pinned.size() == 2 ? seg.end - 1 : seg.end;
      for (std::size_t k = seg.start; k < last; ++k) {
        s.voltage[k + 1] = s.voltage[k] - s.span_current[k] * p.segment_resistances[k];
        ++ops;
      }
      if (seg.pinned.size() == 2) s.voltage[seg.end] = pinned_v[seg.end];
    } else {
      s.voltage[seg.end] = pinned_v[seg.end];
      for (std::size_t k = seg.end; k > seg.start; --k) {
        s.voltage[k - 1] = s.voltage[k] + s.span_current[k - 1] * p.segment_resistances[k - 1];
        ++ops;
      }
    }
  }

  s.pin_current.assign(n, 0.0);
  s.via_drop.assign(n, 0.0);
  for (std::size_t k : p.pins) {
    double c = p.taps[k];
    if (k + 1 < n) c += s.span_current[k];
    if (k > 0) c -= s.span_current[k - 1];
    s.pin_current[k] = c;
    if (!p.via_resistance.empty()) s.via_drop[k] = c * p.via_resistance[k];
    ++ops;
  }
  s.operations = ops;
  return s;
}

// ------------------------------------------------------------- bottom-up

namespace {

struct LayerIndex {
  std::vector<std::uint32_t> layers;                 // ascending
  std::vector<std::vector<std::size_t>> stripes;     // per layer position
  std::vector<std::vector<NodeIndex>> nodes;         // per layer position
};

LayerIndex index_layers(const PdnGraph& g, const StripeSet& ss) {
  LayerIndex li;
  li.layers = g.layers();
  auto pos = [&li](std::uint32_t layer) {
    return static_cast<std::size_t>(std::lower_bound(li.layers.begin(), li.layers.end(), layer) - li.layers.begin());
  };
  li.stripes.resize(li.layers.size());
  li.nodes.resize(li.layers.size());
  for (std::size_t s = 0; s < ss.stripes.size(); ++s) li.stripes[pos(ss.stripes[s].layer)].push_back(s);
  // Nodes are stored sorted by (net, layer, ...), so each layer is a run.
  std::size_t cur = 0;
  std::uint32_t cur_layer = li.layers.empty() ? 0 : li.layers.front();
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    const auto layer = g.node(i).layer;
    if (layer != cur_layer) {
      cur = pos(layer);
      cur_layer = layer;
    }
    li.nodes[cur].push_back(i);
  }
  return li;
}

// Total conductance of the vias leaving node i toward higher layers.
std::vector<double> upward_conductance(const PdnGraph& g) {
  std::vector<double> out(g.node_count(), 0.0);
  for (const auto& e : g.edges()) {
    if (e.kind != EdgeKind::Via) continue;
    const NodeIndex lower = g.node(e.a).layer < g.node(e.b).layer ? e.a : e.b;
    out[lower] += 1.0 / e.resistance;
  }
  return out;
}

template <class F>
void for_each_upward_via(const PdnGraph& g, NodeIndex n, F&& f) {
  for (auto k : g.incident(n)) {
    const auto& e = g.edges()[k];
    if (e.kind != EdgeKind::Via) continue;
    const NodeIndex other = e.other(n);
    if (g.node(other).layer > g.node(n).layer) f(other, 1.0 / e.resistance);
  }
}

bool is_source_node(const PdnGraph& g, const std::vector<double>& up_g, NodeIndex n) {
  return g.is_pad(n) || up_g[n] > 0.0;
}

}  // namespace

BottomUpResult bottom_up_pass(const PdnGraph& g) {
  BottomUpResult r;
  r.vdd = g.vdd();
  r.stripes = extract_stripes(g);
  const auto n = g.node_count();
  r.inflow.assign(n, 0.0);
  r.pin_current.assign(n, 0.0);
  r.via_drop.assign(n, 0.0);
  r.pad_current.assign(n, 0.0);
  r.solutions.resize(r.stripes.stripes.size());
  r.degenerate.assign(r.stripes.stripes.size(), 0);

  const auto up_g = upward_conductance(g);
  const auto li = index_layers(g, r.stripes);

  std::vector<double> taps;
  std::vector<double> pin_v;
  std::vector<double> via_r;
  for (std::size_t l = 0; l < li.layers.size(); ++l) {
    for (std::size_t si : li.stripes[l]) {
      const Stripe& st = r.stripes.stripes[si];
      taps.assign(st.size(), 0.0);
      double total = 0.0;
      for (std::size_t j = 0; j < st.size(); ++j) {
        const NodeIndex node = st.nodes[j];
        if (r.stripes.owner[node] == static_cast<std::int32_t>(si)) {
          taps[j] = g.node_current()[node] + r.inflow[node];
          total += taps[j];
        }
      }
      const auto pins = st.pin_indices();
      if (pins.empty()) {
        r.degenerate[si] = 1;
        if (total > 0.0) {
          r.diagnostics.push_back({DiagnosticKind::StrandedCurrent,
                                   "unanchored stripe at " + format_node_name(g.node(st.nodes.front())) +
                                       " strands " + std::to_string(total) + " A",
                                   st.nodes.front()});
        }
        continue;
      }
      pin_v.assign(pins.size(), 0.0);
      via_r.assign(st.size(), 0.0);
      for (std::size_t j : pins) {
        const NodeIndex node = st.nodes[j];
        if (!g.is_pad(node) && up_g[node] > 0.0) via_r[j] = 1.0 / up_g[node];
      }
      r.solutions[si] = localized_solve({st.segment_resistances, pins, pin_v, taps, via_r});
      for (std::size_t j : pins) r.pin_current[st.nodes[j]] += r.solutions[si].pin_current[j];
    }

    for (NodeIndex node : li.nodes[l]) {
      if (r.stripes.owner[node] >= 0) continue;
      const double c = g.node_current()[node] + r.inflow[node];
      if (is_source_node(g, up_g, node)) {
        r.pin_current[node] += c;
      } else if (c > 0.0) {
        r.diagnostics.push_back({DiagnosticKind::StrandedCurrent,
                                 "node " + format_node_name(g.node(node)) +
                                     " has current but no wire, via or pad above it",
                                 node});
      }
    }

    // Hand each pin's current to the layer above, split by via conductance.
    for (NodeIndex node : li.nodes[l]) {
      const double c = r.pin_current[node];
      if (g.is_pad(node)) {
        r.pad_current[node] += c;
      } else if (up_g[node] > 0.0) {
        r.via_drop[node] = c / up_g[node];
        for_each_upward_via(g, node, [&](NodeIndex upper, double cond) {
          r.inflow[upper] += c * cond / up_g[node];
        });
      }
    }
  }

  for (const auto& d : r.stripes.diagnostics) {
    if (d.kind == DiagnosticKind::UnanchoredStripe || d.kind == DiagnosticKind::BranchNode) {
      r.diagnostics.push_back(d);
    }
  }
  return r;
}

// -------------------------------------------------------------- top-down

TopDownState top_down_pass(const PdnGraph& g, const BottomUpResult& bu) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  TopDownState st;
  st.vdd = bu.vdd;
  const auto n = g.node_count();
  st.drop.assign(n, kNaN);
  st.upstream_drop.assign(n, kNaN);
  st.anchors.assign(n, {kNoNode, kNoNode});
  std::vector<double> interp_drop(n, kNaN);
  std::vector<double> pin_drop(n, kNaN);

  const auto up_g = upward_conductance(g);
  const auto li = index_layers(g, bu.stripes);
  std::vector<double> pin_upstream(n, kNaN);

  // Work in drops below vdd so that small drops keep full precision.
  auto assign = [&](NodeIndex node, double d, double interp, double up, std::array<NodeIndex, 2> anchors) {
    if (std::isnan(st.drop[node]) || d > st.drop[node]) {
      st.drop[node] = d;
      interp_drop[node] = interp;
      st.upstream_drop[node] = up;
      st.anchors[node] = anchors;
    }
  };

  std::vector<double> cum;
  for (std::size_t l = li.layers.size(); l-- > 0;) {
    bool any_pin = false;
    for (NodeIndex node : li.nodes[l]) {
      if (g.is_pad(node)) {
        pin_drop[node] = 0.0;
        pin_upstream[node] = 0.0;
        any_pin = true;
      } else if (up_g[node] > 0.0) {
        double weighted = 0.0;
        for_each_upward_via(g, node, [&](NodeIndex upper, double cond) {
          weighted += cond * (std::isnan(st.drop[upper]) ? 0.0 : st.drop[upper]);
        });
        pin_upstream[node] = weighted / up_g[node];
        pin_drop[node] = pin_upstream[node] + bu.via_drop[node];
        any_pin = true;
      }
    }
    if (!any_pin && !li.nodes[l].empty()) {
      st.diagnostics.push_back({DiagnosticKind::NoPinnedNodes,
                                "layer m" + std::to_string(li.layers[l]) +
                                    " has no pinned node; propagating vdd",
                                li.nodes[l].front()});
    }

    for (std::size_t si : li.stripes[l]) {
      const Stripe& s = bu.stripes.stripes[si];
      if (bu.degenerate[si]) {
        for (NodeIndex node : s.nodes) assign(node, 0.0, 0.0, 0.0, {kNoNode, kNoNode});
        continue;
      }
      const auto& sol = bu.solutions[si];
      cum.assign(s.size(), 0.0);
      for (std::size_t k = 0; k + 1 < s.size(); ++k) cum[k + 1] = cum[k] + s.segment_resistances[k];
      const auto pins = s.pin_indices();

      std::size_t next = 0;  // first pin at or after j
      for (std::size_t j = 0; j < s.size(); ++j) {
        while (next < pins.size() && pins[next] < j) ++next;
        const NodeIndex node = s.nodes[j];
        double interp;
        double up;
        std::array<NodeIndex, 2> anchors{kNoNode, kNoNode};
        if (next < pins.size() && pins[next] == j) {
          interp = pin_drop[node];
          up = pin_upstream[node];
          anchors[0] = node;
        } else if (next == 0 || next == pins.size()) {
          const std::size_t p = next == 0 ? pins.front() : pins.back();
          interp = pin_drop[s.nodes[p]];
          up = pin_upstream[s.nodes[p]];
          anchors[0] = s.nodes[p];
        } else {
          const std::size_t a = pins[next - 1];
          const std::size_t b = pins[next];
          const NodeIndex na = s.nodes[a];
          const NodeIndex nb = s.nodes[b];
          // Conductance-weighted mean of the two anchors.
          const double ga = 1.0 / (cum[j] - cum[a]);
          const double gb = 1.0 / (cum[b] - cum[j]);
          interp = (pin_drop[na] * ga + pin_drop[nb] * gb) / (ga + gb);
          up = (pin_upstream[na] * ga + pin_upstream[nb] * gb) / (ga + gb);
          anchors = {na, nb};
        }
        // Bottom-up solutions hold pins at 0 V, so -voltage is the local drop.
        assign(node, interp - sol.voltage[j], interp, up, anchors);
      }
    }

    for (NodeIndex node : li.nodes[l]) {
      if (!std::isnan(st.drop[node])) continue;
      if (!std::isnan(pin_drop[node])) {
        assign(node, pin_drop[node], pin_drop[node], pin_upstream[node], {node, kNoNode});
      } else {
        assign(node, 0.0, 0.0, 0.0, {kNoNode, kNoNode});
      }
    }
  }

  st.voltage.resize(n);
  st.interpolated.resize(n);
  st.upstream.resize(n);
  st.pin_voltage.assign(n, kNaN);
  for (NodeIndex i = 0; i < n; ++i) {
    st.voltage[i] = st.vdd - st.drop[i];
    st.interpolated[i] = st.vdd - interp_drop[i];
    st.upstream[i] = st.vdd - st.upstream_drop[i];
    if (!std::isnan(pin_drop[i])) st.pin_voltage[i] = st.vdd - pin_drop[i];
  }
  return st;
}

// ------------------------------------------------------------------ maps

namespace {

// Linear interpolation between known samples along one line of the grid;
// samples outside the known span clamp to the nearest one. Returns false
// when the line holds no known sample.
bool fill_line(ScalarGrid& grid, std::vector<std::uint8_t>& known, std::size_t first,
               std::size_t stride, int count) {
  int prev = -1;
  for (int i = 0; i < count; ++i) {
    const std::size_t idx = first + static_cast<std::size_t>(i) * stride;
    if (!known[idx]) continue;
    if (prev < 0) {
      for (int k = 0; k < i; ++k) grid[first + static_cast<std::size_t>(k) * stride] = grid[idx];
    } else {
      const double v0 = grid[first + static_cast<std::size_t>(prev) * stride];
      const double v1 = grid[idx];
      for (int k = prev + 1; k < i; ++k) {
        const double t = static_cast<double>(k - prev) / (i - prev);
        grid[first + static_cast<std::size_t>(k) * stride] = v0 + (v1 - v0) * t;
      }
    }
    prev = i;
  }
  if (prev < 0) return false;
  const double last = grid[first + static_cast<std::size_t>(prev) * stride];
  for (int k = prev + 1; k < count; ++k) grid[first + static_cast<std::size_t>(k) * stride] = last;
  for (int k = 0; k < count; ++k) known[first + static_cast<std::size_t>(k) * stride] = 1;
  return true;
}

// fill_line applied to every column at once, sweeping rows so that memory
// is walked in order.
void fill_columns(ScalarGrid& grid, std::vector<std::uint8_t>& known, int w, int h) {
  const auto W = static_cast<std::size_t>(w);
  std::vector<std::int32_t> above(grid.size());
  std::vector<std::int32_t> last(W, -1);
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * W;
    for (std::size_t x = 0; x < W; ++x) {
      if (known[row + x]) last[x] = y;
      above[row + x] = last[x];
    }
  }
  std::vector<std::int32_t> below(W, -1);
  for (int y = h; y-- > 0;) {
    const std::size_t row = static_cast<std::size_t>(y) * W;
    for (std::size_t x = 0; x < W; ++x) {
      if (last[x] < 0) continue;  // column holds no known sample
      const std::size_t idx = row + x;
      if (known[idx]) {
        below[x] = y;
        continue;
      }
      const int a = above[idx];
      const int b = below[x];
      if (a < 0) {
        grid[idx] = grid[static_cast<std::size_t>(b) * W + x];
      } else if (b < 0) {
        grid[idx] = grid[static_cast<std::size_t>(a) * W + x];
      } else {
        const double v0 = grid[static_cast<std::size_t>(a) * W + x];
        const double v1 = grid[static_cast<std::size_t>(b) * W + x];
        const double t = static_cast<double>(y - a) / (b - a);
        grid[idx] = v0 + (v1 - v0) * t;
      }
      known[idx] = 1;
    }
  }
}

}  // namespace

HirdMaps hird_maps(const PdnGraph& g, const BottomUpResult& bu, const TopDownState& state,
                   const GridSpec& spec, HirdMapMode mode) {
  HirdMaps out;
  const auto li = index_layers(g, bu.stripes);
  const int w = spec.width;
  const int h = spec.height;
  auto node_drop = [&](NodeIndex node) {
    return mode == HirdMapMode::Cumulative ? state.drop[node] : state.drop[node] - state.upstream_drop[node];
  };

  for (std::size_t l = 0; l < li.layers.size(); ++l) {
    ScalarGrid grid(w, h, "V");
    std::vector<std::uint8_t> scattered(grid.size(), 0);
    for (NodeIndex node : li.nodes[l]) {
      const auto& id = g.node(node);
      const std::size_t p = static_cast<std::size_t>(spec.row_of(id.y)) * w + spec.column_of(id.x);
      const double d = node_drop(node);
      if (!scattered[p] || d > grid[p]) grid[p] = d;
      scattered[p] = 1;
    }
    if (li.nodes[l].empty()) {
      out.diagnostics.push_back({DiagnosticKind::DegenerateLayer,
                                 "layer m" + std::to_string(li.layers[l]) + " has no node", kNoNode});
      out.layers.push_back(li.layers[l]);
      out.maps.push_back(std::move(grid));
      continue;
    }

    // Along each stripe, between consecutive nodes.
    std::vector<std::uint8_t> known = scattered;
    std::size_t horizontal = 0;
    for (std::size_t si : li.stripes[l]) {
      const Stripe& s = bu.stripes.stripes[si];
      const bool horiz = s.axis == Axis::Horizontal;
      horizontal += horiz;
      for (std::size_t j = 0; j + 1 < s.size(); ++j) {
        const auto& a = g.node(s.nodes[j]);
        const auto& b = g.node(s.nodes[j + 1]);
        const int fixed_px = horiz ? spec.row_of(a.y) : spec.column_of(a.x);
        const int p0 = horiz ? spec.column_of(a.x) : spec.row_of(a.y);
        const int p1 = horiz ? spec.column_of(b.x) : spec.row_of(b.y);
        const double c0 = g.to_microns(horiz ? a.x : a.y);
        const double c1 = g.to_microns(horiz ? b.x : b.y);
        const double d0 = node_drop(s.nodes[j]);
        const double d1 = node_drop(s.nodes[j + 1]);
        for (int q = p0 + 1; q < p1; ++q) {
          const std::size_t idx = horiz ? static_cast<std::size_t>(fixed_px) * w + q
                                        : static_cast<std::size_t>(q) * w + fixed_px;
          if (scattered[idx]) continue;
          const double t = std::clamp(((q + 0.5) * spec.pixel_pitch - c0) / (c1 - c0), 0.0, 1.0);
          const double v = d0 + (d1 - d0) * t;
          if (!known[idx] || v > grid[idx]) grid[idx] = v;
          known[idx] = 1;
        }
      }
    }

    // Across stripes, then along the stripe axis for anything left.
    const bool rows_are_stripes = 2 * horizontal >= li.stripes[l].size();
    std::vector<std::uint8_t> pass = known;
    if (rows_are_stripes) {
      fill_columns(grid, pass, w, h);
      for (int y = 0; y < h; ++y) fill_line(grid, pass, static_cast<std::size_t>(y) * w, 1, w);
    } else {
      for (int y = 0; y < h; ++y) fill_line(grid, pass, static_cast<std::size_t>(y) * w, 1, w);
      fill_columns(grid, pass, w, h);
    }
    out.layers.push_back(li.layers[l]);
    out.maps.push_back(std::move(grid));
  }
  return out;
}

HirdAnalysis run_hird(const PdnGraph& g, const GridSpec& spec, HirdMapMode mode) {
  HirdAnalysis a;
  a.bottom_up = bottom_up_pass(g);
  a.top_down = top_down_pass(g, a.bottom_up);
  a.maps = hird_maps(g, a.bottom_up, a.top_down, spec, mode);
  for (const auto& d : a.bottom_up.diagnostics) a.maps.diagnostics.push_back(d);
  for (const auto& d : a.top_down.diagnostics) a.maps.diagnostics.push_back(d);
  return a;
}

}  // namespace irkit
