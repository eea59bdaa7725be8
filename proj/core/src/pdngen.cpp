#include "irkit/pdngen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "irkit/errors.hpp"

namespace irkit {

// ----------------------------------------------------------------- config

void GenConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(chip_width_um > 0.0) || !(chip_height_um > 0.0)) fail("chip dimensions must be positive");
  if (layers.empty()) fail("at least one layer is required");
  auto sorted = layers;
  std::sort(sorted.begin(), sorted.end(),
            [](const LayerSpec& a, const LayerSpec& b) { return a.index < b.index; });
  if (sorted.front().index != 1) fail("the lowest layer must be layer 1");
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& l = sorted[i];
    if (!(l.pitch_um > 0.0)) fail("layer " + std::to_string(l.index) + ": pitch must be positive");
    if (!(l.ohm_per_um > 0.0)) {
      fail("layer " + std::to_string(l.index) + ": resistance per micron must be positive");
    }
    const double extent = l.axis == Axis::Horizontal ? chip_height_um : chip_width_um;
    if (l.pitch_um / 2.0 > extent) {
      fail("layer " + std::to_string(l.index) + ": pitch leaves no stripe inside the chip");
    }
    if (i > 0) {
      if (l.index == sorted[i - 1].index) fail("duplicate layer " + std::to_string(l.index));
      if (l.axis == sorted[i - 1].axis) {
        fail("layers " + std::to_string(sorted[i - 1].index) + " and " + std::to_string(l.index) +
             " must alternate direction");
      }
    }
  }
  if (!(via_resistance > 0.0)) fail("via resistance must be positive");
  if (pad_rule != PadRule::StripeEnds && pad_count < 1) fail("pad_count must be at least 1");
  if (sink_count < 1) fail("sink_count must be at least 1");
  if (!(current_min > 0.0) || !(current_max >= current_min)) {
    fail("currents must satisfy 0 < current_min <= current_max");
  }
  if (distribution == SinkDistribution::Clustered && (cluster_count < 1 || !(cluster_sigma_um > 0.0))) {
    fail("clustered sinks need cluster_count >= 1 and cluster_sigma > 0");
  }
  if (!(irregularity >= 0.0 && irregularity < 1.0)) fail("irregularity must lie in [0, 1)");
  if (!(tap_step_um >= 0.0)) fail("tap_step must be non-negative");
  if (!(vdd > 0.0)) fail("vdd must be positive");
  if (dbu_per_micron <= 0) fail("dbu_per_micron must be positive");
}

namespace {

double to_number(const std::string& key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("bad value for '" + key + "': '" + std::string(v) + "'");
  }
  return out;
}

long long to_integer(const std::string& key, std::string_view v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("bad integer for '" + key + "': '" + std::string(v) + "'");
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

LayerSpec parse_layer(std::string_view v) {
  std::vector<std::string_view> f;
  while (true) {
    auto comma = v.find(',');
    f.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (f.size() != 4) throw ConfigError("layer expects <index>,<H|V>,<pitch_um>,<ohm_per_um>");
  LayerSpec l;
  const auto idx = to_integer("layer", f[0]);
  if (idx < 1) throw ConfigError("layer index must be >= 1");
  l.index = static_cast<std::uint32_t>(idx);
  if (f[1] == "H" || f[1] == "h") {
    l.axis = Axis::Horizontal;
  } else if (f[1] == "V" || f[1] == "v") {
    l.axis = Axis::Vertical;
  } else {
    throw ConfigError("layer axis must be H or V");
  }
  l.pitch_um = to_number("layer", f[2]);
  l.ohm_per_um = to_number("layer", f[3]);
  return l;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

GenConfig parse_gen_config(std::istream& in) {
  GenConfig cfg;
  bool custom_layers = false;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view v = trim(line.substr(eq + 1));
    if (key == "chip_width") {
      cfg.chip_width_um = to_number(key, v);
    } else if (key == "chip_height") {
      cfg.chip_height_um = to_number(key, v);
    } else if (key == "layer") {
      if (!custom_layers) cfg.layers.clear();
      custom_layers = true;
      cfg.layers.push_back(parse_layer(v));
    } else if (key == "via_resistance") {
      cfg.via_resistance = to_number(key, v);
    } else if (key == "pad_count") {
      cfg.pad_count = static_cast<int>(to_integer(key, v));
    } else if (key == "pad_rule") {
      if (v == "grid") {
        cfg.pad_rule = PadRule::Grid;
      } else if (v == "random") {
        cfg.pad_rule = PadRule::Random;
      } else if (v == "stripe_ends") {
        cfg.pad_rule = PadRule::StripeEnds;
      } else {
        throw ConfigError("pad_rule must be grid, random or stripe_ends");
      }
    } else if (key == "sink_count") {
      cfg.sink_count = static_cast<int>(to_integer(key, v));
    } else if (key == "current_min") {
      cfg.current_min = to_number(key, v);
    } else if (key == "current_max") {
      cfg.current_max = to_number(key, v);
    } else if (key == "sink_distribution") {
      if (v == "uniform") {
        cfg.distribution = SinkDistribution::Uniform;
      } else if (v == "clustered") {
        cfg.distribution = SinkDistribution::Clustered;
      } else {
        throw ConfigError("sink_distribution must be uniform or clustered");
      }
    } else if (key == "cluster_count") {
      cfg.cluster_count = static_cast<int>(to_integer(key, v));
    } else if (key == "cluster_sigma") {
      cfg.cluster_sigma_um = to_number(key, v);
    } else if (key == "irregularity") {
      cfg.irregularity = to_number(key, v);
    } else if (key == "tap_step") {
      cfg.tap_step_um = to_number(key, v);
    } else if (key == "vdd") {
      cfg.vdd = to_number(key, v);
    } else if (key == "dbu_per_micron") {
      cfg.dbu_per_micron = static_cast<int>(to_integer(key, v));
    } else if (key == "seed") {
      const auto s = to_integer(key, v);
      cfg.seed = static_cast<std::uint64_t>(s);
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

GenConfig read_gen_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_gen_config(in);
}

std::string to_config_text(const GenConfig& cfg) {
  std::ostringstream o;
  o << "chip_width=" << fmt(cfg.chip_width_um) << '\n';
  o << "chip_height=" << fmt(cfg.chip_height_um) << '\n';
  for (const auto& l : cfg.layers) {
    o << "layer=" << l.index << ',' << (l.axis == Axis::Horizontal ? 'H' : 'V') << ','
      << fmt(l.pitch_um) << ',' << fmt(l.ohm_per_um) << '\n';
  }
  o << "via_resistance=" << fmt(cfg.via_resistance) << '\n';
  o << "pad_count=" << cfg.pad_count << '\n';
  o << "pad_rule="
    << (cfg.pad_rule == PadRule::Grid ? "grid" : cfg.pad_rule == PadRule::Random ? "random" : "stripe_ends")
    << '\n';
  o << "sink_count=" << cfg.sink_count << '\n';
  o << "current_min=" << fmt(cfg.current_min) << '\n';
  o << "current_max=" << fmt(cfg.current_max) << '\n';
  o << "sink_distribution="
    << (cfg.distribution == SinkDistribution::Uniform ? "uniform" : "clustered") << '\n';
  o << "cluster_count=" << cfg.cluster_count << '\n';
  o << "cluster_sigma=" << fmt(cfg.cluster_sigma_um) << '\n';
  o << "irregularity=" << fmt(cfg.irregularity) << '\n';
  o << "tap_step=" << fmt(cfg.tap_step_um) << '\n';
  o << "vdd=" << fmt(cfg.vdd) << '\n';
  o << "dbu_per_micron=" << cfg.dbu_per_micron << '\n';
  o << "seed=" << cfg.seed << '\n';
  return o.str();
}

// -------------------------------------------------------------- generator

namespace {

// Distribution code is written out by hand: the standard distributions are
// implementation-defined, and netlists must match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t n) {
    return std::min(static_cast<std::size_t>(uniform() * static_cast<double>(n)), n - 1);
  }
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

struct GenStripe {
  std::int64_t fixed = 0;             // DBU
  std::vector<std::int64_t> varying;  // DBU, ascending node positions
};

struct GenLayer {
  LayerSpec spec;
  std::vector<GenStripe> stripes;  // kept stripes only, ascending fixed
};

NodeId make_node(std::uint32_t layer, Axis axis, std::int64_t fixed, std::int64_t varying) {
  return axis == Axis::Horizontal ? NodeId{1, layer, varying, fixed} : NodeId{1, layer, fixed, varying};
}

class DisjointSet {
 public:
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

PdnGraph generate(const GenConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto dbu = static_cast<double>(cfg.dbu_per_micron);
  const auto to_dbu = [dbu](double um) { return static_cast<std::int64_t>(std::llround(um * dbu)); };
  const std::int64_t width = to_dbu(cfg.chip_width_um);
  const std::int64_t height = to_dbu(cfg.chip_height_um);

  std::vector<GenLayer> layers;
  for (const auto& l : cfg.layers) layers.push_back({l, {}});
  std::sort(layers.begin(), layers.end(),
            [](const GenLayer& a, const GenLayer& b) { return a.spec.index < b.spec.index; });

  // Stripe placement, then drop a fixed fraction per layer (keeping one).
  for (auto& layer : layers) {
    const double extent = layer.spec.axis == Axis::Horizontal ? cfg.chip_height_um : cfg.chip_width_um;
    std::vector<std::int64_t> fixed;
    for (int k = 0;; ++k) {
      const double pos = layer.spec.pitch_um * (0.5 + k);
      if (pos > extent + 1e-9) break;
      fixed.push_back(to_dbu(pos));
    }
    const auto drop = std::min<std::size_t>(
        static_cast<std::size_t>(std::floor(cfg.irregularity * static_cast<double>(fixed.size()))),
        fixed.size() - 1);
    std::vector<std::uint8_t> dropped(fixed.size(), 0);
    std::vector<std::size_t> order(fixed.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < drop; ++i) {
      const std::size_t j = i + rng.index(order.size() - i);
      std::swap(order[i], order[j]);
      dropped[order[i]] = 1;
    }
    for (std::size_t i = 0; i < fixed.size(); ++i) {
      if (!dropped[i]) layer.stripes.push_back({fixed[i], {}});
    }
  }

  // Node positions: stripe ends, crossings with adjacent layers, taps.
  for (std::size_t li = 0; li < layers.size(); ++li) {
    auto& layer = layers[li];
    const std::int64_t extent = layer.spec.axis == Axis::Horizontal ? width : height;
    std::vector<std::int64_t> base{0, extent};
    if (li > 0) {
      for (const auto& s : layers[li - 1].stripes) base.push_back(s.fixed);
    }
    if (li + 1 < layers.size()) {
      for (const auto& s : layers[li + 1].stripes) base.push_back(s.fixed);
    }
    if (li == 0 && cfg.tap_step_um > 0.0) {
      for (int k = 0;; ++k) {
        const std::int64_t pos = to_dbu(cfg.tap_step_um * k);
        if (pos > extent) break;
        base.push_back(pos);
      }
    }
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    for (auto& s : layer.stripes) s.varying = base;
  }

  PdnGraph::Builder builder(cfg.dbu_per_micron);
  std::unordered_map<NodeId, std::size_t, NodeIdHash> set_index;
  DisjointSet dsu;
  auto touch = [&](const NodeId& n) {
    auto [it, inserted] = set_index.try_emplace(n, 0);
    if (inserted) it->second = dsu.add();
    return it->second;
  };
  auto connect = [&](const NodeId& a, const NodeId& b, double ohms) {
    builder.add_resistor(a, b, ohms);
    dsu.unite(touch(a), touch(b));
  };

  for (const auto& layer : layers) {
    for (const auto& s : layer.stripes) {
      for (std::size_t k = 0; k + 1 < s.varying.size(); ++k) {
        const double len_um = static_cast<double>(s.varying[k + 1] - s.varying[k]) / dbu;
        connect(make_node(layer.spec.index, layer.spec.axis, s.fixed, s.varying[k]),
                make_node(layer.spec.index, layer.spec.axis, s.fixed, s.varying[k + 1]),
                layer.spec.ohm_per_um * len_um);
      }
    }
  }
  for (std::size_t li = 0; li + 1 < layers.size(); ++li) {
    const auto& lo = layers[li];
    const auto& hi = layers[li + 1];
    for (const auto& s : lo.stripes) {
      for (const auto& t : hi.stripes) {
        // s.fixed is the coordinate t varies along and vice versa.
        const NodeId a = make_node(lo.spec.index, lo.spec.axis, s.fixed, t.fixed);
        const NodeId b{1, hi.spec.index, a.x, a.y};
        connect(a, b, cfg.via_resistance);
      }
    }
  }

  // Pads on the top layer.
  const auto& top = layers.back();
  std::vector<NodeId> candidates;
  for (const auto& s : top.stripes) {
    if (layers.size() > 1) {
      for (const auto& t : layers[layers.size() - 2].stripes) {
        candidates.push_back(make_node(top.spec.index, top.spec.axis, s.fixed, t.fixed));
      }
    } else {
      for (auto v : s.varying) candidates.push_back(make_node(top.spec.index, top.spec.axis, s.fixed, v));
    }
  }
  std::vector<NodeId> pads;
  switch (cfg.pad_rule) {
    case PadRule::StripeEnds:
      for (const auto& s : top.stripes) {
        pads.push_back(make_node(top.spec.index, top.spec.axis, s.fixed, s.varying.front()));
        pads.push_back(make_node(top.spec.index, top.spec.axis, s.fixed, s.varying.back()));
      }
      break;
    case PadRule::Random: {
      auto pool = candidates;
      const auto take = std::min<std::size_t>(static_cast<std::size_t>(cfg.pad_count), pool.size());
      for (std::size_t i = 0; i < take; ++i) {
        std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
        pads.push_back(pool[i]);
      }
      break;
    }
    case PadRule::Grid: {
      const int px = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.pad_count))));
      const int py = (cfg.pad_count + px - 1) / px;
      for (int j = 0; j < py && static_cast<int>(pads.size()) < cfg.pad_count; ++j) {
        for (int i = 0; i < px && static_cast<int>(pads.size()) < cfg.pad_count; ++i) {
          const double tx = (i + 0.5) / px * static_cast<double>(width);
          const double ty = (j + 0.5) / py * static_cast<double>(height);
          const NodeId* best = nullptr;
          double best_d = 0.0;
          for (const auto& c : candidates) {
            const double d = std::hypot(static_cast<double>(c.x) - tx, static_cast<double>(c.y) - ty);
            if (!best || d < best_d) {
              best = &c;
              best_d = d;
            }
          }
          if (best && std::find(pads.begin(), pads.end(), *best) == pads.end()) pads.push_back(*best);
        }
      }
      break;
    }
  }
  for (const auto& p : pads) builder.add_pad(p, cfg.vdd);
  const std::unordered_set<NodeId, NodeIdHash> pad_set(pads.begin(), pads.end());

  // Sinks on non-pad layer-1 nodes, grouped per stripe for nearest lookup.
  const auto& bottom = layers.front();
  std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> rows;
  for (const auto& s : bottom.stripes) {
    std::vector<std::int64_t> free;
    for (auto v : s.varying) {
      const NodeId id = make_node(bottom.spec.index, bottom.spec.axis, s.fixed, v);
      if (!pad_set.contains(id)) free.push_back(v);
    }
    if (!free.empty()) rows.emplace_back(s.fixed, std::move(free));
  }
  if (rows.empty()) throw ConfigError("no layer-1 node is available for sinks");

  std::vector<std::pair<double, double>> centres;
  if (cfg.distribution == SinkDistribution::Clustered) {
    for (int c = 0; c < cfg.cluster_count; ++c) {
      centres.emplace_back(rng.uniform(0.0, cfg.chip_width_um), rng.uniform(0.0, cfg.chip_height_um));
    }
  }
  const bool horiz = bottom.spec.axis == Axis::Horizontal;
  auto nearest_in = [](const std::vector<std::int64_t>& v, std::int64_t target) {
    auto it = std::lower_bound(v.begin(), v.end(), target);
    if (it == v.end()) return v.back();
    if (it == v.begin()) return *it;
    return (*it - target) < (target - *std::prev(it)) ? *it : *std::prev(it);
  };

  std::vector<std::pair<NodeId, double>> sinks;
  for (int k = 0; k < cfg.sink_count; ++k) {
    NodeId where;
    if (cfg.distribution == SinkDistribution::Uniform) {
      const auto& row = rows[rng.index(rows.size())];
      const auto v = row.second[rng.index(row.second.size())];
      where = make_node(bottom.spec.index, bottom.spec.axis, row.first, v);
    } else {
      const auto& c = centres[rng.index(centres.size())];
      const double x = std::clamp(c.first + cfg.cluster_sigma_um * rng.normal(), 0.0, cfg.chip_width_um);
      const double y = std::clamp(c.second + cfg.cluster_sigma_um * rng.normal(), 0.0, cfg.chip_height_um);
      const std::int64_t fixed_target = to_dbu(horiz ? y : x);
      const std::int64_t var_target = to_dbu(horiz ? x : y);
      std::size_t best = 0;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (std::llabs(rows[r].first - fixed_target) < std::llabs(rows[best].first - fixed_target)) best = r;
      }
      where = make_node(bottom.spec.index, bottom.spec.axis, rows[best].first,
                        nearest_in(rows[best].second, var_target));
    }
    sinks.emplace_back(where, rng.uniform(cfg.current_min, cfg.current_max));
  }

  // Keep only sinks that reach a pad.
  std::vector<std::uint8_t> anchored_root(set_index.size() + pads.size(), 0);
  for (const auto& p : pads) {
    const auto root = dsu.find(touch(p));
    if (root >= anchored_root.size()) anchored_root.resize(root + 1, 0);
    anchored_root[root] = 1;
  }
  std::size_t kept = 0;
  for (const auto& [node, amps] : sinks) {
    const auto it = set_index.find(node);
    if (it == set_index.end()) continue;
    const auto root = dsu.find(it->second);
    if (root >= anchored_root.size() || !anchored_root[root]) continue;
    builder.add_sink(node, amps);
    ++kept;
  }
  if (kept == 0) throw ConfigError("configuration leaves no sink connected to a pad");
  return std::move(builder).build();
}

}  // namespace irkit
