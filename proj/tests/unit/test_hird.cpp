#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "irkit/errors.hpp"
#include "irkit/hird.hpp"
#include "irkit/solver.hpp"
#include "oracles/dense_oracle.hpp"
#include "support/random_pdn.hpp"

using namespace irkit;

namespace {

struct OwnedProblem {
  std::vector<double> r;
  std::vector<std::size_t> pins;
  std::vector<double> pin_v;
  std::vector<double> taps;

  StripeProblem view() const { return {r, pins, pin_v, taps, {}}; }
};

OwnedProblem random_stripe(std::mt19937_64& rng, std::size_t max_n, bool equal_pins) {
  OwnedProblem p;
  const std::size_t n = static_cast<std::size_t>(support::uniform_int(rng, 1, static_cast<int>(max_n)));
  for (std::size_t k = 0; k + 1 < n; ++k) p.r.push_back(support::uniform(rng, 0.01, 10.0));
  for (std::size_t k = 0; k < n; ++k) p.taps.push_back(support::uniform_int(rng, 0, 2) ? support::uniform(rng, 0, 0.01) : 0.0);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto pins = static_cast<std::size_t>(support::uniform_int(rng, 1, static_cast<int>(std::min<std::size_t>(n, 10))));
  p.pins.assign(idx.begin(), idx.begin() + static_cast<long>(pins));
  std::sort(p.pins.begin(), p.pins.end());
  for (std::size_t k = 0; k < pins; ++k) p.pin_v.push_back(equal_pins ? 1.1 : support::uniform(rng, 1.0, 1.1));
  return p;
}

PdnGraph scaled_sinks(const PdnGraph& g, double alpha) {
  PdnGraph::Builder b(g.dbu_per_micron());
  for (const auto& e : g.edges()) b.add_resistor(g.node(e.a), g.node(e.b), e.resistance);
  for (const auto& p : g.pads()) b.add_pad(g.node(p.node), p.voltage);
  for (const auto& s : g.sinks()) b.add_sink(g.node(s.node), s.current * alpha);
  return std::move(b).build();
}

GenConfig single_layer(std::uint64_t seed) {
  GenConfig c;
  c.chip_width_um = 40;
  c.chip_height_um = 30;
  c.layers = {{1, Axis::Horizontal, 5.0, 0.1}};
  c.tap_step_um = 2.0;
  c.pad_rule = PadRule::StripeEnds;
  c.sink_count = 60;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(SegmentStripe, TwoEndPins) {
  const std::vector<std::size_t> pins{0, 9};
  const auto s = segment_stripe(10, pins);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (Segment{0, 9, {0, 9}}));
}

TEST(SegmentStripe, InteriorSegments) {
  const std::vector<std::size_t> pins{0, 4, 9};
  const auto s = segment_stripe(10, pins);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (Segment{0, 4, {0, 4}}));
  EXPECT_EQ(s[1], (Segment{4, 9, {4, 9}}));
}

TEST(SegmentStripe, BoundarySegments) {
  const std::vector<std::size_t> pins{3};
  const auto s = segment_stripe(10, pins);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (Segment{0, 3, {3}}));
  EXPECT_EQ(s[1], (Segment{3, 9, {3}}));
}

TEST(SegmentStripe, NoPinsIsAnError) {
  EXPECT_THROW(segment_stripe(5, std::vector<std::size_t>{}), Error);
}

TEST(LocalizedSolve, ParallelEquivalentResistance) {
  const std::vector<double> r{3, 6};
  const std::vector<std::size_t> pins{0, 2};
  const std::vector<double> pv{1.1, 1.1};
  const std::vector<double> taps{0, 0, 0};
  const auto s = localized_solve({r, pins, pv, taps, {}});
  EXPECT_NEAR(s.equivalent_resistance[1], 2.0, 1e-15);
  EXPECT_EQ(s.equivalent_resistance[0], 0.0);
}

TEST(LocalizedSolve, CurrentDivider) {
  const std::vector<double> r{6, 3};
  const std::vector<std::size_t> pins{0, 2};
  const std::vector<double> pv{1.1, 1.1};
  const std::vector<double> taps{0, 0.003, 0};
  const auto s = localized_solve({r, pins, pv, taps, {}});
  EXPECT_NEAR(s.pin_current[0], 0.001, 1e-15);
  EXPECT_NEAR(s.pin_current[2], 0.002, 1e-15);
  EXPECT_NEAR(s.span_current[0], 0.001, 1e-15);
}

TEST(LocalizedSolve, CentreSinkOnUnitStripe) {
  const std::vector<double> r{1, 1, 1, 1};
  const std::vector<std::size_t> pins{0, 4};
  const std::vector<double> pv{1.1, 1.1};
  const std::vector<double> taps{0, 0, 0.001, 0, 0};
  const auto s = localized_solve({r, pins, pv, taps, {}});
  EXPECT_NEAR(s.voltage[2], 1.099, 1e-12);
  EXPECT_NEAR(s.pin_current[0], 0.0005, 1e-15);
  EXPECT_NEAR(s.pin_current[4], 0.0005, 1e-15);
}

TEST(LocalizedSolve, ViaDropFollowsPinCurrent) {
  const std::vector<double> r{1, 1};
  const std::vector<std::size_t> pins{1};
  const std::vector<double> pv{1.1};
  const std::vector<double> taps{0.001, 0, 0.002};
  const std::vector<double> via{0, 0.5, 0};
  const auto s = localized_solve({r, pins, pv, taps, via});
  EXPECT_NEAR(s.pin_current[1], 0.003, 1e-15);
  EXPECT_NEAR(s.via_drop[1], 0.0015, 1e-15);
  EXPECT_NEAR(s.voltage[0], 1.099, 1e-12);
  EXPECT_NEAR(s.voltage[2], 1.098, 1e-12);
}

TEST(LocalizedSolve, RejectsBadInput) {
  const std::vector<double> bad_r{1, 0};
  const std::vector<double> good_r{1, 1};
  const std::vector<std::size_t> pins{0};
  const std::vector<std::size_t> out_of_range{5};
  const std::vector<double> pv{1.1};
  const std::vector<double> taps{0, 0, 0};
  EXPECT_THROW(localized_solve({bad_r, pins, pv, taps, {}}), Error);
  EXPECT_THROW(localized_solve({good_r, out_of_range, pv, taps, {}}), Error);
  EXPECT_THROW(localized_solve({good_r, {}, {}, taps, {}}), Error);
}

TEST(LocalizedSolve, MatchesDenseStripeOracle) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 300; ++t) {
    const auto p = random_stripe(rng, 40, t % 2 == 0);
    const auto s = localized_solve(p.view());
    const auto ref = oracle::dense_stripe(p.r, p.pins, p.pin_v, p.taps);
    for (std::size_t n = 0; n < p.taps.size(); ++n) {
      ASSERT_NEAR(s.voltage[n], ref.voltage[n], 1e-9);
      ASSERT_NEAR(s.pin_current[n], ref.pin_current[n], 1e-12);
    }
    const double supplied = std::accumulate(s.pin_current.begin(), s.pin_current.end(), 0.0);
    const double drawn = std::accumulate(p.taps.begin(), p.taps.end(), 0.0);
    EXPECT_LE(std::abs(supplied - drawn), 1e-12 * std::max(drawn, 1e-300));
  }
}

TEST(LocalizedSolve, IdleSpansCarryExactlyZero) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 40;
    std::vector<double> r(n - 1), taps(n, 0.0);
    for (auto& x : r) x = support::uniform(rng, 0.01, 10.0);
    for (std::size_t k = 0; k < 12; ++k) taps[k] = support::uniform(rng, 0.0, 0.01);
    const std::vector<std::size_t> pins{5, 15, 30, 39};
    const std::vector<double> pin_v(pins.size(), 0.0);
    const auto sol = localized_solve({r, pins, pin_v, taps, {}});
    for (std::size_t k = 15; k + 1 < n; ++k) EXPECT_EQ(sol.span_current[k], 0.0) << k;
    for (std::size_t k = 15; k < n; ++k) EXPECT_EQ(sol.voltage[k], 0.0) << k;
    EXPECT_EQ(sol.pin_current[30], 0.0);
    EXPECT_EQ(sol.pin_current[39], 0.0);
  }
}

TEST(LocalizedSolve, OperationCountGrowsLinearly) {
  std::uint64_t prev = 0;
  for (std::size_t n = 1000; n <= 16000; n *= 2) {
    std::vector<double> r(n - 1, 0.1);
    std::vector<double> taps(n, 1e-6);
    std::vector<std::size_t> pins;
    for (std::size_t k = 0; k < n; k += 50) pins.push_back(k);
    std::vector<double> pv(pins.size(), 1.1);
    const auto ops = localized_solve({r, pins, pv, taps, {}}).operations;
    if (prev) EXPECT_LE(static_cast<double>(ops) / static_cast<double>(prev), 2.1);
    prev = ops;
  }
}

TEST(BottomUp, SingleLayerUsesStripesDirectly) {
  const auto g = generate(single_layer(3));
  const auto bu = bottom_up_pass(g);
  for (double x : bu.inflow) EXPECT_EQ(x, 0.0);
  for (std::size_t i = 0; i < bu.stripes.stripes.size(); ++i) {
    const auto& st = bu.stripes.stripes[i];
    const auto pins = st.pin_indices();
    const std::vector<double> pv(pins.size(), 0.0);
    const auto direct = localized_solve({st.segment_resistances, pins, pv, st.taps, {}});
    for (std::size_t n = 0; n < st.size(); ++n) EXPECT_NEAR(bu.solutions[i].voltage[n], direct.voltage[n], 1e-15);
  }
}

TEST(BottomUp, SingleViaCarriesStripeCurrent) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_2000_0 n1_m1_4000_0 1\nR3 n1_m1_2000_0 n1_m2_2000_0 0.5\n"
      "R4 n1_m2_2000_0 n1_m2_2000_4000 1\nV1 n1_m2_2000_4000 0 1.1\n"
      "I1 n1_m1_0_0 0 0.001\nI2 n1_m1_4000_0 0 0.002\nI3 n1_m1_2000_0 0 0.0005\n");
  const auto bu = bottom_up_pass(g);
  EXPECT_NEAR(bu.inflow[*g.find({1, 2, 2000, 0})], 0.0035, 1e-15);
  EXPECT_NEAR(bu.via_drop[*g.find({1, 1, 2000, 0})], 0.00175, 1e-15);
  EXPECT_NEAR(bu.pad_current[*g.find({1, 2, 2000, 4000})], 0.0035, 1e-15);
}

TEST(BottomUp, GlobalConservationOnAnchoredPdns) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 15; ++t) {
    const auto g = support::random_pdn(rng, {20, 80, 2, 4, true, 5000});
    const auto bu = bottom_up_pass(g);
    const double pads = std::accumulate(bu.pad_current.begin(), bu.pad_current.end(), 0.0);
    double sinks = 0.0;
    for (const auto& s : g.sinks()) sinks += s.current;
    EXPECT_LE(std::abs(pads - sinks), 1e-12 * sinks);
  }
}

TEST(TopDown, InterpolationIsResistiveDivision) {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 10; ++t) {
    const auto g = support::random_pdn(rng, {20, 60, 2, 3, true, 3000});
    const auto bu = bottom_up_pass(g);
    const auto td = top_down_pass(g, bu);
    for (const auto& st : bu.stripes.stripes) {
      std::vector<double> pos(st.size(), 0.0);
      for (std::size_t k = 1; k < st.size(); ++k) pos[k] = pos[k - 1] + st.segment_resistances[k - 1];
      const auto pins = st.pin_indices();
      if (pins.empty()) continue;
      for (std::size_t k = 0; k < st.size(); ++k) {
        const NodeIndex n = st.nodes[k];
        if (bu.stripes.owner[n] < 0 || &bu.stripes.stripes[static_cast<std::size_t>(bu.stripes.owner[n])] != &st) continue;
        const auto lo = std::upper_bound(pins.begin(), pins.end(), k);
        const bool has_right = lo != pins.end();
        const bool has_left = lo != pins.begin();
        double expect;
        if (std::isfinite(td.pin_voltage[n])) {
          expect = td.pin_voltage[n];
        } else if (has_left && has_right) {
          const auto a = *(lo - 1);
          const auto b = *lo;
          const double ga = 1.0 / (pos[k] - pos[a]);
          const double gb = 1.0 / (pos[b] - pos[k]);
          const double va = td.pin_voltage[st.nodes[a]];
          const double vb = td.pin_voltage[st.nodes[b]];
          expect = (ga * va + gb * vb) / (ga + gb);
          EXPECT_GE(td.interpolated[n], std::min(va, vb) - 1e-15);
          EXPECT_LE(td.interpolated[n], std::max(va, vb) + 1e-15);
        } else {
          expect = td.pin_voltage[st.nodes[has_left ? *(lo - 1) : *lo]];
        }
        EXPECT_NEAR(td.interpolated[n], expect, 1e-12);
      }
    }
  }
}

TEST(TopDown, MidpointBetweenUnequalPins) {
  // Two vias of different resistance feed a 3-node bottom stripe.
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_2000_0 n1_m1_4000_0 1\n"
      "R3 n1_m1_0_0 n1_m2_0_0 1\nR4 n1_m1_4000_0 n1_m2_4000_0 3\n"
      "R5 n1_m2_0_0 n1_m2_0_2000 1\nR6 n1_m2_4000_0 n1_m2_4000_2000 1\n"
      "V1 n1_m2_0_2000 0 1.1\nV2 n1_m2_4000_2000 0 1.1\n"
      "I1 n1_m1_0_0 0 0.01\nI2 n1_m1_4000_0 0 0.01\n");
  const auto bu = bottom_up_pass(g);
  const auto td = top_down_pass(g, bu);
  const double va = td.pin_voltage[*g.find({1, 1, 0, 0})];
  const double vb = td.pin_voltage[*g.find({1, 1, 4000, 0})];
  EXPECT_LT(vb, va);
  EXPECT_NEAR(td.interpolated[*g.find({1, 1, 2000, 0})], 0.5 * (va + vb), 1e-15);
}

TEST(TopDown, SinglePinStripeInheritsPinVoltage) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_2000_0 n1_m1_4000_0 1\nR3 n1_m1_0_0 n1_m2_0_0 1\n"
      "R4 n1_m2_0_0 n1_m2_0_2000 1\nV1 n1_m2_0_2000 0 1.1\nI1 n1_m1_4000_0 0 0.001\n");
  const auto td = top_down_pass(g, bottom_up_pass(g));
  const double pin = td.pin_voltage[*g.find({1, 1, 0, 0})];
  EXPECT_NEAR(pin, 1.1 - 0.002, 1e-15);
  EXPECT_DOUBLE_EQ(td.interpolated[*g.find({1, 1, 2000, 0})], pin);
  EXPECT_DOUBLE_EQ(td.interpolated[*g.find({1, 1, 4000, 0})], pin);
  EXPECT_NEAR(td.voltage[*g.find({1, 1, 4000, 0})], 1.1 - 0.004, 1e-12);
}

TEST(HirdMaps, UniformDropGivesConstantMap) {
  const auto g = generate(single_layer(5));
  const auto spec = GridSpec::for_graph(g, 1.0);
  const auto bu = bottom_up_pass(g);
  auto td = top_down_pass(g, bu);
  std::fill(td.drop.begin(), td.drop.end(), 0.002);
  const auto maps = hird_maps(g, bu, td, spec);
  ASSERT_EQ(maps.maps.size(), 1u);
  for (double v : maps.maps[0].values()) EXPECT_NEAR(v, 0.002, 1e-15);
}

TEST(HirdMaps, LinearBetweenStripes) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_8000_0 1\nR2 n1_m1_0_8000 n1_m1_8000_8000 1\n"
      "V1 n1_m1_0_0 0 1.1\nV2 n1_m1_0_8000 0 1.1\n");
  const auto spec = GridSpec::for_graph(g, 1.0);
  const auto bu = bottom_up_pass(g);
  auto td = top_down_pass(g, bu);
  for (NodeIndex i = 0; i < g.node_count(); ++i) td.drop[i] = g.node(i).y == 0 ? 0.0 : 0.004;
  const auto m = hird_maps(g, bu, td, spec).maps[0];
  ASSERT_EQ(m.height(), 5);
  for (int x = 0; x < m.width(); ++x) {
    EXPECT_NEAR(m.at(x, 0), 0.0, 1e-15);
    EXPECT_NEAR(m.at(x, 2), 0.002, 1e-15);
    EXPECT_NEAR(m.at(x, 4), 0.004, 1e-15);
  }
}

TEST(HirdMaps, SingleLayerMatchesGoldenAtNodePixels) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto g = generate(single_layer(seed));
    const auto spec = GridSpec::for_graph(g, 1.0);
    const auto golden = golden_ir_map(solve_exact(g), g, spec);
    const auto hird = run_hird(g, spec);
    for (const auto& id : g.nodes()) {
      const int x = spec.column_of(id.x);
      const int y = spec.row_of(id.y);
      EXPECT_NEAR(hird.maps.maps[0].at(x, y), golden.at(x, y), 1e-9);
    }
  }
}

TEST(HirdMaps, IncrementalEqualsCumulativeOnSingleLayer) {
  const auto g = generate(single_layer(9));
  const auto spec = GridSpec::for_graph(g, 1.0);
  const auto c = run_hird(g, spec, HirdMapMode::Cumulative);
  const auto i = run_hird(g, spec, HirdMapMode::Incremental);
  for (std::size_t k = 0; k < c.maps.maps[0].size(); ++k) EXPECT_NEAR(c.maps.maps[0][k], i.maps.maps[0][k], 1e-15);
}

TEST(HirdMaps, IncrementalLayersSumBelowCumulative) {
  GenConfig cfg;
  cfg.pad_rule = PadRule::StripeEnds;
  const auto g = generate(cfg);
  const auto spec = GridSpec::for_graph(g, 1.0);
  const auto bu = bottom_up_pass(g);
  const auto td = top_down_pass(g, bu);
  for (NodeIndex n = 0; n < g.node_count(); ++n) {
    EXPECT_GE(td.upstream[n], td.voltage[n] - 1e-15);
    EXPECT_LE(td.upstream[n], td.vdd + 1e-15);
  }
  EXPECT_EQ(hird_maps(g, bu, td, spec, HirdMapMode::Incremental).maps.size(), 3u);
}

TEST(HirdMaps, LinearInSinkCurrents) {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 5; ++t) {
    const auto g = support::random_pdn(rng, {20, 60, 1, 3, true, 3000});
    const auto spec = GridSpec::for_graph(g, 1.0);
    const auto a = run_hird(g, spec);
    const auto b = run_hird(scaled_sinks(g, 3.0), spec);
    for (std::size_t l = 0; l < a.maps.maps.size(); ++l) {
      for (std::size_t k = 0; k < a.maps.maps[l].size(); ++k) {
        const double x = a.maps.maps[l][k];
        EXPECT_NEAR(b.maps.maps[l][k], 3.0 * x, 1e-9 * std::abs(3.0 * x) + 1e-15);
      }
    }
    for (std::size_t n = 0; n < g.node_count(); ++n) {
      EXPECT_NEAR(b.bottom_up.pin_current[n], 3.0 * a.bottom_up.pin_current[n], 1e-12 * std::abs(a.bottom_up.pin_current[n]) + 1e-18);
    }
  }
}

TEST(HirdMaps, UnanchoredStripeIsReportedNotFatal) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_4000_0 1\nV1 n1_m1_0_0 0 1.1\nR2 n1_m1_0_4000 n1_m1_4000_4000 1\n"
      "I1 n1_m1_4000_4000 0 0.001\nI2 n1_m1_4000_0 0 0.001\n");
  const auto spec = GridSpec::for_graph(g, 1.0);
  const auto a = run_hird(g, spec);
  bool reported = false;
  for (const auto& d : a.bottom_up.diagnostics) reported |= d.kind == DiagnosticKind::StrandedCurrent;
  EXPECT_TRUE(reported);
  EXPECT_NEAR(a.top_down.voltage[*g.find({1, 1, 4000, 0})], 1.099, 1e-12);
}
