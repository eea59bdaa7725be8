#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "irkit/errors.hpp"
#include "irkit/netlist.hpp"
#include "irkit/pdngen.hpp"
#include "support/random_pdn.hpp"

using namespace irkit;

namespace {

int count_kind(const std::vector<Diagnostic>& d, DiagnosticKind k) {
  return static_cast<int>(std::count_if(d.begin(), d.end(), [k](const Diagnostic& x) { return x.kind == k; }));
}

using EdgeKey = std::tuple<NodeId, NodeId, double, EdgeKind>;

std::multiset<EdgeKey> edge_multiset(const PdnGraph& g) {
  std::multiset<EdgeKey> out;
  for (const auto& e : g.edges()) {
    auto a = g.node(e.a);
    auto b = g.node(e.b);
    if (b < a) std::swap(a, b);
    out.emplace(a, b, e.resistance, e.kind);
  }
  return out;
}

std::multiset<std::pair<NodeId, double>> sink_multiset(const PdnGraph& g) {
  std::multiset<std::pair<NodeId, double>> out;
  for (const auto& s : g.sinks()) out.emplace(g.node(s.node), s.current);
  return out;
}

}  // namespace

TEST(NodeName, FormatsAndParses) {
  const NodeId id{1, 3, 2000, 4000};
  EXPECT_EQ(format_node_name(id), "n1_m3_2000_4000");
  EXPECT_EQ(parse_node_name("n1_m3_2000_4000"), id);
  EXPECT_FALSE(parse_node_name("n1_m3_2000").has_value());
  EXPECT_FALSE(parse_node_name("x1_m3_2000_4000").has_value());
  EXPECT_FALSE(parse_node_name("n1_m0_2000_4000").has_value());
  EXPECT_FALSE(parse_node_name("n1_m1_-5_4").has_value());
}

TEST(ParseNetlist, WireEdge) {
  const auto g = parse_netlist("R1 n1_m1_2000_4000 n1_m1_4000_4000 0.5\n");
  ASSERT_EQ(g.edges().size(), 1u);
  const auto& e = g.edges()[0];
  EXPECT_EQ(e.kind, EdgeKind::Wire);
  EXPECT_DOUBLE_EQ(e.resistance, 0.5);
  EXPECT_EQ(g.node(e.a), (NodeId{1, 1, 2000, 4000}));
  EXPECT_EQ(g.node(e.b), (NodeId{1, 1, 4000, 4000}));
}

TEST(ParseNetlist, VoltageSource) {
  const auto g = parse_netlist("V1 n1_m4_0_0 0 1.1\n");
  ASSERT_EQ(g.pads().size(), 1u);
  EXPECT_EQ(g.node(g.pads()[0].node), (NodeId{1, 4, 0, 0}));
  EXPECT_DOUBLE_EQ(g.pads()[0].voltage, 1.1);
  EXPECT_DOUBLE_EQ(g.vdd(), 1.1);
}

TEST(ParseNetlist, ViaEdge) {
  const auto g = parse_netlist("R7 n1_m1_0_0 n1_m4_0_0 2.0\n");
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0].kind, EdgeKind::Via);
  EXPECT_DOUBLE_EQ(g.edges()[0].resistance, 2.0);
}

TEST(ParseNetlist, CommentsBlankLinesScientificAndEnd) {
  const auto g = parse_netlist(
      "* header\n\nR1 n1_m1_0_0 n1_m1_2000_0 5e-1\nI1 n1_m1_2000_0 0 1.5E-3\nV1 n1_m1_0_0 0 1.1\n.end\n");
  EXPECT_EQ(g.edges().size(), 1u);
  ASSERT_EQ(g.sinks().size(), 1u);
  EXPECT_DOUBLE_EQ(g.sinks()[0].current, 1.5e-3);
  EXPECT_EQ(g.node_count(), 2u);
}

TEST(ParseNetlist, SyntaxErrorCarriesLineAndToken) {
  try {
    parse_netlist("R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_0_0 n1_m1_0_2000 abc\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.token(), "abc");
  }
}

TEST(ParseNetlist, RejectsMalformedInput) {
  EXPECT_THROW(parse_netlist("R1 n1_m1_0 n1_m1_2000_0 1\n"), ParseError);
  EXPECT_THROW(parse_netlist("R1 n1_m1_0_0 n1_m1_2000_0 0\n"), ParseError);
  EXPECT_THROW(parse_netlist("R1 n1_m1_0_0 n1_m1_2000_0 -1\n"), ParseError);
  EXPECT_THROW(parse_netlist("R1 n1_m1_0_0 n1_m1_2000_2000 1\n"), ParseError);
  EXPECT_THROW(parse_netlist("R1 n1_m1_0_0 n1_m2_2000_0 1\n"), ParseError);
  EXPECT_THROW(parse_netlist("I1 n1_m1_0_0 n1_m1_2000_0 1e-3\n"), ParseError);
  EXPECT_THROW(parse_netlist("V1 n1_m1_0_0 1 1.1\n"), ParseError);
  EXPECT_THROW(parse_netlist("C1 n1_m1_0_0 0 1\n"), ParseError);
  EXPECT_THROW(parse_netlist("R1 n1_m1_0_0 n1_m1_2000_0\n"), ParseError);
  EXPECT_THROW(parse_netlist("V1 n1_m1_0_0 0 1.1\nV2 n1_m1_2000_0 0 1.0\n"), ParseError);
  EXPECT_THROW(parse_netlist("I1 n1_m1_0_0 0 -1e-3\n"), ParseError);
}

TEST(ParseNetlist, NodeOrderIsCanonical) {
  const auto a = parse_netlist("R1 n1_m2_0_0 n1_m1_0_0 1\nR2 n1_m1_0_0 n1_m1_2000_0 1\n");
  const auto b = parse_netlist("R2 n1_m1_2000_0 n1_m1_0_0 1\nR1 n1_m1_0_0 n1_m2_0_0 1\n");
  ASSERT_EQ(a.node_count(), b.node_count());
  for (NodeIndex i = 0; i < a.node_count(); ++i) EXPECT_EQ(a.node(i), b.node(i));
  EXPECT_TRUE(std::is_sorted(a.nodes().begin(), a.nodes().end()));
}

TEST(SerializeNetlist, EmptyGraph) { EXPECT_EQ(serialize_netlist(PdnGraph{}), ".end\n"); }

TEST(SerializeNetlist, SingleResistor) {
  const auto g = parse_netlist("R9 n1_m1_0_0 n1_m1_2000_0 0.25\n");
  EXPECT_EQ(serialize_netlist(g), "R1 n1_m1_0_0 n1_m1_2000_0 0.25\n.end\n");
}

TEST(SerializeNetlist, RoundTripOnGeneratedGraphs) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 25; ++t) {
    const auto g = support::random_pdn(rng, {10, 40, 1, 3, false, 2000});
    const auto text = serialize_netlist(g);
    const auto back = parse_netlist(text, g.dbu_per_micron());
    EXPECT_EQ(serialize_netlist(back), text);
    EXPECT_EQ(edge_multiset(back), edge_multiset(g));
    EXPECT_EQ(sink_multiset(back), sink_multiset(g));
    ASSERT_EQ(back.node_count(), g.node_count());
    ASSERT_EQ(back.pads().size(), g.pads().size());
  }
}

TEST(PdnGraph, ExtentLayersAndCurrents) {
  const auto g = parse_netlist(
      "R1 n1_m1_2000_0 n1_m1_6000_0 1\nR2 n1_m1_6000_0 n1_m3_6000_0 1\n"
      "I1 n1_m1_2000_0 0 1e-3\nI2 n1_m1_2000_0 0 2e-3\nV1 n1_m3_6000_0 0 1.1\n");
  EXPECT_EQ(g.extent().min_x, 2000);
  EXPECT_EQ(g.extent().max_x, 6000);
  EXPECT_EQ(g.layers(), (std::vector<std::uint32_t>{1, 3}));
  const auto n = *g.find({1, 1, 2000, 0});
  EXPECT_DOUBLE_EQ(g.node_current()[n], 3e-3);
  EXPECT_TRUE(g.is_pad(*g.find({1, 3, 6000, 0})));
  EXPECT_EQ(g.incident(*g.find({1, 1, 6000, 0})).size(), 2u);
  EXPECT_FALSE(g.find({1, 2, 0, 0}).has_value());
}

TEST(PdnGraph, RestrictToNet) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n2_m1_0_0 n2_m1_2000_0 1\nI1 n2_m1_0_0 0 1e-3\n");
  const auto one = g.restrict_to_net(1);
  EXPECT_EQ(one.node_count(), 2u);
  EXPECT_EQ(one.edges().size(), 1u);
  EXPECT_TRUE(one.sinks().empty());
  EXPECT_EQ(g.restrict_to_net(2).sinks().size(), 1u);
}

TEST(ExtractStripes, ThreeCollinearNodes) {
  const auto g = parse_netlist("R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_2000_0 n1_m1_4000_0 2\n");
  const auto s = extract_stripes(g);
  ASSERT_EQ(s.stripes.size(), 1u);
  EXPECT_EQ(s.stripes[0].size(), 3u);
  EXPECT_EQ(s.stripes[0].axis, Axis::Horizontal);
  EXPECT_EQ(s.stripes[0].segment_resistances, (std::vector<double>{1, 2}));
}

TEST(ExtractStripes, TwoParallelRows) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_0_4000 n1_m1_2000_4000 1\n");
  EXPECT_EQ(extract_stripes(g).stripes.size(), 2u);
}

TEST(ExtractStripes, ViaMarksPin) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_2000_0 n1_m1_4000_0 1\nR3 n1_m1_4000_0 n1_m1_6000_0 1\n"
      "R4 n1_m1_6000_0 n1_m1_8000_0 1\nR5 n1_m1_4000_0 n1_m2_4000_0 1\nI1 n1_m1_0_0 0 1e-3\n");
  const auto s = extract_stripes(g);
  std::vector<std::size_t> layer1;
  for (std::size_t i = 0; i < s.stripes.size(); ++i) {
    if (s.stripes[i].layer == 1) layer1.push_back(i);
  }
  ASSERT_EQ(layer1.size(), 1u);
  const auto& st = s.stripes[layer1[0]];
  EXPECT_EQ(st.size(), 5u);
  EXPECT_EQ(st.pin_indices(), (std::vector<std::size_t>{2}));
  EXPECT_DOUBLE_EQ(st.taps[0], 1e-3);
}

TEST(ExtractStripes, BranchNodeSplitsChain) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_2000_0 n1_m1_4000_0 1\nR3 n1_m1_2000_0 n1_m1_2000_2000 1\n"
      "V1 n1_m1_0_0 0 1.1\n");
  const auto s = extract_stripes(g);
  EXPECT_EQ(s.stripes.size(), 3u);
  EXPECT_GE(count_kind(s.diagnostics, DiagnosticKind::BranchNode), 1);
}

TEST(ExtractStripes, PartitionsWireEdgesOnGeneratedGraphs) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 25; ++t) {
    const auto g = support::random_pdn(rng, {10, 40, 1, 3, false, 3000});
    const auto s = extract_stripes(g);
    std::vector<int> seen(g.edges().size(), 0);
    for (const auto& st : s.stripes) {
      ASSERT_EQ(st.wire_edges.size() + 1, st.size());
      ASSERT_EQ(st.taps.size(), st.size());
      ASSERT_EQ(st.pins.size(), st.size());
      for (auto e : st.wire_edges) ++seen[e];
      for (std::size_t k = 0; k + 1 < st.size(); ++k) {
        const auto& a = g.node(st.nodes[k]);
        const auto& b = g.node(st.nodes[k + 1]);
        if (st.axis == Axis::Horizontal) {
          EXPECT_LT(a.x, b.x);
          EXPECT_EQ(a.y, b.y);
        } else {
          EXPECT_LT(a.y, b.y);
          EXPECT_EQ(a.x, b.x);
        }
      }
    }
    for (std::size_t e = 0; e < g.edges().size(); ++e) {
      EXPECT_EQ(seen[e], g.edges()[e].kind == EdgeKind::Wire ? 1 : 0);
    }
  }
}

TEST(Validate, CleanGeneratedPdn) {
  GenConfig cfg;
  cfg.pad_rule = PadRule::StripeEnds;
  const auto d = validate(generate(cfg));
  EXPECT_TRUE(d.empty()) << d.front().message;
}

TEST(Validate, SinkOnIsolatedNode) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_0_8000 n1_m1_2000_8000 1\nI1 n1_m1_2000_8000 0 1e-3\n"
      "V1 n1_m1_0_0 0 1.1\nV2 n1_m1_0_8000 0 1.1\n"
      "R3 n1_m1_0_16000 n1_m1_2000_16000 1\nI2 n1_m1_2000_16000 0 1e-3\nR4 n1_m1_2000_16000 n1_m2_2000_16000 1\n");
  const auto d = validate(g);
  EXPECT_EQ(count_kind(d, DiagnosticKind::DisconnectedSink), 1);
}

TEST(Validate, StripeWithoutPin) {
  const auto g = parse_netlist(
      "R1 n1_m1_0_0 n1_m1_2000_0 1\nV1 n1_m1_0_0 0 1.1\nR2 n1_m1_0_4000 n1_m1_2000_4000 1\n"
      "R3 n1_m1_0_4000 n1_m1_0_0 1\n");
  const auto d = validate(g);
  EXPECT_EQ(count_kind(d, DiagnosticKind::UnanchoredStripe), 1);
}

TEST(Validate, DuplicateEdge) {
  const auto g = parse_netlist("R1 n1_m1_0_0 n1_m1_2000_0 1\nR2 n1_m1_2000_0 n1_m1_0_0 2\nV1 n1_m1_0_0 0 1.1\n");
  EXPECT_EQ(count_kind(validate(g), DiagnosticKind::DuplicateEdge), 1);
}
