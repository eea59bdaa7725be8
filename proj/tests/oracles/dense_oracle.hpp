#pragma once

// Reference implementations used only by tests. They share no code with the
// library beyond the graph accessors and are deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "irkit/netlist.hpp"

namespace oracle {

// Solves A x = b in place with partial pivoting. A is row-major n x n.
inline std::vector<double> gaussian_elimination(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (a[piv * n + col] == 0.0) throw std::runtime_error("singular matrix");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

// Node voltages by dense nodal analysis. Nodes with no path to a pad are
// left at vdd.
inline std::vector<double> dense_node_voltages(const irkit::PdnGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : g.edges()) {
    adj[e.a].emplace_back(e.b, 1.0 / e.resistance);
    adj[e.b].emplace_back(e.a, 1.0 / e.resistance);
  }
  std::vector<double> fixed(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::uint8_t> reach(n, 0);
  std::queue<std::size_t> q;
  for (const auto& p : g.pads()) {
    fixed[p.node] = p.voltage;
    if (!reach[p.node]) q.push(p.node);
    reach[p.node] = 1;
  }
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (const auto& [v, w] : adj[u]) {
      if (!reach[v]) {
        reach[v] = 1;
        q.push(v);
      }
    }
  }
  std::vector<long> row(n, -1);
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (reach[i] && std::isnan(fixed[i])) row[i] = static_cast<long>(m++);
  }
  std::vector<double> a(m * m, 0.0);
  std::vector<double> b(m, 0.0);
  std::vector<double> sink(n, 0.0);
  for (const auto& s : g.sinks()) sink[s.node] += s.current;
  for (std::size_t i = 0; i < n; ++i) {
    if (row[i] < 0) continue;
    const auto r = static_cast<std::size_t>(row[i]);
    b[r] -= sink[i];
    for (const auto& [j, w] : adj[i]) {
      a[r * m + r] += w;
      if (row[j] >= 0) {
        a[r * m + static_cast<std::size_t>(row[j])] -= w;
      } else {
        b[r] += w * fixed[j];
      }
    }
  }
  const auto x = gaussian_elimination(std::move(a), std::move(b));
  std::vector<double> v(n, g.vdd());
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isnan(fixed[i])) v[i] = fixed[i];
    if (row[i] >= 0) v[i] = x[static_cast<std::size_t>(row[i])];
  }
  return v;
}

// Max-norm KCL residual over non-pad nodes, relative to the max-norm of
// the Dirichlet-reduced right-hand side.
inline double kcl_relative_residual(const irkit::PdnGraph& g, const std::vector<double>& v) {
  const std::size_t n = g.node_count();
  std::vector<double> net(n, 0.0);
  std::vector<double> rhs(n, 0.0);
  for (const auto& s : g.sinks()) {
    net[s.node] += s.current;
    rhs[s.node] -= s.current;
  }
  for (const auto& e : g.edges()) {
    const double i = (v[e.a] - v[e.b]) / e.resistance;
    net[e.a] += i;
    net[e.b] -= i;
    if (g.is_pad(e.a) && !g.is_pad(e.b)) rhs[e.b] += v[e.a] / e.resistance;
    if (g.is_pad(e.b) && !g.is_pad(e.a)) rhs[e.a] += v[e.b] / e.resistance;
  }
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.is_pad(static_cast<irkit::NodeIndex>(i))) continue;
    worst = std::max(worst, std::abs(net[i]));
    scale = std::max(scale, std::abs(rhs[i]));
  }
  return scale > 0.0 ? worst / scale : worst;
}

// Isolated chain with pins held at fixed voltages.
struct StripeReference {
  std::vector<double> voltage;
  std::vector<double> pin_current;  // supplied by each node's pin, 0 elsewhere
};

inline StripeReference dense_stripe(const std::vector<double>& seg_r, const std::vector<std::size_t>& pins,
                                    const std::vector<double>& pin_v, const std::vector<double>& taps) {
  const std::size_t n = taps.size();
  std::vector<double> fixed(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < pins.size(); ++k) fixed[pins[k]] = pin_v[k];
  std::vector<long> row(n, -1);
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(fixed[i])) row[i] = static_cast<long>(m++);
  }
  std::vector<double> a(m * m, 0.0);
  std::vector<double> b(m, 0.0);
  auto stamp = [&](std::size_t i, std::size_t j, double w) {
    if (row[i] < 0) return;
    const auto r = static_cast<std::size_t>(row[i]);
    a[r * m + r] += w;
    if (row[j] >= 0) {
      a[r * m + static_cast<std::size_t>(row[j])] -= w;
    } else {
      b[r] += w * fixed[j];
    }
  };
  for (std::size_t k = 0; k + 1 < n; ++k) {
    stamp(k, k + 1, 1.0 / seg_r[k]);
    stamp(k + 1, k, 1.0 / seg_r[k]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (row[i] >= 0) b[static_cast<std::size_t>(row[i])] -= taps[i];
  }
  const auto x = m ? gaussian_elimination(std::move(a), std::move(b)) : std::vector<double>{};
  StripeReference out;
  out.voltage.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.voltage[i] = row[i] >= 0 ? x[static_cast<std::size_t>(row[i])] : fixed[i];
  out.pin_current.assign(n, 0.0);
  for (std::size_t p : pins) {
    double i = taps[p];
    if (p > 0) i += (out.voltage[p] - out.voltage[p - 1]) / seg_r[p - 1];
    if (p + 1 < n) i += (out.voltage[p] - out.voltage[p + 1]) / seg_r[p];
    out.pin_current[p] = i;
  }
  return out;
}

// O(P^2) L1 distance to the nearest occupied pixel; nullopt when none is.
inline std::optional<std::vector<std::int32_t>> brute_force_l1(const std::vector<std::uint8_t>& occ, int w,
                                                               int h) {
  std::vector<std::pair<int, int>> sites;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (occ[static_cast<std::size_t>(y) * w + x]) sites.emplace_back(x, y);
    }
  }
  if (sites.empty()) return std::nullopt;
  std::vector<std::int32_t> d(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::int32_t best = std::numeric_limits<std::int32_t>::max();
      for (const auto& [sx, sy] : sites) best = std::min(best, std::abs(sx - x) + std::abs(sy - y));
      d[static_cast<std::size_t>(y) * w + x] = best;
    }
  }
  return d;
}

}  // namespace oracle
