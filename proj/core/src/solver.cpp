#include "irkit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <Eigen/SparseCholesky>

#include "irkit/errors.hpp"

namespace irkit {

ConductanceSystem build_system(const PdnGraph& g) {
  if (g.pads().empty()) throw SolveError("netlist has no voltage source");

  const auto n = g.node_count();
  std::vector<std::int32_t> component(n, -1);
  std::vector<std::uint8_t> component_has_pad;
  std::int32_t ncomp = 0;
  std::vector<NodeIndex> stack;
  for (NodeIndex start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    component[start] = ncomp;
    bool pad = false;
    stack.push_back(start);
    while (!stack.empty()) {
      const NodeIndex cur = stack.back();
      stack.pop_back();
      pad = pad || g.is_pad(cur);
      for (auto k : g.incident(cur)) {
        const NodeIndex nb = g.edges()[k].other(cur);
        if (component[nb] < 0) {
          component[nb] = ncomp;
          stack.push_back(nb);
        }
      }
    }
    component_has_pad.push_back(pad);
    ++ncomp;
  }

  ConductanceSystem sys;
  sys.vdd = g.vdd();
  sys.unknown_index.assign(n, -1);
  std::int32_t rows = 0;
  for (NodeIndex i = 0; i < n; ++i) {
    if (g.is_pad(i)) continue;
    if (!component_has_pad[component[i]]) {
      if (g.node_current()[i] > 0.0) {
        throw SolveError("singular system: sink at " + format_node_name(g.node(i)) +
                         " has no resistive path to a pad");
      }
      continue;
    }
    sys.unknown_index[i] = rows++;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * g.edges().size());
  sys.J = Eigen::VectorXd::Zero(rows);
  for (const auto& e : g.edges()) {
    const double cond = 1.0 / e.resistance;
    const auto ra = sys.unknown_index[e.a];
    const auto rb = sys.unknown_index[e.b];
    if (ra >= 0) triplets.emplace_back(ra, ra, cond);
    if (rb >= 0) triplets.emplace_back(rb, rb, cond);
    if (ra >= 0 && rb >= 0) {
      triplets.emplace_back(ra, rb, -cond);
      triplets.emplace_back(rb, ra, -cond);
    } else if (ra >= 0 && g.is_pad(e.b)) {
      sys.J[ra] += cond * sys.vdd;
    } else if (rb >= 0 && g.is_pad(e.a)) {
      sys.J[rb] += cond * sys.vdd;
    }
  }
  for (const auto& s : g.sinks()) {
    const auto r = sys.unknown_index[s.node];
    if (r >= 0) sys.J[r] -= s.current;
  }
  sys.G.resize(rows, rows);
  sys.G.setFromTriplets(triplets.begin(), triplets.end());
  sys.G.makeCompressed();
  return sys;
}

namespace {

double residual_of(const ConductanceSystem& sys, const Eigen::VectorXd& x) {
  const double jnorm = sys.J.lpNorm<Eigen::Infinity>();
  if (sys.J.size() == 0) return 0.0;
  const double r = (sys.G * x - sys.J).lpNorm<Eigen::Infinity>();
  return jnorm > 0.0 ? r / jnorm : r;
}

}  // namespace

NodeVoltages solve_exact(const ConductanceSystem& sys, double rel_tol) {
  if (!(rel_tol > 0.0)) throw SolveError("rel_tol must be positive");
  NodeVoltages out;
  out.vdd = sys.vdd;
  out.volts.assign(sys.unknown_index.size(), sys.vdd);
  if (sys.dimension() == 0) return out;

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                       Eigen::AMDOrdering<Eigen::SparseMatrix<double>::StorageIndex>>
      chol(sys.G);
  if (chol.info() != Eigen::Success) {
    throw SolveError("Cholesky factorization failed (matrix not positive definite)");
  }
  Eigen::VectorXd x = chol.solve(sys.J);
  double res = residual_of(sys, x);
  for (int step = 0; step < 3 && res > rel_tol && std::isfinite(res); ++step) {
    const Eigen::VectorXd r = sys.J - sys.G * x;
    x += chol.solve(r);
    res = residual_of(sys, x);
  }
  if (!(res <= rel_tol)) {
    throw SolveError("solve did not reach requested residual", res);
  }

  for (std::size_t i = 0; i < sys.unknown_index.size(); ++i) {
    if (sys.unknown_index[i] >= 0) out.volts[i] = x[sys.unknown_index[i]];
  }
  out.relative_residual = res;
  return out;
}

double relative_residual(const ConductanceSystem& sys, const NodeVoltages& v) {
  Eigen::VectorXd x(sys.dimension());
  for (std::size_t i = 0; i < sys.unknown_index.size(); ++i) {
    if (sys.unknown_index[i] >= 0) x[sys.unknown_index[i]] = v.volts[i];
  }
  return residual_of(sys, x);
}

NodeVoltages solve_exact(const PdnGraph& g, double rel_tol) {
  return solve_exact(build_system(g), rel_tol);
}

void fill_nearest(ScalarGrid& grid, const std::vector<std::uint8_t>& known,
                  const std::vector<std::uint32_t>& rank) {
  const int w = grid.width();
  const int h = grid.height();
  const std::size_t total = grid.size();
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();

  // Breadth-first search in layers of equal L1 distance. Every pixel of a
  // layer is final before the next layer expands, so the lowest-rank seed
  // among all nearest seeds wins.
  std::vector<std::uint32_t> owner(total, kUnset);
  std::vector<std::uint32_t> best(total, kUnset);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < total; ++i) {
    if (known[i]) {
      owner[i] = static_cast<std::uint32_t>(i);
      best[i] = rank[i];
      frontier.push_back(i);
    }
  }
  if (frontier.empty()) return;

  std::vector<std::size_t> next;
  std::vector<std::uint8_t> queued(total, 0);
  while (!frontier.empty()) {
    next.clear();
    for (std::size_t i : frontier) {
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      const std::size_t nbrs[4] = {
          x > 0 ? i - 1 : total, x + 1 < w ? i + 1 : total,
          y > 0 ? i - w : total, y + 1 < h ? i + w : total};
      for (std::size_t nb : nbrs) {
        if (nb == total || known[nb] || (owner[nb] != kUnset && !queued[nb])) continue;
        if (!queued[nb]) {
          queued[nb] = 1;
          next.push_back(nb);
        }
        if (best[i] < best[nb]) {
          best[nb] = best[i];
          owner[nb] = owner[i];
        }
      }
    }
    for (std::size_t i : next) queued[i] = 0;
    frontier.swap(next);
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (!known[i]) grid[i] = grid[owner[i]];
  }
}

ScalarGrid golden_ir_map(const NodeVoltages& v, const PdnGraph& g, const GridSpec& spec) {
  ScalarGrid grid(spec.width, spec.height, "V");
  std::vector<std::uint8_t> known(grid.size(), 0);
  std::vector<std::uint32_t> rank(grid.size(), std::numeric_limits<std::uint32_t>::max());
  bool any = false;
  for (NodeIndex i = 0; i < g.node_count(); ++i) {
    const auto& id = g.node(i);
    if (id.layer != 1) continue;
    any = true;
    const auto p = static_cast<std::size_t>(spec.row_of(id.y)) * spec.width + spec.column_of(id.x);
    const double drop = v.drop(i);
    if (!known[p] || drop > grid[p]) grid[p] = drop;
    known[p] = 1;
    rank[p] = std::min<std::uint32_t>(rank[p], i);
  }
  if (!any) throw Error("graph has no layer-1 nodes to rasterize");
  fill_nearest(grid, known, rank);
  return grid;
}

}  // namespace irkit
