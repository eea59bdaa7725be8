#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Sparse>

#include "irkit/grid.hpp"
#include "irkit/netlist.hpp"

namespace irkit {

// Nodal system G V = J over the non-pad nodes. Pads are eliminated as
// Dirichlet nodes, so G stays symmetric positive definite.
struct ConductanceSystem {
  // Row of each graph node in G, or -1 for pads and for floating nodes
  // (no path to a pad and no current, pinned at vdd).
  std::vector<std::int32_t> unknown_index;
  Eigen::SparseMatrix<double> G;  // siemens
  Eigen::VectorXd J;              // amperes
  double vdd = kDefaultVdd;

  Eigen::Index dimension() const { return G.rows(); }
};

// Throws SolveError when there are no pads, or when a sink sits in a
// component that no pad reaches.
ConductanceSystem build_system(const PdnGraph& g);

// Voltage of every graph node, indexed by NodeIndex.
struct NodeVoltages {
  std::vector<double> volts;
  double vdd = kDefaultVdd;
  double relative_residual = 0.0;

  double drop(NodeIndex n) const { return vdd - volts[n]; }
};

inline constexpr double kDefaultRelTol = 1e-10;

// Sparse Cholesky with iterative refinement; throws SolveError (carrying
// the residual achieved) when ||G V - J||inf / ||J||inf stays above rel_tol.
NodeVoltages solve_exact(const ConductanceSystem& sys, double rel_tol = kDefaultRelTol);

// ||G V - J||inf / ||J||inf for the unknowns of v.
double relative_residual(const ConductanceSystem& sys, const NodeVoltages& v);

NodeVoltages solve_exact(const PdnGraph& g, double rel_tol = kDefaultRelTol);

// Worst-case drop of the layer-1 nodes in each pixel. Pixels without a
// layer-1 node take the value of the L1-nearest occupied pixel; ties go to
// the pixel holding the lowest node index.
ScalarGrid golden_ir_map(const NodeVoltages& v, const PdnGraph& g, const GridSpec& spec);

// Fills every pixel where `known` is zero with the value of the L1-nearest
// known pixel. `rank` breaks ties (lower wins). Leaves the grid untouched
// when nothing is known.
void fill_nearest(ScalarGrid& grid, const std::vector<std::uint8_t>& known,
                  const std::vector<std::uint32_t>& rank);

}  // namespace irkit
