#pragma once

#include <optional>
#include <string>
#include <vector>

#include "platoon/common.hpp"

namespace platoon {

/// Weighted directed communication graph of a platoon.
///
/// adjacency(i, j) is the weight of the link that delivers vehicle j's state
/// to vehicle i (information flows j -> i). The leader is the consensus
/// reference; its adjacency row must be zero so that it evolves autonomously.
struct CommTopology {
  int n = 0;
  Matrix adjacency;  // n x n, non-negative, zero diagonal
  int leader = 0;

  /// Throws ValidationError unless all structural invariants hold:
  /// square matrix, no self-loops, non-negative weights, autonomous leader,
  /// and a spanning tree rooted at the leader covering every vehicle that
  /// has at least one incident edge (detached vehicles are allowed; they
  /// represent members deliberately cut off from the platoon).
  void validate() const;
};

/// One named communication snapshot used by the switching machinery.
struct TopologyPhase {
  std::string id;
  CommTopology topology;
};

/// Every Laplacian-derived matrix the controller and the stability analysis
/// consume, for one phase and one (optional) delayed data source.
///
/// `fresh` is the Laplacian of the subgraph whose links carry current data;
/// `delayCoupling` covers the removed links (those carrying the delayed
/// vehicle's state) and satisfies full == fresh + delayCoupling exactly.
/// The reduced blocks live in follower coordinates (leader removed).
struct LaplacianFamily {
  Matrix full;            // Laplacian of the complete phase graph
  Matrix fresh;           // Laplacian of the current-data subgraph
  Matrix delayCoupling;   // full - fresh
  Matrix reducedFresh;    // (n-1) x (n-1)
  Matrix reducedDelayed;  // (n-1) x (n-1)
};

/// Graph Laplacian: diag(row sums of A) - A. Row sums are zero by
/// construction.
template <typename Derived>
MatrixX<typename Derived::Scalar> laplacian(const Eigen::MatrixBase<Derived>& adjacency) {
  using Scalar = typename Derived::Scalar;
  if (adjacency.rows() != adjacency.cols()) {
    throw ValidationError("laplacian: adjacency matrix must be square");
  }
  MatrixX<Scalar> lap = -adjacency;
  lap.diagonal() += adjacency.rowwise().sum();
  return lap;
}

/// True iff every vehicle is reachable from `root` along information edges.
bool hasRootedSpanningTree(const CommTopology& t, int root);

/// Removes the rows/column of the reference vehicle after subtracting its
/// row, i.e. out(i, j) = m(i, j) - m(leader, j) restricted to non-leader
/// indices. Applied to a Laplacian this produces the follower-coordinate
/// coupling matrix whose spectrum equals the Laplacian's nonzero spectrum.
Matrix reduceAboutLeader(const Matrix& m, int leader);

/// Reduces the fresh/delayed pair of a phase in one call.
std::pair<Matrix, Matrix> reduce(const Matrix& fresh, const Matrix& delayCoupling, int leader);

/// Cuts every link that carries data FROM `victim` (column zeroed). Incoming
/// links of the victim are left untouched; recovery phases may add more.
/// Throws ContractViolation when the victim is the leader, since the result
/// cannot satisfy the rooted-tree assumption without a re-election.
CommTopology isolate(const CommTopology& t, int victim);

/// Assembles the full Laplacian family of a phase. When `delayedSource` is
/// set, links out of that vehicle form the delayed subgraph.
LaplacianFamily buildFamily(const CommTopology& t, std::optional<int> delayedSource);

}  // namespace platoon
