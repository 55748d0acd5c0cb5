#include "platoon/topology.hpp"

#include <sstream>
#include <vector>

namespace platoon {

namespace {

// Reachability over information edges: successor set of j is
// { i : adjacency(i, j) > 0 }.
std::vector<bool> reachableFrom(const Matrix& adjacency, int root) {
  const int n = static_cast<int>(adjacency.rows());
  std::vector<bool> seen(n, false);
  std::vector<int> stack{root};
  seen[root] = true;
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (int i = 0; i < n; ++i) {
      if (!seen[i] && adjacency(i, j) > 0.0) {
        seen[i] = true;
        stack.push_back(i);
      }
    }
  }
  return seen;
}

}  // namespace

void CommTopology::validate() const {
  std::ostringstream issues;
  if (n < 2) issues << "vehicle count must be at least 2; ";
  if (adjacency.rows() != n || adjacency.cols() != n) {
    issues << "adjacency must be " << n << "x" << n << " (got " << adjacency.rows() << "x"
           << adjacency.cols() << "); ";
    throw ValidationError("invalid topology: " + issues.str());
  }
  if (leader < 0 || leader >= n) issues << "leader index out of range; ";
  for (int i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) issues << "self-loop at vehicle " << i << "; ";
    for (int j = 0; j < n; ++j) {
      if (adjacency(i, j) < 0.0) issues << "negative weight at (" << i << "," << j << "); ";
    }
  }
  if (issues.str().empty()) {
    if (adjacency.row(leader).sum() != 0.0) {
      issues << "leader " << leader << " must have no incoming links (row not zero); ";
    }
    const auto seen = reachableFrom(adjacency, leader);
    for (int i = 0; i < n; ++i) {
      const bool detached = adjacency.row(i).sum() == 0.0 && adjacency.col(i).sum() == 0.0;
      if (!seen[i] && !detached) {
        issues << "vehicle " << i << " not reachable from leader " << leader << "; ";
      }
    }
  }
  if (!issues.str().empty()) throw ValidationError("invalid topology: " + issues.str());
}

bool hasRootedSpanningTree(const CommTopology& t, int root) {
  if (root < 0 || root >= t.n) throw ValidationError("root index out of range");
  const auto seen = reachableFrom(t.adjacency, root);
  for (int i = 0; i < t.n; ++i) {
    if (!seen[i]) return false;
  }
  return true;
}

Matrix reduceAboutLeader(const Matrix& m, int leader) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw ValidationError("reduceAboutLeader: matrix must be square");
  if (leader < 0 || leader >= n) throw ValidationError("reduceAboutLeader: leader out of range");
  Matrix out(n - 1, n - 1);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (i == leader) continue;
    int c = 0;
    for (int j = 0; j < n; ++j) {
      if (j == leader) continue;
      out(r, c) = m(i, j) - m(leader, j);
      ++c;
    }
    ++r;
  }
  return out;
}

std::pair<Matrix, Matrix> reduce(const Matrix& fresh, const Matrix& delayCoupling, int leader) {
  return {reduceAboutLeader(fresh, leader), reduceAboutLeader(delayCoupling, leader)};
}

CommTopology isolate(const CommTopology& t, int victim) {
  if (victim < 0 || victim >= t.n) throw ValidationError("isolate: victim index out of range");
  if (victim == t.leader) {
    throw ContractViolation(
        "isolate: cutting the leader's links without a re-election violates the "
        "rooted-tree assumption");
  }
  CommTopology out = t;
  out.adjacency.col(victim).setZero();
  return out;
}

LaplacianFamily buildFamily(const CommTopology& t, std::optional<int> delayedSource) {
  LaplacianFamily fam;
  fam.full = laplacian(t.adjacency);
  Matrix freshAdj = t.adjacency;
  if (delayedSource.has_value()) {
    if (*delayedSource < 0 || *delayedSource >= t.n) {
      throw ValidationError("buildFamily: delayed source index out of range");
    }
    freshAdj.col(*delayedSource).setZero();
  }
  fam.fresh = laplacian(freshAdj);
  fam.delayCoupling = fam.full - fam.fresh;
  std::tie(fam.reducedFresh, fam.reducedDelayed) =
      reduce(fam.fresh, fam.delayCoupling, t.leader);
  return fam;
}

}  // namespace platoon
