#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "saddlenet/common.hpp"

namespace saddlenet {

/// Static undirected connected communication graph.
///
/// Adjacency lists are kept sorted; the Laplacian L = D - A is only formed on
/// request. Immutable after construction.
class NetworkGraph {
 public:
  using Edge = std::pair<int, int>;

  /// Empty graph (no vertices); placeholder until assigned.
  NetworkGraph() = default;

  /// Normalizes each edge to (min, max) and deduplicates. Throws
  /// ValidationError on self loops, out-of-range vertices, or a disconnected
  /// graph.
  static NetworkGraph from_edges(int n, std::vector<Edge> edges);

  /// Cycle on n >= 3 vertices.
  static NetworkGraph ring(int n);
  /// Path 0 - 1 - ... - (n-1), n >= 1.
  static NetworkGraph path(int n);
  static NetworkGraph complete(int n);
  /// Erdos-Renyi G(n, p) united with a random spanning tree, so the result is
  /// always connected. Deterministic in `seed`.
  static NetworkGraph random_connected(int n, double edge_prob, std::uint64_t seed);

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adjacency_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  int max_degree() const;

  Matrix laplacian() const;

  /// (L kron I_m) u, computed from neighbor sums: block i is
  /// sum_{j in N_i} (u_i - u_j).
  Vector laplacian_apply(const Vector& u, int m) const;

  /// Second-smallest Laplacian eigenvalue (dense symmetric eigensolver).
  double algebraic_connectivity() const;

 private:
  NetworkGraph(int n, std::vector<Edge> edges);

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
};

/// Largest Laplacian eigenvalue by power iteration (tolerance 1e-10, at most
/// 10000 iterations). Throws InvariantError when the iteration does not
/// converge or the result breaks the Gershgorin bound 2 * max degree.
double lambda_max(const NetworkGraph& graph);

}  // namespace saddlenet
