#include "saddlenet/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>

#include <Eigen/Eigenvalues>

#include "saddlenet/linalg.hpp"
#include "saddlenet/rng.hpp"

namespace saddlenet {

NetworkGraph::NetworkGraph(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)), adjacency_(n) {
  for (const auto& [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

NetworkGraph NetworkGraph::from_edges(int n, std::vector<Edge> edges) {
  if (n < 1) throw ValidationError("graph: need at least one vertex");
  for (auto& e : edges) {
    if (e.first == e.second) throw ValidationError("graph: self loop at vertex " + std::to_string(e.first));
    if (e.first < 0 || e.second < 0 || e.first >= n || e.second >= n) {
      throw ValidationError("graph: edge (" + std::to_string(e.first) + ", " + std::to_string(e.second) +
                            ") out of range for n = " + std::to_string(n));
    }
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  NetworkGraph g(n, std::move(edges));
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : g.adjacency_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  if (reached != n) {
    throw ValidationError("graph: not connected (" + std::to_string(reached) + " of " + std::to_string(n) +
                          " vertices reachable from 0)");
  }
  return g;
}

NetworkGraph NetworkGraph::ring(int n) {
  if (n < 3) throw ValidationError("ring: need n >= 3, got " + std::to_string(n));
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return from_edges(n, std::move(edges));
}

NetworkGraph NetworkGraph::path(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return from_edges(n, std::move(edges));
}

NetworkGraph NetworkGraph::complete(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return from_edges(n, std::move(edges));
}

NetworkGraph NetworkGraph::random_connected(int n, double edge_prob, std::uint64_t seed) {
  if (n < 2) throw ValidationError("random_connected: need n >= 2");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0)) throw ValidationError("random_connected: edge_prob must be in (0, 1]");
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.unit() < edge_prob) edges.emplace_back(i, j);

  // Random spanning tree: shuffle, then attach each vertex to an earlier one.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  for (int k = 1; k < n; ++k) edges.emplace_back(order[k], order[rng.below(static_cast<std::uint64_t>(k))]);
  return from_edges(n, std::move(edges));
}

int NetworkGraph::max_degree() const {
  int d = 0;
  for (const auto& adj : adjacency_) d = std::max(d, static_cast<int>(adj.size()));
  return d;
}

Matrix NetworkGraph::laplacian() const {
  Matrix l = Matrix::Zero(n_, n_);
  for (const auto& [a, b] : edges_) {
    l(a, b) -= 1.0;
    l(b, a) -= 1.0;
    l(a, a) += 1.0;
    l(b, b) += 1.0;
  }
  return l;
}

Vector NetworkGraph::laplacian_apply(const Vector& u, int m) const {
  require(u.size() == static_cast<Eigen::Index>(n_) * m, "laplacian_apply: dimension mismatch");
  Vector out = Vector::Zero(u.size());
  for (int i = 0; i < n_; ++i) {
    auto oi = out.segment(static_cast<Eigen::Index>(i) * m, m);
    const auto ui = u.segment(static_cast<Eigen::Index>(i) * m, m);
    for (int j : adjacency_[i]) oi += ui - u.segment(static_cast<Eigen::Index>(j) * m, m);
  }
  return out;
}

double NetworkGraph::algebraic_connectivity() const {
  if (n_ < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian(), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[1];
}

double lambda_max(const NetworkGraph& graph) {
  const int n = graph.size();
  if (n == 1) return 0.0;
  // All-ones start (the kernel direction) perturbed at index 0, plus a small
  // graded ramp so that no eigenvector is orthogonal to the start by symmetry.
  Vector start = Vector::Ones(n);
  start[0] += 1.0;
  for (int i = 0; i < n; ++i) start[i] += 1e-3 * (i + 1) / n;
  const auto r = power_iteration([&](const Vector& v) { return graph.laplacian_apply(v, 1); }, start, 1e-10, 10000);
  if (!r.converged) {
    throw InvariantError("lambda_max: power iteration did not converge in " + std::to_string(r.iterations) +
                         " iterations");
  }
  const double gershgorin = 2.0 * graph.max_degree();
  if (r.value > gershgorin * (1.0 + 1e-12)) {
    throw InvariantError("lambda_max: " + std::to_string(r.value) + " exceeds Gershgorin bound " +
                         std::to_string(gershgorin));
  }
  return r.value;
}

}  // namespace saddlenet
