#include "ggadmm/topology.hpp"

#include <algorithm>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "ggadmm/errors.hpp"
#include "ggadmm/rng.hpp"

namespace ggadmm {

namespace {

struct Dsu {
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
  std::vector<int> parent;
};

}  // namespace

Topology build_topology(int n_workers, const std::vector<std::pair<int, int>>& edges) {
  if (n_workers < 2) throw InvalidArgument("topology needs at least 2 workers");

  std::set<std::pair<int, int>> canonical;
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n_workers || v >= n_workers)
      throw InvalidEdge("edge (" + std::to_string(u) + "," + std::to_string(v) +
                        ") out of range for " + std::to_string(n_workers) + " workers");
    if (u == v) throw InvalidEdge("self-loop at worker " + std::to_string(u));
    canonical.emplace(std::min(u, v), std::max(u, v));
  }

  std::vector<std::vector<int>> adj(n_workers);
  for (const auto& [u, v] : canonical) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());

  // BFS two-coloring; the component of worker 0 starts as head.
  std::vector<int> color(n_workers, -1);
  std::deque<int> queue{0};
  color[0] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[u]) {
      if (color[v] == -1) {
        color[v] = 1 - color[u];
        queue.push_back(v);
      } else if (color[v] == color[u]) {
        throw NotBipartite("odd cycle through edge (" + std::to_string(u) + "," +
                           std::to_string(v) + ")");
      }
    }
  }
  for (int n = 0; n < n_workers; ++n)
    if (color[n] == -1)
      throw NotConnected("worker " + std::to_string(n) + " unreachable from worker 0");

  Topology t;
  t.n_workers_ = n_workers;
  t.neighbors_ = std::move(adj);
  t.is_head_.resize(n_workers);
  for (int n = 0; n < n_workers; ++n) {
    t.is_head_[n] = color[n] == 0;
    (color[n] == 0 ? t.heads_ : t.tails_).push_back(n);
  }
  for (const auto& [u, v] : canonical) {
    const int head = color[u] == 0 ? u : v;
    const int tail = color[u] == 0 ? v : u;
    t.edges_.push_back({head, tail});
  }
  std::sort(t.edges_.begin(), t.edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.head, a.tail) < std::tie(b.head, b.tail); });
  return t;
}

IncidenceSet incidence_set(const Topology& topology) {
  const int n = topology.n_workers();
  const auto& edges = topology.edges();
  const int m = static_cast<int>(edges.size());

  IncidenceSet s;
  s.m_signed = Eigen::MatrixXi::Zero(n, 2 * m);
  s.m_unsigned = Eigen::MatrixXi::Zero(n, 2 * m);
  s.degree_matrix = Eigen::MatrixXi::Zero(n, n);
  s.adjacency = Eigen::MatrixXi::Zero(n, n);
  s.c_block = Eigen::MatrixXi::Zero(n, n);

  for (int e = 0; e < m; ++e) {
    const auto& [head, tail] = edges[e];
    s.m_signed(head, 2 * e) = 1;
    s.m_signed(tail, 2 * e) = -1;
    s.m_signed(tail, 2 * e + 1) = 1;
    s.m_signed(head, 2 * e + 1) = -1;
    s.m_unsigned(head, 2 * e) = 1;
    s.m_unsigned(tail, 2 * e) = 1;
    s.m_unsigned(head, 2 * e + 1) = 1;
    s.m_unsigned(tail, 2 * e + 1) = 1;
    s.adjacency(head, tail) = 1;
    s.adjacency(tail, head) = 1;
    s.c_block(head, tail) = 1;
  }
  for (int w = 0; w < n; ++w) s.degree_matrix(w, w) = topology.degree(w);
  return s;
}

Eigen::MatrixXd oriented_incidence(const Topology& topology) {
  const auto& edges = topology.edges();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(topology.n_workers(), edges.size());
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    m(edges[e].head, e) = 1.0;
    m(edges[e].tail, e) = -1.0;
  }
  return m;
}

Topology generate_path(int n_workers) {
  if (n_workers < 2) throw InvalidArgument("path needs at least 2 workers");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n_workers; ++i) edges.emplace_back(i, i + 1);
  return build_topology(n_workers, edges);
}

Topology generate_random_bipartite(int n_heads, int n_tails, double edge_prob,
                                   std::uint64_t seed) {
  if (n_heads < 1 || n_tails < 1) throw InvalidArgument("need at least one head and one tail");
  if (!(edge_prob > 0.0) || edge_prob > 1.0) throw InvalidArgument("edge_prob must be in (0,1]");

  const int n = n_heads + n_tails;
  std::vector<std::pair<int, int>> edges;
  for (int h = 0; h < n_heads; ++h) {
    for (int t = 0; t < n_tails; ++t) {
      const int tail = n_heads + t;
      if (rng::stream(seed, static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(tail))
              .uniform(0) < edge_prob)
        edges.emplace_back(h, tail);
    }
  }

  // Deterministic repair: anchor worker 0 to the first tail, then hang every
  // remaining component off the anchor pair, scanning workers in id order.
  Dsu dsu(n);
  for (const auto& [u, v] : edges) dsu.unite(u, v);
  const int anchor_tail = n_heads;
  if (dsu.find(0) != dsu.find(anchor_tail)) {
    edges.emplace_back(0, anchor_tail);
    dsu.unite(0, anchor_tail);
  }
  for (int w = 0; w < n; ++w) {
    if (dsu.find(w) == dsu.find(0)) continue;
    edges.emplace_back(w < n_heads ? w : 0, w < n_heads ? anchor_tail : w);
    dsu.unite(w, 0);
  }
  return build_topology(n, edges);
}

std::vector<std::pair<int, int>> read_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    long u = 0, v = 0;
    if (!(fields >> u)) continue;  // blank line
    if (!(fields >> v)) throw ParseError("expected two worker ids", line_no);
    std::string extra;
    if (fields >> extra) throw ParseError("trailing content '" + extra + "'", line_no);
    if (u < 0 || v < 0) throw ParseError("worker ids must be nonnegative", line_no);
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return edges;
}

void write_edge_list(std::ostream& out, const Topology& topology) {
  out << "# workers: " << topology.n_workers() << "\n";
  for (const auto& [head, tail] : topology.edges()) out << head << " " << tail << "\n";
}

}  // namespace ggadmm
