#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace ggadmm {

// One communication link. Stored head-first; the head/tail orientation is
// fixed by the two-coloring and reused everywhere (incidence columns,
// primal residuals).
struct Edge {
  int head;
  int tail;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Bipartite connected worker graph. Immutable after construction; safe to
// share across threads.
class Topology {
 public:
  int n_workers() const { return n_workers_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& heads() const { return heads_; }
  const std::vector<int>& tails() const { return tails_; }
  const std::vector<int>& neighbors(int worker) const { return neighbors_[worker]; }
  int degree(int worker) const { return static_cast<int>(neighbors_[worker].size()); }
  bool is_head(int worker) const { return is_head_[worker] != 0; }

 private:
  friend Topology build_topology(int, const std::vector<std::pair<int, int>>&);

  int n_workers_ = 0;
  std::vector<Edge> edges_;  // sorted by (head, tail)
  std::vector<int> heads_;
  std::vector<int> tails_;
  std::vector<std::vector<int>> neighbors_;  // sorted, duplicate-free
  std::vector<char> is_head_;
};

// Matrix views of the graph. All entries are exact integers; the identities
//   D - A = M- M-^T / 2
//   D = (M- M-^T + M+ M+^T) / 4
//   A = (M+ M+^T - M- M-^T) / 4
//   A = C + C^T
// hold in integer arithmetic and are used as test oracles.
struct IncidenceSet {
  Eigen::MatrixXi m_signed;      // N x 2|E|, +1 at source, -1 at destination
  Eigen::MatrixXi m_unsigned;    // N x 2|E|, +1 at both endpoints
  Eigen::MatrixXi degree_matrix; // N x N diagonal
  Eigen::MatrixXi adjacency;     // N x N, 0/1
  Eigen::MatrixXi c_block;       // head->tail half of the adjacency
};

// Validates and two-colors an edge list. Worker 0's side of the coloring is
// the head group. Throws InvalidEdge, NotConnected, NotBipartite.
Topology build_topology(int n_workers, const std::vector<std::pair<int, int>>& edges);

// Both-orientation incidence matrices; for edge index e (edges() order) the
// head->tail column is 2e and the tail->head column is 2e+1.
IncidenceSet incidence_set(const Topology& topology);

// Single-orientation incidence (N x |E|, +1 at head, -1 at tail) as reals;
// spans the same column space as the signed incidence matrix.
Eigen::MatrixXd oriented_incidence(const Topology& topology);

// Chain 0-1-...-(N-1); even ids end up heads.
Topology generate_path(int n_workers);

// Heads are ids [0, n_heads), tails [n_heads, n_heads+n_tails). Each
// head-tail pair is kept with probability edge_prob (seeded, deterministic);
// a disconnected result is repaired with the minimum number of head-tail
// edges, joining components in id order.
Topology generate_random_bipartite(int n_heads, int n_tails, double edge_prob,
                                   std::uint64_t seed);

// Edge-list text format: one "u v" pair per line, whitespace separated,
// 0-based ids; '#' starts a comment.
std::vector<std::pair<int, int>> read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const Topology& topology);

}  // namespace ggadmm
