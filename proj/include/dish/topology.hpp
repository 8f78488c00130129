#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dish/types.hpp"

namespace dish {

/// Undirected simple graph on nodes {0, ..., n-1}. Edges are stored
/// normalized (i < j), sorted, and duplicate-free.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;

  /// Validating constructor: rejects self-loops, duplicates, out-of-range
  /// endpoints, and n < 2. Edge orientation is normalized.
  static Graph from_edges(int n, std::vector<std::pair<int, int>> edges);

  bool has_edge(int i, int j) const;
  std::vector<int> degrees() const;
  std::vector<std::vector<int>> adjacency() const;
  bool connected() const;

  /// Edge-list text format: header line "n=<count>", then one "i j" per line.
  void write_edge_list(std::ostream& os) const;
  static Graph read_edge_list(std::istream& is);

  bool operator==(const Graph& other) const {
    return n == other.n && edges == other.edges;
  }
};

/// Samples G(n, p) with a seeded generator. Each unordered pair {i, j},
/// i < j in lexicographic order, is included independently with probability
/// p. Disconnected samples are resampled with the seed incremented;
/// `resamples` (if given) receives the number of rejected draws.
Graph erdos_renyi(int n, double p, std::uint64_t seed, int* resamples = nullptr);

/// Consensus matrix Z over a connected graph, together with the block
/// dimension d of the Kronecker lift W = (I_n - Z) (x) I_d. Construction
/// validates symmetry, row sums, the sparsity pattern, and positive
/// diagonal; gamma is the second largest eigenvalue of Z.
class ConsensusMatrix {
 public:
  /// Degree-based weights: z_ij = 1/(delta_max+1) on edges,
  /// z_ii = 1 - delta_i/(delta_max+1).
  static ConsensusMatrix degree_weights(const Graph& g, int d);

  /// Validates a user-supplied Z against the graph and Assumption-style
  /// invariants; throws Error naming the violated property.
  static ConsensusMatrix custom(const Graph& g, Matrix Z, int d);

  int n() const { return static_cast<int>(Z_.rows()); }
  int d() const { return d_; }
  double gamma() const { return gamma_; }
  /// Smallest positive eigenvalue of W, equal to 1 - gamma.
  double spectral_gap() const { return 1.0 - gamma_; }
  const Matrix& Z() const { return Z_; }
  const Graph& graph() const { return g_; }
  double self_weight(int i) const { return Z_(i, i); }

  /// Neighbors of node i as (j, z_ij) pairs, sorted by j.
  const std::vector<std::pair<int, double>>& neighbors(int i) const {
    return nbrs_[static_cast<std::size_t>(i)];
  }

  /// y = ((I_n - Z) (x) I_d) v, computed blockwise; never materializes the
  /// nd x nd lift.
  void apply_W(const Vector& v, Vector& out) const;
  Vector apply_W(const Vector& v) const;

  /// Row-major CSV export, 17 significant digits.
  void write_csv(std::ostream& os) const;

 private:
  ConsensusMatrix(Graph g, Matrix Z, int d);

  Graph g_;
  Matrix Z_;
  int d_ = 1;
  double gamma_ = 0.0;
  std::vector<std::vector<std::pair<int, double>>> nbrs_;
};

}  // namespace dish
