#include "dish/topology.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "dish/rng.hpp"

namespace dish {

namespace {

constexpr double kAssumptionTol = 1e-12;

void format_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 2) throw Error("graph needs at least 2 nodes");
  for (auto& e : edges) {
    if (e.first == e.second) throw Error("self-loop not allowed");
    if (e.first < 0 || e.second < 0 || e.first >= n || e.second >= n)
      throw Error("edge endpoint out of range");
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw Error("duplicate edge");
  Graph g;
  g.n = n;
  g.edges = std::move(edges);
  return g;
}

bool Graph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(n), 0);
  for (const auto& e : edges) {
    ++deg[static_cast<std::size_t>(e.first)];
    ++deg[static_cast<std::size_t>(e.second)];
  }
  return deg;
}

std::vector<std::vector<int>> Graph::adjacency() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.first)].push_back(e.second);
    adj[static_cast<std::size_t>(e.second)].push_back(e.first);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

bool Graph::connected() const {
  if (n <= 0) return false;
  const auto adj = adjacency();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int found = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++found;
        stack.push_back(v);
      }
    }
  }
  return found == n;
}

void Graph::write_edge_list(std::ostream& os) const {
  os << "n=" << n << "\n";
  for (const auto& e : edges) os << e.first << " " << e.second << "\n";
}

Graph Graph::read_edge_list(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("n=", 0) != 0)
    throw Error("edge list: missing n= header");
  int n = 0;
  try {
    n = std::stoi(line.substr(2));
  } catch (const std::exception&) {
    throw Error("edge list: bad node count");
  }
  std::vector<std::pair<int, int>> edges;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int i = 0, j = 0;
    if (!(ls >> i >> j)) throw Error("edge list: bad edge line '" + line + "'");
    edges.emplace_back(i, j);
  }
  return Graph::from_edges(n, std::move(edges));
}

Graph erdos_renyi(int n, double p, std::uint64_t seed, int* resamples) {
  if (n < 2) throw Error("graph needs at least 2 nodes");
  if (!(p > 0.0) || p > 1.0) throw Error("edge probability must be in (0, 1]");
  constexpr int kMaxAttempts = 10000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(seed + static_cast<std::uint64_t>(attempt));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.bernoulli(p)) edges.emplace_back(i, j);
    Graph g = Graph::from_edges(n, std::move(edges));
    if (g.connected()) {
      if (resamples) *resamples = attempt;
      return g;
    }
  }
  throw Error("graph generation failed");
}

ConsensusMatrix::ConsensusMatrix(Graph g, Matrix Z, int d)
    : g_(std::move(g)), Z_(std::move(Z)), d_(d) {
  const int n = static_cast<int>(Z_.rows());
  nbrs_.resize(static_cast<std::size_t>(n));
  for (const auto& e : g_.edges) {
    nbrs_[static_cast<std::size_t>(e.first)].emplace_back(e.second,
                                                          Z_(e.first, e.second));
    nbrs_[static_cast<std::size_t>(e.second)].emplace_back(e.first,
                                                           Z_(e.second, e.first));
  }
  for (auto& nb : nbrs_) std::sort(nb.begin(), nb.end());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Z_, Eigen::EigenvaluesOnly);
  gamma_ = es.eigenvalues()(n - 2);
}

ConsensusMatrix ConsensusMatrix::degree_weights(const Graph& g, int d) {
  if (d < 1) throw Error("block dimension must be positive");
  if (!g.connected()) throw Error("graph not connected");
  const auto deg = g.degrees();
  const int dmax = *std::max_element(deg.begin(), deg.end());
  const double w = 1.0 / (dmax + 1.0);
  Matrix Z = Matrix::Zero(g.n, g.n);
  for (const auto& e : g.edges) {
    Z(e.first, e.second) = w;
    Z(e.second, e.first) = w;
  }
  for (int i = 0; i < g.n; ++i)
    Z(i, i) = 1.0 - deg[static_cast<std::size_t>(i)] * w;
  return ConsensusMatrix(g, std::move(Z), d);
}

ConsensusMatrix ConsensusMatrix::custom(const Graph& g, Matrix Z, int d) {
  if (d < 1) throw Error("block dimension must be positive");
  if (!g.connected()) throw Error("graph not connected");
  if (Z.rows() != g.n || Z.cols() != g.n) throw Error("consensus matrix shape");
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j)
      if (std::abs(Z(i, j) - Z(j, i)) > kAssumptionTol)
        throw Error("asymmetric");
  for (int i = 0; i < g.n; ++i)
    if (std::abs(Z.row(i).sum() - 1.0) > kAssumptionTol) throw Error("row sums");
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j) {
      const bool nonzero = std::abs(Z(i, j)) > kAssumptionTol;
      if (nonzero != g.has_edge(i, j)) throw Error("sparsity mismatch");
    }
  for (int i = 0; i < g.n; ++i)
    if (!(Z(i, i) > 0.0)) throw Error("nonpositive diagonal");
  return ConsensusMatrix(g, std::move(Z), d);
}

void ConsensusMatrix::apply_W(const Vector& v, Vector& out) const {
  const int nn = n();
  if (v.size() != static_cast<Eigen::Index>(nn) * d_)
    throw Error("apply_W: dimension mismatch");
  out.resize(v.size());
  for (int i = 0; i < nn; ++i) {
    auto oi = out.segment(static_cast<Eigen::Index>(i) * d_, d_);
    oi = (1.0 - Z_(i, i)) * v.segment(static_cast<Eigen::Index>(i) * d_, d_);
    for (const auto& [j, zij] : nbrs_[static_cast<std::size_t>(i)])
      oi.noalias() -= zij * v.segment(static_cast<Eigen::Index>(j) * d_, d_);
  }
}

Vector ConsensusMatrix::apply_W(const Vector& v) const {
  Vector out;
  apply_W(v, out);
  return out;
}

void ConsensusMatrix::write_csv(std::ostream& os) const {
  const int nn = n();
  for (int i = 0; i < nn; ++i) {
    for (int j = 0; j < nn; ++j) {
      if (j) os << ",";
      format_double(os, Z_(i, j));
    }
    os << "\n";
  }
}

}  // namespace dish
