#include <doctest.h>

#include <sstream>

#include "dish/rng.hpp"
#include "dish/topology.hpp"

using namespace dish;

namespace {

// test-side oracle: materialize (I_n - Z) (x) I_d and multiply densely
Matrix kron_lift_oracle(const Matrix& Z, int d) {
  const Eigen::Index n = Z.rows();
  Matrix W = Matrix::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = (i == j ? 1.0 : 0.0) - Z(i, j);
      for (int k = 0; k < d; ++k) W(i * d + k, j * d + k) = w;
    }
  return W;
}

Vector random_vector(Rng& rng, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = rng.normal();
  return v;
}

Graph path3() { return Graph::from_edges(3, {{0, 1}, {1, 2}}); }

}  // namespace

TEST_CASE("graph validation") {
  CHECK_THROWS_WITH_AS(Graph::from_edges(1, {}), "graph needs at least 2 nodes",
                       Error);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 0}}), Error);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1}, {1, 0}}), Error);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 3}}), Error);
  const Graph g = Graph::from_edges(3, {{2, 1}, {0, 1}});
  CHECK(g.edges == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(g.connected());
  CHECK_FALSE(Graph::from_edges(4, {{0, 1}, {2, 3}}).connected());
}

TEST_CASE("erdos-renyi p=1 gives the complete graph") {
  const Graph k2 = erdos_renyi(2, 1.0, 5);
  CHECK(k2.edges == std::vector<std::pair<int, int>>{{0, 1}});
  const Graph k4 = erdos_renyi(4, 1.0, 5);
  CHECK(k4.edges.size() == 6);
}

TEST_CASE("erdos-renyi gives up after the resample cap") {
  // with p this small every seeded attempt draws an empty (disconnected)
  // edge set, exhausting the 10,000-attempt cap
  CHECK_THROWS_WITH_AS(erdos_renyi(2, 1e-12, 0), "graph generation failed",
                       Error);
  CHECK_THROWS_AS(erdos_renyi(5, 0.0, 0), Error);
  CHECK_THROWS_AS(erdos_renyi(5, 1.5, 0), Error);
}

TEST_CASE("erdos-renyi replay: same seed, same graph") {
  int resamples = -1;
  const Graph g1 = erdos_renyi(10, 0.7, 1234, &resamples);
  CHECK(resamples >= 0);
  const Graph g2 = erdos_renyi(10, 0.7, 1234);
  CHECK(g1 == g2);
  CHECK(g1.connected());
  // a different seed should give a different edge set at p=0.7
  const Graph g3 = erdos_renyi(10, 0.7, 1235);
  CHECK(g1.edges != g3.edges);
}

TEST_CASE("degree weights on the path graph") {
  const ConsensusMatrix cm = ConsensusMatrix::degree_weights(path3(), 1);
  const Matrix& Z = cm.Z();
  CHECK(Z(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(Z(1, 2) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(Z(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(Z(1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(Z(2, 2) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(Z(0, 2) == 0.0);
}

TEST_CASE("degree weights on K4 give gamma = 0") {
  Graph k4 = erdos_renyi(4, 1.0, 1);
  const ConsensusMatrix cm = ConsensusMatrix::degree_weights(k4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(cm.Z()(i, j) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cm.gamma() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("degree weights require a connected graph") {
  const Graph g = Graph::from_edges(4, {{0, 1}, {2, 3}});
  CHECK_THROWS_WITH_AS(ConsensusMatrix::degree_weights(g, 1),
                       "graph not connected", Error);
}

TEST_CASE("custom matrix validation names the violation") {
  const Graph k2 = Graph::from_edges(2, {{0, 1}});
  Matrix good(2, 2);
  good << 0.5, 0.5, 0.5, 0.5;
  const ConsensusMatrix cm = ConsensusMatrix::custom(k2, good, 1);
  CHECK(cm.gamma() == doctest::Approx(0.0).epsilon(1e-14));

  Matrix sparsity(3, 3);
  sparsity << 0.6, 0.3, 0.1, 0.3, 0.4, 0.3, 0.1, 0.3, 0.6;
  CHECK_THROWS_WITH_AS(ConsensusMatrix::custom(path3(), sparsity, 1),
                       "sparsity mismatch", Error);

  Matrix rowsum(2, 2);
  rowsum << 0.5, 0.4, 0.4, 0.5;
  CHECK_THROWS_WITH_AS(ConsensusMatrix::custom(k2, rowsum, 1), "row sums",
                       Error);

  Matrix asym(2, 2);
  asym << 0.6, 0.4, 0.5, 0.5;
  CHECK_THROWS_WITH_AS(ConsensusMatrix::custom(k2, asym, 1), "asymmetric",
                       Error);

  Matrix negdiag(2, 2);
  negdiag << 0.0, 1.0, 1.0, 0.0;
  CHECK_THROWS_WITH_AS(ConsensusMatrix::custom(k2, negdiag, 1),
                       "nonpositive diagonal", Error);
}

TEST_CASE("apply_W annihilates consensus vectors") {
  Rng rng(3);
  for (int n : {2, 4, 7}) {
    for (int d : {1, 3}) {
      const Graph g = erdos_renyi(n, 0.8, static_cast<std::uint64_t>(n + d));
      const ConsensusMatrix cm = ConsensusMatrix::degree_weights(g, d);
      const Vector y = random_vector(rng, d);
      Vector v(static_cast<Eigen::Index>(n) * d);
      for (int i = 0; i < n; ++i) v.segment(static_cast<Eigen::Index>(i) * d, d) = y;
      CHECK(cm.apply_W(v).norm() <= 1e-12 * std::max(1.0, y.norm()));
    }
  }
}

TEST_CASE("apply_W on K2 uniform weights acts as v minus mean") {
  const Graph k2 = Graph::from_edges(2, {{0, 1}});
  Matrix Z(2, 2);
  Z << 0.5, 0.5, 0.5, 0.5;
  const ConsensusMatrix cm = ConsensusMatrix::custom(k2, Z, 2);
  Vector v(4);
  v << 1.0, -2.0, -1.0, 2.0;  // (y, -y)
  const Vector w = cm.apply_W(v);
  CHECK((w - v).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("apply_W matches the dense Kronecker oracle") {
  Rng rng(17);
  double worst = 0.0;
  for (int n = 2; n <= 8; ++n) {
    for (int d : {1, 2, 3}) {
      const Graph g =
          erdos_renyi(n, 0.6, static_cast<std::uint64_t>(100 + 10 * n + d));
      const ConsensusMatrix cm = ConsensusMatrix::degree_weights(g, d);
      const Matrix W = kron_lift_oracle(cm.Z(), d);
      for (int rep = 0; rep < 100; ++rep) {
        const Vector v = random_vector(rng, static_cast<Eigen::Index>(n) * d);
        const Vector dense = W * v;
        const Vector blockwise = cm.apply_W(v);
        worst = std::max(worst, (dense - blockwise).norm() /
                                    std::max(1.0, dense.norm()));
      }
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("apply_W rejects wrong dimensions") {
  const ConsensusMatrix cm = ConsensusMatrix::degree_weights(path3(), 2);
  CHECK_THROWS_AS(cm.apply_W(Vector::Zero(5)), Error);
}

TEST_CASE("consensus matrix invariants across random graphs") {
  for (int n = 2; n <= 8; ++n) {
    const Graph g = erdos_renyi(n, 0.5, static_cast<std::uint64_t>(7 * n));
    const ConsensusMatrix cm = ConsensusMatrix::degree_weights(g, 2);
    const Matrix& Z = cm.Z();
    CHECK((Z * Vector::Ones(n) - Vector::Ones(n)).cwiseAbs().maxCoeff() <=
          1e-12);
    CHECK((Z - Z.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Z, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1.0 - 1e-12);
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
    CHECK(cm.gamma() < 1.0);

    // smallest positive eigenvalue of the lift equals 1 - gamma
    const Matrix W = kron_lift_oracle(Z, 2);
    Eigen::SelfAdjointEigenSolver<Matrix> ew(W, Eigen::EigenvaluesOnly);
    double smallest_pos = 2.0;
    for (Eigen::Index i = 0; i < ew.eigenvalues().size(); ++i)
      if (ew.eigenvalues()(i) > 1e-8)
        smallest_pos = std::min(smallest_pos, ew.eigenvalues()(i));
    CHECK(std::abs(smallest_pos - cm.spectral_gap()) <= 1e-10);
  }
}

TEST_CASE("edge-list round trip") {
  const Graph g = erdos_renyi(6, 0.6, 99);
  std::stringstream ss;
  g.write_edge_list(ss);
  const Graph back = Graph::read_edge_list(ss);
  CHECK(back == g);

  std::stringstream bad("m=3\n0 1\n");
  CHECK_THROWS_AS(Graph::read_edge_list(bad), Error);
}

TEST_CASE("consensus matrix CSV export round-trips exactly") {
  const ConsensusMatrix cm = ConsensusMatrix::degree_weights(path3(), 1);
  std::stringstream ss;
  cm.write_csv(ss);
  std::string cell;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      std::getline(ss, cell, j == 2 ? '\n' : ',');
      CHECK(std::stod(cell) == cm.Z()(i, j));
    }
  }
  // 17 significant digits for non-terminating values
  std::stringstream again;
  cm.write_csv(again);
  std::getline(again, cell, ',');
  CHECK(cell.size() >= 17);
}
