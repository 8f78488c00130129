#include "dish/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <utility>

#include "dish/rng.hpp"

namespace dish {

namespace {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

// Salt decorrelating the data stream from the graph stream under one seed.
constexpr std::uint64_t kDataStreamSalt = 0x5d15ca7a11edULL;

}  // namespace

QuadraticObjective::QuadraticObjective(Vector center)
    : LocalObjective(static_cast<int>(center.size()), 1.0, 1.0),
      center_(std::move(center)) {}

double QuadraticObjective::value(const Vector& x) const {
  return 0.5 * (x - center_).squaredNorm();
}

void QuadraticObjective::gradient_into(const Vector& x, Vector& out) const {
  out = x - center_;
}

void QuadraticObjective::hessian_into(const Vector&, Matrix& out) const {
  out = Matrix::Identity(dim_, dim_);
}

LeastSquaresObjective::LeastSquaresObjective(Matrix A, Vector y, double n_total,
                                             double ridge)
    : LocalObjective(static_cast<int>(A.cols()), 0.0, 0.0),
      A_(std::move(A)),
      y_(std::move(y)),
      ridge_(ridge) {
  if (A_.rows() != y_.size()) throw Error("least squares: A/y shape mismatch");
  const double inv_n = 1.0 / n_total;
  hess_ = inv_n * (A_.transpose() * A_);
  hess_ += ridge_ * Matrix::Identity(dim_, dim_);
  linear_ = inv_n * (A_.transpose() * y_);
  offset_ = 0.5 * inv_n * y_.squaredNorm();
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess_, Eigen::EigenvaluesOnly);
  s_ = es.eigenvalues().minCoeff();
  l_ = es.eigenvalues().maxCoeff();
}

double LeastSquaresObjective::value(const Vector& x) const {
  return 0.5 * x.dot(hess_ * x) - linear_.dot(x) + offset_;
}

void LeastSquaresObjective::gradient_into(const Vector& x, Vector& out) const {
  out.noalias() = hess_ * x;
  out -= linear_;
}

void LeastSquaresObjective::hessian_into(const Vector&, Matrix& out) const {
  out = hess_;
}

LogisticObjective::LogisticObjective(Matrix A, Vector y, double n_total,
                                     double ridge)
    : LocalObjective(static_cast<int>(A.cols()), 0.0, 0.0),
      A_(std::move(A)),
      y_(std::move(y)),
      inv_n_(1.0 / n_total),
      ridge_(ridge) {
  if (A_.rows() != y_.size()) throw Error("logistic: A/y shape mismatch");
  s_ = ridge_;
  Eigen::SelfAdjointEigenSolver<Matrix> es(A_.transpose() * A_,
                                           Eigen::EigenvaluesOnly);
  l_ = ridge_ + 0.25 * inv_n_ * es.eigenvalues().maxCoeff();
}

double LogisticObjective::value(const Vector& x) const {
  const Vector z = A_ * x;
  double loss = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j)
    loss += softplus(z(j)) - y_(j) * z(j);
  return inv_n_ * loss + 0.5 * ridge_ * x.squaredNorm();
}

void LogisticObjective::gradient_into(const Vector& x, Vector& out) const {
  Vector r = A_ * x;
  for (Eigen::Index j = 0; j < r.size(); ++j) r(j) = sigmoid(r(j)) - y_(j);
  out.noalias() = inv_n_ * (A_.transpose() * r);
  out += ridge_ * x;
}

void LogisticObjective::hessian_into(const Vector& x, Matrix& out) const {
  Vector h = A_ * x;
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    const double p = sigmoid(h(j));
    h(j) = p * (1.0 - p);
  }
  out.noalias() = inv_n_ * (A_.transpose() * h.asDiagonal() * A_);
  out += ridge_ * Matrix::Identity(dim_, dim_);
}

double ProblemInstance::f_stacked(const Vector& x) const {
  const int dd = d();
  double v = 0.0;
  for (int i = 0; i < n(); ++i)
    v += objectives[static_cast<std::size_t>(i)]->value(
        x.segment(static_cast<Eigen::Index>(i) * dd, dd));
  return v;
}

void ProblemInstance::grad_f_stacked(const Vector& x, Vector& out) const {
  const int dd = d();
  out.resize(x.size());
  Vector gi(dd);
  for (int i = 0; i < n(); ++i) {
    objectives[static_cast<std::size_t>(i)]->gradient_into(
        x.segment(static_cast<Eigen::Index>(i) * dd, dd), gi);
    out.segment(static_cast<Eigen::Index>(i) * dd, dd) = gi;
  }
}

Vector ProblemInstance::x_opt_stacked() const {
  Vector x(static_cast<Eigen::Index>(n()) * d());
  for (int i = 0; i < n(); ++i)
    x.segment(static_cast<Eigen::Index>(i) * d(), d()) = x_opt;
  return x;
}

bool ProblemInstance::constant_hessian() const {
  for (const auto& obj : objectives)
    if (!obj->constant_hessian()) return false;
  return true;
}

void ProblemInstance::validate() const {
  if (objectives.empty()) throw Error("instance: no objectives");
  if (topology.n() != n()) throw Error("instance: topology size mismatch");
  for (const auto& obj : objectives)
    if (obj->dim() != d()) throw Error("instance: objective dimension mismatch");
  Vector total = Vector::Zero(d());
  Vector gi(d());
  for (const auto& obj : objectives) {
    obj->gradient_into(x_opt, gi);
    total += gi;
  }
  if (total.norm() > 1e-10 * n())
    throw Error("instance: x_opt fails first-order optimality");
}

// Centralized damped Newton on sum_i f_i; Armijo backtracking on the value.
Vector centralized_minimizer(
    const std::vector<std::shared_ptr<const LocalObjective>>& objectives,
    const Vector& start, double grad_tol) {
  const int d = objectives.front()->dim();
  Vector x = start;
  Vector grad(d), gi(d), step(d);
  Matrix hess(d, d), hi(d, d);
  auto eval_value = [&](const Vector& p) {
    double v = 0.0;
    for (const auto& obj : objectives) v += obj->value(p);
    return v;
  };
  for (int it = 0; it < 200; ++it) {
    grad.setZero();
    hess.setZero();
    for (const auto& obj : objectives) {
      obj->gradient_into(x, gi);
      grad += gi;
      obj->hessian_into(x, hi);
      hess += hi;
    }
    if (grad.norm() <= grad_tol) return x;
    step = hess.llt().solve(grad);
    // Armijo with an absolute tolerance at the rounding floor of the value,
    // so full Newton steps stay accepted near the minimizer
    const double v0 = eval_value(x);
    const double noise = 1e-13 * (1.0 + std::abs(v0));
    const double slope = grad.dot(step);
    double t = 1.0;
    while (t > 1e-12 &&
           eval_value(x - t * step) > v0 - 1e-4 * t * slope + noise)
      t *= 0.5;
    x -= t * step;
  }
  // final check; quadratics land in one step, logistic in a handful
  grad.setZero();
  for (const auto& obj : objectives) {
    obj->gradient_into(x, gi);
    grad += gi;
  }
  if (grad.norm() > grad_tol) throw Error("centralized solve failed");
  return x;
}

ProblemInstance make_instance(
    std::vector<std::shared_ptr<const LocalObjective>> objectives,
    ConsensusMatrix topology, double grad_tol) {
  if (objectives.empty()) throw Error("instance: no objectives");
  const int d = objectives.front()->dim();
  Vector x_opt = centralized_minimizer(objectives, Vector::Zero(d), grad_tol);
  double s = objectives.front()->strong_convexity();
  double l = objectives.front()->smoothness();
  for (const auto& obj : objectives) {
    s = std::min(s, obj->strong_convexity());
    l = std::max(l, obj->smoothness());
  }
  ProblemInstance inst{std::move(objectives), std::move(topology),
                       std::move(x_opt), s, l, nlohmann::json::object()};
  inst.validate();
  return inst;
}

ProblemInstance make_least_squares(int n, double p, int d, int n_i, double rho,
                                   const Vector& scaling, std::uint64_t seed,
                                   double noise_std) {
  if (scaling.size() != d) throw Error("scaling dimension mismatch");
  if (rho < 0.0) throw Error("rho must be nonnegative");
  Graph g = erdos_renyi(n, p, seed);
  ConsensusMatrix cm = ConsensusMatrix::degree_weights(g, d);

  Rng rng(splitmix64(seed ^ kDataStreamSalt));
  const double n_total = static_cast<double>(n) * n_i;
  std::vector<Matrix> feats;
  std::vector<Vector> noises;
  for (int i = 0; i < n; ++i) {
    Matrix a_hat(n_i, d);
    for (int r = 0; r < n_i; ++r)
      for (int c = 0; c < d; ++c) a_hat(r, c) = rng.normal();
    Vector v(n_i);
    for (int r = 0; r < n_i; ++r) v(r) = noise_std * rng.normal();
    feats.push_back(a_hat * scaling.asDiagonal());
    noises.push_back(std::move(v));
  }
  Vector omega0(d);
  for (int c = 0; c < d; ++c) omega0(c) = rng.normal();

  std::vector<std::shared_ptr<const LocalObjective>> objectives;
  const double ridge = rho / n;
  for (int i = 0; i < n; ++i) {
    Vector y = feats[static_cast<std::size_t>(i)] * omega0 +
               noises[static_cast<std::size_t>(i)];
    auto obj = std::make_shared<LeastSquaresObjective>(
        feats[static_cast<std::size_t>(i)], std::move(y), n_total, ridge);
    if (rho == 0.0 && !(obj->strong_convexity() > 0.0))
      throw Error("hessian not positive definite");
    objectives.push_back(std::move(obj));
  }

  // closed-form centralized solution via the normal equations, with one
  // refinement pass to push the optimality residual to rounding level
  Matrix m = rho * Matrix::Identity(d, d);
  Vector rhs = Vector::Zero(d);
  for (int i = 0; i < n; ++i) {
    const auto& A = feats[static_cast<std::size_t>(i)];
    const auto* obj = static_cast<const LeastSquaresObjective*>(
        objectives[static_cast<std::size_t>(i)].get());
    m += (1.0 / n_total) * (A.transpose() * A);
    rhs += (1.0 / n_total) * (A.transpose() * obj->responses());
  }
  Eigen::LDLT<Matrix> ldlt(m);
  Vector x_opt = ldlt.solve(rhs);
  x_opt += ldlt.solve(rhs - m * x_opt);

  double s = objectives.front()->strong_convexity();
  double l = objectives.front()->smoothness();
  for (const auto& obj : objectives) {
    s = std::min(s, obj->strong_convexity());
    l = std::max(l, obj->smoothness());
  }
  ProblemInstance inst{std::move(objectives), std::move(cm), std::move(x_opt),
                       s, l, nlohmann::json::object()};
  inst.meta = {{"kind", "least_squares"},
               {"seed", seed},
               {"params",
                {{"p", p},
                 {"N_i", n_i},
                 {"rho", rho},
                 {"scaling", vector_to_json(scaling)},
                 {"omega0", vector_to_json(omega0)}}}};
  inst.validate();
  return inst;
}

ProblemInstance make_logistic(int n, double p, int d, int n_i, double rho,
                              const Vector& scaling, std::uint64_t seed,
                              double noise_std) {
  if (scaling.size() != d) throw Error("scaling dimension mismatch");
  if (!(rho > 0.0)) throw Error("rho must be positive");
  Graph g = erdos_renyi(n, p, seed);
  ConsensusMatrix cm = ConsensusMatrix::degree_weights(g, d);

  Rng rng(splitmix64(seed ^ kDataStreamSalt));
  const double n_total = static_cast<double>(n) * n_i;
  std::vector<Matrix> feats;
  std::vector<Vector> noises;
  for (int i = 0; i < n; ++i) {
    Matrix a_hat(n_i, d);
    for (int r = 0; r < n_i; ++r)
      for (int c = 0; c < d; ++c) a_hat(r, c) = rng.normal();
    Vector v(n_i);
    for (int r = 0; r < n_i; ++r) v(r) = noise_std * rng.normal();
    feats.push_back(a_hat * scaling.asDiagonal());
    noises.push_back(std::move(v));
  }
  Vector omega0(d);
  for (int c = 0; c < d; ++c) omega0(c) = rng.normal();

  std::vector<std::shared_ptr<const LocalObjective>> objectives;
  const double ridge = rho / n;
  for (int i = 0; i < n; ++i) {
    const Vector logits = feats[static_cast<std::size_t>(i)] * omega0 +
                          noises[static_cast<std::size_t>(i)];
    Vector y(n_i);
    // argmax of a two-way softmax reduces to thresholding the logit at 0
    for (int r = 0; r < n_i; ++r) y(r) = logits(r) > 0.0 ? 1.0 : 0.0;
    objectives.push_back(std::make_shared<LogisticObjective>(
        feats[static_cast<std::size_t>(i)], std::move(y), n_total, ridge));
  }

  ProblemInstance inst = make_instance(std::move(objectives), std::move(cm));
  inst.meta = {{"kind", "logistic"},
               {"seed", seed},
               {"params",
                {{"p", p},
                 {"N_i", n_i},
                 {"rho", rho},
                 {"scaling", vector_to_json(scaling)},
                 {"omega0", vector_to_json(omega0)}}}};
  return inst;
}

ProblemInstance make_quadratic_toy(const std::vector<Vector>& centers,
                                   ConsensusMatrix topology) {
  if (centers.size() < 2) throw Error("quadratic toy needs at least 2 centers");
  const int d = static_cast<int>(centers.front().size());
  Vector mean = Vector::Zero(d);
  std::vector<std::shared_ptr<const LocalObjective>> objectives;
  nlohmann::json jc = nlohmann::json::array();
  for (const auto& c : centers) {
    if (c.size() != d) throw Error("quadratic toy: center dimension mismatch");
    mean += c;
    objectives.push_back(std::make_shared<QuadraticObjective>(c));
    jc.push_back(vector_to_json(c));
  }
  mean /= static_cast<double>(centers.size());
  ProblemInstance inst{std::move(objectives), std::move(topology),
                       std::move(mean), 1.0, 1.0, nlohmann::json::object()};
  inst.meta = {{"kind", "quadratic_toy"},
               {"seed", 0},
               {"params", {{"centers", std::move(jc)}}}};
  inst.validate();
  return inst;
}

ProblemInstance make_quadratic_toy(const std::vector<Vector>& centers) {
  const int n = static_cast<int>(centers.size());
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  Graph g = Graph::from_edges(n, std::move(edges));
  const int d = static_cast<int>(centers.front().size());
  return make_quadratic_toy(centers, ConsensusMatrix::degree_weights(g, d));
}

void dump_instance(const ProblemInstance& instance, std::ostream& os) {
  nlohmann::json j = instance.meta.is_object() ? instance.meta
                                               : nlohmann::json::object();
  j["n"] = instance.n();
  j["d"] = instance.d();
  if (!j.contains("kind")) j["kind"] = "custom";
  if (!j.contains("seed")) j["seed"] = 0;
  if (!j.contains("params")) j["params"] = nlohmann::json::object();
  j["x_opt"] = vector_to_json(instance.x_opt);

  nlohmann::json agents = nlohmann::json::array();
  for (const auto& obj : instance.objectives) {
    nlohmann::json a;
    if (const auto* ls = dynamic_cast<const LeastSquaresObjective*>(obj.get())) {
      a["A"] = matrix_to_json(ls->features());
      a["y"] = vector_to_json(ls->responses());
    } else if (const auto* lg =
                   dynamic_cast<const LogisticObjective*>(obj.get())) {
      a["A"] = matrix_to_json(lg->features());
      a["y"] = vector_to_json(lg->labels());
    } else if (const auto* q =
                   dynamic_cast<const QuadraticObjective*>(obj.get())) {
      a["center"] = vector_to_json(q->center());
    }
    a["s"] = obj->strong_convexity();
    a["l"] = obj->smoothness();
    agents.push_back(std::move(a));
  }
  j["params"]["agents"] = std::move(agents);

  std::ostringstream edges;
  instance.topology.graph().write_edge_list(edges);
  j["params"]["graph"] = edges.str();
  j["params"]["consensus_matrix"] = matrix_to_json(instance.topology.Z());

  os << j.dump(2) << "\n";
}

}  // namespace dish
