#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include <json.hpp>

#include "dish/topology.hpp"
#include "dish/types.hpp"

namespace dish {

/// Local objective f_i with first- and second-order oracles and certified
/// curvature bounds s_i (strong convexity) and l_i (Lipschitz smoothness).
/// Oracles are pure functions of their input; instances are immutable after
/// construction and safe for concurrent evaluation.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;

  int dim() const { return dim_; }
  double strong_convexity() const { return s_; }
  double smoothness() const { return l_; }

  virtual double value(const Vector& x) const = 0;
  virtual void gradient_into(const Vector& x, Vector& out) const = 0;
  virtual void hessian_into(const Vector& x, Matrix& out) const = 0;
  /// True when the Hessian does not depend on x (enables factor caching).
  virtual bool constant_hessian() const { return false; }

  Vector gradient(const Vector& x) const {
    Vector g(dim_);
    gradient_into(x, g);
    return g;
  }
  Matrix hessian(const Vector& x) const {
    Matrix h(dim_, dim_);
    hessian_into(x, h);
    return h;
  }

 protected:
  LocalObjective(int dim, double s, double l) : dim_(dim), s_(s), l_(l) {}
  int dim_;
  double s_;
  double l_;
};

/// f(x) = 1/2 ||x - c||^2, unit curvature; analytic test fixture.
class QuadraticObjective final : public LocalObjective {
 public:
  explicit QuadraticObjective(Vector center);
  double value(const Vector& x) const override;
  void gradient_into(const Vector& x, Vector& out) const override;
  void hessian_into(const Vector& x, Matrix& out) const override;
  bool constant_hessian() const override { return true; }
  const Vector& center() const { return center_; }

 private:
  Vector center_;
};

/// f(w) = 1/(2N) ||A w - y||^2 + (ridge/2) ||w||^2 with global sample count
/// N; value and gradient are evaluated through the precomputed Gram form.
class LeastSquaresObjective final : public LocalObjective {
 public:
  LeastSquaresObjective(Matrix A, Vector y, double n_total, double ridge);
  double value(const Vector& x) const override;
  void gradient_into(const Vector& x, Vector& out) const override;
  void hessian_into(const Vector& x, Matrix& out) const override;
  bool constant_hessian() const override { return true; }
  const Matrix& features() const { return A_; }
  const Vector& responses() const { return y_; }

 private:
  Matrix A_;
  Vector y_;
  double ridge_;
  Matrix hess_;     // (1/N) A^T A + ridge I
  Vector linear_;   // (1/N) A^T y
  double offset_;   // (1/(2N)) ||y||^2
};

/// f(w) = (1/N) sum_j [softplus(z_j) - y_j z_j] + (ridge/2) ||w||^2 with
/// z = A w and binary labels y in {0,1}^m; numerically stable log1p forms.
class LogisticObjective final : public LocalObjective {
 public:
  LogisticObjective(Matrix A, Vector y, double n_total, double ridge);
  double value(const Vector& x) const override;
  void gradient_into(const Vector& x, Vector& out) const override;
  void hessian_into(const Vector& x, Matrix& out) const override;
  const Matrix& features() const { return A_; }
  const Vector& labels() const { return y_; }

 private:
  Matrix A_;
  Vector y_;
  double inv_n_;
  double ridge_;
};

/// A consensus problem instance: n local objectives of shared dimension d,
/// a consensus matrix, and the centralized optimizer of sum_i f_i.
struct ProblemInstance {
  std::vector<std::shared_ptr<const LocalObjective>> objectives;
  ConsensusMatrix topology;
  Vector x_opt;          // R^d
  double s = 0.0;        // min_i s_i
  double l = 0.0;        // max_i l_i
  nlohmann::json meta;   // generator metadata for the JSON dump

  int n() const { return static_cast<int>(objectives.size()); }
  int d() const { return topology.d(); }

  double f_stacked(const Vector& x) const;
  void grad_f_stacked(const Vector& x, Vector& out) const;
  Vector x_opt_stacked() const;
  bool constant_hessian() const;

  /// Checks shared dimensions and first-order optimality of x_opt.
  void validate() const;
};

/// Damped Newton on sum_i f_i from `start`, to gradient norm <= grad_tol.
Vector centralized_minimizer(
    const std::vector<std::shared_ptr<const LocalObjective>>& objectives,
    const Vector& start, double grad_tol = 1e-12);

/// Assembles an instance from prebuilt objectives; x_opt is solved with a
/// centralized damped Newton method to gradient norm <= grad_tol.
ProblemInstance make_instance(
    std::vector<std::shared_ptr<const LocalObjective>> objectives,
    ConsensusMatrix topology, double grad_tol = 1e-12);

/// Decentralized regularized linear least squares on an Erdos-Renyi graph.
/// Data generation order per agent i in index order: A_hat_i row-major, then
/// v_i; finally omega_0. The data stream seed is splitmix64-derived from
/// `seed`; the graph uses `seed` directly. Draws are standard normal;
/// `noise_std` rescales the noise vectors v_i.
ProblemInstance make_least_squares(int n, double p, int d, int n_i, double rho,
                                   const Vector& scaling, std::uint64_t seed,
                                   double noise_std = 1.0);

/// Decentralized regularized logistic regression; labels threshold
/// A_i omega_0 + v_i at zero. Requires rho > 0.
ProblemInstance make_logistic(int n, double p, int d, int n_i, double rho,
                              const Vector& scaling, std::uint64_t seed,
                              double noise_std = 1.0);

/// Quadratic toy: f_i(x) = 1/2 ||x - c_i||^2, x_opt = mean of the centers.
ProblemInstance make_quadratic_toy(const std::vector<Vector>& centers,
                                   ConsensusMatrix topology);
/// Same, over a complete graph with degree weights (uniform 1/n entries).
ProblemInstance make_quadratic_toy(const std::vector<Vector>& centers);

/// Instance dump: JSON object {kind, n, d, seed, params, x_opt} with data
/// matrices embedded as nested arrays.
void dump_instance(const ProblemInstance& instance, std::ostream& os);

}  // namespace dish
