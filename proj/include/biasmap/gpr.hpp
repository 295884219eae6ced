#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "biasmap/geometry.hpp"

namespace biasmap {

/// Shared RBF kernel hyperparameters for the two scalar outputs.
struct Hyperparams {
  double lengthscale = 10.0;      // meters
  double signal_variance = 4.0;   // meters^2
  double noise_variance = 0.01;   // meters^2
};

/// RBF covariance: signal_variance * exp(-|x1-x2|^2 / (2 lengthscale^2)).
double rbf(const Vec2& x1, const Vec2& x2, const Hyperparams& h);

/// Two-output exact GP over positions with a shared RBF kernel and zero
/// prior mean. A default-constructed model has no training data and
/// predicts the prior (mean zero, variance = signal_variance).
class GpModel {
 public:
  GpModel() = default;
  explicit GpModel(const Hyperparams& h) : h_(h) {}

  /// Fits on (position, bias) pairs. Duplicate inputs (distance < 1e-9)
  /// are averaged into one point before fitting. Throws on factorization
  /// failure after jitter escalation.
  static GpModel fit(const std::vector<Vec2>& inputs,
                     const std::vector<Vec2>& targets, const Hyperparams& h);

  /// Posterior mean per output and a single latent variance per query
  /// (the two outputs share the kernel, so their variances coincide).
  void predict(const std::vector<Vec2>& queries, std::vector<Vec2>* means,
               std::vector<double>* variances) const;

  int size() const { return static_cast<int>(X_.rows()); }
  const Hyperparams& hyperparams() const { return h_; }
  double log_marginal_likelihood() const { return lml_; }
  double jitter() const { return jitter_; }

  std::vector<Vec2> train_inputs() const;
  std::vector<Vec2> train_targets() const;

  /// k(X, q) against the training inputs (empty for a prior model).
  Eigen::VectorXd kernel_vector(const Vec2& q) const;
  /// L^{-1} v for the cached Cholesky factor of K + noise I.
  Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;

 private:
  Eigen::MatrixXd X_;      // n x 2 training inputs
  Eigen::MatrixXd Y_;      // n x 2 training targets
  Eigen::MatrixXd L_;      // Cholesky factor of K + noise I
  Eigen::MatrixXd alpha_;  // (K + noise I)^{-1} Y
  Hyperparams h_;
  double lml_ = 0.0;
  double jitter_ = 0.0;
};

struct HyperBounds {
  Hyperparams lo{1.0, 1e-4, 1e-6};
  Hyperparams hi{50.0, 100.0, 1.0};
};

struct HyperOptResult {
  Hyperparams params;
  double log_likelihood = 0.0;
  bool improved = false;  // false: no start beat the init likelihood
};

/// Multi-start Nelder-Mead ascent of the summed two-output log marginal
/// likelihood over log-parameters. Deterministic given `seed`.
HyperOptResult optimize_hyperparams(const std::vector<Vec2>& inputs,
                                    const std::vector<Vec2>& targets,
                                    const Hyperparams& init,
                                    const HyperBounds& bounds = {},
                                    std::uint64_t seed = 0);

}  // namespace biasmap
