#pragma once

#include <Eigen/Core>

namespace ibtrans {

// All information measures are in bits (log base 2).
inline constexpr double kLogBase = 2.0;

// A distribution is accepted when its mass sums to 1 within this tolerance.
inline constexpr double kNormTolerance = 1e-9;

// Drift below this is silently rescaled away at construction; larger drift
// (still within kNormTolerance) is kept as-is.
inline constexpr double kSilentRenormDrift = 1e-12;

/// Discrete probability mass function over a finite support.
class ProbVector {
public:
  explicit ProbVector(Eigen::VectorXd weights);
  static ProbVector uniform(Eigen::Index n);

  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }
  double operator()(Eigen::Index i) const { return weights_(i); }

private:
  Eigen::VectorXd weights_;
};

/// Joint distribution over (row outcome, col outcome); total mass 1.
class JointDistribution {
public:
  explicit JointDistribution(Eigen::MatrixXd mass);

  const Eigen::MatrixXd& mass() const { return mass_; }
  Eigen::Index rows() const { return mass_.rows(); }
  Eigen::Index cols() const { return mass_.cols(); }

  ProbVector row_marginal() const;
  ProbVector col_marginal() const;
  JointDistribution transposed() const;

private:
  Eigen::MatrixXd mass_;
};

/// Row-stochastic matrix: row r holds p(col | row = r).
class ConditionalDistribution {
public:
  explicit ConditionalDistribution(Eigen::MatrixXd rows);

  const Eigen::MatrixXd& rows() const { return rows_; }
  Eigen::Index row_count() const { return rows_.rows(); }
  Eigen::Index col_count() const { return rows_.cols(); }
  ProbVector row(Eigen::Index r) const;

private:
  Eigen::MatrixXd rows_;
};

/// Shannon entropy in bits; 0*log(0) reads as 0.
double entropy(const ProbVector& p);

/// KL divergence in bits. Throws std::domain_error when p(x) > 0 but
/// q(x) = 0, naming the offending index.
double kl_divergence(const ProbVector& p, const ProbVector& q);

/// Mutual information of a joint distribution, in bits.
double mutual_information(const JointDistribution& joint);

}  // namespace ibtrans
