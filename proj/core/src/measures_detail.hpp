#pragma once

// Internal fast paths shared by the encoder, belief, frontier and baseline
// code. These skip per-call validation; callers guarantee well-formed input.

#include <Eigen/Core>
#include <cmath>
#include <vector>

namespace ibtrans::detail {

// Mutual information (bits) of a nonnegative matrix with total mass ~1.
inline double mi_bits(const Eigen::MatrixXd& joint) {
  const Eigen::VectorXd row = joint.rowwise().sum();
  const Eigen::VectorXd col = joint.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < joint.rows(); ++i) {
    if (row(i) == 0.0) continue;
    for (Eigen::Index j = 0; j < joint.cols(); ++j) {
      const double v = joint(i, j);
      if (v > 0.0) mi += v * std::log2(v / (row(i) * col(j)));
    }
  }
  return mi < 0.0 && mi > -1e-9 ? 0.0 : mi;
}

inline double entropy_bits(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log2(p(i));
  }
  return h < 0.0 ? 0.0 : h;
}

// I(M;W) for a policy p(w|m) (rows = meanings) under the given prior.
inline double complexity_bits(const Eigen::MatrixXd& policy,
                              const Eigen::VectorXd& prior) {
  const Eigen::VectorXd word_marginal = policy.transpose() * prior;
  double mi = 0.0;
  for (Eigen::Index m = 0; m < policy.rows(); ++m) {
    if (prior(m) == 0.0) continue;
    for (Eigen::Index w = 0; w < policy.cols(); ++w) {
      const double v = policy(m, w);
      if (v > 0.0) mi += prior(m) * v * std::log2(v / word_marginal(w));
    }
  }
  return mi < 0.0 && mi > -1e-9 ? 0.0 : mi;
}

// One-hot policy: I(M;W) = H(W) since H(W|M) = 0.
inline double complexity_bits_one_hot(const std::vector<int>& words,
                                      int lexicon_size,
                                      const Eigen::VectorXd& prior) {
  Eigen::VectorXd word_marginal = Eigen::VectorXd::Zero(lexicon_size);
  for (std::size_t m = 0; m < words.size(); ++m) {
    word_marginal(words[m]) += prior(static_cast<Eigen::Index>(m));
  }
  return entropy_bits(word_marginal);
}

// p(w,u) = sum_m p(m) p(w|m) p(u|m); rows = words, cols = world states.
inline Eigen::MatrixXd word_state_joint(const Eigen::MatrixXd& policy,
                                        const Eigen::VectorXd& prior,
                                        const Eigen::MatrixXd& beliefs) {
  return policy.transpose() * (prior.asDiagonal() * beliefs);
}

inline Eigen::MatrixXd word_state_joint_one_hot(const std::vector<int>& words,
                                                int lexicon_size,
                                                const Eigen::VectorXd& prior,
                                                const Eigen::MatrixXd& beliefs) {
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(lexicon_size, beliefs.cols());
  for (std::size_t m = 0; m < words.size(); ++m) {
    const auto mi = static_cast<Eigen::Index>(m);
    joint.row(words[m]) += prior(mi) * beliefs.row(mi);
  }
  return joint;
}

// (complexity, accuracy) of a policy whose rows are taken from `base` through
// the row map `source_row` (identity when empty). Row sparsity is exploited,
// which keeps permuted empirical encoders cheap to place in the plane.
inline std::pair<double, double> plane_eval_permuted(
    const Eigen::MatrixXd& base, const std::vector<int>& source_row,
    const Eigen::VectorXd& prior, const Eigen::MatrixXd& beliefs) {
  const Eigen::Index meanings = base.rows();
  const Eigen::Index lexicon = base.cols();
  Eigen::VectorXd word_marginal = Eigen::VectorXd::Zero(lexicon);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(lexicon, beliefs.cols());
  double cond_entropy = 0.0;  // H(W|M)
  for (Eigen::Index m = 0; m < meanings; ++m) {
    const Eigen::Index src = source_row.empty() ? m : source_row[m];
    const double pm = prior(m);
    for (Eigen::Index w = 0; w < lexicon; ++w) {
      const double v = base(src, w);
      if (v == 0.0) continue;
      word_marginal(w) += pm * v;
      if (v < 1.0) cond_entropy -= pm * v * std::log2(v);
      joint.row(w) += (pm * v) * beliefs.row(m);
    }
  }
  const double cplx = entropy_bits(word_marginal) - cond_entropy;
  return {cplx < 0.0 && cplx > -1e-9 ? 0.0 : cplx, mi_bits(joint)};
}

inline std::pair<double, double> plane_eval_one_hot(
    const std::vector<int>& words, int lexicon_size,
    const Eigen::VectorXd& prior, const Eigen::MatrixXd& beliefs) {
  const double cplx = complexity_bits_one_hot(words, lexicon_size, prior);
  const Eigen::MatrixXd joint =
      word_state_joint_one_hot(words, lexicon_size, prior, beliefs);
  return {cplx, mi_bits(joint)};
}

}  // namespace ibtrans::detail
