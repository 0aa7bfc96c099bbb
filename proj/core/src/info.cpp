#include "ibtrans/info.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ibtrans {
namespace {

void check_mass(const double* data, Eigen::Index n, const char* what) {
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(data[i])) {
      std::ostringstream msg;
      msg << what << ": non-finite mass at index " << i;
      throw std::invalid_argument(msg.str());
    }
    if (data[i] < 0.0) {
      std::ostringstream msg;
      msg << what << ": negative mass " << data[i] << " at index " << i;
      throw std::invalid_argument(msg.str());
    }
  }
}

// Validates total mass and applies the silent-renormalization rule.
double checked_scale(double total, const char* what) {
  const double drift = std::abs(total - 1.0);
  if (drift > kNormTolerance) {
    std::ostringstream msg;
    msg << what << ": mass sums to " << total << ", expected 1 within "
        << kNormTolerance;
    throw std::invalid_argument(msg.str());
  }
  return drift < kSilentRenormDrift ? 1.0 / total : 1.0;
}

}  // namespace

ProbVector::ProbVector(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() == 0) {
    throw std::invalid_argument("ProbVector: empty support");
  }
  check_mass(weights_.data(), weights_.size(), "ProbVector");
  weights_ *= checked_scale(weights_.sum(), "ProbVector");
}

ProbVector ProbVector::uniform(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("ProbVector::uniform: n must be >= 1");
  return ProbVector(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

JointDistribution::JointDistribution(Eigen::MatrixXd mass)
    : mass_(std::move(mass)) {
  if (mass_.size() == 0) {
    throw std::invalid_argument("JointDistribution: empty matrix");
  }
  check_mass(mass_.data(), mass_.size(), "JointDistribution");
  mass_ *= checked_scale(mass_.sum(), "JointDistribution");
}

ProbVector JointDistribution::row_marginal() const {
  return ProbVector(mass_.rowwise().sum());
}

ProbVector JointDistribution::col_marginal() const {
  return ProbVector(mass_.colwise().sum().transpose());
}

JointDistribution JointDistribution::transposed() const {
  return JointDistribution(mass_.transpose());
}

ConditionalDistribution::ConditionalDistribution(Eigen::MatrixXd rows)
    : rows_(std::move(rows)) {
  if (rows_.size() == 0) {
    throw std::invalid_argument("ConditionalDistribution: empty matrix");
  }
  check_mass(rows_.data(), rows_.size(), "ConditionalDistribution");
  for (Eigen::Index r = 0; r < rows_.rows(); ++r) {
    const double total = rows_.row(r).sum();
    std::ostringstream what;
    what << "ConditionalDistribution row " << r;
    rows_.row(r) *= checked_scale(total, what.str().c_str());
  }
}

ProbVector ConditionalDistribution::row(Eigen::Index r) const {
  return ProbVector(rows_.row(r).transpose());
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  const auto& w = p.weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) h -= w(i) * std::log2(w(i));
  }
  return h < 0.0 ? 0.0 : h;  // -0.0 from rounding on point masses
}

double kl_divergence(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("kl_divergence: support sizes differ");
  }
  double d = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) == 0.0) continue;
    if (q(i) == 0.0) {
      std::ostringstream msg;
      msg << "kl_divergence: p(" << i << ") = " << p(i)
          << " but q(" << i << ") = 0 (absolute continuity violated)";
      throw std::domain_error(msg.str());
    }
    d += p(i) * std::log2(p(i) / q(i));
  }
  return d < 0.0 && d > -1e-12 ? 0.0 : d;
}

double mutual_information(const JointDistribution& joint) {
  const Eigen::MatrixXd& m = joint.mass();
  const Eigen::VectorXd row = m.rowwise().sum();
  const Eigen::VectorXd col = m.colwise().sum();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (v > 0.0) mi += v * std::log2(v / (row(i) * col(j)));
    }
  }
  return mi < 0.0 && mi > -1e-9 ? 0.0 : mi;
}

}  // namespace ibtrans
