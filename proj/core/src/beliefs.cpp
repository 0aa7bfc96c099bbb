#include "ibtrans/beliefs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ibtrans/encoder.hpp"
#include "ibtrans/similarity.hpp"
#include "measures_detail.hpp"

namespace ibtrans {

BeliefModel::BeliefModel(ConditionalDistribution conditional, double temperature,
                         std::vector<std::string> meaning_index,
                         std::vector<std::string> state_index)
    : conditional_(std::move(conditional)),
      temperature_(temperature),
      meaning_index_(std::move(meaning_index)),
      state_index_(std::move(state_index)) {
  if (!std::isfinite(temperature_)) {
    throw std::invalid_argument("BeliefModel: temperature must be finite");
  }
  if (!meaning_index_.empty() &&
      static_cast<Eigen::Index>(meaning_index_.size()) != conditional_.row_count()) {
    throw std::invalid_argument("BeliefModel: meaning index size mismatch");
  }
  if (!state_index_.empty() &&
      static_cast<Eigen::Index>(state_index_.size()) != conditional_.col_count()) {
    throw std::invalid_argument("BeliefModel: state index size mismatch");
  }
}

BeliefModel belief_from_similarity(const SimilarityMatrix& s, double gamma) {
  if (!std::isfinite(gamma)) {
    throw std::invalid_argument("belief_from_similarity: gamma must be finite");
  }
  const Eigen::MatrixXd& sim = s.values();
  const Eigen::Index n = sim.rows();
  Eigen::MatrixXd rows(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::ArrayXd scores = gamma * sim.row(i).transpose().array();
    const double top = scores.maxCoeff();
    const Eigen::ArrayXd unnorm = (scores - top).exp();
    rows.row(i) = (unnorm / unnorm.sum()).transpose();
  }
  return BeliefModel(ConditionalDistribution(std::move(rows)), gamma, s.items(),
                     s.items());
}

JointDistribution word_state_joint(const Encoder& e, const BeliefModel& b) {
  if (e.meaning_count() != b.meaning_count()) {
    std::ostringstream msg;
    msg << "word_state_joint: encoder has " << e.meaning_count()
        << " meanings, belief model has " << b.meaning_count();
    throw std::invalid_argument(msg.str());
  }
  if (!e.meaning_index().empty() && !b.meaning_index().empty() &&
      e.meaning_index() != b.meaning_index()) {
    for (std::size_t i = 0; i < e.meaning_index().size(); ++i) {
      if (e.meaning_index()[i] != b.meaning_index()[i]) {
        throw std::invalid_argument(
            "word_state_joint: meaning inventories differ at position " +
            std::to_string(i) + ": '" + e.meaning_index()[i] + "' vs '" +
            b.meaning_index()[i] + "'");
      }
    }
  }
  Eigen::MatrixXd joint;
  if (e.is_one_hot()) {
    joint = detail::word_state_joint_one_hot(
        e.one_hot_words(), static_cast<int>(e.lexicon_size()),
        e.prior().weights(), b.conditional().rows());
  } else {
    joint = detail::word_state_joint(e.policy().rows(), e.prior().weights(),
                                     b.conditional().rows());
  }
  return JointDistribution(std::move(joint));
}

}  // namespace ibtrans
