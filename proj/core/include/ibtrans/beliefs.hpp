#pragma once

#include <string>
#include <vector>

#include "ibtrans/info.hpp"

namespace ibtrans {

class Encoder;
class SimilarityMatrix;

/// Listener beliefs p(world state | meaning): a temperature softmax over a
/// row of similarity scores per meaning.
class BeliefModel {
public:
  BeliefModel(ConditionalDistribution conditional, double temperature,
              std::vector<std::string> meaning_index = {},
              std::vector<std::string> state_index = {});

  const ConditionalDistribution& conditional() const { return conditional_; }
  double temperature() const { return temperature_; }
  const std::vector<std::string>& meaning_index() const { return meaning_index_; }
  const std::vector<std::string>& state_index() const { return state_index_; }
  Eigen::Index meaning_count() const { return conditional_.row_count(); }
  Eigen::Index state_count() const { return conditional_.col_count(); }

private:
  ConditionalDistribution conditional_;
  double temperature_;
  std::vector<std::string> meaning_index_;
  std::vector<std::string> state_index_;
};

/// Row-wise softmax of gamma * sim (max-subtracted for stability). Meaning i
/// believes in state j proportionally to exp(gamma * sim(i,j)).
BeliefModel belief_from_similarity(const SimilarityMatrix& s, double gamma);

/// Joint p(word, state) = sum_m p(m) p(w|m) p(u|m); rows = words.
JointDistribution word_state_joint(const Encoder& e, const BeliefModel& b);

}  // namespace ibtrans
