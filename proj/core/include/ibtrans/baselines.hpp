#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ibtrans/encoder.hpp"
#include "ibtrans/frontier.hpp"

namespace ibtrans {

struct PerturbationSpec {
  double fraction = 0.0;  // share of policy rows to permute, in [0,1]
  int sample_count = 1;
  std::uint64_t seed = 0;
};

/// Row map for one perturbed sample: entry m names the meaning whose policy
/// row meaning m receives. ceil(fraction * meanings) rows are chosen and
/// deranged among themselves (no chosen row stays put); with fewer than two
/// chosen rows the map is the identity.
std::vector<int> sample_row_permutation(Eigen::Index meanings, double fraction,
                                        std::mt19937_64& rng);

/// Counterfactual encoders with permuted policy rows. Deterministic under
/// the spec seed; priors and lexica are shared with the input encoder.
std::vector<Encoder> perturb_encoder(const Encoder& e, const PerturbationSpec& spec);

/// Uniform-random one-hot encoder over a synthetic lexicon/meaning set.
Encoder random_encoder(int lexicon_size, int meaning_count, std::uint64_t seed);

/// One-hot word assignment per meaning, drawn uniformly.
std::vector<int> random_one_hot(int lexicon_size, Eigen::Index meaning_count,
                                std::mt19937_64& rng);

/// Row-stochastic policy with rows drawn uniformly from the simplex
/// (the soft alternative behind the sensitivity flag).
Eigen::MatrixXd random_soft_policy(int lexicon_size, Eigen::Index meaning_count,
                                   std::mt19937_64& rng);

struct DeviationReport {
  std::string label;
  std::string kind;        // attested | perturbed | random | custom
  double fraction = 0.0;   // perturbation fraction, 0 otherwise
  double epsilon_bits = 0.0;
  double argmin_beta = 0.0;
  std::vector<double> gap_trace;  // F_beta[q] - F*_beta per converged grid beta
};

/// Deviation from optimality for a point already placed in the plane:
/// epsilon = min over converged grid betas of (F_beta[q] - F*_beta) / beta.
DeviationReport deviation_from_plane(double complexity_bits, double accuracy_bits,
                                     const FrontierCurve& curve,
                                     std::string label = {},
                                     std::string kind = "custom",
                                     double fraction = 0.0,
                                     bool keep_trace = false);

/// Deviation of an encoder under the given beliefs.
DeviationReport deviation(const Encoder& e, const BeliefModel& b,
                          const FrontierCurve& curve, std::string label = {},
                          std::string kind = "custom", double fraction = 0.0);

}  // namespace ibtrans
