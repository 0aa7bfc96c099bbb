#include "ibtrans/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ibtrans/beliefs.hpp"

namespace ibtrans {

std::vector<int> sample_row_permutation(Eigen::Index meanings, double fraction,
                                        std::mt19937_64& rng) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw std::invalid_argument("sample_row_permutation: fraction outside [0,1]");
  }
  std::vector<int> map(static_cast<std::size_t>(meanings));
  std::iota(map.begin(), map.end(), 0);
  const auto chosen_count = static_cast<Eigen::Index>(
      std::ceil(fraction * static_cast<double>(meanings)));
  if (fraction == 0.0 || chosen_count < 2) {
    return map;  // a single row permits only the identity permutation
  }

  // choose `chosen_count` distinct meanings (partial Fisher-Yates)
  std::vector<int> pool(static_cast<std::size_t>(meanings));
  std::iota(pool.begin(), pool.end(), 0);
  for (Eigen::Index i = 0; i < chosen_count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, meanings - 1);
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<int> chosen(pool.begin(), pool.begin() + chosen_count);
  std::sort(chosen.begin(), chosen.end());

  // derangement of the chosen rows via rejection; every chosen row moves,
  // so a sample differs from the original in exactly `chosen_count` rows
  // whenever the rows are pairwise distinct
  std::vector<int> order(chosen.begin(), chosen.end());
  while (true) {
    std::shuffle(order.begin(), order.end(), rng);
    bool fixed_point = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] == chosen[i]) {
        fixed_point = true;
        break;
      }
    }
    if (!fixed_point) break;
  }
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    map[static_cast<std::size_t>(chosen[i])] = order[i];
  }
  return map;
}

std::vector<Encoder> perturb_encoder(const Encoder& e,
                                     const PerturbationSpec& spec) {
  if (spec.fraction < 0.0 || spec.fraction > 1.0) {
    throw std::invalid_argument("perturb_encoder: fraction outside [0,1]");
  }
  if (spec.sample_count < 1) {
    throw std::invalid_argument("perturb_encoder: sample_count must be >= 1");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<Encoder> out;
  out.reserve(static_cast<std::size_t>(spec.sample_count));
  const Eigen::MatrixXd& base = e.policy().rows();
  for (int s = 0; s < spec.sample_count; ++s) {
    const std::vector<int> map =
        sample_row_permutation(e.meaning_count(), spec.fraction, rng);
    Eigen::MatrixXd policy(base.rows(), base.cols());
    for (Eigen::Index m = 0; m < base.rows(); ++m) {
      policy.row(m) = base.row(map[static_cast<std::size_t>(m)]);
    }
    out.emplace_back(ConditionalDistribution(std::move(policy)), e.prior(),
                     e.lexicon(), e.meaning_index());
  }
  return out;
}

std::vector<int> random_one_hot(int lexicon_size, Eigen::Index meaning_count,
                                std::mt19937_64& rng) {
  if (lexicon_size < 1 || meaning_count < 1) {
    throw std::invalid_argument("random_one_hot: sizes must be >= 1");
  }
  std::uniform_int_distribution<int> pick(0, lexicon_size - 1);
  std::vector<int> words(static_cast<std::size_t>(meaning_count));
  for (auto& w : words) w = pick(rng);
  return words;
}

Eigen::MatrixXd random_soft_policy(int lexicon_size, Eigen::Index meaning_count,
                                   std::mt19937_64& rng) {
  if (lexicon_size < 1 || meaning_count < 1) {
    throw std::invalid_argument("random_soft_policy: sizes must be >= 1");
  }
  // exponential spacings give a uniform draw from the simplex
  std::exponential_distribution<double> exp1(1.0);
  Eigen::MatrixXd policy(meaning_count, lexicon_size);
  for (Eigen::Index m = 0; m < meaning_count; ++m) {
    double total = 0.0;
    for (int w = 0; w < lexicon_size; ++w) {
      policy(m, w) = exp1(rng);
      total += policy(m, w);
    }
    policy.row(m) /= total;
  }
  return policy;
}

Encoder random_encoder(int lexicon_size, int meaning_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<int> words =
      random_one_hot(lexicon_size, meaning_count, rng);
  Eigen::MatrixXd policy = Eigen::MatrixXd::Zero(meaning_count, lexicon_size);
  for (int m = 0; m < meaning_count; ++m) {
    policy(m, words[static_cast<std::size_t>(m)]) = 1.0;
  }
  std::vector<std::string> lexicon, meanings;
  char buf[32];
  for (int w = 0; w < lexicon_size; ++w) {
    std::snprintf(buf, sizeof(buf), "w%03d", w);
    lexicon.emplace_back(buf);
  }
  for (int m = 0; m < meaning_count; ++m) {
    std::snprintf(buf, sizeof(buf), "m%03d", m);
    meanings.emplace_back(buf);
  }
  return Encoder(ConditionalDistribution(std::move(policy)),
                 ProbVector::uniform(meaning_count), std::move(lexicon),
                 std::move(meanings));
}

DeviationReport deviation_from_plane(double complexity_bits,
                                     double accuracy_bits,
                                     const FrontierCurve& curve,
                                     std::string label, std::string kind,
                                     double fraction, bool keep_trace) {
  DeviationReport report;
  report.label = std::move(label);
  report.kind = std::move(kind);
  report.fraction = fraction;
  double best = std::numeric_limits<double>::infinity();
  double best_beta = 0.0;
  bool any = false;
  for (const auto& p : curve.points()) {
    if (!p.converged) continue;
    if (!(p.beta > 0.0)) {
      throw std::invalid_argument("deviation: grid betas must be positive");
    }
    const double frontier_value = p.complexity_bits - p.beta * p.accuracy_bits;
    const double gap =
        (complexity_bits - p.beta * accuracy_bits) - frontier_value;
    if (keep_trace) report.gap_trace.push_back(gap);
    const double scaled = gap / p.beta;
    if (scaled < best) {
      best = scaled;
      best_beta = p.beta;
    }
    any = true;
  }
  if (!any) {
    throw std::runtime_error(
        "deviation: every frontier point is non-converged");
  }
  report.epsilon_bits = best;
  report.argmin_beta = best_beta;
  return report;
}

DeviationReport deviation(const Encoder& e, const BeliefModel& b,
                          const FrontierCurve& curve, std::string label,
                          std::string kind, double fraction) {
  return deviation_from_plane(complexity(e), accuracy(e, b), curve,
                              std::move(label), std::move(kind), fraction,
                              /*keep_trace=*/true);
}

}  // namespace ibtrans
