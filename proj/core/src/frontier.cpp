#include "ibtrans/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ibtrans/beliefs.hpp"
#include "ibtrans/encoder.hpp"
#include "measures_detail.hpp"

namespace ibtrans {
namespace {

// Word columns below this marginal mass are treated as dead clusters.
constexpr double kDeadClusterMass = 1e-12;

// Stand-in for log2(0) that keeps products with zero mass finite.
constexpr double kLogZero = -1e6;

Eigen::MatrixXd log2_with_floor(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out(i, j) = m(i, j) > 0.0 ? std::log2(m(i, j)) : kLogZero;
    }
  }
  return out;
}

double objective_of(const Eigen::MatrixXd& policy, const Eigen::VectorXd& prior,
                    const Eigen::MatrixXd& beliefs, double beta,
                    double* complexity_out, double* accuracy_out) {
  const double cplx = detail::complexity_bits(policy, prior);
  const double acc =
      detail::mi_bits(detail::word_state_joint(policy, prior, beliefs));
  if (complexity_out) *complexity_out = cplx;
  if (accuracy_out) *accuracy_out = acc;
  return cplx - beta * acc;
}

}  // namespace

IBProblem::IBProblem(ProbVector prior_, ConditionalDistribution beliefs_,
                     int max_words_)
    : prior(std::move(prior_)), beliefs(std::move(beliefs_)), max_words(max_words_) {
  if (prior.size() != beliefs.row_count()) {
    throw std::invalid_argument("IBProblem: prior size != belief rows");
  }
  if (max_words < 0) {
    throw std::invalid_argument("IBProblem: max_words must be >= 0");
  }
  if (max_words == 0) max_words = static_cast<int>(prior.size());
}

double ib_objective(const Encoder& e, const BeliefModel& b, double beta) {
  if (beta < 0.0) {
    throw std::invalid_argument("ib_objective: beta must be >= 0");
  }
  return complexity(e) - beta * accuracy(e, b);
}

FixedPointResult ib_fixed_point(const IBProblem& problem, double beta,
                                const Eigen::MatrixXd& init_policy,
                                const FixedPointOptions& opts) {
  if (!(opts.tol > 0.0)) {
    throw std::invalid_argument("ib_fixed_point: tol must be > 0");
  }
  if (beta < 0.0) {
    throw std::invalid_argument("ib_fixed_point: beta must be >= 0");
  }
  const Eigen::VectorXd& prior = problem.prior.weights();
  const Eigen::MatrixXd& beliefs = problem.beliefs.rows();
  const Eigen::Index meanings = prior.size();
  if (init_policy.rows() != meanings) {
    throw std::invalid_argument("ib_fixed_point: init policy rows != meanings");
  }
  if (init_policy.cols() < 1 ||
      init_policy.cols() > static_cast<Eigen::Index>(problem.max_words)) {
    throw std::invalid_argument(
        "ib_fixed_point: init policy width outside [1, max_words]");
  }

  // sum_u p(u|m) log2 p(u|m), reused by every KL evaluation
  Eigen::VectorXd belief_self_log(meanings);
  for (Eigen::Index m = 0; m < meanings; ++m) {
    double acc = 0.0;
    for (Eigen::Index u = 0; u < beliefs.cols(); ++u) {
      if (beliefs(m, u) > 0.0) acc += beliefs(m, u) * std::log2(beliefs(m, u));
    }
    belief_self_log(m) = acc;
  }

  Eigen::MatrixXd policy = init_policy;
  for (Eigen::Index m = 0; m < meanings; ++m) {
    const double sum = policy.row(m).sum();
    if (!(sum > 0.0)) {
      throw std::invalid_argument("ib_fixed_point: init policy has a zero row");
    }
    policy.row(m) /= sum;
  }

  FixedPointResult result;
  double best_objective = std::numeric_limits<double>::infinity();
  double prev_objective = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    // word marginal, with dead-cluster removal
    Eigen::VectorXd word_marginal = policy.transpose() * prior;
    if ((word_marginal.array() <= kDeadClusterMass).any() &&
        policy.cols() > 1) {
      std::vector<Eigen::Index> keep;
      for (Eigen::Index t = 0; t < word_marginal.size(); ++t) {
        if (word_marginal(t) > kDeadClusterMass) keep.push_back(t);
      }
      if (keep.empty()) keep.push_back(0);  // degenerate; keep one column
      Eigen::MatrixXd compact(meanings, static_cast<Eigen::Index>(keep.size()));
      for (std::size_t c = 0; c < keep.size(); ++c) {
        compact.col(static_cast<Eigen::Index>(c)) = policy.col(keep[c]);
      }
      for (Eigen::Index m = 0; m < meanings; ++m) {
        compact.row(m) /= compact.row(m).sum();
      }
      policy = std::move(compact);
      word_marginal = policy.transpose() * prior;
    }
    const Eigen::Index words = policy.cols();

    // decoder p(u|w)
    const Eigen::MatrixXd decoder =
        word_marginal.cwiseInverse().asDiagonal() *
        (policy.transpose() * (prior.asDiagonal() * beliefs));

    // KL[p(u|m) || p(u|w)] in bits, for every (m, w)
    const Eigen::MatrixXd cross = beliefs * log2_with_floor(decoder).transpose();
    const Eigen::MatrixXd kl =
        belief_self_log.replicate(1, words) - cross;  // meanings x words

    // encoder update in log2 space: score = log2 p(w) - beta * KL
    Eigen::MatrixXd scores =
        (-beta) * kl;
    const Eigen::RowVectorXd log_w =
        word_marginal.array().log2().matrix().transpose();
    scores.rowwise() += log_w;
    for (Eigen::Index m = 0; m < meanings; ++m) {
      const double top = scores.row(m).maxCoeff();
      Eigen::ArrayXd row = (scores.row(m).transpose().array() - top);
      for (Eigen::Index t = 0; t < words; ++t) row(t) = std::exp2(row(t));
      policy.row(m) = (row / row.sum()).transpose();
    }

    double cplx = 0.0, acc = 0.0;
    const double objective =
        objective_of(policy, prior, beliefs, beta, &cplx, &acc);
    result.objective_trace.push_back(objective);
    if (objective < best_objective) {
      best_objective = objective;
      result.policy = policy;
      result.complexity_bits = cplx;
      result.accuracy_bits = acc;
      result.objective_bits = objective;
    }
    if (std::abs(prev_objective - objective) < opts.tol) {
      result.converged = true;
      break;
    }
    prev_objective = objective;
  }
  if (result.policy.size() == 0) {
    // max_iters == 0 edge: report the (normalized) init
    result.policy = policy;
    result.objective_bits = objective_of(policy, prior, beliefs, beta,
                                         &result.complexity_bits,
                                         &result.accuracy_bits);
  }
  return result;
}

std::vector<double> log_spaced_betas(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw std::invalid_argument("log_spaced_betas: need 0 < lo <= hi");
  }
  if (count < 1) {
    throw std::invalid_argument("log_spaced_betas: count must be >= 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(count));
  if (count == 1) {
    betas[0] = lo;
    return betas;
  }
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    betas[static_cast<std::size_t>(i)] = std::exp(log_lo + t * (log_hi - log_lo));
  }
  betas.front() = lo;
  betas.back() = hi;
  return betas;
}

FrontierCurve::FrontierCurve(std::vector<FrontierPoint> points,
                             std::vector<FrontierPoint> raw_points,
                             std::vector<Eigen::MatrixXd> policies)
    : points_(std::move(points)),
      raw_points_(std::move(raw_points)),
      policies_(std::move(policies)) {
  if (points_.empty()) {
    throw std::invalid_argument("FrontierCurve: no points");
  }
  if (!std::is_sorted(points_.begin(), points_.end(),
                      [](const FrontierPoint& a, const FrontierPoint& b) {
                        return a.beta < b.beta;
                      })) {
    throw std::invalid_argument("FrontierCurve: points must be sorted by beta");
  }
  if (!policies_.empty() && policies_.size() != points_.size()) {
    throw std::invalid_argument("FrontierCurve: policies misaligned with points");
  }
}

double FrontierCurve::value_at(double beta) const {
  const double lo = points_.front().beta;
  const double hi = points_.back().beta;
  const double slack = 1e-9 * std::max(1.0, std::abs(beta));
  if (beta < lo - slack || beta > hi + slack) {
    std::ostringstream msg;
    msg << "FrontierCurve: beta " << beta << " outside grid range [" << lo
        << ", " << hi << "]";
    throw std::out_of_range(msg.str());
  }
  for (const auto& p : points_) {
    if (std::abs(p.beta - beta) <= slack) {
      return p.complexity_bits - p.beta * p.accuracy_bits;
    }
  }
  std::ostringstream msg;
  msg << "FrontierCurve: beta " << beta << " is not a grid point";
  throw std::out_of_range(msg.str());
}

const Eigen::MatrixXd& FrontierCurve::policy_at(std::size_t index) const {
  if (policies_.empty()) {
    throw std::logic_error("FrontierCurve: policies were not retained");
  }
  return policies_.at(index);
}

void FrontierCurve::write_csv(std::ostream& out) const {
  out << "beta,complexity_bits,accuracy_bits,converged\n";
  char buf[128];
  for (const auto& p : points_) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%d\n", p.beta,
                  p.complexity_bits, p.accuracy_bits, p.converged ? 1 : 0);
    out << buf;
  }
}

FrontierCurve FrontierCurve::read_csv(std::istream& in,
                                      const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(source_name + ": empty frontier file");
  }
  std::vector<FrontierPoint> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    FrontierPoint p;
    int converged = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%d", &p.beta, &p.complexity_bits,
                    &p.accuracy_bits, &converged) != 4) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": bad frontier row '" << line << "'";
      throw ParseError(msg.str());
    }
    p.converged = converged != 0;
    points.push_back(p);
  }
  return FrontierCurve(points, points);
}

FrontierCurve reverse_annealing(const IBProblem& problem,
                                const std::vector<double>& beta_grid,
                                const AnnealingOptions& opts) {
  if (beta_grid.empty()) {
    throw std::invalid_argument("reverse_annealing: empty beta grid");
  }
  if (!std::is_sorted(beta_grid.begin(), beta_grid.end())) {
    throw std::invalid_argument("reverse_annealing: beta grid must be ascending");
  }
  const Eigen::Index meanings = problem.prior.size();
  const int width = problem.max_words;

  // Warm start for the largest beta: a near-deterministic spread over the
  // full word budget so high-complexity solutions are reachable.
  Eigen::MatrixXd policy =
      Eigen::MatrixXd::Constant(meanings, width, 1e-3 / width);
  for (Eigen::Index m = 0; m < meanings; ++m) {
    policy(m, static_cast<Eigen::Index>(m % width)) += 1.0 - 1e-3;
    policy.row(m) /= policy.row(m).sum();
  }

  std::mt19937_64 rng(opts.jitter_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<FrontierPoint> raw(beta_grid.size());
  std::vector<Eigen::MatrixXd> raw_policies(beta_grid.size());
  for (std::size_t k = beta_grid.size(); k-- > 0;) {
    Eigen::MatrixXd init = policy;
    for (Eigen::Index m = 0; m < init.rows(); ++m) {
      for (Eigen::Index t = 0; t < init.cols(); ++t) {
        init(m, t) *= 1.0 + opts.jitter_scale * unit(rng);
      }
      init.row(m) /= init.row(m).sum();
    }
    const FixedPointResult res =
        ib_fixed_point(problem, beta_grid[k], init, opts.fixed_point);
    raw[k] = {beta_grid[k], res.complexity_bits, res.accuracy_bits,
              res.converged};
    raw_policies[k] = res.policy;
    policy = res.policy;
  }

  // Concave-envelope cleanup: the value at each grid beta is the best
  // objective any converged point achieves there; dominated solves are
  // replaced by the dominating point.
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    if (raw[j].converged) candidates.push_back(j);
  }
  if (candidates.empty()) {
    for (std::size_t j = 0; j < raw.size(); ++j) candidates.push_back(j);
  }
  std::vector<FrontierPoint> cleaned(raw.size());
  std::vector<Eigen::MatrixXd> policies;
  if (opts.keep_policies) policies.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double beta = beta_grid[i];
    std::size_t best = candidates.front();
    double best_val = std::numeric_limits<double>::infinity();
    for (const std::size_t j : candidates) {
      const double val = raw[j].complexity_bits - beta * raw[j].accuracy_bits;
      if (val < best_val - 1e-15 ||
          (std::abs(val - best_val) <= 1e-15 &&
           raw[j].complexity_bits < raw[best].complexity_bits)) {
        best_val = val;
        best = j;
      }
    }
    cleaned[i] = {beta, raw[best].complexity_bits, raw[best].accuracy_bits,
                  raw[i].converged};
    if (opts.keep_policies) policies[i] = raw_policies[best];
  }
  return FrontierCurve(std::move(cleaned), std::move(raw), std::move(policies));
}

}  // namespace ibtrans
