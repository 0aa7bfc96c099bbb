#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ibtrans/info.hpp"

namespace ibtrans {

class Encoder;
class BeliefModel;

/// Inputs of the bottleneck optimization: a meaning prior, listener beliefs
/// p(u|m), and a cap on the word inventory of candidate encoders.
struct IBProblem {
  IBProblem(ProbVector prior_, ConditionalDistribution beliefs_, int max_words_ = 0);

  ProbVector prior;
  ConditionalDistribution beliefs;
  int max_words;  // resolved at construction; defaults to the meaning count
};

/// Objective F_beta[q] = complexity - beta * accuracy, in bits.
double ib_objective(const Encoder& e, const BeliefModel& b, double beta);

struct FixedPointOptions {
  double tol = 1e-8;      // absolute objective change
  int max_iters = 10000;
};

struct FixedPointResult {
  Eigen::MatrixXd policy;  // meanings x active words (dead columns dropped)
  bool converged = false;
  std::vector<double> objective_trace;  // objective after each update
  double complexity_bits = 0.0;
  double accuracy_bits = 0.0;
  double objective_bits = 0.0;
};

/// Self-consistent bottleneck iteration at fixed beta: decoder, word
/// marginal and encoder updates until the objective settles. Returns the
/// best iterate (flagged non-converged at the iteration cap); word columns
/// whose marginal dies are dropped and the sweep continues.
FixedPointResult ib_fixed_point(const IBProblem& problem, double beta,
                                const Eigen::MatrixXd& init_policy,
                                const FixedPointOptions& opts = {});

/// `count` values log-linearly spaced over [lo, hi], ascending.
std::vector<double> log_spaced_betas(double lo, double hi, int count);

struct FrontierPoint {
  double beta = 0.0;
  double complexity_bits = 0.0;
  double accuracy_bits = 0.0;
  bool converged = false;
};

/// The computed trade-off bound: one point per grid beta after the concave
/// envelope cleanup, plus the raw annealing output for audit.
class FrontierCurve {
public:
  FrontierCurve(std::vector<FrontierPoint> points,
                std::vector<FrontierPoint> raw_points,
                std::vector<Eigen::MatrixXd> policies = {});

  const std::vector<FrontierPoint>& points() const { return points_; }
  const std::vector<FrontierPoint>& raw_points() const { return raw_points_; }

  /// Optimal objective value at a grid beta (exact grid lookup, no
  /// interpolation). Throws std::out_of_range off the grid.
  double value_at(double beta) const;

  /// Converged policy attached to the cleaned point at `index`; empty when
  /// policies were not retained.
  const Eigen::MatrixXd& policy_at(std::size_t index) const;
  bool has_policies() const { return !policies_.empty(); }

  void write_csv(std::ostream& out) const;                 // cleaned points
  static FrontierCurve read_csv(std::istream& in, const std::string& source_name);

private:
  std::vector<FrontierPoint> points_;      // sorted by beta
  std::vector<FrontierPoint> raw_points_;  // per-beta annealing output
  std::vector<Eigen::MatrixXd> policies_;  // aligned with points_ (optional)
};

struct AnnealingOptions {
  FixedPointOptions fixed_point;
  double jitter_scale = 1e-3;    // relative multiplicative warm-start noise
  std::uint64_t jitter_seed = 0;
  bool keep_policies = true;
};

/// Sweeps beta from largest to smallest, warm-starting each solve from the
/// previous solution with multiplicative jitter, then applies the concave
/// envelope cleanup over the converged points.
FrontierCurve reverse_annealing(const IBProblem& problem,
                                const std::vector<double>& beta_grid,
                                const AnnealingOptions& opts = {});

}  // namespace ibtrans
