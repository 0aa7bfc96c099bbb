#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ibtrans/baselines.hpp"
#include "ibtrans/beliefs.hpp"
#include "ibtrans/encoder.hpp"
#include "ibtrans/frontier.hpp"

using namespace ibtrans;

namespace {

Eigen::MatrixXd stochastic(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng) + 1e-3;
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

// 3 meanings, 2 world states, clearly structured beliefs
IBProblem toy32(int max_words = 2) {
  Eigen::MatrixXd beliefs(3, 2);
  beliefs << 0.9, 0.1,
             0.8, 0.2,
             0.15, 0.85;
  return IBProblem(ProbVector::uniform(3), ConditionalDistribution(beliefs),
                   max_words);
}

// 4 meanings, 3 world states with two natural clusters
IBProblem toy43() {
  Eigen::MatrixXd beliefs(4, 3);
  beliefs << 0.8, 0.15, 0.05,
             0.7, 0.2, 0.1,
             0.1, 0.2, 0.7,
             0.05, 0.15, 0.8;
  return IBProblem(ProbVector::uniform(4), ConditionalDistribution(beliefs), 4);
}

// direct information-plane evaluation used as the test-side oracle
std::pair<double, double> plane_of(const Eigen::MatrixXd& policy,
                                   const Eigen::VectorXd& prior,
                                   const Eigen::MatrixXd& beliefs) {
  const Eigen::Index m = policy.rows(), w = policy.cols(), u = beliefs.cols();
  Eigen::VectorXd pw = Eigen::VectorXd::Zero(w);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(w, u);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      pw(j) += prior(i) * policy(i, j);
      for (Eigen::Index k = 0; k < u; ++k) {
        joint(j, k) += prior(i) * policy(i, j) * beliefs(i, k);
      }
    }
  }
  double cplx = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) {
      if (policy(i, j) > 0.0 && pw(j) > 0.0) {
        cplx += prior(i) * policy(i, j) * std::log2(policy(i, j) / pw(j));
      }
    }
  }
  const Eigen::VectorXd pu = joint.colwise().sum();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < w; ++j) {
    for (Eigen::Index k = 0; k < u; ++k) {
      if (joint(j, k) > 0.0) {
        acc += joint(j, k) * std::log2(joint(j, k) / (pw(j) * pu(k)));
      }
    }
  }
  return {std::max(cplx, 0.0), std::max(acc, 0.0)};
}

}  // namespace

TEST_CASE("ib objective composition") {
  std::mt19937_64 rng(71);
  const Eigen::MatrixXd policy = stochastic(rng, 3, 3);
  const Eigen::MatrixXd beliefs = stochastic(rng, 3, 2);
  const Encoder e(ConditionalDistribution(policy), ProbVector::uniform(3), {}, {});
  const BeliefModel b(ConditionalDistribution(beliefs), 1.0);

  CHECK(ib_objective(e, b, 0.0) == doctest::Approx(complexity(e)).epsilon(1e-12));
  CHECK(ib_objective(e, b, 2.0) ==
        doctest::Approx(complexity(e) - 2.0 * accuracy(e, b)).epsilon(1e-12));

  Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(3, 2);
  constant.col(0).setOnes();
  const Encoder c(ConditionalDistribution(constant), ProbVector::uniform(3), {}, {});
  for (double beta : {0.0, 1.0, 7.5, 100.0}) {
    CHECK(ib_objective(c, b, beta) == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ib_objective(e, b, -1.0), std::invalid_argument);
}

TEST_CASE("fixed point at beta zero collapses complexity") {
  const IBProblem p = toy32();
  std::mt19937_64 rng(72);
  const FixedPointResult res =
      ib_fixed_point(p, 0.0, stochastic(rng, 3, 2), {});
  CHECK(res.converged);
  CHECK(res.complexity_bits < 1e-9);
  CHECK(std::abs(res.objective_bits) < 1e-9);
}

TEST_CASE("degenerate beliefs admit only the trivial solution") {
  Eigen::MatrixXd same(4, 3);
  for (int i = 0; i < 4; ++i) same.row(i) << 0.5, 0.3, 0.2;
  const IBProblem p(ProbVector::uniform(4), ConditionalDistribution(same), 4);
  std::mt19937_64 rng(73);
  for (double beta : {1.0, 10.0, 1000.0}) {
    const FixedPointResult res =
        ib_fixed_point(p, beta, stochastic(rng, 4, 4), {});
    CHECK(res.converged);
    CHECK(res.complexity_bits < 1e-7);
    CHECK(res.accuracy_bits < 1e-7);
  }
}

TEST_CASE("fixed point matches exhaustive grid search on a toy problem") {
  const IBProblem p = toy32(2);
  const double beta = 3.0;

  // exhaustive search over encoders with rows on the 0.05-resolution simplex
  const Eigen::MatrixXd& beliefs = p.beliefs.rows();
  const Eigen::VectorXd& prior = p.prior.weights();
  double best = std::numeric_limits<double>::infinity();
  const int steps = 20;
  for (int a = 0; a <= steps; ++a) {
    for (int b = 0; b <= steps; ++b) {
      for (int c = 0; c <= steps; ++c) {
        Eigen::MatrixXd policy(3, 2);
        policy << a / 20.0, 1.0 - a / 20.0,
                  b / 20.0, 1.0 - b / 20.0,
                  c / 20.0, 1.0 - c / 20.0;
        const auto [cplx, acc] = plane_of(policy, prior, beliefs);
        best = std::min(best, cplx - beta * acc);
      }
    }
  }

  Eigen::MatrixXd init(3, 2);
  init << 0.9, 0.1, 0.8, 0.2, 0.2, 0.8;
  const FixedPointResult res = ib_fixed_point(p, beta, init, {});
  CHECK(res.converged);
  // the continuous solution can only improve on the grid minimum
  CHECK(res.objective_bits <= best + 1e-9);
  CHECK(best <= res.objective_bits + 0.02);  // grid-resolution slack

  // objective trace is non-increasing within tolerance
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
    CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-8);
  }
}

TEST_CASE("iteration cap flags non-convergence and keeps the best iterate") {
  const IBProblem p = toy43();
  std::mt19937_64 rng(74);
  FixedPointOptions opts;
  opts.max_iters = 2;
  opts.tol = 1e-14;
  const FixedPointResult res =
      ib_fixed_point(p, 5.0, stochastic(rng, 4, 4), opts);
  CHECK(!res.converged);
  CHECK(res.policy.rows() == 4);
  CHECK(res.objective_trace.size() == 2);
}

TEST_CASE("log-spaced beta grid") {
  const auto grid = log_spaced_betas(1.0, 1048576.0, 100);
  CHECK(grid.size() == 100);
  CHECK(grid.front() == 1.0);
  CHECK(grid.back() == 1048576.0);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  // log-linear spacing: constant ratio between neighbours
  const double ratio = grid[1] / grid[0];
  for (std::size_t i = 2; i < grid.size(); ++i) {
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(ratio).epsilon(1e-9));
  }
  CHECK_THROWS_AS(log_spaced_betas(0.0, 10.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(log_spaced_betas(2.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("annealing collapses for degenerate beliefs") {
  Eigen::MatrixXd same(4, 3);
  for (int i = 0; i < 4; ++i) same.row(i) << 0.4, 0.35, 0.25;
  const IBProblem p(ProbVector::uniform(4), ConditionalDistribution(same), 4);
  const FrontierCurve curve =
      reverse_annealing(p, log_spaced_betas(1.0, 1024.0, 12), {});
  for (const auto& pt : curve.points()) {
    CHECK(pt.complexity_bits < 1e-6);
    CHECK(pt.accuracy_bits < 1e-6);
  }
}

TEST_CASE("annealing reaches the lossless corner for identity beliefs") {
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(4, 4);
  const IBProblem p(ProbVector::uniform(4), ConditionalDistribution(identity), 4);
  const FrontierCurve curve =
      reverse_annealing(p, log_spaced_betas(1.0, 1048576.0, 30), {});
  const FrontierPoint& top = curve.points().back();
  CHECK(top.complexity_bits == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(top.accuracy_bits == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("frontier dominates random encoders and stays concave") {
  const IBProblem p = toy43();
  const auto grid = log_spaced_betas(1.0, 1048576.0, 40);
  const FrontierCurve curve = reverse_annealing(p, grid, {});

  // shape invariants
  const auto& pts = curve.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts[i].accuracy_bits <= pts[i].complexity_bits + 1e-9);
    if (i > 0) {
      CHECK(pts[i].accuracy_bits >= pts[i - 1].accuracy_bits - 1e-9);
      CHECK(pts[i].complexity_bits >= pts[i - 1].complexity_bits - 1e-9);
    }
  }
  // concavity of the (complexity, accuracy) polyline
  double prev_slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dc = pts[i].complexity_bits - pts[i - 1].complexity_bits;
    const double da = pts[i].accuracy_bits - pts[i - 1].accuracy_bits;
    if (dc < 1e-12) continue;
    const double slope = da / dc;
    CHECK(slope <= prev_slope + 1e-6);
    prev_slope = slope;
  }
  // the trivial encoder keeps the beta = 1 value at zero
  CHECK(curve.value_at(1.0) >= -1e-6);
  CHECK(curve.value_at(1.0) <= 1e-9);

  // no random encoder beats the curve anywhere on the grid
  std::mt19937_64 rng(75);
  const Eigen::MatrixXd& beliefs = p.beliefs.rows();
  const Eigen::VectorXd& prior = p.prior.weights();
  for (int sample = 0; sample < 10000; ++sample) {
    Eigen::MatrixXd policy;
    if (sample % 2 == 0) {
      policy = Eigen::MatrixXd::Zero(4, 4);
      std::uniform_int_distribution<int> word(0, 3);
      for (int m = 0; m < 4; ++m) policy(m, word(rng)) = 1.0;
    } else {
      policy = stochastic(rng, 4, 4);
    }
    const auto [cplx, acc] = plane_of(policy, prior, beliefs);
    for (const auto& pt : pts) {
      const double frontier_value = pt.complexity_bits - pt.beta * pt.accuracy_bits;
      CHECK(frontier_value <= cplx - pt.beta * acc + 1e-6);
    }
  }
}

TEST_CASE("frontier value lookup is exact-grid only") {
  const IBProblem p = toy43();
  const auto grid = log_spaced_betas(1.0, 1024.0, 16);
  const FrontierCurve curve = reverse_annealing(p, grid, {});
  const auto& pts = curve.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(curve.value_at(grid[i]) ==
          doctest::Approx(pts[i].complexity_bits - grid[i] * pts[i].accuracy_bits)
              .epsilon(1e-12));
  }
  CHECK_THROWS_AS(curve.value_at(0.5), std::out_of_range);    // below range
  CHECK_THROWS_AS(curve.value_at(2048.0), std::out_of_range); // above range
  // in range but off the grid
  CHECK_THROWS_AS(curve.value_at(0.5 * (grid[3] + grid[4])), std::out_of_range);
}

TEST_CASE("frontier csv round trip") {
  const IBProblem p = toy43();
  const FrontierCurve curve =
      reverse_annealing(p, log_spaced_betas(1.0, 64.0, 8), {});
  std::ostringstream out;
  curve.write_csv(out);
  std::istringstream in(out.str());
  const FrontierCurve back = FrontierCurve::read_csv(in, "frontier.csv");
  REQUIRE(back.points().size() == curve.points().size());
  for (std::size_t i = 0; i < curve.points().size(); ++i) {
    CHECK(back.points()[i].beta ==
          doctest::Approx(curve.points()[i].beta).epsilon(1e-11));
    CHECK(back.points()[i].complexity_bits ==
          doctest::Approx(curve.points()[i].complexity_bits).epsilon(1e-9));
    CHECK(back.points()[i].converged == curve.points()[i].converged);
  }
}

TEST_CASE("warm-start jitter perturbs but does not destabilize the frontier") {
  const IBProblem p = toy43();
  const auto grid = log_spaced_betas(1.0, 4096.0, 20);
  AnnealingOptions a;
  a.jitter_seed = 1;
  AnnealingOptions b;
  b.jitter_seed = 2;
  const FrontierCurve ca = reverse_annealing(p, grid, a);
  const FrontierCurve cb = reverse_annealing(p, grid, b);
  for (std::size_t i = 0; i < ca.points().size(); ++i) {
    CHECK(std::abs(ca.points()[i].complexity_bits -
                   cb.points()[i].complexity_bits) < 1e-6);
    CHECK(std::abs(ca.points()[i].accuracy_bits -
                   cb.points()[i].accuracy_bits) < 1e-6);
  }
}
