#include <doctest.h>

#include <Eigen/Dense>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ibtrans/similarity.hpp"

using namespace ibtrans;

namespace {

PileSortDataset pilesort(
    const std::vector<std::vector<std::pair<std::string, std::string>>>& byp) {
  std::vector<PileAssignment> rows;
  for (std::size_t p = 0; p < byp.size(); ++p) {
    for (const auto& [item, pile] : byp[p]) {
      rows.push_back({"p" + std::to_string(p), item, pile});
    }
  }
  return PileSortDataset(std::move(rows));
}

EmbeddingSet embeddings_from(const Eigen::MatrixXd& x) {
  std::map<std::string, Eigen::VectorXd> m;
  char buf[16];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "it%02d", static_cast<int>(i));
    m.emplace(buf, x.row(i).transpose());
  }
  return EmbeddingSet(std::move(m));
}

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r,
                              Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  }
  return m;
}

SimilarityMatrix planted_lowrank_target(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& p_star,
                                        double noise_sd, std::uint64_t seed) {
  const Eigen::MatrixXd z = x * p_star.transpose();
  Eigen::MatrixXd s = z * z.transpose();
  if (noise_sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise_sd);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < s.cols(); ++j) {
        const double n = g(rng);
        s(i, j) += n;
        s(j, i) += n;
      }
    }
  }
  s = 0.5 * (s + s.transpose()).eval();
  return SimilarityMatrix(s, SimilarityMatrix::Kind::kPredicted);
}

}  // namespace

TEST_CASE("empirical similarity from pile sorting") {
  // 3 participants, items a,b,c; a+b co-piled by 2 of 3
  const auto ds = pilesort({
      {{"a", "1"}, {"b", "1"}, {"c", "2"}},
      {{"a", "x"}, {"b", "x"}, {"c", "x"}},
      {{"a", "p"}, {"b", "q"}, {"c", "q"}},
  });
  const SimilarityMatrix sim = empirical_similarity(ds);
  REQUIRE(sim.items() == std::vector<std::string>{"a", "b", "c"});
  CHECK(sim.values()(0, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(sim.values()(0, 0) == 1.0);
  CHECK(sim.kind() == SimilarityMatrix::Kind::kEmpirical);

  // unanimous and never-co-piled pairs
  const auto ds2 = pilesort({
      {{"a", "1"}, {"b", "1"}, {"c", "2"}},
      {{"a", "9"}, {"b", "9"}, {"c", "3"}},
  });
  const SimilarityMatrix sim2 = empirical_similarity(ds2);
  CHECK(sim2.values()(0, 1) == 1.0);
  CHECK(sim2.values()(0, 2) == 0.0);
}

TEST_CASE("pile-sort validation") {
  // incomplete participant
  CHECK_THROWS_AS(pilesort({
                      {{"a", "1"}, {"b", "1"}, {"c", "2"}},
                      {{"a", "1"}, {"b", "1"}},
                  }),
                  std::invalid_argument);
  // duplicate assignment
  CHECK_THROWS_AS(pilesort({{{"a", "1"}, {"a", "2"}, {"b", "1"}}}),
                  std::invalid_argument);
}

TEST_CASE("empirical similarity is participant-order equivariant") {
  const std::vector<std::vector<std::pair<std::string, std::string>>> base = {
      {{"a", "1"}, {"b", "1"}, {"c", "2"}, {"d", "2"}},
      {{"a", "x"}, {"b", "y"}, {"c", "y"}, {"d", "x"}},
      {{"a", "m"}, {"b", "m"}, {"c", "m"}, {"d", "n"}},
  };
  auto reversed = base;
  std::reverse(reversed.begin(), reversed.end());
  const auto s1 = empirical_similarity(pilesort(base));
  const auto s2 = empirical_similarity(pilesort(reversed));
  CHECK((s1.values() - s2.values()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pile-sort csv parsing") {
  std::istringstream in(
      "participant_id,item_id,pile_id\n"
      "p1,\"item, with comma\",1\n"
      "p1,plain,2\n");
  const auto ds = PileSortDataset::parse_csv(in, "piles.csv");
  CHECK(ds.participant_count() == 1);
  CHECK(ds.item_count() == 2);
  CHECK(ds.items()[0] == "item, with comma");

  std::istringstream bad("participant_id,item_id\np,i\n");
  CHECK_THROWS_AS(PileSortDataset::parse_csv(bad, "piles.csv"), ParseError);
  std::istringstream empty("participant_id,item_id,pile_id\n");
  CHECK_THROWS_AS(PileSortDataset::parse_csv(empty, "piles.csv"),
                  std::invalid_argument);
}

TEST_CASE("embedding tsv parsing") {
  std::istringstream in("a\t1.0\t2.0\nb\t0.5\t-1.5\n");
  const auto e = EmbeddingSet::parse_tsv(in, "emb.tsv");
  CHECK(e.dim() == 2);
  CHECK(e.item_count() == 2);
  CHECK(e.vector("b")(1) == -1.5);

  std::istringstream ragged("a\t1.0\t2.0\nb\t0.5\n");
  CHECK_THROWS_AS(EmbeddingSet::parse_tsv(ragged, "emb.tsv"), ParseError);
  std::istringstream junk("a\t1.0\tx2\n");
  CHECK_THROWS_AS(EmbeddingSet::parse_tsv(junk, "emb.tsv"), ParseError);
  std::istringstream dup("a\t1.0\na\t2.0\n");
  CHECK_THROWS_AS(EmbeddingSet::parse_tsv(dup, "emb.tsv"), ParseError);
}

TEST_CASE("cosine baseline") {
  // identical pair among items with variance
  Eigen::MatrixXd x(4, 3);
  x << 1.0, 2.0, 0.5,
       1.0, 2.0, 0.5,
       -1.0, 0.0, 2.0,
       0.5, -2.0, 1.0;
  const auto sim = cosine_baseline(embeddings_from(x));
  CHECK(sim.values()(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sim.values()(2, 2) == 1.0);

  // orthogonal rows after z-scoring
  Eigen::MatrixXd o(4, 2);
  o << 1, 1, -1, 1, 1, -1, -1, -1;
  const auto osim = cosine_baseline(embeddings_from(o));
  CHECK(osim.values()(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(osim.values()(0, 3) == doctest::Approx(-1.0).epsilon(1e-12));

  // random instance against a direct oracle
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd r = random_matrix(rng, 4, 6);
  const auto rsim = cosine_baseline(embeddings_from(r));
  Eigen::MatrixXd z = r;
  for (Eigen::Index d = 0; d < z.cols(); ++d) {
    const double mean = z.col(d).mean();
    const double sd = std::sqrt((z.col(d).array() - mean).square().mean());
    z.col(d) = (z.col(d).array() - mean) / sd;
  }
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = i + 1; j < 4; ++j) {
      const double oracle =
          z.row(i).dot(z.row(j)) / (z.row(i).norm() * z.row(j).norm());
      CHECK(rsim.values()(i, j) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("cosine baseline drops zero-variance dimensions") {
  Eigen::MatrixXd x(3, 3);
  x << 1.0, 7.0, 0.0,
       2.0, 7.0, 1.0,
       3.0, 7.0, -1.0;  // middle dimension has zero variance
  CHECK_NOTHROW(cosine_baseline(embeddings_from(x)));

  // all dimensions constant -> all pairs undefined
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 2, 4.0);
  CHECK_THROWS_AS(cosine_baseline(embeddings_from(flat)), std::domain_error);
}

TEST_CASE("ridge baseline null and realizable targets") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = random_matrix(rng, 6, 3);
  const EmbeddingSet e = embeddings_from(x);

  // target identically zero -> zero coefficients
  const SimilarityMatrix zero(Eigen::MatrixXd::Zero(6, 6),
                              SimilarityMatrix::Kind::kPredicted);
  const RidgeModel m0 = ridge_baseline(e, zero, 1.0);
  CHECK(m0.weights().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(m0.intercept()) < 1e-12);

  // target linear in the cosine feature -> recovered at small alpha
  Eigen::MatrixXd target(6, 6);
  const auto items = e.items();
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      const auto& fi = e.vector(items[static_cast<std::size_t>(i)]);
      const auto& fj = e.vector(items[static_cast<std::size_t>(j)]);
      const double c = fi.dot(fj) / (fi.norm() * fj.norm());
      target(i, j) = 0.3 * c + 0.1;
    }
  }
  const SimilarityMatrix lin(0.5 * (target + target.transpose()),
                             SimilarityMatrix::Kind::kPredicted);
  const RidgeModel m1 = ridge_baseline(e, lin, 1e-8);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = i + 1; j < 6; ++j) {
      const double pred =
          m1.predict(e.vector(items[static_cast<std::size_t>(i)]),
                     e.vector(items[static_cast<std::size_t>(j)]));
      CHECK(pred == doctest::Approx(lin.values()(i, j)).epsilon(1e-4));
    }
  }

  CHECK_THROWS_AS(ridge_baseline(e, zero, 0.0), std::invalid_argument);
}

TEST_CASE("ridge matches the normal-equation oracle") {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd x = random_matrix(rng, 6, 3);
  const EmbeddingSet e = embeddings_from(x);
  Eigen::MatrixXd noise = random_matrix(rng, 6, 6, 0.5);
  const SimilarityMatrix target(0.5 * (noise + noise.transpose()),
                                SimilarityMatrix::Kind::kPredicted);
  const double alpha = 0.37;
  const RidgeModel model = ridge_baseline(e, target, alpha);

  // oracle: centered normal equations solved by explicit inverse
  const auto items = e.items();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = i + 1; j < 6; ++j) pairs.emplace_back(i, j);
  }
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(pairs.size()), 5);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& fi = e.vector(items[static_cast<std::size_t>(pairs[p].first)]);
    const auto& fj = e.vector(items[static_cast<std::size_t>(pairs[p].second)]);
    phi.row(static_cast<Eigen::Index>(p)) =
        RidgeModel::features(fi, fj).transpose();
    y(static_cast<Eigen::Index>(p)) = target.values()(pairs[p].first, pairs[p].second);
  }
  const Eigen::RowVectorXd mean = phi.colwise().mean();
  const Eigen::MatrixXd xc = phi.rowwise() - mean;
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::MatrixXd gram =
      xc.transpose() * xc + alpha * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::VectorXd w = gram.inverse() * (xc.transpose() * yc);
  CHECK((model.weights() - w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(model.intercept() == doctest::Approx(y.mean() - mean.dot(w)).epsilon(1e-6));
}

TEST_CASE("ridge dual and primal solutions agree") {
  // more features than pairs exercises the dual path
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd x = random_matrix(rng, 5, 40);  // 10 pairs, 42 features
  const EmbeddingSet e = embeddings_from(x);
  Eigen::MatrixXd noise = random_matrix(rng, 5, 5, 0.3);
  const SimilarityMatrix target(0.5 * (noise + noise.transpose()),
                                SimilarityMatrix::Kind::kPredicted);
  const RidgeModel model = ridge_baseline(e, target, 0.5);
  // dual solve must satisfy the primal stationarity equation
  const auto items = e.items();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = i + 1; j < 5; ++j) pairs.emplace_back(i, j);
  }
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(pairs.size()), 42);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& fi = e.vector(items[static_cast<std::size_t>(pairs[p].first)]);
    const auto& fj = e.vector(items[static_cast<std::size_t>(pairs[p].second)]);
    phi.row(static_cast<Eigen::Index>(p)) = RidgeModel::features(fi, fj).transpose();
    y(static_cast<Eigen::Index>(p)) =
        target.values()(pairs[p].first, pairs[p].second);
  }
  const Eigen::RowVectorXd mean = phi.colwise().mean();
  const Eigen::MatrixXd xc = phi.rowwise() - mean;
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd residual =
      xc.transpose() * (xc * model.weights() - yc) + 0.5 * model.weights();
  CHECK(residual.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("low-rank training recovers a planted model exactly") {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd x = random_matrix(rng, 12, 8);
  const Eigen::MatrixXd p_star = random_matrix(rng, 2, 8, 0.4);
  const SimilarityMatrix target = planted_lowrank_target(x, p_star, 0.0, 0);

  LowRankOptions opts;
  opts.rank = 2;
  opts.penalty = 0.0;
  opts.seed = 99;
  opts.max_iters = 30000;
  opts.tol = 1e-16;
  TrainTrace trace;
  const LowRankModel model =
      train_low_rank(embeddings_from(x), target, opts, &trace);
  REQUIRE(!trace.loss.empty());
  CHECK(trace.loss.back() < 1e-6);
  CHECK(trace.loss.back() <= trace.loss.front());
  // descent is monotone after step-size adaptation
  for (std::size_t i = 1; i < trace.loss.size(); ++i) {
    CHECK(trace.loss[i] <= trace.loss[i - 1] + 1e-12);
  }
  (void)model;
}

TEST_CASE("low-rank training under a dominating penalty shrinks to zero") {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd x = random_matrix(rng, 10, 6);
  const Eigen::MatrixXd p_star = random_matrix(rng, 2, 6, 0.5);
  const SimilarityMatrix target = planted_lowrank_target(x, p_star, 0.0, 0);

  LowRankOptions opts;
  opts.rank = 2;
  opts.penalty = 1e8;
  opts.seed = 5;
  opts.max_iters = 5000;
  const LowRankModel model = train_low_rank(embeddings_from(x), target, opts);
  CHECK(model.projection().cwiseAbs().maxCoeff() < 1e-3);
  const auto items = embeddings_from(x).items();
  const EmbeddingSet e = embeddings_from(x);
  CHECK(std::abs(model.predict(e.vector(items[0]), e.vector(items[1]))) < 1e-4);
}

TEST_CASE("low-rank predictions match a naive multiply oracle and are PSD") {
  std::mt19937_64 rng(14);
  const Eigen::MatrixXd p = random_matrix(rng, 3, 5);
  const LowRankModel model(p, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd fi = random_matrix(rng, 5, 1);
    const Eigen::VectorXd fj = random_matrix(rng, 5, 1);
    double oracle = 0.0;
    for (int k = 0; k < 3; ++k) {
      double zi = 0.0, zj = 0.0;
      for (int d = 0; d < 5; ++d) {
        zi += p(k, d) * fi(d);
        zj += p(k, d) * fj(d);
      }
      oracle += zi * zj;
    }
    CHECK(model.predict(fi, fj) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(model.predict(fi, fi) >= 0.0);
  }
  CHECK_THROWS_AS(model.predict(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(5)),
                  std::invalid_argument);

  const LowRankModel zero(Eigen::MatrixXd::Zero(2, 5), 0.0);
  CHECK(zero.predict(Eigen::VectorXd::Ones(5), Eigen::VectorXd::Ones(5)) == 0.0);
}

TEST_CASE("low-rank model json round trip") {
  std::mt19937_64 rng(15);
  const LowRankModel model(random_matrix(rng, 2, 4), 0.01);
  const LowRankModel back = LowRankModel::from_json(model.to_json());
  CHECK((model.projection() - back.projection()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.penalty() == 0.01);
  CHECK_THROWS_AS(LowRankModel::from_json("{}"), std::exception);
}

TEST_CASE("spearman rho") {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {10, 20, 30, 40, 50};
  const std::vector<double> c = {50, 40, 30, 20, 10};
  CHECK(spearman_rho(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman_rho(a, c) == doctest::Approx(-1.0).epsilon(1e-12));

  // hand-ranked tie oracle: ranks x = (1, 2.5, 2.5, 4), y = (1, 3, 2, 4)
  const std::vector<double> x = {1, 2, 2, 3};
  const std::vector<double> y = {1, 3, 2, 4};
  CHECK(spearman_rho(x, y) ==
        doctest::Approx(0.9486832980505138).epsilon(1e-12));

  // invariance under strictly increasing transforms
  std::vector<double> ax = a, by = b;
  for (auto& v : ax) v = std::exp(v);
  for (auto& v : by) v = v * v * v + 7;
  CHECK(spearman_rho(ax, by) == doctest::Approx(spearman_rho(a, b)).epsilon(1e-12));

  const std::vector<double> flat = {2, 2, 2, 2};
  CHECK_THROWS_AS(spearman_rho(flat, a.size() == 4 ? a : std::vector<double>{1, 2, 3, 4}),
                  std::domain_error);
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                  std::invalid_argument);
}

TEST_CASE("nested cv recovers a planted low-rank structure") {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd x = random_matrix(rng, 24, 12);
  const Eigen::MatrixXd p_star = random_matrix(rng, 2, 12, 0.4);
  const SimilarityMatrix target = planted_lowrank_target(x, p_star, 0.0, 0);
  const EmbeddingSet e = embeddings_from(x);

  HyperGrid grid;
  grid.lowrank_ranks = {1, 2, 4};
  grid.lowrank_penalties = {1e-6, 1e-3};
  CvOptions opts;
  opts.folds = 6;
  opts.seed = 31;
  opts.lowrank.max_iters = 3000;
  opts.lowrank.tol = 1e-12;
  const CvResult res = nested_cv(e, target, ModelFamily::kLowRank, grid, opts);
  CHECK(res.mean_rho > 0.9);
  for (const auto& fold : res.folds) {
    CHECK(fold.chosen_rank >= 2);  // at least the planted rank
    CHECK(fold.test_pair_count == 6);  // 4 held-out items
  }
}

TEST_CASE("nested cv on pure noise stays near zero") {
  std::mt19937_64 rng(22);
  const Eigen::MatrixXd x = random_matrix(rng, 24, 8);
  Eigen::MatrixXd noise = random_matrix(rng, 24, 24);
  const SimilarityMatrix target(0.5 * (noise + noise.transpose()),
                                SimilarityMatrix::Kind::kPredicted);
  HyperGrid grid;
  grid.lowrank_ranks = {2};
  grid.lowrank_penalties = {1e-3};
  CvOptions opts;
  opts.folds = 6;
  opts.seed = 33;
  opts.lowrank.max_iters = 1500;
  const CvResult res =
      nested_cv(embeddings_from(x), target, ModelFamily::kLowRank, grid, opts);
  CHECK(std::abs(res.mean_rho) < 0.4);
}

TEST_CASE("nested cv is deterministic and leakage-free") {
  std::mt19937_64 rng(25);
  const Eigen::MatrixXd x = random_matrix(rng, 18, 6);
  const Eigen::MatrixXd p_star = random_matrix(rng, 2, 6, 0.5);
  const SimilarityMatrix target = planted_lowrank_target(x, p_star, 0.05, 7);
  const EmbeddingSet e = embeddings_from(x);

  HyperGrid grid;
  grid.ridge_alphas = {0.01, 1.0};
  CvOptions opts;
  opts.folds = 6;
  opts.seed = 44;
  const CvResult a = nested_cv(e, target, ModelFamily::kRidge, grid, opts);
  const CvResult b = nested_cv(e, target, ModelFamily::kRidge, grid, opts);
  CHECK(a.mean_rho == b.mean_rho);
  CHECK(a.std_rho == b.std_rho);
  REQUIRE(a.folds.size() == b.folds.size());
  for (std::size_t f = 0; f < a.folds.size(); ++f) {
    CHECK(a.folds[f].rho == b.folds[f].rho);
    CHECK(a.folds[f].test_items == b.folds[f].test_items);
  }

  // fold logs partition the items; test pairs never touch training items
  std::set<std::string> seen;
  for (const auto& fold : a.folds) {
    for (const auto& item : fold.test_items) {
      CHECK(seen.insert(item).second);  // disjoint across folds
    }
    const std::size_t n = fold.test_items.size();
    CHECK(fold.test_pair_count == n * (n - 1) / 2);  // pairs fully held out
  }
  CHECK(seen.size() == 18);

  // a fold with fewer than 2 items is a configuration error
  const Eigen::MatrixXd tiny = random_matrix(rng, 8, 4);
  Eigen::MatrixXd tnoise = random_matrix(rng, 8, 8);
  const SimilarityMatrix ttarget(0.5 * (tnoise + tnoise.transpose()),
                                 SimilarityMatrix::Kind::kPredicted);
  CHECK_THROWS_AS(
      nested_cv(embeddings_from(tiny), ttarget, ModelFamily::kRidge, grid, opts),
      std::invalid_argument);
}

TEST_CASE("representative selection") {
  // K = |items| returns every item
  std::mt19937_64 rng(51);
  const Eigen::MatrixXd x = random_matrix(rng, 6, 3);
  const EmbeddingSet e = embeddings_from(x);
  auto all = select_representatives(e, 6, 1);
  std::sort(all.begin(), all.end());
  CHECK(all == e.items());

  // two well-separated blobs -> one representative per blob
  Eigen::MatrixXd blobs(10, 2);
  for (int i = 0; i < 5; ++i) {
    blobs(i, 0) = 10.0 + 0.1 * i;
    blobs(i, 1) = 10.0 - 0.1 * i;
    blobs(5 + i, 0) = -10.0 + 0.1 * i;
    blobs(5 + i, 1) = -10.0 - 0.1 * i;
  }
  const auto reps = select_representatives(embeddings_from(blobs), 2, 3);
  REQUIRE(reps.size() == 2);
  const EmbeddingSet be = embeddings_from(blobs);
  const double x0 = be.vector(reps[0])(0), x1 = be.vector(reps[1])(0);
  CHECK(x0 * x1 < 0.0);  // opposite blobs

  CHECK_THROWS_AS(select_representatives(e, 7, 1), std::invalid_argument);
}

TEST_CASE("k-means inertia is near the exhaustive restart oracle") {
  // three tight, well-separated blobs
  std::mt19937_64 rng(52);
  std::normal_distribution<double> g(0.0, 0.05);
  Eigen::MatrixXd x(12, 2);
  const double centers[3][2] = {{0, 0}, {5, 0}, {0, 5}};
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = centers[i % 3][0] + g(rng);
    x(i, 1) = centers[i % 3][1] + g(rng);
  }
  double inertia = 0.0;
  select_representatives(embeddings_from(x), 3, 9, 10, &inertia);

  // independent naive Lloyd with 100 random restarts
  double best = std::numeric_limits<double>::infinity();
  std::mt19937_64 orng(77);
  for (int restart = 0; restart < 100; ++restart) {
    std::vector<int> centroid_idx(3);
    std::uniform_int_distribution<int> pick(0, 11);
    for (auto& c : centroid_idx) c = pick(orng);
    Eigen::MatrixXd cen(3, 2);
    for (int c = 0; c < 3; ++c) cen.row(c) = x.row(centroid_idx[c]);
    std::vector<int> assign(12, 0);
    for (int iter = 0; iter < 50; ++iter) {
      for (int i = 0; i < 12; ++i) {
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < 3; ++c) {
          const double d = (x.row(i) - cen.row(c)).squaredNorm();
          if (d < bd) {
            bd = d;
            assign[i] = c;
          }
        }
      }
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(3, 2);
      std::vector<int> counts(3, 0);
      for (int i = 0; i < 12; ++i) {
        sums.row(assign[i]) += x.row(i);
        counts[assign[i]]++;
      }
      for (int c = 0; c < 3; ++c) {
        if (counts[c]) cen.row(c) = sums.row(c) / counts[c];
      }
    }
    double inert = 0.0;
    for (int i = 0; i < 12; ++i) {
      inert += (x.row(i) - cen.row(assign[i])).squaredNorm();
    }
    best = std::min(best, inert);
  }
  CHECK(inertia <= best * 1.01 + 1e-12);
}

TEST_CASE("classical mds") {
  // all pairwise similarity zero -> equilateral triangle
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
  zero.diagonal().setOnes();
  const auto tri = classical_mds(
      SimilarityMatrix(zero, SimilarityMatrix::Kind::kEmpirical), 2);
  const double d01 = (tri.coords.row(0) - tri.coords.row(1)).norm();
  const double d02 = (tri.coords.row(0) - tri.coords.row(2)).norm();
  const double d12 = (tri.coords.row(1) - tri.coords.row(2)).norm();
  CHECK(d01 == doctest::Approx(d02).epsilon(1e-9));
  CHECK(d01 == doctest::Approx(d12).epsilon(1e-9));
  CHECK(tri.coords.colwise().mean().cwiseAbs().maxCoeff() < 1e-9);

  // two perfect piles -> two coincident clusters
  Eigen::MatrixXd piles = Eigen::MatrixXd::Zero(4, 4);
  piles.block(0, 0, 2, 2).setOnes();
  piles.block(2, 2, 2, 2).setOnes();
  const auto two = classical_mds(
      SimilarityMatrix(piles, SimilarityMatrix::Kind::kEmpirical), 2);
  CHECK((two.coords.row(0) - two.coords.row(1)).norm() < 1e-9);
  CHECK((two.coords.row(2) - two.coords.row(3)).norm() < 1e-9);
  CHECK((two.coords.row(0) - two.coords.row(2)).norm() ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(two.positive_dims == 1);  // cluster separation is one-dimensional

  // planted 2-d metric instance is reconstructed through 1 - sim
  const double pts[5][2] = {{0.05, 0.1}, {0.3, 0.05}, {0.2, 0.3}, {0.05, 0.3}, {0.25, 0.2}};
  Eigen::MatrixXd sim(5, 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      const double dx = pts[i][0] - pts[j][0];
      const double dy = pts[i][1] - pts[j][1];
      sim(i, j) = 1.0 - std::sqrt(dx * dx + dy * dy);
    }
  }
  const auto rec = classical_mds(
      SimilarityMatrix(sim, SimilarityMatrix::Kind::kEmpirical), 2);
  CHECK(rec.positive_dims == 2);
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      const double want = 1.0 - sim(i, j);
      const double got = (rec.coords.row(i) - rec.coords.row(j)).norm();
      CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("similarity matrix validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.3, 0.2, 1.0;
  CHECK_THROWS_AS(
      SimilarityMatrix(asym, SimilarityMatrix::Kind::kPredicted),
      std::invalid_argument);
  Eigen::MatrixXd off(2, 2);
  off << 0.9, 0.3, 0.3, 1.0;  // empirical diagonal must be 1
  CHECK_THROWS_AS(SimilarityMatrix(off, SimilarityMatrix::Kind::kEmpirical),
                  std::invalid_argument);
  CHECK_NOTHROW(SimilarityMatrix(off, SimilarityMatrix::Kind::kPredicted));
}
