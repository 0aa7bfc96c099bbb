#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>
#include <sstream>

#include "ibtrans/beliefs.hpp"
#include "ibtrans/encoder.hpp"

using namespace ibtrans;

namespace {

AlignmentTable parse(const std::string& tsv) {
  std::istringstream in(tsv);
  return AlignmentTable::parse_tsv(in, "test.tsv");
}

const std::string kHeader =
    "id\tmeaning_key\tsource_term\ttarget_language\ttarget_term\n";

Eigen::MatrixXd random_policy(std::mt19937_64& rng, Eigen::Index m,
                              Eigen::Index w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd p(m, w);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < w; ++j) p(i, j) = u(rng) + 1e-4;
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

TEST_CASE("meaning key normalization") {
  CHECK(normalize_meaning_key("  Le  Chat\tDort ") == "le chat dort");
  CHECK(normalize_meaning_key("sur la passerelle.") == "sur la passerelle.");
  CHECK(normalize_meaning_key("A") == "a");
}

TEST_CASE("parse_alignments basic table") {
  const auto t = parse(kHeader +
                       "1\tctx a\tsur\ten\ton\n"
                       "2\tctx b\tdans\ten\tin\n");
  CHECK(t.meanings().size() == 2);
  CHECK(t.languages() == std::vector<std::string>{"en"});
  CHECK(t.total_count() == 2);
}

TEST_CASE("identical contexts evoke one meaning; duplicates accumulate") {
  const auto t = parse(kHeader +
                       "1\tCtx  Same\tsur\ten\ton\n"
                       "2\tctx same\tsur\ten\tonto\n");
  CHECK(t.meanings() == std::vector<std::string>{"ctx same"});
  const Encoder e = build_encoder(t);
  REQUIRE(e.lexicon() == std::vector<std::string>{"on", "onto"});
  CHECK(e.policy().rows()(0, 0) == doctest::Approx(0.5));
  CHECK(e.policy().rows()(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("parse_alignments error paths") {
  // row missing the target column, named by line number
  try {
    parse(kHeader + "1\tctx a\tsur\ten\ton\n2\tctx b\tdans\ten\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse(""), std::invalid_argument);
  CHECK_THROWS_AS(parse(kHeader), std::invalid_argument);  // no data rows
  // all rows zero-aligned
  CHECK_THROWS_AS(parse(kHeader + "1\tctx a\tsur\ten\tNone\n"),
                  std::invalid_argument);
  // bad header
  CHECK_THROWS_AS(parse("id\tmeaning\tsource\tlang\tterm\n1\ta\tb\tc\td\n"),
                  ParseError);
}

TEST_CASE("zero-aligned rows are skipped") {
  const auto t = parse(kHeader +
                       "1\tctx a\tsur\ten\ton\n"
                       "2\tctx b\tchez\ten\tNone\n"
                       "3\tctx c\tdans\ten\tin\n");
  CHECK(t.meanings().size() == 2);
}

TEST_CASE("build_encoder one-hot rows and uniform prior") {
  const auto t = parse(kHeader +
                       "1\tctx a\tsur\ten\ton\n"
                       "2\tctx b\tdans\ten\tin\n"
                       "3\tctx c\tsous\ten\tunder\n");
  const Encoder e = build_encoder(t);
  CHECK(e.meaning_count() == 3);
  CHECK(e.lexicon_size() == 3);
  CHECK(e.is_one_hot());
  for (Eigen::Index m = 0; m < 3; ++m) {
    CHECK(e.prior()(m) == doctest::Approx(1.0 / 3.0));
    CHECK(e.policy().rows().row(m).maxCoeff() == 1.0);
  }
}

TEST_CASE("build_encoder weights by occurrence count") {
  const auto t = parse(kHeader +
                       "1\tctx a\tsur\ten\ton\n"
                       "2\tctx a\tsur\ten\ton\n"
                       "3\tctx a\tsur\ten\tonto\n");
  const Encoder e = build_encoder(t);
  REQUIRE(e.lexicon() == std::vector<std::string>{"on", "onto"});
  CHECK(e.policy().rows()(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(e.policy().rows()(0, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("build_encoder matches a count-and-normalize oracle") {
  // synthetic 10 meanings / 4 words with repeats
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> word(0, 3);
  std::uniform_int_distribution<int> reps(1, 4);
  const std::vector<std::string> words = {"at", "in", "on", "under"};
  std::ostringstream tsv;
  tsv << kHeader;
  int id = 0;
  std::vector<std::array<int, 4>> counts(10, {0, 0, 0, 0});
  for (int m = 0; m < 10; ++m) {
    const int k = reps(rng);
    for (int r = 0; r < k; ++r) {
      const int w = word(rng);
      counts[static_cast<std::size_t>(m)][static_cast<std::size_t>(w)]++;
      tsv << ++id << "\tctx" << (m < 9 ? "0" : "") << m + 1 << "\tsrc\ten\t"
          << words[static_cast<std::size_t>(w)] << "\n";
    }
  }
  const Encoder e = build_encoder(parse(tsv.str()));
  REQUIRE(e.meaning_count() == 10);
  for (int m = 0; m < 10; ++m) {
    double total = 0;
    for (int w = 0; w < 4; ++w) total += counts[m][w];
    for (std::size_t w = 0; w < e.lexicon().size(); ++w) {
      const auto it = std::find(words.begin(), words.end(), e.lexicon()[w]);
      const int wi = static_cast<int>(it - words.begin());
      CHECK(e.policy().rows()(m, static_cast<Eigen::Index>(w)) ==
            doctest::Approx(counts[m][wi] / total).epsilon(1e-12));
    }
  }
}

TEST_CASE("build_encoder is invariant to record order") {
  const std::vector<std::string> rows = {
      "1\tctx a\tsur\ten\ton", "2\tctx a\tsur\ten\tonto",
      "3\tctx b\tdans\ten\tin", "4\tctx b\tdans\ten\ton",
      "5\tctx c\tsous\ten\tunder"};
  std::vector<std::string> shuffled = rows;
  std::mt19937_64 rng(11);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::string a = kHeader, b = kHeader;
  for (const auto& r : rows) a += r + "\n";
  for (const auto& r : shuffled) b += r + "\n";
  const Encoder ea = build_encoder(parse(a));
  const Encoder eb = build_encoder(parse(b));
  CHECK(ea.lexicon() == eb.lexicon());
  CHECK(ea.meaning_index() == eb.meaning_index());
  CHECK((ea.policy().rows() - eb.policy().rows()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("complexity of canonical encoders") {
  Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(4, 4);
  const Encoder e(ConditionalDistribution(identity), ProbVector::uniform(4),
                  {}, {});
  CHECK(complexity(e) == doctest::Approx(2.0).epsilon(1e-12));

  Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(4, 2);
  constant.col(0).setOnes();
  const Encoder c(ConditionalDistribution(constant), ProbVector::uniform(4),
                  {}, {});
  CHECK(complexity(c) == 0.0);

  Eigen::MatrixXd mixed(3, 2);
  mixed << 0.9, 0.1, 0.4, 0.6, 0.25, 0.75;
  const Encoder m(ConditionalDistribution(mixed), ProbVector::uniform(3), {}, {});
  CHECK(complexity(m) ==
        doctest::Approx(mutual_information(meaning_word_joint(m)))
            .epsilon(1e-12));
}

TEST_CASE("accuracy of canonical systems") {
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(4, 4);
  const Encoder e(ConditionalDistribution(identity), ProbVector::uniform(4),
                  {}, {});
  const BeliefModel ident_beliefs(ConditionalDistribution(identity), 1.0);
  CHECK(accuracy(e, ident_beliefs) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(accuracy(e, ident_beliefs) ==
        doctest::Approx(complexity(e)).epsilon(1e-12));

  Eigen::MatrixXd constant = Eigen::MatrixXd::Zero(4, 3);
  constant.col(2).setOnes();
  const Encoder c(ConditionalDistribution(constant), ProbVector::uniform(4),
                  {}, {});
  CHECK(accuracy(c, ident_beliefs) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("accuracy matches the brute-force triple-sum oracle") {
  std::mt19937_64 rng(23);
  const Eigen::MatrixXd policy = random_policy(rng, 4, 3);
  const Eigen::MatrixXd beliefs = random_policy(rng, 4, 5);
  const Eigen::VectorXd prior = Eigen::VectorXd::Constant(4, 0.25);
  const Encoder e(ConditionalDistribution(policy), ProbVector(prior), {}, {});
  const BeliefModel b(ConditionalDistribution(beliefs), 1.0);

  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(3, 5);
  for (int m = 0; m < 4; ++m) {
    for (int w = 0; w < 3; ++w) {
      for (int u = 0; u < 5; ++u) {
        joint(w, u) += prior(m) * policy(m, w) * beliefs(m, u);
      }
    }
  }
  double oracle = 0.0;
  const Eigen::VectorXd pw = joint.rowwise().sum();
  const Eigen::VectorXd pu = joint.colwise().sum();
  for (int w = 0; w < 3; ++w) {
    for (int u = 0; u < 5; ++u) {
      if (joint(w, u) > 0) {
        oracle += joint(w, u) * std::log2(joint(w, u) / (pw(w) * pu(u)));
      }
    }
  }
  CHECK(accuracy(e, b) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("accuracy errors on mismatched inventories") {
  const Eigen::MatrixXd id3 = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd id4 = Eigen::MatrixXd::Identity(4, 4);
  const Encoder e(ConditionalDistribution(id3), ProbVector::uniform(3), {}, {});
  const BeliefModel b(ConditionalDistribution(id4), 1.0);
  CHECK_THROWS_AS(accuracy(e, b), std::invalid_argument);

  const Encoder labeled(ConditionalDistribution(id3), ProbVector::uniform(3),
                        {}, {"a", "b", "c"});
  const BeliefModel blab(ConditionalDistribution(id3), 1.0, {"a", "x", "c"});
  CHECK_THROWS_AS(accuracy(labeled, blab), std::invalid_argument);
}

TEST_CASE("data processing inequality holds for random systems") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<Eigen::Index> size(2, 6);
    const Eigen::Index m = size(rng), w = size(rng), u = size(rng);
    const Encoder e(ConditionalDistribution(random_policy(rng, m, w)),
                    ProbVector::uniform(m), {}, {});
    const BeliefModel b(ConditionalDistribution(random_policy(rng, m, u)), 1.0);
    CHECK(accuracy(e, b) <= complexity(e) + 1e-9);
  }
}

TEST_CASE("merged disjoint tables dominate per-part contributions") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> word(0, 2);
    std::ostringstream a, b;
    a << kHeader;
    b << kHeader;
    const std::vector<std::string> words = {"x", "y", "z"};
    for (int m = 0; m < 4; ++m) {
      a << m << "\tpart-a " << m << "\ts\ten\t"
        << words[static_cast<std::size_t>(word(rng))] << "\n";
      b << m << "\tpart-b " << m << "\ts\ten\t"
        << words[static_cast<std::size_t>(word(rng))] << "\n";
    }
    AlignmentTable ta = parse(a.str());
    const AlignmentTable tb = parse(b.str());
    ta.merge(tb);
    const Encoder merged = build_encoder(ta);
    const double total = complexity(merged);

    // per-part contribution under the merged prior:
    //   sum_{m in part} p(m) KL(p(w|m) || p_merged(w))
    const Eigen::MatrixXd& policy = merged.policy().rows();
    const Eigen::VectorXd marginal =
        policy.transpose() * merged.prior().weights();
    double contrib_a = 0.0, contrib_b = 0.0;
    for (Eigen::Index m = 0; m < merged.meaning_count(); ++m) {
      double kl = 0.0;
      for (Eigen::Index w = 0; w < policy.cols(); ++w) {
        if (policy(m, w) > 0) {
          kl += policy(m, w) * std::log2(policy(m, w) / marginal(w));
        }
      }
      const bool in_a =
          merged.meaning_index()[static_cast<std::size_t>(m)].rfind("part-a",
                                                                    0) == 0;
      (in_a ? contrib_a : contrib_b) += merged.prior()(m)*kl;
    }
    CHECK(total >= contrib_a - 1e-12);
    CHECK(total >= contrib_b - 1e-12);
    CHECK(total == doctest::Approx(contrib_a + contrib_b).epsilon(1e-9));
  }
}

TEST_CASE("plane point validates the processing inequality") {
  CHECK_NOTHROW(PlanePoint(1.0, 0.5, "ok"));
  CHECK_THROWS_AS(PlanePoint(0.5, 1.0, "bad"), std::invalid_argument);
  CHECK_THROWS_AS(PlanePoint(0.5, -0.2, "bad"), std::invalid_argument);
}
