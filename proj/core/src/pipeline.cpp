#include "ibtrans/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ibtrans/beliefs.hpp"
#include "ibtrans/encoder.hpp"
#include "ibtrans/io.hpp"
#include "measures_detail.hpp"
#include "parallel.hpp"

namespace ibtrans {
namespace {

using nlohmann::json;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string pad_index(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", i);
  return buf;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  return in;
}

AlignmentTable load_alignments(const RunConfig& cfg) {
  if (cfg.alignments.empty()) {
    throw std::invalid_argument("config: inputs.alignments is required");
  }
  AlignmentTable merged;
  for (const auto& path : cfg.alignments) {
    auto in = open_or_throw(path);
    AlignmentTable t = AlignmentTable::parse_tsv(in, path);
    if (merged.empty()) {
      merged = std::move(t);
    } else {
      merged.merge(t);
    }
  }
  return merged;
}

// Shared meaning inventory across languages: strict equality unless the
// intersect flag is set; mismatches are reported by meaning key.
std::vector<std::string> resolve_meanings(const AlignmentTable& table,
                                          bool intersect) {
  const auto langs = table.languages();
  std::vector<std::set<std::string>> per_lang;
  for (const auto& lang : langs) {
    const auto m = table.for_language(lang).meanings();
    per_lang.emplace_back(m.begin(), m.end());
  }
  std::set<std::string> common = per_lang.front();
  for (std::size_t i = 1; i < per_lang.size(); ++i) {
    std::set<std::string> next;
    std::set_intersection(common.begin(), common.end(), per_lang[i].begin(),
                          per_lang[i].end(), std::inserter(next, next.end()));
    common = std::move(next);
  }
  if (common.empty()) {
    throw std::invalid_argument(
        "alignments: no meaning is attested in every language");
  }
  if (!intersect) {
    for (std::size_t i = 0; i < per_lang.size(); ++i) {
      if (per_lang[i] == common) continue;
      std::vector<std::string> extra;
      std::set_difference(per_lang[i].begin(), per_lang[i].end(),
                          common.begin(), common.end(),
                          std::back_inserter(extra));
      std::ostringstream msg;
      msg << "alignments: language '" << langs[i] << "' has "
          << extra.size() << " meaning(s) missing from other languages"
          << " (use run.intersect_meanings to drop them):";
      for (std::size_t k = 0; k < extra.size() && k < 5; ++k) {
        msg << " '" << extra[k] << "'";
      }
      throw std::invalid_argument(msg.str());
    }
  }
  return {common.begin(), common.end()};
}

ProbVector make_prior(const RunConfig& cfg, const AlignmentTable& table,
                      const std::vector<std::string>& meanings) {
  const auto n = static_cast<Eigen::Index>(meanings.size());
  if (cfg.prior == "uniform") return ProbVector::uniform(n);
  // frequency prior: alignment occurrences pooled over languages
  std::map<std::string, double> counts;
  for (const auto& r : table.records()) {
    counts[r.meaning_key] += static_cast<double>(r.count);
  }
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = counts[meanings[static_cast<std::size_t>(i)]];
  }
  return ProbVector(w / w.sum());
}

struct TrainedSimilarity {
  double cosine_rho = 0.0;
  CvResult ridge;
  std::vector<std::pair<int, CvResult>> lowrank;
  int best_rank = 0;
  double best_penalty = 0.0;
  LowRankModel model;
};

// Scores the three predictor families on the pile-sort data and trains the
// winning projection model on all pairs.
TrainedSimilarity train_best_lowrank(const RunConfig& cfg) {
  if (cfg.pilesort.empty() || cfg.embeddings.empty()) {
    throw std::invalid_argument(
        "config: inputs.pilesort and inputs.embeddings are required to train "
        "a similarity model");
  }
  auto ps_in = open_or_throw(cfg.pilesort);
  const PileSortDataset pilesort =
      PileSortDataset::parse_csv(ps_in, cfg.pilesort);
  auto emb_in = open_or_throw(cfg.embeddings);
  const EmbeddingSet all_embeddings =
      EmbeddingSet::parse_tsv(emb_in, cfg.embeddings);
  for (const auto& item : pilesort.items()) {
    if (!all_embeddings.contains(item)) {
      throw std::invalid_argument("embeddings: missing vector for judged item '" +
                                  item + "'");
    }
  }
  const EmbeddingSet embeddings = all_embeddings.subset(pilesort.items());
  const SimilarityMatrix empirical = empirical_similarity(pilesort);

  TrainedSimilarity out;
  {
    const Eigen::MatrixXd cos = cosine_baseline(embeddings).values();
    std::vector<double> predicted, observed;
    for (Eigen::Index i = 0; i < empirical.size(); ++i) {
      for (Eigen::Index j = i + 1; j < empirical.size(); ++j) {
        predicted.push_back(cos(i, j));
        observed.push_back(empirical.values()(i, j));
      }
    }
    out.cosine_rho = spearman_rho(predicted, observed);
  }

  CvOptions cv;
  cv.folds = cfg.cv_folds;
  cv.seed = cfg.cv_seed;
  cv.lowrank.max_iters = cfg.lowrank_max_iters;
  cv.lowrank.tol = cfg.lowrank_tol;

  HyperGrid ridge_grid;
  ridge_grid.ridge_alphas = cfg.ridge_alphas;
  out.ridge = nested_cv(embeddings, empirical, ModelFamily::kRidge, ridge_grid, cv);

  double best_mean = -std::numeric_limits<double>::infinity();
  for (const int rank : cfg.lowrank_ranks) {
    HyperGrid grid;
    grid.lowrank_ranks = {rank};
    grid.lowrank_penalties = cfg.lowrank_penalties;
    CvResult res =
        nested_cv(embeddings, empirical, ModelFamily::kLowRank, grid, cv);
    if (res.mean_rho > best_mean) {
      best_mean = res.mean_rho;
      out.best_rank = rank;
    }
    out.lowrank.emplace_back(rank, std::move(res));
  }

  // final penalty: the most frequent inner choice for the winning rank
  {
    const CvResult* best_res = nullptr;
    for (const auto& [rank, res] : out.lowrank) {
      if (rank == out.best_rank) best_res = &res;
    }
    std::map<double, int> votes;
    for (const auto& fold : best_res->folds) ++votes[fold.chosen_penalty];
    int top = -1;
    for (const auto& [penalty, n] : votes) {
      if (n > top) {
        top = n;
        out.best_penalty = penalty;
      }
    }
  }

  LowRankOptions opts;
  opts.rank = out.best_rank;
  opts.penalty = out.best_penalty;
  opts.seed = cfg.train_seed;
  opts.max_iters = cfg.lowrank_max_iters;
  opts.tol = cfg.lowrank_tol;
  out.model = train_low_rank(embeddings, empirical, opts);
  return out;
}

struct ProblemSetup {
  std::vector<std::string> languages;
  std::vector<std::string> meanings;
  ProbVector prior;
  SimilarityMatrix sim;  // over the meaning inventory
  std::vector<Encoder> encoders;
  std::string trained_model_json;  // nonempty when trained in this run
};

SimilarityMatrix predicted_meaning_similarity(
    const LowRankModel& model, const EmbeddingSet& embeddings,
    const std::vector<std::string>& meanings) {
  for (const auto& m : meanings) {
    if (!embeddings.contains(m)) {
      throw std::invalid_argument("embeddings: missing vector for meaning '" +
                                  m + "'");
    }
  }
  const auto n = static_cast<Eigen::Index>(meanings.size());
  Eigen::MatrixXd z(n, model.rank());
  for (Eigen::Index i = 0; i < n; ++i) {
    z.row(i) = (model.projection() *
                embeddings.vector(meanings[static_cast<std::size_t>(i)]))
                   .transpose();
  }
  Eigen::MatrixXd s = z * z.transpose();
  s = 0.5 * (s + s.transpose()).eval();
  return SimilarityMatrix(std::move(s), SimilarityMatrix::Kind::kPredicted,
                          meanings);
}

SimilarityMatrix empirical_meaning_similarity(
    const RunConfig& cfg, const std::vector<std::string>& meanings) {
  if (cfg.pilesort.empty()) {
    throw std::invalid_argument(
        "config: beliefs.source = empirical requires inputs.pilesort");
  }
  auto in = open_or_throw(cfg.pilesort);
  const SimilarityMatrix emp =
      empirical_similarity(PileSortDataset::parse_csv(in, cfg.pilesort));
  std::map<std::string, Eigen::Index> pos;
  for (std::size_t i = 0; i < emp.items().size(); ++i) {
    pos.emplace(emp.items()[i], static_cast<Eigen::Index>(i));
  }
  const auto n = static_cast<Eigen::Index>(meanings.size());
  Eigen::MatrixXd sub(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = pos.find(meanings[static_cast<std::size_t>(i)]);
    if (it == pos.end()) {
      throw std::invalid_argument(
          "pile-sort data: no judgements for meaning '" +
          meanings[static_cast<std::size_t>(i)] +
          "' (beliefs.source = empirical needs full coverage)");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      sub(i, j) = emp.values()(it->second,
                               pos.at(meanings[static_cast<std::size_t>(j)]));
    }
  }
  return SimilarityMatrix(std::move(sub), SimilarityMatrix::Kind::kEmpirical,
                          meanings);
}

ProblemSetup load_problem(const RunConfig& cfg) {
  const AlignmentTable table = load_alignments(cfg);
  const std::vector<std::string> meanings =
      resolve_meanings(table, cfg.intersect_meanings);
  const std::vector<std::string> languages = table.languages();
  ProbVector prior = make_prior(cfg, table, meanings);

  std::string trained_json;
  std::optional<SimilarityMatrix> sim;
  if (cfg.belief_source == "empirical") {
    sim = empirical_meaning_similarity(cfg, meanings);
  } else {
    LowRankModel model;
    if (!cfg.model.empty()) {
      model = LowRankModel::from_json(read_file(cfg.model));
    } else {
      std::cerr << "analyze: no inputs.model given, training one from the "
                   "pile-sort data\n";
      TrainedSimilarity trained = train_best_lowrank(cfg);
      model = std::move(trained.model);
      trained_json = model.to_json();
    }
    auto emb_in = open_or_throw(cfg.embeddings.empty()
                                    ? throw std::invalid_argument(
                                          "config: inputs.embeddings is "
                                          "required for model beliefs")
                                    : cfg.embeddings);
    const EmbeddingSet embeddings =
        EmbeddingSet::parse_tsv(emb_in, cfg.embeddings);
    sim = predicted_meaning_similarity(model, embeddings, meanings);
  }

  std::vector<Encoder> encoders;
  for (const auto& lang : languages) {
    Encoder built = build_encoder(table.for_language(lang), PriorMode::kUniform,
                                  &meanings);
    // all encoders share the run prior so plane points are comparable
    encoders.emplace_back(built.policy(), prior, built.lexicon(),
                          built.meaning_index());
  }
  return ProblemSetup{languages, meanings,        std::move(prior),
                      std::move(*sim), std::move(encoders), trained_json};
}

// Perturbed and random counterfactuals, generated in seeded batches and
// evaluated in parallel; appends plane records and deviation rows.
void append_baselines(const RunConfig& cfg, const ProblemSetup& setup,
                      const Eigen::MatrixXd& belief_rows,
                      const FrontierCurve& curve, AnalysisBundle& bundle) {
  const Eigen::VectorXd& prior = setup.prior.weights();
  const auto lang_count = setup.languages.size();
  const std::size_t batch_size = 512;

  struct Sample {
    int lang = 0;
    std::vector<int> row_map;    // perturbed
    std::vector<int> words;      // random one-hot
    Eigen::MatrixXd soft_policy; // random soft
    double complexity = 0.0;
    double accuracy = 0.0;
  };

  const auto flush = [&](std::vector<Sample>& batch, const std::string& kind,
                         double fraction, int first_index) {
    detail::parallel_for(batch.size(), cfg.threads, [&](std::size_t i) {
      Sample& s = batch[i];
      std::pair<double, double> ca;
      if (kind == "perturbed") {
        ca = detail::plane_eval_permuted(
            setup.encoders[static_cast<std::size_t>(s.lang)].policy().rows(),
            s.row_map, prior, belief_rows);
      } else if (!s.words.empty()) {
        ca = detail::plane_eval_one_hot(
            s.words,
            static_cast<int>(
                setup.encoders[static_cast<std::size_t>(s.lang)].lexicon_size()),
            prior, belief_rows);
      } else {
        ca = detail::plane_eval_permuted(s.soft_policy, {}, prior, belief_rows);
      }
      s.complexity = ca.first;
      s.accuracy = ca.second;
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Sample& s = batch[i];
      const std::string label =
          setup.languages[static_cast<std::size_t>(s.lang)] + "#" +
          pad_index(first_index + static_cast<int>(i));
      bundle.plane.push_back(
          {label, kind, fraction, s.complexity, s.accuracy});
      bundle.deviations.push_back(deviation_from_plane(
          s.complexity, s.accuracy, curve, label, kind, fraction));
    }
    batch.clear();
  };

  const Eigen::Index meanings = static_cast<Eigen::Index>(setup.meanings.size());
  for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
    const double fraction = cfg.fractions[fi];
    std::mt19937_64 rng(mix(cfg.perturb_seed, fi));
    std::vector<Sample> batch;
    int emitted = 0;
    for (int s = 0; s < cfg.perturbed_per_fraction; ++s) {
      Sample sample;
      sample.lang = static_cast<int>(s % lang_count);
      sample.row_map = sample_row_permutation(meanings, fraction, rng);
      batch.push_back(std::move(sample));
      if (batch.size() == batch_size) {
        flush(batch, "perturbed", fraction, emitted);
        emitted = s + 1;
      }
    }
    flush(batch, "perturbed", fraction, emitted);
  }

  {
    std::mt19937_64 rng(mix(cfg.random_seed, 0));
    std::vector<Sample> batch;
    int emitted = 0;
    for (int s = 0; s < cfg.random_count; ++s) {
      Sample sample;
      sample.lang = static_cast<int>(s % lang_count);
      const int lex = static_cast<int>(
          setup.encoders[static_cast<std::size_t>(sample.lang)].lexicon_size());
      if (cfg.soft_random) {
        sample.soft_policy = random_soft_policy(lex, meanings, rng);
      } else {
        sample.words = random_one_hot(lex, meanings, rng);
      }
      batch.push_back(std::move(sample));
      if (batch.size() == batch_size) {
        flush(batch, "random", 0.0, emitted);
        emitted = s + 1;
      }
    }
    flush(batch, "random", 0.0, emitted);
  }
}

AnalysisBundle compute_bundle(const RunConfig& cfg, const ProblemSetup& setup,
                              double gamma, const FrontierCurve* preloaded) {
  AnalysisBundle bundle;
  bundle.gamma = gamma;
  const BeliefModel beliefs = belief_from_similarity(setup.sim, gamma);
  const Eigen::MatrixXd& belief_rows = beliefs.conditional().rows();

  if (preloaded) {
    bundle.frontier = *preloaded;
  } else {
    IBProblem problem(setup.prior, beliefs.conditional(), cfg.max_words);
    AnnealingOptions opts;
    opts.fixed_point.tol = cfg.fp_tol;
    opts.fixed_point.max_iters = cfg.fp_max_iters;
    opts.jitter_scale = cfg.jitter_scale;
    opts.jitter_seed = cfg.jitter_seed;
    opts.keep_policies = false;
    bundle.frontier = reverse_annealing(
        problem, log_spaced_betas(cfg.beta_min, cfg.beta_max, cfg.beta_count),
        opts);
  }

  for (std::size_t l = 0; l < setup.languages.size(); ++l) {
    const Encoder& e = setup.encoders[l];
    const double cplx = complexity(e);
    const double acc = accuracy(e, beliefs);
    bundle.plane.push_back(
        {setup.languages[l], "attested", 0.0, cplx, acc});
    bundle.deviations.push_back(deviation_from_plane(
        cplx, acc, *bundle.frontier, setup.languages[l], "attested", 0.0));
  }

  append_baselines(cfg, setup, belief_rows, *bundle.frontier, bundle);
  return bundle;
}

std::string frontier_csv(const FrontierCurve& curve) {
  std::ostringstream out;
  curve.write_csv(out);
  return out.str();
}

std::string frontier_raw_csv(const FrontierCurve& curve) {
  std::ostringstream out;
  out << "beta,complexity_bits,accuracy_bits,converged\n";
  for (const auto& p : curve.raw_points()) {
    out << format_g12(p.beta) << "," << format_g12(p.complexity_bits) << ","
        << format_g12(p.accuracy_bits) << "," << (p.converged ? 1 : 0) << "\n";
  }
  return out.str();
}

std::string deviations_csv(const std::vector<DeviationReport>& reports) {
  std::ostringstream out;
  out << "label,kind,fraction,epsilon_bits,argmin_beta\n";
  for (const auto& r : reports) {
    out << csv_escape(r.label) << "," << r.kind << ","
        << (r.kind == "perturbed" ? format_g12(r.fraction) : std::string())
        << "," << format_g12(r.epsilon_bits) << ","
        << format_g12(r.argmin_beta) << "\n";
  }
  return out.str();
}

json manifest_files(const std::map<std::string, std::string>& outputs) {
  json files = json::object();
  std::string combined;
  for (const auto& [name, content] : outputs) {
    const std::string digest = fnv1a64_hex(content);
    files[name] = {{"bytes", content.size()}, {"fnv1a64", digest}};
    combined += name + ":" + digest + "\n";
  }
  json out;
  out["files"] = std::move(files);
  out["content_hash"] = fnv1a64_hex(combined);
  return out;
}

std::string manifest_json(const std::string& command, const RunConfig& cfg,
                          const std::map<std::string, std::string>& outputs) {
  json m;
  m["tool"] = "ibtrans";
  m["command"] = command;
  m["config_ini"] = cfg.to_ini();
  m["seeds"] = {{"cv_seed", cfg.cv_seed},
                {"train_seed", cfg.train_seed},
                {"jitter_seed", cfg.jitter_seed},
                {"perturb_seed", cfg.perturb_seed},
                {"random_seed", cfg.random_seed},
                {"display_jitter_seed", cfg.display_jitter_seed},
                {"kmeans_seed", cfg.kmeans_seed}};
  const json files = manifest_files(outputs);
  m["files"] = files["files"];
  m["content_hash"] = files["content_hash"];
  return m.dump(2) + "\n";
}

}  // namespace

std::map<std::string, std::string> emit_plot_data(const AnalysisBundle& bundle,
                                                  const RunConfig& cfg) {
  std::vector<std::string> missing;
  if (!bundle.frontier.has_value()) missing.push_back("frontier");
  if (bundle.plane.empty()) missing.push_back("plane points");
  if (bundle.deviations.empty()) missing.push_back("deviations");
  if (!missing.empty()) {
    std::string msg = "emit_plot_data: bundle is missing:";
    for (const auto& m : missing) msg += " " + m;
    throw std::invalid_argument(msg);
  }

  std::map<std::string, std::string> out;
  {
    std::ostringstream csv;
    csv << "label,kind,fraction,complexity_bits,accuracy_bits";
    if (cfg.jitter_column) csv << ",complexity_bits_jittered";
    csv << "\n";
    std::mt19937_64 rng(cfg.display_jitter_seed);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : bundle.plane) {
      lo = std::min(lo, p.complexity_bits);
      hi = std::max(hi, p.complexity_bits);
    }
    const double amplitude = 0.005 * std::max(hi - lo, 1e-9);
    std::uniform_real_distribution<double> jitter(-amplitude, amplitude);
    for (const auto& p : bundle.plane) {
      csv << csv_escape(p.label) << "," << p.kind << ","
          << (p.kind == "perturbed" ? format_g12(p.fraction) : std::string())
          << "," << format_g12(p.complexity_bits) << ","
          << format_g12(p.accuracy_bits);
      if (cfg.jitter_column) {
        csv << "," << format_g12(p.complexity_bits + jitter(rng));
      }
      csv << "\n";
    }
    out["infoplane.csv"] = csv.str();
  }
  out["deviations.csv"] = deviations_csv(bundle.deviations);
  return out;
}

SimilarityOutcome run_similarity(const RunConfig& cfg) {
  cfg.validate();
  const TrainedSimilarity trained = train_best_lowrank(cfg);

  SimilarityOutcome outcome;
  outcome.cosine_rho = trained.cosine_rho;
  outcome.ridge = trained.ridge;
  outcome.lowrank = trained.lowrank;
  outcome.best_rank = trained.best_rank;
  outcome.best_penalty = trained.best_penalty;
  outcome.dir = cfg.out_dir;

  const auto fold_json = [](const CvResult& res) {
    json folds = json::array();
    for (const auto& f : res.folds) {
      folds.push_back({{"rho", f.rho},
                       {"test_items", f.test_items},
                       {"test_pairs", f.test_pair_count},
                       {"alpha", f.chosen_alpha},
                       {"rank", f.chosen_rank},
                       {"penalty", f.chosen_penalty}});
    }
    return folds;
  };

  json report;
  report["cosine"] = {{"rho", trained.cosine_rho}};
  report["ridge"] = {{"rho_mean", trained.ridge.mean_rho},
                     {"rho_std", trained.ridge.std_rho},
                     {"folds", fold_json(trained.ridge)}};
  {
    json per_rank = json::array();
    for (const auto& [rank, res] : trained.lowrank) {
      per_rank.push_back({{"rank", rank},
                          {"rho_mean", res.mean_rho},
                          {"rho_std", res.std_rho},
                          {"folds", fold_json(res)}});
    }
    report["lowrank"] = std::move(per_rank);
  }
  report["best"] = {{"rank", trained.best_rank},
                    {"penalty", trained.best_penalty},
                    {"model_file", "lowrank_model.json"}};

  std::ostringstream csv;
  csv << "model,rank,rho_mean,rho_std\n";
  csv << "cosine,," << format_g12(trained.cosine_rho) << ",\n";
  csv << "ridge,," << format_g12(trained.ridge.mean_rho) << ","
      << format_g12(trained.ridge.std_rho) << "\n";
  for (const auto& [rank, res] : trained.lowrank) {
    csv << "lowrank," << rank << "," << format_g12(res.mean_rho) << ","
        << format_g12(res.std_rho) << "\n";
  }

  std::map<std::string, std::string> outputs;
  outputs["similarity_report.json"] = report.dump(2) + "\n";
  outputs["similarity_report.csv"] = csv.str();
  outputs["lowrank_model.json"] = trained.model.to_json() + "\n";
  outputs["config.ini"] = cfg.to_ini();
  outputs["manifest.json"] = manifest_json("similarity", cfg, outputs);
  commit_outputs(outcome.dir, outputs);
  return outcome;
}

AnalysisOutcome run_analysis(const RunConfig& cfg) {
  cfg.validate();
  const ProblemSetup setup = load_problem(cfg);

  AnalysisOutcome outcome;
  for (const double gamma : cfg.gammas) {
    const AnalysisBundle bundle = compute_bundle(cfg, setup, gamma, nullptr);
    for (const auto& p : bundle.frontier->points()) {
      if (!p.converged) outcome.all_converged = false;
    }

    std::map<std::string, std::string> outputs = emit_plot_data(bundle, cfg);
    outputs["frontier.csv"] = frontier_csv(*bundle.frontier);
    outputs["frontier_raw.csv"] = frontier_raw_csv(*bundle.frontier);
    if (!setup.trained_model_json.empty()) {
      outputs["lowrank_model.json"] = setup.trained_model_json + "\n";
    }
    outputs["config.ini"] = cfg.to_ini();
    outputs["manifest.json"] = manifest_json("analyze", cfg, outputs);

    const std::filesystem::path dir =
        cfg.gammas.size() == 1
            ? std::filesystem::path(cfg.out_dir)
            : std::filesystem::path(cfg.out_dir) /
                  ("gamma_" + format_g12(gamma));
    commit_outputs(dir, outputs);
    outcome.dirs.push_back(dir);
  }
  return outcome;
}

FrontierOutcome run_frontier(const RunConfig& cfg) {
  cfg.validate();
  const ProblemSetup setup = load_problem(cfg);
  const double gamma = cfg.gammas.front();
  const BeliefModel beliefs = belief_from_similarity(setup.sim, gamma);
  IBProblem problem(setup.prior, beliefs.conditional(), cfg.max_words);
  AnnealingOptions opts;
  opts.fixed_point.tol = cfg.fp_tol;
  opts.fixed_point.max_iters = cfg.fp_max_iters;
  opts.jitter_scale = cfg.jitter_scale;
  opts.jitter_seed = cfg.jitter_seed;
  opts.keep_policies = false;
  const FrontierCurve curve = reverse_annealing(
      problem, log_spaced_betas(cfg.beta_min, cfg.beta_max, cfg.beta_count),
      opts);

  FrontierOutcome outcome;
  outcome.dir = cfg.out_dir;
  for (const auto& p : curve.points()) {
    if (!p.converged) outcome.all_converged = false;
  }
  std::map<std::string, std::string> outputs;
  outputs["frontier.csv"] = frontier_csv(curve);
  outputs["frontier_raw.csv"] = frontier_raw_csv(curve);
  outputs["config.ini"] = cfg.to_ini();
  outputs["manifest.json"] = manifest_json("frontier", cfg, outputs);
  commit_outputs(outcome.dir, outputs);
  return outcome;
}

void run_deviations(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.frontier_csv.empty()) {
    throw std::invalid_argument(
        "config: inputs.frontier (a frontier.csv) is required for deviations");
  }
  auto in = open_or_throw(cfg.frontier_csv);
  const FrontierCurve curve = FrontierCurve::read_csv(in, cfg.frontier_csv);
  const ProblemSetup setup = load_problem(cfg);
  const AnalysisBundle bundle =
      compute_bundle(cfg, setup, cfg.gammas.front(), &curve);

  std::map<std::string, std::string> outputs;
  outputs["deviations.csv"] = deviations_csv(bundle.deviations);
  outputs["config.ini"] = cfg.to_ini();
  outputs["manifest.json"] = manifest_json("deviations", cfg, outputs);
  commit_outputs(cfg.out_dir, outputs);
}

void run_mds(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.pilesort.empty()) {
    throw std::invalid_argument("config: inputs.pilesort is required for mds");
  }
  auto in = open_or_throw(cfg.pilesort);
  const PileSortDataset ds = PileSortDataset::parse_csv(in, cfg.pilesort);
  const SimilarityMatrix sim = empirical_similarity(ds);
  const MdsResult mds = classical_mds(sim, cfg.mds_dims);

  json j;
  j["items"] = sim.items();
  j["dims"] = cfg.mds_dims;
  j["positive_dims"] = mds.positive_dims;
  {
    json coords = json::array();
    for (Eigen::Index i = 0; i < mds.coords.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index d = 0; d < mds.coords.cols(); ++d) {
        row.push_back(mds.coords(i, d));
      }
      coords.push_back(std::move(row));
    }
    j["coordinates"] = std::move(coords);
  }
  {
    json eigs = json::array();
    for (Eigen::Index d = 0; d < mds.eigenvalues.size(); ++d) {
      eigs.push_back(mds.eigenvalues(d));
    }
    j["eigenvalues"] = std::move(eigs);
  }

  std::map<std::string, std::string> outputs;
  outputs["mds.json"] = j.dump(2) + "\n";
  outputs["config.ini"] = cfg.to_ini();
  outputs["manifest.json"] = manifest_json("mds", cfg, outputs);
  commit_outputs(cfg.out_dir, outputs);
}

std::vector<std::string> run_select(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.embeddings.empty()) {
    throw std::invalid_argument("config: inputs.embeddings is required for select");
  }
  auto in = open_or_throw(cfg.embeddings);
  const EmbeddingSet embeddings = EmbeddingSet::parse_tsv(in, cfg.embeddings);
  const std::vector<std::string> reps = select_representatives(
      embeddings, cfg.kmeans_k, cfg.kmeans_seed, cfg.kmeans_restarts);

  json j;
  j["k"] = cfg.kmeans_k;
  j["seed"] = cfg.kmeans_seed;
  j["restarts"] = cfg.kmeans_restarts;
  j["items"] = reps;

  std::map<std::string, std::string> outputs;
  outputs["representatives.json"] = j.dump(2) + "\n";
  outputs["config.ini"] = cfg.to_ini();
  outputs["manifest.json"] = manifest_json("select", cfg, outputs);
  commit_outputs(cfg.out_dir, outputs);
  return reps;
}

}  // namespace ibtrans
