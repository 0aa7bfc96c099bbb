// ibtrans: reproducible information-plane analysis of translation encoders.
//
// Subcommands: similarity, analyze, frontier, deviations, mds, select.
// Every run takes a declarative config file; command-line flags override
// single keys and the merged config is persisted next to the outputs.

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ibtrans/io.hpp"
#include "ibtrans/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonConverged = 3;

struct FlagStore {
  std::vector<std::string> alignments;
  std::string pilesort, embeddings, model, frontier, out, belief_source, prior;
  std::vector<double> gammas, fractions, ridge_alphas, lowrank_penalties;
  std::vector<int> lowrank_ranks;
  double beta_min = 0, beta_max = 0, fp_tol = 0, jitter_scale = 0,
         lowrank_tol = 0;
  int beta_count = 0, fp_max_iters = 0, max_words = 0, perturbed = 0,
      random_count = 0, threads = 0, folds = 0, lowrank_max_iters = 0, k = 0,
      restarts = 0, dims = 0;
  std::uint64_t jitter_seed = 0, perturb_seed = 0, random_seed = 0,
                display_jitter_seed = 0, cv_seed = 0, train_seed = 0,
                kmeans_seed = 0;
  bool strict = false, intersect = false, jitter_column = false,
       soft_random = false;
};

using Applier = std::function<void(ibtrans::RunConfig&)>;

struct OverrideSet {
  std::vector<std::pair<CLI::Option*, Applier>> entries;

  void apply(ibtrans::RunConfig& cfg) const {
    for (const auto& [opt, fn] : entries) {
      if (opt->count() > 0) fn(cfg);
    }
  }
};

// Registers the shared override flags on one subcommand. Only one subcommand
// parses, so all of them can bind the same storage.
void add_common_flags(CLI::App* cmd, FlagStore& fs, OverrideSet& ov) {
  using ibtrans::RunConfig;
  auto reg = [&](CLI::Option* opt, Applier fn) {
    ov.entries.emplace_back(opt, std::move(fn));
  };

  reg(cmd->add_option("--alignments", fs.alignments,
                      "Alignment TSV file(s)")->delimiter(','),
      [&fs](RunConfig& c) { c.alignments = fs.alignments; });
  reg(cmd->add_option("--pilesort", fs.pilesort, "Pile-sort CSV file"),
      [&fs](RunConfig& c) { c.pilesort = fs.pilesort; });
  reg(cmd->add_option("--embeddings", fs.embeddings, "Embedding TSV file"),
      [&fs](RunConfig& c) { c.embeddings = fs.embeddings; });
  reg(cmd->add_option("--model", fs.model, "Trained projection model (JSON)"),
      [&fs](RunConfig& c) { c.model = fs.model; });
  reg(cmd->add_option("--frontier", fs.frontier, "Precomputed frontier.csv"),
      [&fs](RunConfig& c) { c.frontier_csv = fs.frontier; });
  reg(cmd->add_option("--out", fs.out, "Output directory"),
      [&fs](RunConfig& c) { c.out_dir = fs.out; });

  reg(cmd->add_option("--gamma", fs.gammas,
                      "Belief temperature(s); several values sweep")
          ->delimiter(','),
      [&fs](RunConfig& c) { c.gammas = fs.gammas; });
  reg(cmd->add_option("--beliefs-source", fs.belief_source,
                      "Belief grounding: model | empirical"),
      [&fs](RunConfig& c) { c.belief_source = fs.belief_source; });

  reg(cmd->add_option("--beta-min", fs.beta_min, "Smallest beta"),
      [&fs](RunConfig& c) { c.beta_min = fs.beta_min; });
  reg(cmd->add_option("--beta-max", fs.beta_max, "Largest beta"),
      [&fs](RunConfig& c) { c.beta_max = fs.beta_max; });
  reg(cmd->add_option("--beta-count", fs.beta_count, "Grid size"),
      [&fs](RunConfig& c) { c.beta_count = fs.beta_count; });
  reg(cmd->add_option("--frontier-tol", fs.fp_tol, "Fixed-point tolerance"),
      [&fs](RunConfig& c) { c.fp_tol = fs.fp_tol; });
  reg(cmd->add_option("--frontier-max-iters", fs.fp_max_iters,
                      "Fixed-point iteration cap"),
      [&fs](RunConfig& c) { c.fp_max_iters = fs.fp_max_iters; });
  reg(cmd->add_option("--jitter-scale", fs.jitter_scale,
                      "Annealing warm-start jitter"),
      [&fs](RunConfig& c) { c.jitter_scale = fs.jitter_scale; });
  reg(cmd->add_option("--jitter-seed", fs.jitter_seed, "Annealing jitter seed"),
      [&fs](RunConfig& c) { c.jitter_seed = fs.jitter_seed; });
  reg(cmd->add_option("--max-words", fs.max_words,
                      "Word budget (0 = meaning count)"),
      [&fs](RunConfig& c) { c.max_words = fs.max_words; });

  reg(cmd->add_option("--fractions", fs.fractions, "Perturbation fractions")
          ->delimiter(','),
      [&fs](RunConfig& c) { c.fractions = fs.fractions; });
  reg(cmd->add_option("--perturbed-per-fraction", fs.perturbed,
                      "Perturbed samples per fraction"),
      [&fs](RunConfig& c) { c.perturbed_per_fraction = fs.perturbed; });
  reg(cmd->add_option("--random-count", fs.random_count,
                      "Random encoder samples"),
      [&fs](RunConfig& c) { c.random_count = fs.random_count; });
  reg(cmd->add_option("--perturb-seed", fs.perturb_seed, "Perturbation seed"),
      [&fs](RunConfig& c) { c.perturb_seed = fs.perturb_seed; });
  reg(cmd->add_option("--random-seed", fs.random_seed, "Random encoder seed"),
      [&fs](RunConfig& c) { c.random_seed = fs.random_seed; });
  reg(cmd->add_flag("--soft-random", fs.soft_random,
                    "Dirichlet rows instead of one-hot random encoders"),
      [&fs](RunConfig& c) { c.soft_random = fs.soft_random; });

  reg(cmd->add_option("--threads", fs.threads, "Worker threads"),
      [&fs](RunConfig& c) { c.threads = fs.threads; });
  reg(cmd->add_flag("--strict", fs.strict,
                    "Exit 3 when any frontier point fails to converge"),
      [&fs](RunConfig& c) { c.strict = fs.strict; });
  reg(cmd->add_option("--prior", fs.prior, "Meaning prior: uniform | frequency"),
      [&fs](RunConfig& c) { c.prior = fs.prior; });
  reg(cmd->add_flag("--intersect-meanings", fs.intersect,
                    "Drop meanings not attested in every language"),
      [&fs](RunConfig& c) { c.intersect_meanings = fs.intersect; });
  reg(cmd->add_flag("--jitter-column", fs.jitter_column,
                    "Add a display-jitter column to infoplane.csv"),
      [&fs](RunConfig& c) { c.jitter_column = fs.jitter_column; });
  reg(cmd->add_option("--display-jitter-seed", fs.display_jitter_seed,
                      "Display jitter seed"),
      [&fs](RunConfig& c) { c.display_jitter_seed = fs.display_jitter_seed; });

  reg(cmd->add_option("--folds", fs.folds, "Cross-validation folds"),
      [&fs](RunConfig& c) { c.cv_folds = fs.folds; });
  reg(cmd->add_option("--cv-seed", fs.cv_seed, "Fold assignment seed"),
      [&fs](RunConfig& c) { c.cv_seed = fs.cv_seed; });
  reg(cmd->add_option("--train-seed", fs.train_seed, "Final model train seed"),
      [&fs](RunConfig& c) { c.train_seed = fs.train_seed; });
  reg(cmd->add_option("--ridge-alphas", fs.ridge_alphas, "Ridge alpha grid")
          ->delimiter(','),
      [&fs](RunConfig& c) { c.ridge_alphas = fs.ridge_alphas; });
  reg(cmd->add_option("--lowrank-ranks", fs.lowrank_ranks, "Projection ranks")
          ->delimiter(','),
      [&fs](RunConfig& c) { c.lowrank_ranks = fs.lowrank_ranks; });
  reg(cmd->add_option("--lowrank-penalties", fs.lowrank_penalties,
                      "Projection penalty grid")
          ->delimiter(','),
      [&fs](RunConfig& c) { c.lowrank_penalties = fs.lowrank_penalties; });
  reg(cmd->add_option("--lowrank-max-iters", fs.lowrank_max_iters,
                      "Gradient descent iteration cap"),
      [&fs](RunConfig& c) { c.lowrank_max_iters = fs.lowrank_max_iters; });
  reg(cmd->add_option("--lowrank-tol", fs.lowrank_tol,
                      "Gradient descent stopping tolerance"),
      [&fs](RunConfig& c) { c.lowrank_tol = fs.lowrank_tol; });

  reg(cmd->add_option("--k", fs.k, "Representatives to select"),
      [&fs](RunConfig& c) { c.kmeans_k = fs.k; });
  reg(cmd->add_option("--kmeans-seed", fs.kmeans_seed, "K-means seed"),
      [&fs](RunConfig& c) { c.kmeans_seed = fs.kmeans_seed; });
  reg(cmd->add_option("--restarts", fs.restarts, "K-means restarts"),
      [&fs](RunConfig& c) { c.kmeans_restarts = fs.restarts; });
  reg(cmd->add_option("--dims", fs.dims, "MDS output dimensions"),
      [&fs](RunConfig& c) { c.mds_dims = fs.dims; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Information-plane analysis of translation encoders"};
  app.require_subcommand(1);

  std::string config_path;
  FlagStore fs;
  OverrideSet overrides;

  auto* cmd_similarity = app.add_subcommand(
      "similarity", "Score similarity predictors and train the best model");
  auto* cmd_analyze = app.add_subcommand(
      "analyze", "Full run: encoders, frontier, baselines, deviations");
  auto* cmd_frontier =
      app.add_subcommand("frontier", "Compute the optimal frontier only");
  auto* cmd_deviations = app.add_subcommand(
      "deviations", "Deviations against a precomputed frontier.csv");
  auto* cmd_mds = app.add_subcommand(
      "mds", "Classical MDS coordinates from pile-sort similarities");
  auto* cmd_select = app.add_subcommand(
      "select", "Pick representative items by k-means over embeddings");

  for (CLI::App* cmd : {cmd_similarity, cmd_analyze, cmd_frontier,
                        cmd_deviations, cmd_mds, cmd_select}) {
    cmd->add_option("--config", config_path, "Run configuration file (INI)");
    add_common_flags(cmd, fs, overrides);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    ibtrans::RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        throw std::invalid_argument("cannot open config file: " + config_path);
      }
      cfg.load_ini(in, config_path);
    }
    overrides.apply(cfg);
    cfg.validate();

    if (cmd_similarity->parsed()) {
      const auto outcome = ibtrans::run_similarity(cfg);
      std::printf("similarity: cosine rho %.4f; ridge rho %.4f +/- %.4f\n",
                  outcome.cosine_rho, outcome.ridge.mean_rho,
                  outcome.ridge.std_rho);
      for (const auto& [rank, res] : outcome.lowrank) {
        std::printf("similarity: lowrank D=%d rho %.4f +/- %.4f\n", rank,
                    res.mean_rho, res.std_rho);
      }
      std::printf("similarity: best D=%d penalty %g -> %s\n",
                  outcome.best_rank, outcome.best_penalty,
                  (outcome.dir / "lowrank_model.json").c_str());
    } else if (cmd_analyze->parsed()) {
      const auto outcome = ibtrans::run_analysis(cfg);
      for (const auto& dir : outcome.dirs) {
        std::printf("analyze: wrote %s\n", dir.c_str());
      }
      if (!outcome.all_converged) {
        std::fprintf(stderr,
                     "analyze: warning: some frontier points did not converge\n");
        if (cfg.strict) return kExitNonConverged;
      }
    } else if (cmd_frontier->parsed()) {
      const auto outcome = ibtrans::run_frontier(cfg);
      std::printf("frontier: wrote %s\n", outcome.dir.c_str());
      if (!outcome.all_converged) {
        std::fprintf(stderr,
                     "frontier: warning: some points did not converge\n");
        if (cfg.strict) return kExitNonConverged;
      }
    } else if (cmd_deviations->parsed()) {
      ibtrans::run_deviations(cfg);
      std::printf("deviations: wrote %s\n", cfg.out_dir.c_str());
    } else if (cmd_mds->parsed()) {
      ibtrans::run_mds(cfg);
      std::printf("mds: wrote %s\n", cfg.out_dir.c_str());
    } else if (cmd_select->parsed()) {
      const auto reps = ibtrans::run_select(cfg);
      for (const auto& item : reps) std::printf("%s\n", item.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitOk;
}
