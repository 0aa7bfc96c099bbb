#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ibtrans {

/// Full run configuration. Every stochastic step carries an explicit seed;
/// the merged (file + flag) config is serialized verbatim into the output
/// directory of every run.
struct RunConfig {
  // [inputs]
  std::vector<std::string> alignments;
  std::string pilesort;
  std::string embeddings;
  std::string model;         // optional pre-trained projection model (JSON)
  std::string frontier_csv;  // optional precomputed frontier (deviations cmd)

  // [output]
  std::string out_dir = "out";

  // [similarity]
  int cv_folds = 6;
  std::uint64_t cv_seed = 101;
  std::uint64_t train_seed = 202;
  std::vector<double> ridge_alphas = {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0};
  std::vector<int> lowrank_ranks = {1, 5, 10};
  std::vector<double> lowrank_penalties = {1e-4, 1e-3, 1e-2, 0.1};
  int lowrank_max_iters = 2000;
  double lowrank_tol = 1e-10;

  // [beliefs]
  std::vector<double> gammas = {1.0};
  std::string belief_source = "model";  // model | empirical

  // [frontier]
  double beta_min = 1.0;
  double beta_max = 1048576.0;  // 2^20
  int beta_count = 100;
  double fp_tol = 1e-8;
  int fp_max_iters = 10000;
  double jitter_scale = 1e-3;
  std::uint64_t jitter_seed = 303;
  int max_words = 0;  // 0 = number of meanings

  // [baselines]
  std::vector<double> fractions = {0.01, 0.05, 0.10};
  int perturbed_per_fraction = 10000;
  int random_count = 300000;
  std::uint64_t perturb_seed = 404;
  std::uint64_t random_seed = 505;
  bool soft_random = false;

  // [run]
  int threads = 1;
  bool strict = false;
  std::string prior = "uniform";  // uniform | frequency
  bool intersect_meanings = false;
  bool jitter_column = false;
  std::uint64_t display_jitter_seed = 606;
  int kmeans_k = 30;
  std::uint64_t kmeans_seed = 707;
  int kmeans_restarts = 10;
  int mds_dims = 2;

  /// Applies the key/value sections of an INI-style file over the defaults.
  /// Unknown sections or keys are errors.
  void load_ini(std::istream& in, const std::string& source_name);

  /// Canonical serialization; parsing it back reproduces this config.
  std::string to_ini() const;

  /// Basic cross-field validation (ranges, enums). Throws on bad values.
  void validate() const;
};

}  // namespace ibtrans
