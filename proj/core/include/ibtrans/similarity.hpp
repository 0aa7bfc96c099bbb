#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ibtrans/io.hpp"

namespace ibtrans {

/// One participant/item/pile assignment from a pile-sorting session.
struct PileAssignment {
  std::string participant;
  std::string item;
  std::string pile;
};

/// Complete pile-sorting data: every participant assigns every item to
/// exactly one pile.
class PileSortDataset {
public:
  explicit PileSortDataset(std::vector<PileAssignment> assignments);

  /// Parses the pile-sort CSV (header: participant_id,item_id,pile_id).
  static PileSortDataset parse_csv(std::istream& in, const std::string& source_name);

  const std::vector<std::string>& items() const { return items_; }
  const std::vector<std::string>& participants() const { return participants_; }
  Eigen::Index item_count() const { return static_cast<Eigen::Index>(items_.size()); }
  std::size_t participant_count() const { return participants_.size(); }

  /// Pile id (dense integer per participant) for (participant p, item i).
  int pile(std::size_t participant, std::size_t item) const {
    return piles_[participant * items_.size() + item];
  }

private:
  std::vector<std::string> items_;         // sorted
  std::vector<std::string> participants_;  // sorted
  std::vector<int> piles_;
};

/// Symmetric similarity judgements or predictions over an item set.
class SimilarityMatrix {
public:
  enum class Kind { kEmpirical, kPredicted };

  SimilarityMatrix(Eigen::MatrixXd values, Kind kind,
                   std::vector<std::string> items = {});

  const Eigen::MatrixXd& values() const { return values_; }
  Kind kind() const { return kind_; }
  const std::vector<std::string>& items() const { return items_; }
  Eigen::Index size() const { return values_.rows(); }

private:
  Eigen::MatrixXd values_;
  Kind kind_;
  std::vector<std::string> items_;
};

/// Proportion of participants who co-piled each pair; diagonal 1.
SimilarityMatrix empirical_similarity(const PileSortDataset& ds);

/// Fixed-dimension embedding vectors keyed by item id.
class EmbeddingSet {
public:
  explicit EmbeddingSet(std::map<std::string, Eigen::VectorXd> vectors);

  /// Parses the embedding TSV: item_id followed by d floats per row.
  static EmbeddingSet parse_tsv(std::istream& in, const std::string& source_name);

  const std::vector<std::string>& items() const { return items_; }
  Eigen::Index dim() const { return dim_; }
  Eigen::Index item_count() const { return static_cast<Eigen::Index>(items_.size()); }
  bool contains(const std::string& item) const;
  const Eigen::VectorXd& vector(const std::string& item) const;

  /// Row-per-item matrix in the order of `order` (defaults to items()).
  Eigen::MatrixXd matrix(const std::vector<std::string>* order = nullptr) const;

  /// Restriction to the given items (each must be present).
  EmbeddingSet subset(const std::vector<std::string>& keep) const;

private:
  std::vector<std::string> items_;  // sorted
  std::map<std::string, Eigen::VectorXd> vectors_;
  Eigen::Index dim_ = 0;
};

/// Cosine similarity between per-dimension z-scored embeddings. Dimensions
/// with zero variance are dropped (warning to stderr); an item whose z-scored
/// vector is zero makes its pairs undefined and raises std::domain_error.
SimilarityMatrix cosine_baseline(const EmbeddingSet& e);

/// Linear pair-similarity predictor over (F_i ⊙ F_j, L1 distance, cosine).
class RidgeModel {
public:
  RidgeModel() = default;
  RidgeModel(Eigen::VectorXd weights, double intercept);

  double predict(const Eigen::VectorXd& f_i, const Eigen::VectorXd& f_j) const;
  const Eigen::VectorXd& weights() const { return weights_; }
  double intercept() const { return intercept_; }

  /// Pair feature vector [F_i ⊙ F_j, ||F_i - F_j||_1, cos(F_i, F_j)].
  static Eigen::VectorXd features(const Eigen::VectorXd& f_i,
                                  const Eigen::VectorXd& f_j);

private:
  Eigen::VectorXd weights_;
  double intercept_ = 0.0;
};

/// Closed-form ridge regression (alpha > 0) on all off-diagonal pairs of the
/// target matrix; the intercept is unpenalized (fitted through centering).
RidgeModel ridge_baseline(const EmbeddingSet& e, const SimilarityMatrix& target,
                          double alpha);

/// Bilinear similarity model: sim(i,j) = (P f_i) . (P f_j).
class LowRankModel {
public:
  LowRankModel() = default;
  LowRankModel(Eigen::MatrixXd projection, double penalty);

  const Eigen::MatrixXd& projection() const { return projection_; }
  Eigen::Index rank() const { return projection_.rows(); }
  Eigen::Index dim() const { return projection_.cols(); }
  double penalty() const { return penalty_; }

  double predict(const Eigen::VectorXd& f_i, const Eigen::VectorXd& f_j) const;

  std::string to_json() const;
  static LowRankModel from_json(const std::string& text);

private:
  Eigen::MatrixXd projection_;  // D x d
  double penalty_ = 0.0;
};

struct LowRankOptions {
  int rank = 5;
  double penalty = 0.0;
  std::uint64_t seed = 0;
  int max_iters = 2000;
  double tol = 1e-10;  // relative loss change
};

struct TrainTrace {
  std::vector<double> loss;  // accepted loss per iteration (non-increasing)
  bool converged = false;
};

/// Fits the projection by full-batch gradient descent with backtracking line
/// search on the squared-error-plus-penalty objective over off-diagonal
/// pairs. Deterministic for a fixed seed.
LowRankModel train_low_rank(const EmbeddingSet& e, const SimilarityMatrix& target,
                            const LowRankOptions& opts,
                            TrainTrace* trace = nullptr);

/// Spearman rank correlation with average-rank tie handling.
double spearman_rho(std::span<const double> x, std::span<const double> y);

enum class ModelFamily { kCosine, kRidge, kLowRank };

struct HyperGrid {
  std::vector<double> ridge_alphas;
  std::vector<int> lowrank_ranks;
  std::vector<double> lowrank_penalties;
};

struct CvFoldLog {
  std::vector<std::string> test_items;
  std::size_t test_pair_count = 0;
  double rho = 0.0;
  double chosen_alpha = 0.0;    // ridge
  int chosen_rank = 0;          // low-rank
  double chosen_penalty = 0.0;  // low-rank
};

struct CvResult {
  double mean_rho = 0.0;
  double std_rho = 0.0;
  std::vector<CvFoldLog> folds;
};

struct CvOptions {
  int folds = 6;
  std::uint64_t seed = 0;
  LowRankOptions lowrank;  // rank/penalty come from the grid
};

/// Nested cross-validation at item level: a pair belongs to the outer test
/// set only when both items are held out; hyperparameters are picked on inner
/// splits of the outer-train items.
CvResult nested_cv(const EmbeddingSet& e, const SimilarityMatrix& target,
                   ModelFamily family, const HyperGrid& grid,
                   const CvOptions& opts);

/// K-means (k-means++ init, `restarts` runs, best inertia kept) on the
/// embedding vectors; returns the distinct item nearest each centroid.
std::vector<std::string> select_representatives(const EmbeddingSet& e, int k,
                                                std::uint64_t seed,
                                                int restarts = 10,
                                                double* inertia_out = nullptr);

struct MdsResult {
  Eigen::MatrixXd coords;       // item_count x dims
  Eigen::VectorXd eigenvalues;  // descending, length = dims requested
  int positive_dims = 0;        // eigenvalues > 0 actually available
};

/// Torgerson classical MDS on dissimilarity 1 - sim (diagonal forced 0).
/// Missing positive eigenvalues pad the coordinates with zeros (warning).
MdsResult classical_mds(const SimilarityMatrix& s, int dims = 2);

}  // namespace ibtrans
