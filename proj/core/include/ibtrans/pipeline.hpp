#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ibtrans/baselines.hpp"
#include "ibtrans/config.hpp"
#include "ibtrans/frontier.hpp"
#include "ibtrans/similarity.hpp"

namespace ibtrans {

struct PlaneRecord {
  std::string label;
  std::string kind;  // attested | perturbed | random
  double fraction = 0.0;
  double complexity_bits = 0.0;
  double accuracy_bits = 0.0;
};

/// Everything one information-plane run produces, prior to serialization.
struct AnalysisBundle {
  double gamma = 1.0;
  std::optional<FrontierCurve> frontier;
  std::vector<PlaneRecord> plane;
  std::vector<DeviationReport> deviations;
};

/// Figure-ready files (infoplane.csv, deviations.csv) for a complete bundle.
/// Throws on a partial bundle, listing the missing artifacts.
std::map<std::string, std::string> emit_plot_data(const AnalysisBundle& bundle,
                                                  const RunConfig& cfg);

struct SimilarityOutcome {
  double cosine_rho = 0.0;
  CvResult ridge;
  std::vector<std::pair<int, CvResult>> lowrank;  // (rank, result), grid order
  int best_rank = 0;
  double best_penalty = 0.0;
  std::filesystem::path dir;
};

/// Trains and scores the similarity predictors, persists the report and the
/// best projection model.
SimilarityOutcome run_similarity(const RunConfig& cfg);

struct AnalysisOutcome {
  bool all_converged = true;
  std::vector<std::filesystem::path> dirs;  // one per gamma value
};

/// Full information-plane run: encoders, frontier, counterfactual baselines,
/// deviations; one output directory per configured gamma.
AnalysisOutcome run_analysis(const RunConfig& cfg);

struct FrontierOutcome {
  bool all_converged = true;
  std::filesystem::path dir;
};

/// Frontier-only run (first configured gamma).
FrontierOutcome run_frontier(const RunConfig& cfg);

/// Deviations for attested + counterfactual encoders against a previously
/// exported frontier CSV.
void run_deviations(const RunConfig& cfg);

/// Empirical similarity -> classical MDS coordinates (mds.json).
void run_mds(const RunConfig& cfg);

/// K-means representative selection over the embedding file; returns the
/// chosen item ids (also written to representatives.json).
std::vector<std::string> run_select(const RunConfig& cfg);

}  // namespace ibtrans
