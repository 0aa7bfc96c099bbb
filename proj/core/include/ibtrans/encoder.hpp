#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ibtrans/info.hpp"
#include "ibtrans/io.hpp"

namespace ibtrans {

class BeliefModel;

/// Canonical form of a meaning key: lowercased (ASCII), runs of whitespace
/// collapsed to single spaces, leading/trailing whitespace removed.
/// Punctuation is kept.
std::string normalize_meaning_key(std::string_view raw);

struct AlignmentRecord {
  std::string meaning_key;
  std::string source_term;
  std::string target_language;
  std::string target_term;
  std::int64_t count = 1;  // occurrences of this exact alignment
};

/// Attested alignments between source-side meanings and target-side terms,
/// possibly spanning several target languages.
class AlignmentTable {
public:
  AlignmentTable() = default;
  explicit AlignmentTable(std::vector<AlignmentRecord> records);

  /// Parses the alignment TSV (header: id, meaning_key, source_term,
  /// target_language, target_term). Rows with target_term "None" are
  /// skipped; duplicate (meaning, language, term) rows accumulate counts.
  static AlignmentTable parse_tsv(std::istream& in, const std::string& source_name);

  const std::vector<AlignmentRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  std::vector<std::string> languages() const;
  std::vector<std::string> meanings() const;  // sorted, distinct
  AlignmentTable for_language(const std::string& language) const;
  std::int64_t total_count() const;

  /// Concatenates another table's records into this one (counts accumulate).
  void merge(const AlignmentTable& other);

private:
  std::vector<AlignmentRecord> records_;
};

enum class PriorMode { kUniform, kFrequency };

/// A stochastic naming policy p(word | meaning) with its meaning prior.
class Encoder {
public:
  Encoder(ConditionalDistribution policy, ProbVector prior,
          std::vector<std::string> lexicon, std::vector<std::string> meaning_index);

  const ConditionalDistribution& policy() const { return policy_; }
  const ProbVector& prior() const { return prior_; }
  const std::vector<std::string>& lexicon() const { return lexicon_; }
  const std::vector<std::string>& meaning_index() const { return meaning_index_; }
  Eigen::Index meaning_count() const { return policy_.row_count(); }
  Eigen::Index lexicon_size() const { return policy_.col_count(); }

  /// True when every policy row is a point mass.
  bool is_one_hot() const { return !one_hot_words_.empty(); }
  /// Word index per meaning; empty unless is_one_hot().
  const std::vector<int>& one_hot_words() const { return one_hot_words_; }

private:
  ConditionalDistribution policy_;
  ProbVector prior_;
  std::vector<std::string> lexicon_;
  std::vector<std::string> meaning_index_;
  std::vector<int> one_hot_words_;
};

/// Builds the empirical encoder for one language: policy rows are the
/// normalized alignment counts per meaning; the lexicon is the sorted set of
/// attested target terms. `inventory`, when given, fixes the meaning set and
/// its order (every inventory meaning must be attested in the table).
Encoder build_encoder(const AlignmentTable& table,
                      PriorMode prior_mode = PriorMode::kUniform,
                      const std::vector<std::string>* inventory = nullptr);

/// Joint p(meaning, word) = p(m) p(w|m); rows = meanings, cols = words.
JointDistribution meaning_word_joint(const Encoder& e);

/// Complexity I(M;W) in bits.
double complexity(const Encoder& e);

/// Accuracy I(W;U) in bits, under the given belief model (defined with the
/// belief machinery; declared here because it is an encoder measure).
double accuracy(const Encoder& e, const BeliefModel& beliefs);

/// A located encoder in the (Complexity, Accuracy) plane.
struct PlanePoint {
  PlanePoint(double complexity_bits_, double accuracy_bits_, std::string label_);
  double complexity_bits;
  double accuracy_bits;
  std::string label;
};

}  // namespace ibtrans
