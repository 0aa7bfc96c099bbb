#include "ibtrans/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "ibtrans/beliefs.hpp"
#include "measures_detail.hpp"

namespace ibtrans {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

const std::vector<std::string> kAlignmentHeader = {
    "id", "meaning_key", "source_term", "target_language", "target_term"};

std::vector<int> detect_one_hot(const Eigen::MatrixXd& policy) {
  std::vector<int> words(static_cast<std::size_t>(policy.rows()));
  for (Eigen::Index m = 0; m < policy.rows(); ++m) {
    int hot = -1;
    for (Eigen::Index w = 0; w < policy.cols(); ++w) {
      if (policy(m, w) > 0.0) {
        if (hot >= 0) return {};
        hot = static_cast<int>(w);
      }
    }
    if (hot < 0) return {};
    words[static_cast<std::size_t>(m)] = hot;
  }
  return words;
}

}  // namespace

std::string normalize_meaning_key(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

AlignmentTable::AlignmentTable(std::vector<AlignmentRecord> records)
    : records_(std::move(records)) {
  for (const auto& r : records_) {
    if (r.meaning_key.empty()) {
      throw std::invalid_argument("AlignmentTable: empty meaning_key");
    }
    if (r.target_term.empty()) {
      throw std::invalid_argument("AlignmentTable: empty target_term");
    }
    if (r.count < 1) {
      throw std::invalid_argument("AlignmentTable: record count must be >= 1");
    }
  }
}

AlignmentTable AlignmentTable::parse_tsv(std::istream& in,
                                         const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    throw std::invalid_argument(source_name + ": empty alignment file");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto cols = split_tabs(line);
    if (cols.size() != kAlignmentHeader.size()) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": expected "
          << kAlignmentHeader.size() << " header columns, got " << cols.size();
      throw ParseError(msg.str());
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (trim(cols[i]) != kAlignmentHeader[i]) {
        std::ostringstream msg;
        msg << source_name << ":" << line_no << ": header column " << i + 1
            << " is '" << trim(cols[i]) << "', expected '"
            << kAlignmentHeader[i] << "'";
        throw ParseError(msg.str());
      }
    }
  }

  // (meaning, language, term) -> (record index) for count accumulation
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> seen;
  std::vector<AlignmentRecord> records;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != kAlignmentHeader.size()) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": expected "
          << kAlignmentHeader.size() << " columns, got " << cols.size();
      throw ParseError(msg.str());
    }
    const std::string target_term = trim(cols[4]);
    if (target_term == "None") continue;  // zero-alignment convention
    AlignmentRecord rec;
    rec.meaning_key = normalize_meaning_key(cols[1]);
    rec.source_term = trim(cols[2]);
    rec.target_language = trim(cols[3]);
    rec.target_term = target_term;
    if (rec.meaning_key.empty() || rec.target_term.empty() ||
        rec.target_language.empty()) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no
          << ": empty meaning_key, target_language or target_term";
      throw ParseError(msg.str());
    }
    const auto key = std::make_tuple(rec.meaning_key, rec.target_language,
                                     rec.target_term);
    const auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, records.size());
      records.push_back(std::move(rec));
    } else {
      ++records[it->second].count;
    }
  }
  if (records.empty()) {
    throw std::invalid_argument(source_name +
                                ": no alignment rows (all skipped or missing)");
  }
  return AlignmentTable(std::move(records));
}

std::vector<std::string> AlignmentTable::languages() const {
  std::set<std::string> langs;
  for (const auto& r : records_) langs.insert(r.target_language);
  return {langs.begin(), langs.end()};
}

std::vector<std::string> AlignmentTable::meanings() const {
  std::set<std::string> keys;
  for (const auto& r : records_) keys.insert(r.meaning_key);
  return {keys.begin(), keys.end()};
}

AlignmentTable AlignmentTable::for_language(const std::string& language) const {
  std::vector<AlignmentRecord> filtered;
  for (const auto& r : records_) {
    if (r.target_language == language) filtered.push_back(r);
  }
  if (filtered.empty()) {
    throw std::invalid_argument("AlignmentTable: no records for language '" +
                                language + "'");
  }
  return AlignmentTable(std::move(filtered));
}

std::int64_t AlignmentTable::total_count() const {
  std::int64_t total = 0;
  for (const auto& r : records_) total += r.count;
  return total;
}

void AlignmentTable::merge(const AlignmentTable& other) {
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> seen;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    seen.emplace(std::make_tuple(r.meaning_key, r.target_language, r.target_term), i);
  }
  for (const auto& r : other.records_) {
    const auto key =
        std::make_tuple(r.meaning_key, r.target_language, r.target_term);
    const auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, records_.size());
      records_.push_back(r);
    } else {
      records_[it->second].count += r.count;
    }
  }
}

Encoder::Encoder(ConditionalDistribution policy, ProbVector prior,
                 std::vector<std::string> lexicon,
                 std::vector<std::string> meaning_index)
    : policy_(std::move(policy)),
      prior_(std::move(prior)),
      lexicon_(std::move(lexicon)),
      meaning_index_(std::move(meaning_index)) {
  if (prior_.size() != policy_.row_count()) {
    throw std::invalid_argument("Encoder: prior size != policy rows");
  }
  if (!lexicon_.empty() &&
      static_cast<Eigen::Index>(lexicon_.size()) != policy_.col_count()) {
    throw std::invalid_argument("Encoder: lexicon size != policy cols");
  }
  if (!meaning_index_.empty() &&
      static_cast<Eigen::Index>(meaning_index_.size()) != policy_.row_count()) {
    throw std::invalid_argument("Encoder: meaning index size != policy rows");
  }
  one_hot_words_ = detect_one_hot(policy_.rows());
}

Encoder build_encoder(const AlignmentTable& table, PriorMode prior_mode,
                      const std::vector<std::string>* inventory) {
  if (table.empty()) {
    throw std::invalid_argument("build_encoder: empty alignment table");
  }
  const std::vector<std::string> meanings =
      inventory ? *inventory : table.meanings();
  std::map<std::string, Eigen::Index> meaning_pos;
  for (std::size_t i = 0; i < meanings.size(); ++i) {
    meaning_pos.emplace(meanings[i], static_cast<Eigen::Index>(i));
  }

  std::vector<std::string> lexicon;
  {
    std::set<std::string> words;
    for (const auto& r : table.records()) words.insert(r.target_term);
    lexicon.assign(words.begin(), words.end());
  }
  std::map<std::string, Eigen::Index> word_pos;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    word_pos.emplace(lexicon[i], static_cast<Eigen::Index>(i));
  }

  const auto m_count = static_cast<Eigen::Index>(meanings.size());
  const auto w_count = static_cast<Eigen::Index>(lexicon.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m_count, w_count);
  for (const auto& r : table.records()) {
    const auto it = meaning_pos.find(r.meaning_key);
    if (it == meaning_pos.end()) {
      throw std::invalid_argument("build_encoder: meaning '" + r.meaning_key +
                                  "' not in the supplied inventory");
    }
    counts(it->second, word_pos.at(r.target_term)) +=
        static_cast<double>(r.count);
  }

  Eigen::VectorXd row_totals = counts.rowwise().sum();
  for (Eigen::Index m = 0; m < m_count; ++m) {
    if (row_totals(m) <= 0.0) {
      throw std::invalid_argument("build_encoder: meaning '" + meanings[m] +
                                  "' has no attested alignments");
    }
  }
  const Eigen::MatrixXd policy = row_totals.cwiseInverse().asDiagonal() * counts;

  ProbVector prior = prior_mode == PriorMode::kUniform
                         ? ProbVector::uniform(m_count)
                         : ProbVector(row_totals / row_totals.sum());
  return Encoder(ConditionalDistribution(policy), std::move(prior),
                 std::move(lexicon), meanings);
}

JointDistribution meaning_word_joint(const Encoder& e) {
  return JointDistribution(e.prior().weights().asDiagonal() *
                           e.policy().rows());
}

double complexity(const Encoder& e) {
  if (e.is_one_hot()) {
    return detail::complexity_bits_one_hot(
        e.one_hot_words(), static_cast<int>(e.lexicon_size()),
        e.prior().weights());
  }
  return detail::complexity_bits(e.policy().rows(), e.prior().weights());
}

double accuracy(const Encoder& e, const BeliefModel& beliefs) {
  return mutual_information(word_state_joint(e, beliefs));
}

PlanePoint::PlanePoint(double complexity_bits_, double accuracy_bits_,
                       std::string label_)
    : complexity_bits(complexity_bits_),
      accuracy_bits(accuracy_bits_),
      label(std::move(label_)) {
  if (accuracy_bits < -1e-9 || accuracy_bits > complexity_bits + 1e-9) {
    std::ostringstream msg;
    msg << "PlanePoint '" << label << "': accuracy " << accuracy_bits
        << " outside [0, complexity=" << complexity_bits << "]";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace ibtrans
