#include "ibtrans/similarity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <istream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ibtrans/encoder.hpp"  // ParseError

namespace ibtrans {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Single-line CSV row with RFC-style double-quote escaping.
std::vector<std::string> split_csv(const std::string& line,
                                   const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(where + ": unterminated quote");
  fields.push_back(cur);
  return fields;
}

double parse_double(std::string_view field, const std::string& where) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(value)) {
    throw ParseError(where + ": bad number '" + std::string(field) + "'");
  }
  return value;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double raw_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const Eigen::VectorXd ca = a.array() - ma;
  const Eigen::VectorXd cb = b.array() - mb;
  const double denom = ca.norm() * cb.norm();
  if (denom == 0.0) {
    throw std::domain_error("correlation undefined for constant input");
  }
  return ca.dot(cb) / denom;
}

Eigen::VectorXd average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Eigen::VectorXd ranks(static_cast<Eigen::Index>(n));
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k) {
      ranks(static_cast<Eigen::Index>(idx[k])) = rank;
    }
    i = j + 1;
  }
  return ranks;
}

}  // namespace

// ---------------------------------------------------------------------------
// Pile sorting

PileSortDataset::PileSortDataset(std::vector<PileAssignment> assignments) {
  if (assignments.empty()) {
    throw std::invalid_argument("PileSortDataset: no assignments");
  }
  std::set<std::string> item_set, participant_set;
  for (const auto& a : assignments) {
    item_set.insert(a.item);
    participant_set.insert(a.participant);
  }
  items_.assign(item_set.begin(), item_set.end());
  participants_.assign(participant_set.begin(), participant_set.end());

  const std::size_t n_items = items_.size();
  piles_.assign(participants_.size() * n_items, -1);
  std::map<std::string, std::size_t> item_pos, participant_pos;
  for (std::size_t i = 0; i < items_.size(); ++i) item_pos[items_[i]] = i;
  for (std::size_t p = 0; p < participants_.size(); ++p) {
    participant_pos[participants_[p]] = p;
  }

  // dense pile ids per participant
  std::vector<std::map<std::string, int>> pile_ids(participants_.size());
  for (const auto& a : assignments) {
    const std::size_t p = participant_pos[a.participant];
    const std::size_t i = item_pos[a.item];
    if (piles_[p * n_items + i] != -1) {
      throw std::invalid_argument("PileSortDataset: participant '" +
                                  a.participant + "' assigns item '" + a.item +
                                  "' more than once");
    }
    auto [it, inserted] = pile_ids[p].emplace(
        a.pile, static_cast<int>(pile_ids[p].size()));
    piles_[p * n_items + i] = it->second;
  }
  for (std::size_t p = 0; p < participants_.size(); ++p) {
    for (std::size_t i = 0; i < n_items; ++i) {
      if (piles_[p * n_items + i] == -1) {
        throw std::invalid_argument("PileSortDataset: participant '" +
                                    participants_[p] +
                                    "' did not sort item '" + items_[i] + "'");
      }
    }
  }
}

PileSortDataset PileSortDataset::parse_csv(std::istream& in,
                                           const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw std::invalid_argument(source_name + ": empty pile-sort file");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    const auto cols = split_csv(line, source_name + ":1");
    if (cols.size() != 3 || trim(cols[0]) != "participant_id" ||
        trim(cols[1]) != "item_id" || trim(cols[2]) != "pile_id") {
      throw ParseError(source_name +
                       ":1: expected header participant_id,item_id,pile_id");
    }
  }
  std::vector<PileAssignment> assignments;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::ostringstream where;
    where << source_name << ":" << line_no;
    const auto cols = split_csv(line, where.str());
    if (cols.size() != 3) {
      throw ParseError(where.str() + ": expected 3 columns, got " +
                       std::to_string(cols.size()));
    }
    PileAssignment a{trim(cols[0]), trim(cols[1]), trim(cols[2])};
    if (a.participant.empty() || a.item.empty() || a.pile.empty()) {
      throw ParseError(where.str() + ": empty field");
    }
    assignments.push_back(std::move(a));
  }
  if (assignments.empty()) {
    throw std::invalid_argument(source_name + ": no pile assignments");
  }
  return PileSortDataset(std::move(assignments));
}

SimilarityMatrix empirical_similarity(const PileSortDataset& ds) {
  const Eigen::Index k = ds.item_count();
  const std::size_t n = ds.participant_count();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t p = 0; p < n; ++p) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = i; j < k; ++j) {
        if (ds.pile(p, static_cast<std::size_t>(i)) ==
            ds.pile(p, static_cast<std::size_t>(j))) {
          counts(i, j) += 1.0;
          counts(j, i) = counts(i, j);
        }
      }
    }
  }
  // avoid duplicated diagonal increments above
  for (Eigen::Index i = 0; i < k; ++i) counts(i, i) = static_cast<double>(n);
  return SimilarityMatrix(counts / static_cast<double>(n),
                          SimilarityMatrix::Kind::kEmpirical, ds.items());
}

// ---------------------------------------------------------------------------
// SimilarityMatrix

SimilarityMatrix::SimilarityMatrix(Eigen::MatrixXd values, Kind kind,
                                   std::vector<std::string> items)
    : values_(std::move(values)), kind_(kind), items_(std::move(items)) {
  if (values_.rows() != values_.cols() || values_.rows() < 1) {
    throw std::invalid_argument("SimilarityMatrix: matrix must be square");
  }
  if (!items_.empty() &&
      static_cast<Eigen::Index>(items_.size()) != values_.rows()) {
    throw std::invalid_argument("SimilarityMatrix: item labels do not match size");
  }
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      if (!std::isfinite(values_(i, j))) {
        throw std::invalid_argument("SimilarityMatrix: non-finite entry");
      }
      if (std::abs(values_(i, j) - values_(j, i)) > 1e-12) {
        std::ostringstream msg;
        msg << "SimilarityMatrix: asymmetric at (" << i << "," << j << "): "
            << values_(i, j) << " vs " << values_(j, i);
        throw std::invalid_argument(msg.str());
      }
    }
  }
  if (kind_ == Kind::kEmpirical) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (std::abs(values_(i, i) - 1.0) > 1e-12) {
        throw std::invalid_argument(
            "SimilarityMatrix: empirical diagonal must be 1");
      }
      for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        if (values_(i, j) < -1e-12 || values_(i, j) > 1.0 + 1e-12) {
          throw std::invalid_argument(
              "SimilarityMatrix: empirical values must lie in [0,1]");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingSet::EmbeddingSet(std::map<std::string, Eigen::VectorXd> vectors)
    : vectors_(std::move(vectors)) {
  if (vectors_.empty()) {
    throw std::invalid_argument("EmbeddingSet: no vectors");
  }
  dim_ = vectors_.begin()->second.size();
  if (dim_ < 1) throw std::invalid_argument("EmbeddingSet: zero dimension");
  for (const auto& [item, v] : vectors_) {
    if (v.size() != dim_) {
      throw std::invalid_argument("EmbeddingSet: item '" + item +
                                  "' has dimension " + std::to_string(v.size()) +
                                  ", expected " + std::to_string(dim_));
    }
    if (!v.allFinite()) {
      throw std::invalid_argument("EmbeddingSet: non-finite entry for item '" +
                                  item + "'");
    }
    items_.push_back(item);
  }
}

EmbeddingSet EmbeddingSet::parse_tsv(std::istream& in,
                                     const std::string& source_name) {
  std::map<std::string, Eigen::VectorXd> vectors;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::ostringstream where;
    where << source_name << ":" << line_no;
    std::vector<std::string> cols;
    {
      std::size_t start = 0;
      while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
          cols.push_back(line.substr(start));
          break;
        }
        cols.push_back(line.substr(start, pos - start));
        start = pos + 1;
      }
    }
    if (cols.size() < 2) {
      throw ParseError(where.str() + ": expected item_id plus >=1 value");
    }
    const std::string item = trim(cols[0]);
    if (item.empty()) throw ParseError(where.str() + ": empty item_id");
    if (dim == -1) dim = static_cast<Eigen::Index>(cols.size()) - 1;
    if (static_cast<Eigen::Index>(cols.size()) - 1 != dim) {
      throw ParseError(where.str() + ": row has " +
                       std::to_string(cols.size() - 1) + " values, expected " +
                       std::to_string(dim));
    }
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      v(i) = parse_double(trim(cols[static_cast<std::size_t>(i) + 1]), where.str());
    }
    if (!vectors.emplace(item, std::move(v)).second) {
      throw ParseError(where.str() + ": duplicate item_id '" + item + "'");
    }
  }
  if (vectors.empty()) {
    throw std::invalid_argument(source_name + ": no embedding rows");
  }
  return EmbeddingSet(std::move(vectors));
}

bool EmbeddingSet::contains(const std::string& item) const {
  return vectors_.count(item) > 0;
}

const Eigen::VectorXd& EmbeddingSet::vector(const std::string& item) const {
  const auto it = vectors_.find(item);
  if (it == vectors_.end()) {
    throw std::invalid_argument("EmbeddingSet: unknown item '" + item + "'");
  }
  return it->second;
}

EmbeddingSet EmbeddingSet::subset(const std::vector<std::string>& keep) const {
  std::map<std::string, Eigen::VectorXd> kept;
  for (const auto& item : keep) kept.emplace(item, vector(item));
  return EmbeddingSet(std::move(kept));
}

Eigen::MatrixXd EmbeddingSet::matrix(const std::vector<std::string>* order) const {
  const auto& ids = order ? *order : items_;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(ids.size()), dim_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = vector(ids[i]).transpose();
  }
  return m;
}

SimilarityMatrix cosine_baseline(const EmbeddingSet& e) {
  if (e.item_count() < 2) {
    throw std::invalid_argument("cosine_baseline: need at least 2 items");
  }
  Eigen::MatrixXd x = e.matrix();
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    const double mean = x.col(d).mean();
    const double var = (x.col(d).array() - mean).square().mean();
    if (var > 0.0) kept.push_back(d);
  }
  if (kept.size() < static_cast<std::size_t>(x.cols())) {
    std::cerr << "cosine_baseline: dropped "
              << (x.cols() - static_cast<Eigen::Index>(kept.size()))
              << " zero-variance dimension(s)\n";
  }
  if (kept.empty()) {
    throw std::domain_error("cosine_baseline: all dimensions have zero variance");
  }
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const auto col = x.col(kept[c]);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    z.col(static_cast<Eigen::Index>(c)) = (col.array() - mean) / sd;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (z.row(i).norm() == 0.0) {
      throw std::domain_error(
          "cosine_baseline: item '" + e.items()[static_cast<std::size_t>(i)] +
          "' is zero after z-scoring; its pairs are undefined");
    }
  }
  Eigen::MatrixXd sim(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sim(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = z.row(i).dot(z.row(j)) / (z.row(i).norm() * z.row(j).norm());
      sim(i, j) = sim(j, i) = c;
    }
  }
  return SimilarityMatrix(sim, SimilarityMatrix::Kind::kPredicted, e.items());
}

// ---------------------------------------------------------------------------
// Ridge

RidgeModel::RidgeModel(Eigen::VectorXd weights, double intercept)
    : weights_(std::move(weights)), intercept_(intercept) {}

Eigen::VectorXd RidgeModel::features(const Eigen::VectorXd& f_i,
                                     const Eigen::VectorXd& f_j) {
  if (f_i.size() != f_j.size()) {
    throw std::invalid_argument("RidgeModel::features: dimension mismatch");
  }
  Eigen::VectorXd phi(f_i.size() + 2);
  phi.head(f_i.size()) = f_i.cwiseProduct(f_j);
  phi(f_i.size()) = (f_i - f_j).cwiseAbs().sum();
  phi(f_i.size() + 1) = raw_cosine(f_i, f_j);
  return phi;
}

double RidgeModel::predict(const Eigen::VectorXd& f_i,
                           const Eigen::VectorXd& f_j) const {
  const Eigen::VectorXd phi = features(f_i, f_j);
  if (phi.size() != weights_.size()) {
    throw std::invalid_argument("RidgeModel::predict: dimension mismatch");
  }
  return phi.dot(weights_) + intercept_;
}

namespace detail_fit {

// Centered ridge solve; switches to the dual form when features outnumber
// training pairs (d can be in the thousands while pairs stay in the hundreds).
RidgeModel fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     double alpha) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("ridge: alpha must be > 0");
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::VectorXd w;
  if (x.cols() <= x.rows()) {
    const Eigen::MatrixXd gram =
        xc.transpose() * xc +
        alpha * Eigen::MatrixXd::Identity(x.cols(), x.cols());
    w = gram.ldlt().solve(xc.transpose() * yc);
  } else {
    const Eigen::MatrixXd outer =
        xc * xc.transpose() +
        alpha * Eigen::MatrixXd::Identity(x.rows(), x.rows());
    w = xc.transpose() * outer.ldlt().solve(yc);
  }
  const double intercept = y_mean - x_mean.dot(w);
  return RidgeModel(std::move(w), intercept);
}

struct PairList {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // i < j
};

PairList all_pairs(Eigen::Index n) {
  PairList out;
  out.pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) out.pairs.emplace_back(i, j);
  }
  return out;
}

RidgeModel fit_ridge_on_items(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s,
                              const std::vector<Eigen::Index>& items,
                              double alpha) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (std::size_t a = 0; a < items.size(); ++a) {
    for (std::size_t b = a + 1; b < items.size(); ++b) {
      pairs.emplace_back(items[a], items[b]);
    }
  }
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(pairs.size()), x.cols() + 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    phi.row(static_cast<Eigen::Index>(p)) =
        RidgeModel::features(x.row(i).transpose(), x.row(j).transpose())
            .transpose();
    y(static_cast<Eigen::Index>(p)) = s(i, j);
  }
  return fit_ridge(phi, y, alpha);
}

double lowrank_loss(const Eigen::MatrixXd& p, const Eigen::MatrixXd& x,
                    const Eigen::MatrixXd& s, double penalty) {
  const Eigen::MatrixXd z = x * p.transpose();
  Eigen::MatrixXd err = z * z.transpose() - s;
  err.diagonal().setZero();
  return 0.5 * err.squaredNorm() + penalty * p.squaredNorm();
}

Eigen::MatrixXd lowrank_grad(const Eigen::MatrixXd& p, const Eigen::MatrixXd& x,
                             const Eigen::MatrixXd& s, double penalty) {
  const Eigen::MatrixXd z = x * p.transpose();
  Eigen::MatrixXd err = z * z.transpose() - s;
  err.diagonal().setZero();
  return 2.0 * (z.transpose() * err * x) + 2.0 * penalty * p;
}

Eigen::MatrixXd fit_low_rank(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s,
                             const LowRankOptions& opts, TrainTrace* trace) {
  if (opts.rank < 1) {
    throw std::invalid_argument("train_low_rank: rank must be >= 1");
  }
  if (opts.rank > x.cols()) {
    throw std::invalid_argument("train_low_rank: rank exceeds embedding dim");
  }
  if (opts.penalty < 0.0) {
    throw std::invalid_argument("train_low_rank: penalty must be >= 0");
  }
  // Warm start: least-squares fit of the target's top-rank spectral factor,
  // plus seeded noise so runs are deterministic per seed and symmetric
  // solutions break ties reproducibly.
  Eigen::MatrixXd p(opts.rank, x.cols());
  {
    const Eigen::MatrixXd s_sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s_sym);
    Eigen::MatrixXd z0 = Eigen::MatrixXd::Zero(x.rows(), opts.rank);
    for (int k = 0; k < opts.rank; ++k) {
      const Eigen::Index idx = s_sym.rows() - 1 - k;
      if (idx < 0) break;
      const double lambda = eig.eigenvalues()(idx);
      if (lambda <= 0.0) break;
      z0.col(k) = eig.eigenvectors().col(idx) * std::sqrt(lambda);
    }
    // minimal-norm least squares keeps the init inside the span of the
    // training items, which matters when d exceeds the item count
    p = x.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV)
            .solve(z0)
            .transpose();
    std::mt19937_64 rng(opts.seed);
    const double rms =
        std::sqrt(p.squaredNorm() / static_cast<double>(p.size()));
    std::normal_distribution<double> gauss(0.0,
                                           1e-2 * std::max(rms, 1e-3));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) p(r, c) += gauss(rng);
    }
  }

  double loss = lowrank_loss(p, x, s, opts.penalty);
  if (trace) {
    trace->loss.clear();
    trace->loss.push_back(loss);
    trace->converged = false;
  }
  double prev_loss = loss;
  double step = 1e-3;
  constexpr int kMaxHalvings = 60;
  bool converged = false;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const Eigen::MatrixXd grad = lowrank_grad(p, x, s, opts.penalty);
    const double grad_sq = grad.squaredNorm();
    if (grad_sq == 0.0) {
      converged = true;
      break;
    }
    bool accepted = false;
    bool saw_nonfinite = false;
    double trial_loss = loss;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const Eigen::MatrixXd p_try = p - step * grad;
      trial_loss = lowrank_loss(p_try, x, s, opts.penalty);
      if (!std::isfinite(trial_loss)) {
        saw_nonfinite = true;
        step *= 0.5;
        continue;
      }
      if (trial_loss <= loss - 1e-4 * step * grad_sq) {
        p = p_try;
        loss = trial_loss;
        accepted = true;
        step = std::min(step * 1.5, 1.0);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (saw_nonfinite && !std::isfinite(trial_loss)) {
        throw std::runtime_error(
            "train_low_rank: loss diverged (non-finite after step halving)");
      }
      converged = true;  // no descent direction left at machine precision
      break;
    }
    if (trace) trace->loss.push_back(loss);
    if (std::abs(prev_loss - loss) <=
        opts.tol * std::max(1.0, std::abs(loss))) {
      converged = true;
      break;
    }
    prev_loss = loss;
  }
  if (trace) trace->converged = converged;
  return p;
}

}  // namespace detail_fit

RidgeModel ridge_baseline(const EmbeddingSet& e, const SimilarityMatrix& target,
                          double alpha) {
  if (target.size() != e.item_count() || target.items() != e.items()) {
    if (target.items().empty() && target.size() == e.item_count()) {
      // unlabeled target, rows taken in embedding item order
    } else {
      throw std::invalid_argument("ridge_baseline: target items do not match embeddings");
    }
  }
  const Eigen::MatrixXd x = e.matrix();
  std::vector<Eigen::Index> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return detail_fit::fit_ridge_on_items(x, target.values(), all, alpha);
}

// ---------------------------------------------------------------------------
// Low-rank model

LowRankModel::LowRankModel(Eigen::MatrixXd projection, double penalty)
    : projection_(std::move(projection)), penalty_(penalty) {
  if (projection_.rows() < 1 || projection_.rows() > projection_.cols()) {
    throw std::invalid_argument("LowRankModel: need 1 <= rank <= dim");
  }
}

double LowRankModel::predict(const Eigen::VectorXd& f_i,
                             const Eigen::VectorXd& f_j) const {
  if (f_i.size() != dim() || f_j.size() != dim()) {
    throw std::invalid_argument("LowRankModel::predict: dimension mismatch");
  }
  return (projection_ * f_i).dot(projection_ * f_j);
}

std::string LowRankModel::to_json() const {
  nlohmann::json j;
  j["kind"] = "lowrank_projection";
  j["rank"] = rank();
  j["dim"] = dim();
  j["penalty"] = penalty_;
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < projection_.cols(); ++c) {
      row.push_back(projection_(r, c));
    }
    rows.push_back(std::move(row));
  }
  j["projection"] = std::move(rows);
  return j.dump(2);
}

LowRankModel LowRankModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.value("kind", "") != "lowrank_projection") {
    throw std::invalid_argument("LowRankModel: not a lowrank_projection file");
  }
  const auto rank = j.at("rank").get<Eigen::Index>();
  const auto dim = j.at("dim").get<Eigen::Index>();
  const auto& rows = j.at("projection");
  if (static_cast<Eigen::Index>(rows.size()) != rank) {
    throw std::invalid_argument("LowRankModel: rank does not match projection");
  }
  Eigen::MatrixXd p(rank, dim);
  for (Eigen::Index r = 0; r < rank; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != dim) {
      throw std::invalid_argument("LowRankModel: dim does not match projection");
    }
    for (Eigen::Index c = 0; c < dim; ++c) {
      p(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return LowRankModel(std::move(p), j.value("penalty", 0.0));
}

LowRankModel train_low_rank(const EmbeddingSet& e, const SimilarityMatrix& target,
                            const LowRankOptions& opts, TrainTrace* trace) {
  if (target.size() != e.item_count()) {
    throw std::invalid_argument("train_low_rank: target size != item count");
  }
  if (!target.items().empty() && target.items() != e.items()) {
    throw std::invalid_argument("train_low_rank: target items do not match embeddings");
  }
  const Eigen::MatrixXd x = e.matrix();
  Eigen::MatrixXd p = detail_fit::fit_low_rank(x, target.values(), opts, trace);
  return LowRankModel(std::move(p), opts.penalty);
}

// ---------------------------------------------------------------------------
// Spearman

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman_rho: length mismatch");
  }
  if (x.size() < 3) {
    throw std::invalid_argument("spearman_rho: need at least 3 observations");
  }
  return pearson(average_ranks(x), average_ranks(y));
}

// ---------------------------------------------------------------------------
// Nested cross-validation

namespace {

std::vector<std::vector<Eigen::Index>> make_folds(
    std::vector<Eigen::Index> indices, int folds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));
  const std::size_t n = indices.size();
  const std::size_t base = n / static_cast<std::size_t>(folds);
  const std::size_t extra = n % static_cast<std::size_t>(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    out[f].assign(indices.begin() + static_cast<std::ptrdiff_t>(pos),
                  indices.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

struct Candidate {
  double alpha = 0.0;
  int rank = 0;
  double penalty = 0.0;
};

// Predictions for every (i<j) pair within `items`, by a model fitted
// elsewhere; paired with the target values for scoring.
struct PairScore {
  std::vector<double> predicted;
  std::vector<double> observed;
};

double safe_rho(const PairScore& ps) {
  try {
    return spearman_rho(ps.predicted, ps.observed);
  } catch (const std::exception&) {
    return -1.0;  // degenerate predictions score worst
  }
}

}  // namespace

CvResult nested_cv(const EmbeddingSet& e, const SimilarityMatrix& target,
                   ModelFamily family, const HyperGrid& grid,
                   const CvOptions& opts) {
  if (target.size() != e.item_count()) {
    throw std::invalid_argument("nested_cv: target size != item count");
  }
  if (!target.items().empty() && target.items() != e.items()) {
    throw std::invalid_argument("nested_cv: target items do not match embeddings");
  }
  if (opts.folds < 2) {
    throw std::invalid_argument("nested_cv: need at least 2 folds");
  }
  const Eigen::Index n = e.item_count();
  if (n / opts.folds < 2) {
    throw std::invalid_argument(
        "nested_cv: a fold would hold fewer than 2 items");
  }

  const Eigen::MatrixXd x = e.matrix();
  const Eigen::MatrixXd& s = target.values();

  // candidate list in grid order
  std::vector<Candidate> candidates;
  switch (family) {
    case ModelFamily::kCosine:
      candidates.push_back({});
      break;
    case ModelFamily::kRidge:
      if (grid.ridge_alphas.empty()) {
        throw std::invalid_argument("nested_cv: empty ridge alpha grid");
      }
      for (double a : grid.ridge_alphas) candidates.push_back({a, 0, 0.0});
      break;
    case ModelFamily::kLowRank:
      if (grid.lowrank_ranks.empty() || grid.lowrank_penalties.empty()) {
        throw std::invalid_argument("nested_cv: empty low-rank grid");
      }
      for (int r : grid.lowrank_ranks) {
        for (double pen : grid.lowrank_penalties) {
          candidates.push_back({0.0, r, pen});
        }
      }
      break;
  }

  // cosine predictions are a fixed function: precompute once
  Eigen::MatrixXd cosine_sim;
  if (family == ModelFamily::kCosine) {
    cosine_sim = cosine_baseline(e).values();
  }

  // fits a candidate on `train` items and scores all (i<j) pairs of `eval`
  const auto fit_and_score = [&](const std::vector<Eigen::Index>& train,
                                 const std::vector<Eigen::Index>& eval_items,
                                 const Candidate& cand,
                                 std::uint64_t fit_seed) -> PairScore {
    PairScore ps;
    std::optional<RidgeModel> ridge;
    std::optional<LowRankModel> lowrank;
    if (family == ModelFamily::kRidge) {
      ridge = detail_fit::fit_ridge_on_items(x, s, train, cand.alpha);
    } else if (family == ModelFamily::kLowRank) {
      Eigen::MatrixXd x_tr(static_cast<Eigen::Index>(train.size()), x.cols());
      Eigen::MatrixXd s_tr(static_cast<Eigen::Index>(train.size()),
                           static_cast<Eigen::Index>(train.size()));
      for (std::size_t a = 0; a < train.size(); ++a) {
        x_tr.row(static_cast<Eigen::Index>(a)) = x.row(train[a]);
        for (std::size_t b = 0; b < train.size(); ++b) {
          s_tr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
              s(train[a], train[b]);
        }
      }
      LowRankOptions lo = opts.lowrank;
      lo.rank = cand.rank;
      lo.penalty = cand.penalty;
      lo.seed = fit_seed;
      lowrank = LowRankModel(detail_fit::fit_low_rank(x_tr, s_tr, lo, nullptr),
                             cand.penalty);
    }
    for (std::size_t a = 0; a < eval_items.size(); ++a) {
      for (std::size_t b = a + 1; b < eval_items.size(); ++b) {
        const Eigen::Index i = eval_items[a], j = eval_items[b];
        double pred = 0.0;
        switch (family) {
          case ModelFamily::kCosine:
            pred = cosine_sim(i, j);
            break;
          case ModelFamily::kRidge:
            pred = ridge->predict(x.row(i).transpose(), x.row(j).transpose());
            break;
          case ModelFamily::kLowRank:
            pred = lowrank->predict(x.row(i).transpose(), x.row(j).transpose());
            break;
        }
        ps.predicted.push_back(pred);
        ps.observed.push_back(s(i, j));
      }
    }
    return ps;
  };

  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  const auto outer = make_folds(all, opts.folds, opts.seed);

  CvResult result;
  Eigen::VectorXd fold_rhos(opts.folds);
  for (std::size_t f = 0; f < outer.size(); ++f) {
    std::vector<Eigen::Index> train;
    for (std::size_t g = 0; g < outer.size(); ++g) {
      if (g == f) continue;
      train.insert(train.end(), outer[g].begin(), outer[g].end());
    }
    std::sort(train.begin(), train.end());

    Candidate chosen = candidates.front();
    if (candidates.size() > 1) {
      const auto inner =
          make_folds(train, opts.folds, mix_seed(opts.seed, f + 1));
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        double total = 0.0;
        for (std::size_t g = 0; g < inner.size(); ++g) {
          std::vector<Eigen::Index> inner_train;
          for (std::size_t h = 0; h < inner.size(); ++h) {
            if (h == g) continue;
            inner_train.insert(inner_train.end(), inner[h].begin(),
                               inner[h].end());
          }
          std::sort(inner_train.begin(), inner_train.end());
          const auto ps = fit_and_score(
              inner_train, inner[g], candidates[c],
              mix_seed(mix_seed(mix_seed(opts.seed, f + 1), c + 1), g + 1));
          total += ps.predicted.size() >= 3 ? safe_rho(ps) : 0.0;
        }
        const double mean_inner = total / static_cast<double>(inner.size());
        if (mean_inner > best_score) {
          best_score = mean_inner;
          chosen = candidates[c];
        }
      }
    }

    const auto ps = fit_and_score(train, outer[f], chosen,
                                  mix_seed(mix_seed(opts.seed, 0xF17u), f + 1));
    const double rho = spearman_rho(ps.predicted, ps.observed);
    fold_rhos(static_cast<Eigen::Index>(f)) = rho;

    CvFoldLog log;
    for (const Eigen::Index i : outer[f]) {
      log.test_items.push_back(e.items()[static_cast<std::size_t>(i)]);
    }
    std::sort(log.test_items.begin(), log.test_items.end());
    log.test_pair_count = ps.predicted.size();
    log.rho = rho;
    log.chosen_alpha = chosen.alpha;
    log.chosen_rank = chosen.rank;
    log.chosen_penalty = chosen.penalty;
    result.folds.push_back(std::move(log));
  }

  result.mean_rho = fold_rhos.mean();
  const double var =
      (fold_rhos.array() - result.mean_rho).square().sum() /
      static_cast<double>(opts.folds - 1);
  result.std_rho = std::sqrt(var);
  return result;
}

// ---------------------------------------------------------------------------
// Representative selection (k-means)

namespace {

struct KmeansRun {
  std::vector<int> assignment;
  Eigen::MatrixXd centroids;
  double inertia = std::numeric_limits<double>::infinity();
};

KmeansRun kmeans_once(const Eigen::MatrixXd& x, int k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centroids(k, x.cols());
  // k-means++ seeding
  {
    std::uniform_int_distribution<Eigen::Index> uni(0, n - 1);
    centroids.row(0) = x.row(uni(rng));
    Eigen::VectorXd d2 =
        (x.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      Eigen::Index pick = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> ureal(0.0, total);
        double r = ureal(rng);
        for (Eigen::Index i = 0; i < n; ++i) {
          r -= d2(i);
          if (r <= 0.0) {
            pick = i;
            break;
          }
          pick = i;
        }
      } else {
        // all remaining mass zero (duplicate points): pick any unused index
        std::uniform_int_distribution<Eigen::Index> uni2(0, n - 1);
        pick = uni2(rng);
      }
      centroids.row(c) = x.row(pick);
      d2 = d2.cwiseMin(
          (x.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
  }

  KmeansRun run;
  run.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (x.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (run.assignment[static_cast<std::size_t>(i)] != best) {
        run.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(run.assignment[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(run.assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // empty cluster: reseed to the point farthest from its centroid
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (x.row(i) - centroids.row(run.assignment[static_cast<std::size_t>(i)]))
                  .squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.row(c) = x.row(far);
      }
    }
  }
  run.centroids = centroids;
  run.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    run.inertia +=
        (x.row(i) - centroids.row(run.assignment[static_cast<std::size_t>(i)]))
            .squaredNorm();
  }
  return run;
}

}  // namespace

std::vector<std::string> select_representatives(const EmbeddingSet& e, int k,
                                                std::uint64_t seed,
                                                int restarts,
                                                double* inertia_out) {
  if (k < 1) throw std::invalid_argument("select_representatives: k must be >= 1");
  if (static_cast<Eigen::Index>(k) > e.item_count()) {
    throw std::invalid_argument(
        "select_representatives: k exceeds the number of items");
  }
  if (restarts < 1) restarts = 1;
  const Eigen::MatrixXd x = e.matrix();
  std::mt19937_64 rng(seed);
  KmeansRun best;
  for (int r = 0; r < restarts; ++r) {
    KmeansRun run = kmeans_once(x, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  if (inertia_out) *inertia_out = best.inertia;

  std::vector<bool> taken(static_cast<std::size_t>(x.rows()), false);
  std::vector<std::string> reps;
  reps.reserve(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    Eigen::Index nearest = -1;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double d = (x.row(i) - best.centroids.row(c)).squaredNorm();
      if (d < nearest_d) {
        nearest_d = d;
        nearest = i;
      }
    }
    taken[static_cast<std::size_t>(nearest)] = true;
    reps.push_back(e.items()[static_cast<std::size_t>(nearest)]);
  }
  return reps;
}

// ---------------------------------------------------------------------------
// Classical MDS

MdsResult classical_mds(const SimilarityMatrix& s, int dims) {
  if (dims < 1) throw std::invalid_argument("classical_mds: dims must be >= 1");
  const Eigen::Index n = s.size();
  Eigen::MatrixXd d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = i == j ? 0.0 : 1.0 - s.values()(i, j);
      d2(i, j) = d * d;
    }
  }
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) -
      Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd b = -0.5 * centering * d2 * centering;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("classical_mds: eigendecomposition failed");
  }

  MdsResult out;
  out.coords = Eigen::MatrixXd::Zero(n, dims);
  out.eigenvalues = Eigen::VectorXd::Zero(dims);
  // Eigen returns ascending eigenvalues; take the largest positive ones.
  int placed = 0;
  for (Eigen::Index k = n - 1; k >= 0 && placed < dims; --k) {
    const double lambda = eig.eigenvalues()(k);
    if (lambda <= 1e-12) break;
    out.coords.col(placed) = eig.eigenvectors().col(k) * std::sqrt(lambda);
    out.eigenvalues(placed) = lambda;
    ++placed;
  }
  out.positive_dims = placed;
  if (placed < dims) {
    std::cerr << "classical_mds: only " << placed << " positive eigenvalue(s), "
              << "padding " << dims - placed << " coordinate(s) with zeros\n";
  }
  return out;
}

}  // namespace ibtrans
