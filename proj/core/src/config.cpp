#include "ibtrans/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ibtrans/io.hpp"

namespace ibtrans {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number '" + v + "' for " + key);
  }
}

long long to_int(const std::string& v, const std::string& key) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: bad integer '" + v + "' for " + key);
  }
  return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: bad seed '" + v + "' for " + key);
  }
  return out;
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "' for " + key);
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ",";
    out += parts[i];
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double d : v) parts.push_back(format_g12(d));
  return join(parts);
}

std::string join_ints(const std::vector<int>& v) {
  std::vector<std::string> parts;
  for (int i : v) parts.push_back(std::to_string(i));
  return join(parts);
}

}  // namespace

void RunConfig::load_ini(std::istream& in, const std::string& source_name) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"inputs.alignments", [this](const std::string& v, const std::string&) {
         alignments = split_list(v);
       }},
      {"inputs.pilesort", [this](const std::string& v, const std::string&) { pilesort = v; }},
      {"inputs.embeddings", [this](const std::string& v, const std::string&) { embeddings = v; }},
      {"inputs.model", [this](const std::string& v, const std::string&) { model = v; }},
      {"inputs.frontier", [this](const std::string& v, const std::string&) { frontier_csv = v; }},
      {"output.dir", [this](const std::string& v, const std::string&) { out_dir = v; }},
      {"similarity.folds", [this](const std::string& v, const std::string& k) {
         cv_folds = static_cast<int>(to_int(v, k));
       }},
      {"similarity.cv_seed", [this](const std::string& v, const std::string& k) {
         cv_seed = to_u64(v, k);
       }},
      {"similarity.train_seed", [this](const std::string& v, const std::string& k) {
         train_seed = to_u64(v, k);
       }},
      {"similarity.ridge_alphas", [this](const std::string& v, const std::string& k) {
         ridge_alphas.clear();
         for (const auto& p : split_list(v)) ridge_alphas.push_back(to_double(p, k));
       }},
      {"similarity.lowrank_ranks", [this](const std::string& v, const std::string& k) {
         lowrank_ranks.clear();
         for (const auto& p : split_list(v)) lowrank_ranks.push_back(static_cast<int>(to_int(p, k)));
       }},
      {"similarity.lowrank_penalties", [this](const std::string& v, const std::string& k) {
         lowrank_penalties.clear();
         for (const auto& p : split_list(v)) lowrank_penalties.push_back(to_double(p, k));
       }},
      {"similarity.lowrank_max_iters", [this](const std::string& v, const std::string& k) {
         lowrank_max_iters = static_cast<int>(to_int(v, k));
       }},
      {"similarity.lowrank_tol", [this](const std::string& v, const std::string& k) {
         lowrank_tol = to_double(v, k);
       }},
      {"beliefs.gamma", [this](const std::string& v, const std::string& k) {
         gammas.clear();
         for (const auto& p : split_list(v)) gammas.push_back(to_double(p, k));
       }},
      {"beliefs.source", [this](const std::string& v, const std::string&) {
         belief_source = v;
       }},
      {"frontier.beta_min", [this](const std::string& v, const std::string& k) {
         beta_min = to_double(v, k);
       }},
      {"frontier.beta_max", [this](const std::string& v, const std::string& k) {
         beta_max = to_double(v, k);
       }},
      {"frontier.beta_count", [this](const std::string& v, const std::string& k) {
         beta_count = static_cast<int>(to_int(v, k));
       }},
      {"frontier.tol", [this](const std::string& v, const std::string& k) {
         fp_tol = to_double(v, k);
       }},
      {"frontier.max_iters", [this](const std::string& v, const std::string& k) {
         fp_max_iters = static_cast<int>(to_int(v, k));
       }},
      {"frontier.jitter_scale", [this](const std::string& v, const std::string& k) {
         jitter_scale = to_double(v, k);
       }},
      {"frontier.jitter_seed", [this](const std::string& v, const std::string& k) {
         jitter_seed = to_u64(v, k);
       }},
      {"frontier.max_words", [this](const std::string& v, const std::string& k) {
         max_words = static_cast<int>(to_int(v, k));
       }},
      {"baselines.fractions", [this](const std::string& v, const std::string& k) {
         fractions.clear();
         for (const auto& p : split_list(v)) fractions.push_back(to_double(p, k));
       }},
      {"baselines.perturbed_per_fraction", [this](const std::string& v, const std::string& k) {
         perturbed_per_fraction = static_cast<int>(to_int(v, k));
       }},
      {"baselines.random_count", [this](const std::string& v, const std::string& k) {
         random_count = static_cast<int>(to_int(v, k));
       }},
      {"baselines.perturb_seed", [this](const std::string& v, const std::string& k) {
         perturb_seed = to_u64(v, k);
       }},
      {"baselines.random_seed", [this](const std::string& v, const std::string& k) {
         random_seed = to_u64(v, k);
       }},
      {"baselines.soft_random", [this](const std::string& v, const std::string& k) {
         soft_random = to_bool(v, k);
       }},
      {"run.threads", [this](const std::string& v, const std::string& k) {
         threads = static_cast<int>(to_int(v, k));
       }},
      {"run.strict", [this](const std::string& v, const std::string& k) {
         strict = to_bool(v, k);
       }},
      {"run.prior", [this](const std::string& v, const std::string&) { prior = v; }},
      {"run.intersect_meanings", [this](const std::string& v, const std::string& k) {
         intersect_meanings = to_bool(v, k);
       }},
      {"run.jitter_column", [this](const std::string& v, const std::string& k) {
         jitter_column = to_bool(v, k);
       }},
      {"run.display_jitter_seed", [this](const std::string& v, const std::string& k) {
         display_jitter_seed = to_u64(v, k);
       }},
      {"run.kmeans_k", [this](const std::string& v, const std::string& k) {
         kmeans_k = static_cast<int>(to_int(v, k));
       }},
      {"run.kmeans_seed", [this](const std::string& v, const std::string& k) {
         kmeans_seed = to_u64(v, k);
       }},
      {"run.kmeans_restarts", [this](const std::string& v, const std::string& k) {
         kmeans_restarts = static_cast<int>(to_int(v, k));
       }},
      {"run.mds_dims", [this](const std::string& v, const std::string& k) {
         mds_dims = static_cast<int>(to_int(v, k));
       }},
  };

  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') {
        std::ostringstream msg;
        msg << source_name << ":" << line_no << ": malformed section '" << text << "'";
        throw std::invalid_argument(msg.str());
      }
      section = trim(text.substr(1, text.size() - 2));
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": expected key = value";
      throw std::invalid_argument(msg.str());
    }
    const std::string key = section + "." + trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": unknown config key '" << key << "'";
      throw std::invalid_argument(msg.str());
    }
    it->second(value, key);
  }
}

std::string RunConfig::to_ini() const {
  std::ostringstream out;
  out << "[inputs]\n";
  out << "alignments = " << join(alignments) << "\n";
  out << "pilesort = " << pilesort << "\n";
  out << "embeddings = " << embeddings << "\n";
  out << "model = " << model << "\n";
  out << "frontier = " << frontier_csv << "\n";
  out << "\n[output]\n";
  out << "dir = " << out_dir << "\n";
  out << "\n[similarity]\n";
  out << "folds = " << cv_folds << "\n";
  out << "cv_seed = " << cv_seed << "\n";
  out << "train_seed = " << train_seed << "\n";
  out << "ridge_alphas = " << join_doubles(ridge_alphas) << "\n";
  out << "lowrank_ranks = " << join_ints(lowrank_ranks) << "\n";
  out << "lowrank_penalties = " << join_doubles(lowrank_penalties) << "\n";
  out << "lowrank_max_iters = " << lowrank_max_iters << "\n";
  out << "lowrank_tol = " << format_g12(lowrank_tol) << "\n";
  out << "\n[beliefs]\n";
  out << "gamma = " << join_doubles(gammas) << "\n";
  out << "source = " << belief_source << "\n";
  out << "\n[frontier]\n";
  out << "beta_min = " << format_g12(beta_min) << "\n";
  out << "beta_max = " << format_g12(beta_max) << "\n";
  out << "beta_count = " << beta_count << "\n";
  out << "tol = " << format_g12(fp_tol) << "\n";
  out << "max_iters = " << fp_max_iters << "\n";
  out << "jitter_scale = " << format_g12(jitter_scale) << "\n";
  out << "jitter_seed = " << jitter_seed << "\n";
  out << "max_words = " << max_words << "\n";
  out << "\n[baselines]\n";
  out << "fractions = " << join_doubles(fractions) << "\n";
  out << "perturbed_per_fraction = " << perturbed_per_fraction << "\n";
  out << "random_count = " << random_count << "\n";
  out << "perturb_seed = " << perturb_seed << "\n";
  out << "random_seed = " << random_seed << "\n";
  out << "soft_random = " << (soft_random ? "true" : "false") << "\n";
  out << "\n[run]\n";
  out << "threads = " << threads << "\n";
  out << "strict = " << (strict ? "true" : "false") << "\n";
  out << "prior = " << prior << "\n";
  out << "intersect_meanings = " << (intersect_meanings ? "true" : "false") << "\n";
  out << "jitter_column = " << (jitter_column ? "true" : "false") << "\n";
  out << "display_jitter_seed = " << display_jitter_seed << "\n";
  out << "kmeans_k = " << kmeans_k << "\n";
  out << "kmeans_seed = " << kmeans_seed << "\n";
  out << "kmeans_restarts = " << kmeans_restarts << "\n";
  out << "mds_dims = " << mds_dims << "\n";
  return out.str();
}

void RunConfig::validate() const {
  if (cv_folds < 2) throw std::invalid_argument("config: similarity.folds must be >= 2");
  if (lowrank_max_iters < 1) throw std::invalid_argument("config: lowrank_max_iters must be >= 1");
  if (!(lowrank_tol > 0.0)) throw std::invalid_argument("config: lowrank_tol must be > 0");
  if (gammas.empty()) throw std::invalid_argument("config: at least one gamma required");
  if (belief_source != "model" && belief_source != "empirical") {
    throw std::invalid_argument("config: beliefs.source must be model or empirical");
  }
  if (!(beta_min > 0.0) || !(beta_max >= beta_min)) {
    throw std::invalid_argument("config: need 0 < beta_min <= beta_max");
  }
  if (beta_count < 1) throw std::invalid_argument("config: beta_count must be >= 1");
  if (!(fp_tol > 0.0)) throw std::invalid_argument("config: frontier tol must be > 0");
  if (fp_max_iters < 1) throw std::invalid_argument("config: frontier max_iters must be >= 1");
  if (jitter_scale < 0.0) throw std::invalid_argument("config: jitter_scale must be >= 0");
  if (max_words < 0) throw std::invalid_argument("config: max_words must be >= 0");
  for (double f : fractions) {
    if (f < 0.0 || f > 1.0) {
      throw std::invalid_argument("config: perturbation fractions must lie in [0,1]");
    }
  }
  if (perturbed_per_fraction < 0) {
    throw std::invalid_argument("config: perturbed_per_fraction must be >= 0");
  }
  if (random_count < 0) throw std::invalid_argument("config: random_count must be >= 0");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (prior != "uniform" && prior != "frequency") {
    throw std::invalid_argument("config: run.prior must be uniform or frequency");
  }
  if (kmeans_k < 1) throw std::invalid_argument("config: kmeans_k must be >= 1");
  if (kmeans_restarts < 1) throw std::invalid_argument("config: kmeans_restarts must be >= 1");
  if (mds_dims < 1) throw std::invalid_argument("config: mds_dims must be >= 1");
}

}  // namespace ibtrans
