#include "popdiv/crp_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "popdiv/error.hpp"

namespace popdiv {

namespace {

std::size_t dimension_of(std::span<const JudgmentVector> data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyPopulation, "no subjects to cluster");
  const std::size_t d = data.front().bits.size();
  for (const auto& v : data) {
    if (v.bits.size() != d) {
      throw Error(ErrorCode::kSchemaError, "judgment vectors differ in length (" + std::to_string(d) +
                                               " vs " + std::to_string(v.bits.size()) + ")");
    }
  }
  return d;
}

void add_member(ClusterStats& c, const JudgmentVector& v) {
  ++c.size;
  for (std::size_t d = 0; d < v.bits.size(); ++d) {
    if (v.bits[d] == Judgment::kMissing) continue;
    ++c.observed[d];
    if (v.bits[d] == Judgment::kOne) ++c.ones[d];
  }
}

void remove_member(ClusterStats& c, const JudgmentVector& v) {
  --c.size;
  for (std::size_t d = 0; d < v.bits.size(); ++d) {
    if (v.bits[d] == Judgment::kMissing) continue;
    --c.observed[d];
    if (v.bits[d] == Judgment::kOne) --c.ones[d];
  }
}

// Log-predictive lookup tables: log P(bit | h ones among t observed) =
// log(beta + count) - log(beta_a + beta_b + t), with counts bounded by n.
class Predictive {
 public:
  Predictive(const CrpConfig& cfg, std::size_t n) : log_a_(n + 1), log_b_(n + 1), log_total_(n + 1) {
    for (std::size_t k = 0; k <= n; ++k) {
      log_a_[k] = std::log(cfg.beta_a + static_cast<double>(k));
      log_b_[k] = std::log(cfg.beta_b + static_cast<double>(k));
      log_total_[k] = std::log(cfg.beta_a + cfg.beta_b + static_cast<double>(k));
    }
  }

  double log_likelihood(const JudgmentVector& v, const ClusterStats* c) const {
    double sum = 0.0;
    for (std::size_t d = 0; d < v.bits.size(); ++d) {
      const Judgment bit = v.bits[d];
      if (bit == Judgment::kMissing) continue;
      const int ones = c ? c->ones[d] : 0;
      const int obs = c ? c->observed[d] : 0;
      sum += (bit == Judgment::kOne ? log_a_[ones] : log_b_[obs - ones]) - log_total_[obs];
    }
    return sum;
  }

 private:
  std::vector<double> log_a_;
  std::vector<double> log_b_;
  std::vector<double> log_total_;
};

void sweep(CrpState& state, std::span<const JudgmentVector> data, const CrpConfig& cfg, const Predictive& pred,
           Rng& rng, std::vector<double>& weights) {
  const std::size_t dims = data.front().bits.size();
  const double log_alpha = std::log(cfg.alpha);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& v = data[i];
    const std::size_t old = state.assignment[i];
    remove_member(state.clusters[old], v);
    if (state.clusters[old].size == 0) {
      state.clusters.erase(state.clusters.begin() + static_cast<std::ptrdiff_t>(old));
      for (auto& a : state.assignment) {
        if (a > old) --a;
      }
    }

    const std::size_t k_count = state.clusters.size();
    weights.resize(k_count + 1);
    double max_w = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto& c = state.clusters[k];
      weights[k] = std::log(static_cast<double>(c.size)) + pred.log_likelihood(v, &c);
      max_w = std::max(max_w, weights[k]);
    }
    weights[k_count] = log_alpha + pred.log_likelihood(v, nullptr);
    max_w = std::max(max_w, weights[k_count]);

    double total = 0.0;
    for (auto& w : weights) {
      w = std::exp(w - max_w);
      total += w;
    }
    const double u = rng.uniform01() * total;
    std::size_t chosen = k_count;
    double cum = 0.0;
    for (std::size_t k = 0; k <= k_count; ++k) {
      cum += weights[k];
      if (u < cum) {
        chosen = k;
        break;
      }
    }

    if (chosen == k_count) {
      state.clusters.push_back(ClusterStats{0, std::vector<int>(dims, 0), std::vector<int>(dims, 0)});
    }
    add_member(state.clusters[chosen], v);
    state.assignment[i] = chosen;
  }
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

std::vector<PairQuestion> canonical_pairs(std::span<const std::string> category_words, std::string_view target) {
  std::set<std::string> others;
  for (const auto& w : category_words) {
    if (w != target) others.insert(w);
  }
  const std::vector<std::string> sorted(others.begin(), others.end());
  std::vector<PairQuestion> pairs;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) pairs.push_back(PairQuestion{sorted[i], sorted[j]});
  }
  return pairs;
}

double JudgmentVector::missing_fraction() const {
  if (bits.empty()) return 0.0;
  const auto missing = std::count(bits.begin(), bits.end(), Judgment::kMissing);
  return static_cast<double>(missing) / static_cast<double>(bits.size());
}

void CrpConfig::validate() const {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidConfig, "crp alpha must be > 0");
  if (!(beta_a > 0.0) || !(beta_b > 0.0)) throw Error(ErrorCode::kInvalidConfig, "crp beta priors must be > 0");
  if (burn_in < 0) throw Error(ErrorCode::kInvalidConfig, "crp burn_in must be >= 0");
  if (samples < 1) throw Error(ErrorCode::kInvalidConfig, "crp samples must be >= 1");
}

CrpState CrpState::single_cluster(std::span<const JudgmentVector> data) {
  const std::size_t dims = dimension_of(data);
  CrpState state;
  state.assignment.assign(data.size(), 0);
  state.clusters.push_back(ClusterStats{0, std::vector<int>(dims, 0), std::vector<int>(dims, 0)});
  for (const auto& v : data) add_member(state.clusters[0], v);
  return state;
}

bool audit_state(const CrpState& state, std::span<const JudgmentVector> data) {
  if (state.assignment.size() != data.size()) return false;
  if (data.empty()) return state.clusters.empty();
  const std::size_t dims = data.front().bits.size();
  std::vector<ClusterStats> fresh(state.clusters.size(),
                                  ClusterStats{0, std::vector<int>(dims, 0), std::vector<int>(dims, 0)});
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (state.assignment[i] >= fresh.size() || data[i].bits.size() != dims) return false;
    add_member(fresh[state.assignment[i]], data[i]);
  }
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    const auto& c = state.clusters[k];
    if (fresh[k].size == 0 || c.size != fresh[k].size || c.ones != fresh[k].ones ||
        c.observed != fresh[k].observed) {
      return false;
    }
  }
  return true;
}

void gibbs_sweep(CrpState& state, std::span<const JudgmentVector> data, const CrpConfig& cfg, Rng& rng) {
  const std::size_t dims = dimension_of(data);
  bool shaped = state.assignment.size() == data.size();
  for (const auto& c : state.clusters) shaped = shaped && c.ones.size() == dims && c.observed.size() == dims;
  for (auto a : state.assignment) shaped = shaped && a < state.clusters.size();
  if (!shaped) throw Error(ErrorCode::kInconsistentState, "state does not match the data's shape");
  const Predictive pred(cfg, data.size());
  std::vector<double> weights;
  sweep(state, data, cfg, pred, rng, weights);
  if (cfg.audit && !audit_state(state, data)) {
    throw Error(ErrorCode::kInconsistentState, "cluster counts out of sync");
  }
}

std::size_t ClusterPosterior::mode_k() const {
  return static_cast<std::size_t>(std::max_element(k_probability.begin(), k_probability.end()) -
                                  k_probability.begin()) +
         1;
}

ClusterPosterior run_chain(std::span<const JudgmentVector> data, const CrpConfig& cfg) {
  cfg.validate();
  dimension_of(data);
  CrpState state = CrpState::single_cluster(data);
  const Predictive pred(cfg, data.size());
  Rng rng(cfg.seed);
  std::vector<double> weights;
  std::vector<std::size_t> counts(data.size(), 0);
  for (int s = 0; s < cfg.burn_in + cfg.samples; ++s) {
    sweep(state, data, cfg, pred, rng, weights);
    if (cfg.audit && !audit_state(state, data)) {
      throw Error(ErrorCode::kInconsistentState, "cluster counts out of sync");
    }
    if (s >= cfg.burn_in) ++counts[state.num_clusters() - 1];
  }
  ClusterPosterior post;
  post.k_probability.resize(data.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    post.k_probability[k] = static_cast<double>(counts[k]) / static_cast<double>(cfg.samples);
  }
  post.p_one_concept = post.k_probability[0];
  post.p_multiple = 1.0 - post.p_one_concept;
  return post;
}

ClusterPosterior exact_posterior(std::span<const JudgmentVector> data, const CrpConfig& cfg) {
  cfg.validate();
  const std::size_t dims = dimension_of(data);
  const std::size_t n = data.size();
  if (n > kMaxExactSubjects) {
    throw Error(ErrorCode::kTooManySubjects,
                std::to_string(n) + " subjects exceeds the enumeration cap of " + std::to_string(kMaxExactSubjects));
  }
  const double log_alpha = std::log(cfg.alpha);
  const double base = log_beta(cfg.beta_a, cfg.beta_b);

  // Restricted growth strings: labels[0] = 0, labels[i] <= 1 + max(labels[0..i)).
  std::vector<std::size_t> labels(n, 0);
  std::vector<std::size_t> prefix_max(n, 0);
  std::vector<double> log_mass_by_k(n, -std::numeric_limits<double>::infinity());
  std::vector<ClusterStats> clusters;

  auto accumulate = [&](std::size_t k) {
    clusters.assign(k, ClusterStats{0, std::vector<int>(dims, 0), std::vector<int>(dims, 0)});
    for (std::size_t i = 0; i < n; ++i) add_member(clusters[labels[i]], data[i]);
    double lw = static_cast<double>(k) * log_alpha;
    for (const auto& c : clusters) {
      lw += std::lgamma(static_cast<double>(c.size));
      for (std::size_t d = 0; d < dims; ++d) {
        const double ones = c.ones[d];
        const double zeros = c.observed[d] - c.ones[d];
        lw += log_beta(cfg.beta_a + ones, cfg.beta_b + zeros) - base;
      }
    }
    double& acc = log_mass_by_k[k - 1];
    const double hi = std::max(acc, lw);
    acc = hi + std::log(std::exp(acc - hi) + std::exp(lw - hi));
  };

  while (true) {
    accumulate(prefix_max[n - 1] + 1);
    // Advance to the next restricted growth string.
    std::size_t i = n - 1;
    while (i > 0 && labels[i] == prefix_max[i - 1] + 1) --i;
    if (i == 0) break;
    ++labels[i];
    prefix_max[i] = std::max(prefix_max[i - 1], labels[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      labels[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }

  const double hi = *std::max_element(log_mass_by_k.begin(), log_mass_by_k.end());
  double total = 0.0;
  for (double lm : log_mass_by_k) total += std::exp(lm - hi);
  ClusterPosterior post;
  post.k_probability.resize(n);
  for (std::size_t k = 0; k < n; ++k) post.k_probability[k] = std::exp(log_mass_by_k[k] - hi) / total;
  post.p_one_concept = post.k_probability[0];
  post.p_multiple = 1.0 - post.p_one_concept;
  return post;
}

}  // namespace popdiv
