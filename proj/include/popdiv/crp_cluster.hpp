#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "popdiv/random.hpp"

namespace popdiv {

enum class Judgment : std::int8_t { kMissing = -1, kZero = 0, kOne = 1 };

/// An unordered choice pair stored in canonical (alphabetical) order.
struct PairQuestion {
  std::string first;
  std::string second;

  friend bool operator==(const PairQuestion&, const PairQuestion&) = default;
};

/// The C(m-1, 2) pair questions for `target` within a category of m words,
/// sorted lexicographically by (first, second) with first < second.
std::vector<PairQuestion> canonical_pairs(std::span<const std::string> category_words, std::string_view target);

/// One subject's coded answers for one target word. bits[d] is kOne when the
/// alphabetically first word of canonical pair d was chosen.
struct JudgmentVector {
  std::string subject_id;
  std::string target_word;
  std::string category;
  std::vector<Judgment> bits;

  double missing_fraction() const;
};

#ifdef NDEBUG
inline constexpr bool kAuditSweepsByDefault = false;
#else
inline constexpr bool kAuditSweepsByDefault = true;
#endif

struct CrpConfig {
  double alpha = 0.5;
  double beta_a = 1.0;
  double beta_b = 1.0;
  int burn_in = 500;
  int samples = 2000;
  std::uint64_t seed = 0;
  bool audit = kAuditSweepsByDefault;  // audit_state after every sweep

  /// Throws InvalidConfig unless alpha, beta_a, beta_b > 0, burn_in >= 0 and
  /// samples >= 1.
  void validate() const;
};

struct ClusterStats {
  std::size_t size = 0;
  std::vector<int> ones;      // per dimension: members answering kOne
  std::vector<int> observed;  // per dimension: members with a non-missing answer
};

/// Partition of subjects into non-empty clusters with cached sufficient
/// statistics. Clusters are kept in creation order; assignment[i] indexes
/// into clusters.
struct CrpState {
  std::vector<std::size_t> assignment;
  std::vector<ClusterStats> clusters;

  static CrpState single_cluster(std::span<const JudgmentVector> data);

  std::size_t num_clusters() const { return clusters.size(); }
};

/// True iff the cached counts equal counts recomputed from the assignment
/// and no cluster is empty.
bool audit_state(const CrpState& state, std::span<const JudgmentVector> data);

/// One collapsed Gibbs sweep: each subject, in index order, is removed from
/// its cluster (dropping the cluster if it empties) and reassigned with
///   P(existing k) ∝ n_k * prod_d pred(bit_d | k)
///   P(new)        ∝ alpha * prod_d pred(bit_d | empty)
/// where pred is the Beta-Bernoulli posterior predictive and missing bits
/// contribute 1. Candidates are scored in cluster order with the new table
/// last, and one uniform01() draw selects among them.
///
/// With cfg.audit the state is checked afterwards (InconsistentState).
void gibbs_sweep(CrpState& state, std::span<const JudgmentVector> data, const CrpConfig& cfg, Rng& rng);

/// Posterior over K, the number of occupied clusters.
struct ClusterPosterior {
  std::vector<double> k_probability;  // k_probability[k - 1] = P(K = k), k = 1..n
  double p_one_concept = 0.0;
  double p_multiple = 1.0;

  std::size_t mode_k() const;
};

/// Starts from one cluster, discards cfg.burn_in sweeps and histograms K over
/// cfg.samples retained sweeps. Throws EmptyPopulation for no subjects and
/// SchemaError if vector lengths differ.
ClusterPosterior run_chain(std::span<const JudgmentVector> data, const CrpConfig& cfg);

inline constexpr std::size_t kMaxExactSubjects = 10;

/// Exact posterior by enumerating every set partition (Bell(10) = 115,975
/// at the cap). Throws TooManySubjects above kMaxExactSubjects.
ClusterPosterior exact_posterior(std::span<const JudgmentVector> data, const CrpConfig& cfg);

}  // namespace popdiv
