#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdiv/colorlab.hpp"
#include "popdiv/crp_cluster.hpp"
#include "popdiv/llm_io.hpp"
#include "popdiv/popsim.hpp"

namespace popdiv {

/// Parameters of a planted-structure population. Subjects fall into
/// n_groups latent groups; each group has its own color prototype per word
/// and its own answer bit per concept pair question.
struct SyntheticWorldSpec {
  std::size_t n_groups = 1;
  double separation = 60.0;   // CIE76 distance between adjacent group prototypes
  double sigma_int = 5.0;     // per-axis Gaussian answer noise in Lab units
  double epsilon = 0.05;      // concept answer flip probability
  double invalid_rate = 0.0;  // probability of an unparseable answer
  bool complementary_concepts = false;  // odd groups answer the complement of group 0
  std::uint64_t seed = 0;

  /// Throws InvalidConfig unless n_groups >= 1, sigma_int >= 0,
  /// epsilon in [0, 0.5], invalid_rate in [0, 1], separation >= 0.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static SyntheticWorldSpec from_json(const nlohmann::json& j);
};

class SyntheticWorld {
 public:
  /// Per-group prototypes for every listed word and category target.
  /// Color prototypes lie on a line through a random in-gamut center with
  /// adjacent groups `separation` apart, redrawn until every prototype is
  /// inside the sRGB gamut; they are snapped to 8-bit codes so a noiseless
  /// world reproduces them exactly.
  static SyntheticWorld generate(const SyntheticWorldSpec& spec, std::span<const std::string> words,
                                 std::span<const CategorySpec> categories);

  const SyntheticWorldSpec& spec() const { return spec_; }

  /// Stable hash of (world seed, subject id) modulo n_groups.
  std::size_t group_of(std::string_view subject_id) const;

  /// Throws UnknownWord.
  const LabColor& color_prototype(std::size_t group, std::string_view word) const;

  /// Prototype bit of `group` for canonical pair (first, second) of target.
  Judgment concept_prototype(std::size_t group, std::string_view category, std::string_view target,
                             const PairQuestion& pair) const;

  /// Per-query generator: a pure function of (world seed, subject, query
  /// identity, block, temperature).
  Rng query_rng(const QueryRecord& r) const;

  /// Content hash of the spec and vocabulary, used as the backend identity.
  const std::string& identity() const { return identity_; }

 private:
  struct TargetPrototypes {
    std::vector<PairQuestion> pairs;
    std::vector<std::vector<Judgment>> bits;  // [group][pair]
  };

  SyntheticWorldSpec spec_;
  std::map<std::string, std::vector<LabColor>, std::less<>> color_;
  std::map<std::string, TargetPrototypes, std::less<>> concepts_;  // key: category + '\x1f' + target
  std::string identity_;
};

/// Color query: "#RRGGBB" from the subject's group prototype plus isotropic
/// N(0, sigma_int^2) noise, clipped to gamut. Concept query: the presented
/// choice that the group's prototype bit picks, flipped with probability
/// epsilon. With probability invalid_rate the answer carries neither.
std::string synthetic_generate(const QueryRecord& record, const SyntheticWorld& world, Rng& rng);

class SyntheticBackend : public Backend {
 public:
  explicit SyntheticBackend(SyntheticWorld world) : world_(std::move(world)) {}

  std::string id() const override { return "synthetic:" + world_.identity(); }
  std::string model() const override { return "synthetic"; }
  nlohmann::json request_for(const QueryRecord& r) const override;
  Completion complete(const QueryRecord& r) override;

  const SyntheticWorld& world() const { return world_; }

 private:
  SyntheticWorld world_;
};

}  // namespace popdiv
