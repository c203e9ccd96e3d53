#include "popdiv/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "popdiv/error.hpp"
#include "popdiv/io.hpp"

namespace popdiv {

namespace {

constexpr std::string_view kInvalidAnswer = "I'm not able to give an answer to that.";
constexpr int kMaxPrototypeDraws = 10000;

std::string concept_key(std::string_view category, std::string_view target) {
  std::string key(category);
  key += '\x1f';
  key += target;
  return key;
}

LabColor snapped(const LabColor& lab) { return hex_to_lab(lab_to_hex(lab)); }

std::vector<LabColor> draw_color_prototypes(const SyntheticWorldSpec& spec, const std::string& word) {
  Rng rng(derive_seed(spec.seed, {"color-prototype", word}));
  const double g_mid = 0.5 * static_cast<double>(spec.n_groups - 1);
  for (int attempt = 0; attempt < kMaxPrototypeDraws; ++attempt) {
    const LabColor center{40.0 + 20.0 * rng.uniform01(), -10.0 + 20.0 * rng.uniform01(),
                          -10.0 + 20.0 * rng.uniform01()};
    double dir[3] = {rng.normal(), rng.normal(), rng.normal()};
    const double norm = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    if (norm == 0.0) continue;
    std::vector<LabColor> protos;
    bool ok = true;
    for (std::size_t g = 0; g < spec.n_groups && ok; ++g) {
      const double offset = spec.separation * (static_cast<double>(g) - g_mid) / norm;
      const LabColor p{center.L + offset * dir[0], center.a + offset * dir[1], center.b + offset * dir[2]};
      ok = in_srgb_gamut(p);
      protos.push_back(p);
    }
    if (!ok) continue;
    for (auto& p : protos) p = snapped(p);
    return protos;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "cannot place " + std::to_string(spec.n_groups) + " color prototypes " +
                  format_number(spec.separation) + " apart inside the sRGB gamut");
}

}  // namespace

void SyntheticWorldSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidConfig, "synthetic world: " + m); };
  if (n_groups < 1) fail("n_groups must be >= 1");
  if (!(sigma_int >= 0.0)) fail("sigma_int must be >= 0");
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) fail("epsilon must lie in [0, 0.5]");
  if (!(invalid_rate >= 0.0 && invalid_rate <= 1.0)) fail("invalid_rate must lie in [0, 1]");
  if (!(separation >= 0.0)) fail("separation must be >= 0");
}

nlohmann::ordered_json SyntheticWorldSpec::to_json() const {
  nlohmann::ordered_json j;
  j["n_groups"] = n_groups;
  j["separation"] = separation;
  j["sigma_int"] = sigma_int;
  j["epsilon"] = epsilon;
  j["invalid_rate"] = invalid_rate;
  j["complementary_concepts"] = complementary_concepts;
  j["seed"] = seed;
  return j;
}

SyntheticWorldSpec SyntheticWorldSpec::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> kKeys{"n_groups",     "separation", "sigma_int", "epsilon",
                                              "invalid_rate", "complementary_concepts", "seed"};
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "synthetic_world must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw Error(ErrorCode::kInvalidConfig, "synthetic_world: unknown key '" + key + "'");
    }
  }
  SyntheticWorldSpec s;
  try {
    s.n_groups = j.value("n_groups", s.n_groups);
    s.separation = j.value("separation", s.separation);
    s.sigma_int = j.value("sigma_int", s.sigma_int);
    s.epsilon = j.value("epsilon", s.epsilon);
    s.invalid_rate = j.value("invalid_rate", s.invalid_rate);
    s.complementary_concepts = j.value("complementary_concepts", s.complementary_concepts);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("synthetic_world: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticWorld SyntheticWorld::generate(const SyntheticWorldSpec& spec, std::span<const std::string> words,
                                        std::span<const CategorySpec> categories) {
  spec.validate();
  SyntheticWorld w;
  w.spec_ = spec;
  nlohmann::ordered_json ident;
  ident["spec"] = spec.to_json();
  ident["words"] = std::vector<std::string>(words.begin(), words.end());
  auto& cats = ident["categories"] = nlohmann::ordered_json::array();

  for (const auto& word : words) w.color_.emplace(word, draw_color_prototypes(spec, word));

  for (const auto& cat : categories) {
    cats.push_back({{"name", cat.name}, {"words", cat.words}});
    for (const auto& target : cat.words) {
      TargetPrototypes tp;
      tp.pairs = canonical_pairs(cat.words, target);
      Rng rng(derive_seed(spec.seed, {"concept-prototype", cat.name, target}));
      for (std::size_t g = 0; g < spec.n_groups; ++g) {
        std::vector<Judgment> bits(tp.pairs.size());
        if (spec.complementary_concepts && g > 0) {
          for (std::size_t d = 0; d < bits.size(); ++d) {
            const bool base_one = tp.bits[0][d] == Judgment::kOne;
            bits[d] = ((g % 2 == 1) != base_one) ? Judgment::kOne : Judgment::kZero;
          }
        } else {
          for (auto& b : bits) b = rng.bernoulli(0.5) ? Judgment::kOne : Judgment::kZero;
        }
        tp.bits.push_back(std::move(bits));
      }
      w.concepts_.emplace(concept_key(cat.name, target), std::move(tp));
    }
  }
  w.identity_ = sha256_hex(ident.dump()).substr(0, 16);
  return w;
}

std::size_t SyntheticWorld::group_of(std::string_view subject_id) const {
  return static_cast<std::size_t>(derive_seed(spec_.seed, {"group", subject_id}) % spec_.n_groups);
}

const LabColor& SyntheticWorld::color_prototype(std::size_t group, std::string_view word) const {
  auto it = color_.find(word);
  if (it == color_.end()) throw Error(ErrorCode::kUnknownWord, "synthetic world has no word '" + std::string(word) + "'");
  return it->second.at(group);
}

Judgment SyntheticWorld::concept_prototype(std::size_t group, std::string_view category, std::string_view target,
                                           const PairQuestion& pair) const {
  auto it = concepts_.find(concept_key(category, target));
  if (it == concepts_.end()) {
    throw Error(ErrorCode::kUnknownWord,
                "synthetic world has no target '" + std::string(target) + "' in '" + std::string(category) + "'");
  }
  const auto& tp = it->second;
  auto pos = std::lower_bound(tp.pairs.begin(), tp.pairs.end(), pair, [](const PairQuestion& a, const PairQuestion& b) {
    return std::tie(a.first, a.second) < std::tie(b.first, b.second);
  });
  if (pos == tp.pairs.end() || !(*pos == pair)) {
    throw Error(ErrorCode::kUnknownWord, "pair (" + pair.first + ", " + pair.second + ") is not a question for '" +
                                             std::string(target) + "'");
  }
  return tp.bits.at(group)[static_cast<std::size_t>(pos - tp.pairs.begin())];
}

Rng SyntheticWorld::query_rng(const QueryRecord& r) const {
  const std::string block = std::to_string(r.block);
  const std::string temp = format_number(r.temperature);
  return Rng(derive_seed(spec_.seed,
                         {"answer", r.subject_id, to_string(r.domain), r.word, r.category, r.target, r.choice1,
                          r.choice2, block, temp}));
}

std::string synthetic_generate(const QueryRecord& record, const SyntheticWorld& world, Rng& rng) {
  const auto& spec = world.spec();
  const std::size_t group = world.group_of(record.subject_id);
  if (record.domain == Domain::kColor) {
    const LabColor& proto = world.color_prototype(group, record.word);
    if (rng.bernoulli(spec.invalid_rate)) return std::string(kInvalidAnswer);
    const LabColor noisy{proto.L + spec.sigma_int * rng.normal(), proto.a + spec.sigma_int * rng.normal(),
                         proto.b + spec.sigma_int * rng.normal()};
    return "#" + lab_to_hex(noisy).code();
  }
  const bool presented_in_order = record.choice1 < record.choice2;
  const PairQuestion pair = presented_in_order ? PairQuestion{record.choice1, record.choice2}
                                               : PairQuestion{record.choice2, record.choice1};
  Judgment bit = world.concept_prototype(group, record.category, record.target, pair);
  if (rng.bernoulli(spec.invalid_rate)) return std::string(kInvalidAnswer);
  if (rng.bernoulli(spec.epsilon)) bit = bit == Judgment::kOne ? Judgment::kZero : Judgment::kOne;
  return bit == Judgment::kOne ? pair.first : pair.second;
}

nlohmann::json SyntheticBackend::request_for(const QueryRecord& r) const {
  return nlohmann::json{{"world", world_.identity()}, {"temperature", r.temperature}, {"prompt", r.query_text}};
}

Completion SyntheticBackend::complete(const QueryRecord& r) {
  Rng rng = world_.query_rng(r);
  Completion c;
  c.text = synthetic_generate(r, world_, rng);
  c.meta["group"] = world_.group_of(r.subject_id);
  return c;
}

}  // namespace popdiv
