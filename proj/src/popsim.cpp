#include "popdiv/popsim.hpp"

#include <fmt/format.h>

#include <cctype>
#include <set>
#include <sstream>

#include "popdiv/crp_cluster.hpp"
#include "popdiv/error.hpp"
#include "popdiv/io.hpp"

namespace popdiv {

namespace {

template <typename T>
const T& pick(const std::vector<T>& pool, Rng& rng) {
  return pool[rng.uniform_index(pool.size())];
}

std::vector<std::string> split_words(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw Error(ErrorCode::kSchemaError, std::string("persona pools need an array '") + key + "'");
  }
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

std::string_view to_string(Domain d) { return d == Domain::kColor ? "color" : "concept"; }

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kNone: return "none";
    case Condition::kPersona: return "persona";
    case Condition::kRandom: return "random";
    case Condition::kNonsense: return "nonsense";
  }
  return "none";
}

Domain parse_domain(std::string_view s) {
  if (s == "color") return Domain::kColor;
  if (s == "concept") return Domain::kConcept;
  throw Error(ErrorCode::kInvalidConfig, "unknown domain '" + std::string(s) + "'");
}

Condition parse_condition(std::string_view s) {
  if (s == "none") return Condition::kNone;
  if (s == "persona") return Condition::kPersona;
  if (s == "random") return Condition::kRandom;
  if (s == "nonsense") return Condition::kNonsense;
  throw Error(ErrorCode::kInvalidConfig, "unknown condition '" + std::string(s) + "'");
}

void PersonaPools::validate() const {
  const std::pair<const char*, const std::vector<std::string>*> pools[] = {
      {"race", &race}, {"gender", &gender}, {"hometown", &hometown},
      {"state", &state}, {"occupation", &occupation}};
  for (const auto& [name, pool] : pools) {
    if (pool->empty()) throw Error(ErrorCode::kEmptyPool, std::string("persona pool '") + name + "' is empty");
    for (const auto& v : *pool) {
      if (trim(v).empty()) throw Error(ErrorCode::kEmptyPool, std::string("blank value in pool '") + name + "'");
    }
  }
  if (age_min < 1 || age_max < age_min) {
    throw Error(ErrorCode::kEmptyPool, fmt::format("age range [{}, {}] is empty or non-positive", age_min, age_max));
  }
}

PersonaPools PersonaPools::from_json(const nlohmann::json& j) {
  PersonaPools p;
  p.race = string_list(j, "race");
  p.gender = string_list(j, "gender");
  p.hometown = string_list(j, "hometown");
  p.state = string_list(j, "state");
  p.occupation = string_list(j, "occupation");
  if (!j.contains("age") || !j.at("age").is_object()) {
    throw Error(ErrorCode::kSchemaError, "persona pools need an 'age' object with min and max");
  }
  p.age_min = j.at("age").at("min").get<int>();
  p.age_max = j.at("age").at("max").get<int>();
  p.validate();
  return p;
}

PersonaPools PersonaPools::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaError, path.string() + ": " + e.what());
  }
}

PersonaSpec sample_persona(const PersonaPools& pools, Rng& rng) {
  pools.validate();
  PersonaSpec p;
  p.race = pick(pools.race, rng);
  p.gender = pick(pools.gender, rng);
  p.hometown = pick(pools.hometown, rng);
  p.state = pick(pools.state, rng);
  p.age = pools.age_min + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(pools.age_max - pools.age_min + 1)));
  p.occupation = pick(pools.occupation, rng);
  return p;
}

std::string render_persona(const PersonaSpec& p) {
  const auto raw = fmt::format("You are a {} {} from {} in {} who is {} and works as a {}.", p.race, p.gender,
                               p.hometown, p.state, p.age, p.occupation);
  return join(split_words(raw));
}

PromptContext make_random_context(std::span<const std::string> corpus, Rng& rng) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "random-context corpus is empty");
  const std::size_t i = rng.uniform_index(corpus.size());
  return PromptContext{Condition::kRandom, corpus[i], fmt::format("random-{}", i)};
}

PromptContext make_nonsense_context(const PromptContext& random_ctx, Rng& rng) {
  if (random_ctx.condition != Condition::kRandom) {
    throw Error(ErrorCode::kInvalidPlan, "nonsense contexts are scrambled from random contexts");
  }
  auto words = split_words(random_ctx.text);
  rng.shuffle(words.begin(), words.end());
  for (auto& w : words) w = to_lower(w);
  if (!words.empty() && !words.front().empty()) {
    words.front()[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(words.front()[0])));
  }
  std::string id = random_ctx.context_id;
  if (id.rfind("random", 0) == 0) id.replace(0, 6, "nonsense");
  return PromptContext{Condition::kNonsense, join(words), id};
}

std::string color_query(std::string_view word) {
  return fmt::format(
      "Question: What is the HEX code of the color you most associate with the word {}? You must respond with a "
      "guess, even if you're unsure. Make sure your response contains a valid 6-digit HEX code.",
      word);
}

std::string concept_query(std::string_view target, std::string_view choice1, std::string_view choice2) {
  return fmt::format("Question: Which is more similar to a {}, {} or {}? Respond only with \"{}\" or \"{}\".",
                     target, choice1, choice2, choice1, choice2);
}

void RunPlan::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidPlan, msg); };
  if (conditions.empty()) fail("no prompting conditions");
  if (temperatures.empty()) fail("no temperatures");
  for (double t : temperatures) {
    if (!(t > 0.0)) fail(fmt::format("temperature {} must be positive", t));
  }
  if (n_subjects == 0) fail("n_subjects must be positive");
  std::set<Condition> seen_conditions;
  for (auto c : conditions) {
    if (!seen_conditions.insert(c).second) fail("duplicate condition " + std::string(to_string(c)));
  }
  std::set<double> seen_temps(temperatures.begin(), temperatures.end());
  if (seen_temps.size() != temperatures.size()) fail("duplicate temperature");
  if (domain == Domain::kColor) {
    if (words.empty()) fail("color plan has no words");
    std::set<std::string> seen;
    for (const auto& w : words) {
      if (trim(w).empty()) fail("blank word");
      if (!seen.insert(w).second) fail("duplicate word '" + w + "'");
    }
  } else {
    if (categories.empty()) fail("concept plan has no categories");
    std::set<std::string> names;
    for (const auto& c : categories) {
      if (!names.insert(c.name).second) fail("duplicate category '" + c.name + "'");
      if (c.words.size() < 3) fail("category '" + c.name + "' needs at least 3 words");
      std::set<std::string> seen;
      for (const auto& w : c.words) {
        if (trim(w).empty()) fail("blank word in category '" + c.name + "'");
        if (!seen.insert(w).second) fail("duplicate word '" + w + "' in category '" + c.name + "'");
      }
    }
  }
  if (seen_conditions.count(Condition::kPersona)) persona_pools.validate();
  if ((seen_conditions.count(Condition::kRandom) || seen_conditions.count(Condition::kNonsense)) && corpus.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "random/nonsense conditions need a context corpus");
  }
}

nlohmann::ordered_json QueryRecord::to_json() const {
  nlohmann::ordered_json j;
  j["index"] = index;
  j["subject_id"] = subject_id;
  j["condition"] = to_string(condition);
  j["context_id"] = context_id;
  j["context_text"] = context_text;
  j["domain"] = to_string(domain);
  if (domain == Domain::kColor) {
    j["word"] = word;
    j["choice1"] = nullptr;
    j["choice2"] = nullptr;
    j["block"] = block;
  } else {
    j["category"] = category;
    j["target"] = target;
    j["choice1"] = choice1;
    j["choice2"] = choice2;
    j["block"] = nullptr;
  }
  j["temperature"] = temperature;
  j["query_text"] = query_text;
  return j;
}

QueryRecord QueryRecord::from_json(const nlohmann::json& j) {
  try {
    QueryRecord r;
    r.index = j.at("index").get<std::size_t>();
    r.subject_id = j.at("subject_id").get<std::string>();
    r.condition = parse_condition(j.at("condition").get<std::string>());
    r.context_id = j.at("context_id").get<std::string>();
    r.context_text = j.at("context_text").get<std::string>();
    r.domain = parse_domain(j.at("domain").get<std::string>());
    if (r.domain == Domain::kColor) {
      r.word = j.at("word").get<std::string>();
      r.block = j.at("block").get<int>();
    } else {
      r.category = j.at("category").get<std::string>();
      r.target = j.at("target").get<std::string>();
      r.choice1 = j.at("choice1").get<std::string>();
      r.choice2 = j.at("choice2").get<std::string>();
    }
    r.temperature = j.at("temperature").get<double>();
    r.query_text = j.at("query_text").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("bad manifest record: ") + e.what());
  }
}

std::string subject_id_for(Condition c, double temperature, std::size_t index) {
  return fmt::format("{}-t{}-s{:04}", to_string(c), temperature, index);
}

PromptContext context_for(const RunPlan& plan, Condition c, std::size_t index) {
  const auto idx = std::to_string(index);
  switch (c) {
    case Condition::kNone:
      return PromptContext{Condition::kNone, "", "none"};
    case Condition::kPersona: {
      Rng rng(derive_seed(plan.seed, {"persona", idx}));
      return PromptContext{Condition::kPersona, render_persona(sample_persona(plan.persona_pools, rng)),
                           "persona-" + idx};
    }
    case Condition::kRandom:
    case Condition::kNonsense: {
      Rng rng(derive_seed(plan.seed, {"random", idx}));
      auto ctx = make_random_context(plan.corpus, rng);
      if (c == Condition::kRandom) return ctx;
      Rng shuffle_rng(derive_seed(plan.seed, {"nonsense", idx}));
      return make_nonsense_context(ctx, shuffle_rng);
    }
  }
  return {};
}

std::vector<QueryRecord> build_queries(const RunPlan& plan) {
  plan.validate();
  std::vector<QueryRecord> out;
  std::vector<std::vector<PairQuestion>> pairs_by_target;
  for (const auto c : plan.conditions) {
    std::vector<PromptContext> contexts;
    contexts.reserve(plan.n_subjects);
    for (std::size_t s = 0; s < plan.n_subjects; ++s) contexts.push_back(context_for(plan, c, s));

    for (const double t : plan.temperatures) {
      for (std::size_t s = 0; s < plan.n_subjects; ++s) {
        const auto& ctx = contexts[s];
        QueryRecord base;
        base.subject_id = subject_id_for(c, t, s);
        base.condition = c;
        base.context_id = ctx.context_id;
        base.context_text = ctx.text;
        base.domain = plan.domain;
        base.temperature = t;
        auto with_context = [&](std::string query) {
          return ctx.text.empty() ? query : ctx.text + "\n" + query;
        };

        if (plan.domain == Domain::kColor) {
          for (int block = 1; block <= 2; ++block) {
            for (const auto& w : plan.words) {
              QueryRecord r = base;
              r.index = out.size();
              r.word = w;
              r.block = block;
              r.query_text = with_context(color_query(w));
              out.push_back(std::move(r));
            }
          }
          continue;
        }

        Rng order_rng(derive_seed(plan.seed, {"order", base.subject_id}));
        for (const auto& cat : plan.categories) {
          for (const auto& target : cat.words) {
            for (const auto& pair : canonical_pairs(cat.words, target)) {
              QueryRecord r = base;
              r.index = out.size();
              r.category = cat.name;
              r.target = target;
              const bool swap = order_rng.bernoulli(0.5);
              r.choice1 = swap ? pair.second : pair.first;
              r.choice2 = swap ? pair.first : pair.second;
              r.query_text = with_context(concept_query(target, r.choice1, r.choice2));
              out.push_back(std::move(r));
            }
          }
        }
      }
    }
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const QueryRecord> records) {
  std::string text;
  for (const auto& r : records) {
    text += r.to_json().dump();
    text += '\n';
  }
  write_file_atomic(path, text);
}

std::vector<QueryRecord> read_manifest(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<QueryRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(QueryRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaError, fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return out;
}

}  // namespace popdiv
