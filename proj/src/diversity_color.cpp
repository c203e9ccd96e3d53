#include "popdiv/diversity_color.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>

#include "popdiv/error.hpp"

namespace popdiv {

namespace {

void require_population(const WordPopulation& p) {
  if (p.size() < 2) {
    throw Error(ErrorCode::kPopulationTooSmall,
                "word '" + p.word() + "' has " + std::to_string(p.size()) + " complete subjects, need 2");
  }
}

double cross_mean(const std::vector<CompleteSubject>& subjects, std::size_t s, DeltaEFormula formula) {
  const auto& self = subjects[s];
  double sum = 0.0;
  for (std::size_t o = 0; o < subjects.size(); ++o) {
    if (o == s) continue;
    const auto& other = subjects[o];
    sum += delta_e(self.first, other.first, formula) + delta_e(self.first, other.second, formula) +
           delta_e(self.second, other.first, formula) + delta_e(self.second, other.second, formula);
  }
  return sum / (4.0 * static_cast<double>(subjects.size() - 1));
}

}  // namespace

WordPopulation::WordPopulation(std::string word, std::vector<CompleteSubject> subjects, std::size_t excluded)
    : word_(std::move(word)), subjects_(std::move(subjects)), excluded_(excluded) {
  std::sort(subjects_.begin(), subjects_.end(),
            [](const CompleteSubject& a, const CompleteSubject& b) { return a.subject_id < b.subject_id; });
  for (std::size_t i = 1; i < subjects_.size(); ++i) {
    if (subjects_[i].subject_id == subjects_[i - 1].subject_id) {
      throw Error(ErrorCode::kDuplicateResponse, "subject '" + subjects_[i].subject_id +
                                                     "' appears twice for word '" + word_ + "'");
    }
  }
}

WordPopulation WordPopulation::from_responses(std::string_view word, std::span<const ColorResponse> responses) {
  struct Slots {
    std::optional<const ColorResponse*> block[2];
  };
  std::map<std::string, Slots> by_subject;
  for (const auto& r : responses) {
    if (r.word != word) continue;
    if (r.block != 1 && r.block != 2) {
      throw Error(ErrorCode::kInvalidPlan, "block must be 1 or 2, got " + std::to_string(r.block));
    }
    auto& slot = by_subject[r.subject_id].block[r.block - 1];
    if (slot) {
      throw Error(ErrorCode::kDuplicateResponse, "subject '" + r.subject_id + "' answered word '" +
                                                     std::string(word) + "' block " +
                                                     std::to_string(r.block) + " twice");
    }
    slot = &r;
  }
  std::vector<CompleteSubject> complete;
  std::size_t excluded = 0;
  for (const auto& [id, slots] : by_subject) {
    const bool ok = slots.block[0] && slots.block[1] && (*slots.block[0])->valid && (*slots.block[1])->valid;
    if (!ok) {
      ++excluded;
      continue;
    }
    complete.push_back(CompleteSubject{id, (*slots.block[0])->lab, (*slots.block[1])->lab});
  }
  return WordPopulation(std::string(word), std::move(complete), excluded);
}

std::size_t WordPopulation::index_of(std::string_view subject_id) const {
  auto it = std::lower_bound(subjects_.begin(), subjects_.end(), subject_id,
                             [](const CompleteSubject& s, std::string_view id) { return s.subject_id < id; });
  if (it == subjects_.end() || it->subject_id != subject_id) {
    throw Error(ErrorCode::kSubjectIncomplete,
                "subject '" + std::string(subject_id) + "' lacks two valid blocks for '" + word_ + "'");
  }
  return static_cast<std::size_t>(it - subjects_.begin());
}

std::vector<WordPopulation> group_by_word(std::span<const ColorResponse> responses) {
  std::set<std::string> words;
  for (const auto& r : responses) words.insert(r.word);
  std::vector<WordPopulation> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(WordPopulation::from_responses(w, responses));
  return out;
}

double internal_delta_e(const WordPopulation& p, std::string_view subject_id, DeltaEFormula formula) {
  const auto& s = p.subjects()[p.index_of(subject_id)];
  return delta_e(s.first, s.second, formula);
}

double population_delta_e(const WordPopulation& p, std::string_view subject_id, DeltaEFormula formula) {
  const auto idx = p.index_of(subject_id);
  require_population(p);
  return cross_mean(p.subjects(), idx, formula);
}

std::vector<SubjectTerms> subject_terms(const WordPopulation& p, DeltaEFormula formula) {
  require_population(p);
  const auto& subjects = p.subjects();
  std::vector<SubjectTerms> terms(subjects.size());
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    terms[s].internal = delta_e(subjects[s].first, subjects[s].second, formula);
    terms[s].population = cross_mean(subjects, s, formula);
  }
  return terms;
}

double heterogeneity_d(const WordPopulation& p, DeltaEFormula formula) {
  return word_metrics(p, formula).d_w;
}

std::vector<ScatterPoint> scatter_points(const WordPopulation& p, DeltaEFormula formula) {
  const auto terms = subject_terms(p, formula);
  std::vector<ScatterPoint> points;
  points.reserve(terms.size());
  for (std::size_t s = 0; s < terms.size(); ++s) {
    points.push_back(ScatterPoint{p.subjects()[s].subject_id, terms[s].population, terms[s].internal});
  }
  return points;
}

WordMetrics word_metrics(const WordPopulation& p, DeltaEFormula formula) {
  const auto terms = subject_terms(p, formula);
  WordMetrics m;
  m.word = p.word();
  m.n_subjects = terms.size();
  double dev = 0.0;
  for (const auto& t : terms) {
    dev += std::abs(t.internal - t.population) / std::numbers::sqrt2;
    m.mean_internal += t.internal;
    m.mean_population += t.population;
  }
  const auto n = static_cast<double>(terms.size());
  m.d_w = dev / n;
  m.mean_internal /= n;
  m.mean_population /= n;
  return m;
}

}  // namespace popdiv
