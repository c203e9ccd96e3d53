#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles/crp.hpp"
#include "popdiv/crp_cluster.hpp"
#include "test_helpers.hpp"

using namespace popdiv;

namespace {

std::vector<JudgmentVector> to_vectors(const std::vector<oracle::Bits>& rows) {
  std::vector<JudgmentVector> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    JudgmentVector v{"s" + std::to_string(i), "t", "c", {}};
    for (int b : rows[i]) v.bits.push_back(static_cast<Judgment>(b));
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<oracle::Bits> random_bits(Rng& rng, std::size_t n, std::size_t dims, double missing = 0.0) {
  std::vector<oracle::Bits> rows(n, oracle::Bits(dims));
  for (auto& r : rows) {
    for (auto& b : r) b = rng.bernoulli(missing) ? -1 : static_cast<int>(rng.uniform_index(2));
  }
  return rows;
}

// Two planted groups with complementary prototypes, each bit flipped w.p. eps.
std::vector<oracle::Bits> planted(Rng& rng, std::size_t n, std::size_t dims, double eps) {
  oracle::Bits proto(dims);
  for (auto& b : proto) b = static_cast<int>(rng.uniform_index(2));
  std::vector<oracle::Bits> rows;
  for (std::size_t i = 0; i < n; ++i) {
    oracle::Bits r(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      int b = i % 2 == 0 ? proto[d] : 1 - proto[d];
      if (rng.bernoulli(eps)) b = 1 - b;
      r[d] = b;
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("canonical pairs are the sorted C(m-1, 2) pairs of the other words") {
  const std::vector<std::string> words{"whale", "cat", "penguin", "ant", "dog"};
  const auto pairs = canonical_pairs(words, "cat");
  REQUIRE(pairs.size() == 6);
  CHECK(pairs[0] == PairQuestion{"ant", "dog"});
  CHECK(pairs[1] == PairQuestion{"ant", "penguin"});
  CHECK(pairs[5] == PairQuestion{"penguin", "whale"});
  for (const auto& p : pairs) {
    CHECK(p.first < p.second);
    CHECK(p.first != "cat");
    CHECK(p.second != "cat");
  }
  const std::vector<std::string> ten(10, "");
  std::vector<std::string> distinct;
  for (int i = 0; i < 10; ++i) distinct.push_back(std::string(1, static_cast<char>('a' + i)));
  CHECK(canonical_pairs(distinct, "a").size() == 36);
}

TEST_CASE("missing fraction and config validation") {
  JudgmentVector v{"s", "t", "c", {Judgment::kOne, Judgment::kMissing, Judgment::kZero, Judgment::kMissing}};
  CHECK(v.missing_fraction() == 0.5);
  CrpConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 0;
  CHECK_THROWS_CODE(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.beta_b = -1;
  CHECK_THROWS_CODE(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = {};
  cfg.samples = 0;
  CHECK_THROWS_CODE(cfg.validate(), ErrorCode::kInvalidConfig);
}

TEST_CASE("exact posterior matches the sequential-seating oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(7);
    const std::size_t dims = 1 + rng.uniform_index(6);
    const auto rows = random_bits(rng, n, dims, 0.15);
    CrpConfig cfg;
    cfg.alpha = 0.2 + 2.0 * rng.uniform01();
    cfg.beta_a = 0.3 + 2.0 * rng.uniform01();
    cfg.beta_b = 0.3 + 2.0 * rng.uniform01();
    const auto ref = oracle::exact_k_posterior(rows, {cfg.alpha, cfg.beta_a, cfg.beta_b});
    const auto post = exact_posterior(to_vectors(rows), cfg);
    REQUIRE(post.k_probability.size() == n);
    for (std::size_t k = 0; k < n; ++k) REQUIRE(std::abs(post.k_probability[k] - ref[k]) < 1e-10);
    CHECK(post.p_multiple == doctest::Approx(1.0 - post.p_one_concept));
  }
}

TEST_CASE("exact posterior is invariant under subject permutation") {
  Rng rng(4);
  const auto rows = random_bits(rng, 8, 6, 0.1);
  const CrpConfig cfg;
  const auto base = exact_posterior(to_vectors(rows), cfg);
  for (int t = 0; t < 5; ++t) {
    auto perm = rows;
    rng.shuffle(perm.begin(), perm.end());
    const auto p = exact_posterior(to_vectors(perm), cfg);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      CHECK(std::abs(p.k_probability[k] - base.k_probability[k]) < 1e-12);
    }
  }
}

TEST_CASE("larger alpha never lowers P(K > 1)") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto data = to_vectors(random_bits(rng, 6, 5));
    double prev = -1.0;
    for (double alpha : {0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 20.0}) {
      CrpConfig cfg;
      cfg.alpha = alpha;
      const double pm = exact_posterior(data, cfg).p_multiple;
      CHECK(pm >= prev - 1e-12);
      prev = pm;
    }
  }
}

TEST_CASE("library sweeps replay the reference Gibbs trace") {
  Rng data_rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 3 + data_rng.uniform_index(10);
    const auto rows = trial % 2 == 0 ? random_bits(data_rng, n, 8, 0.2) : planted(data_rng, n, 12, 0.1);
    const auto data = to_vectors(rows);
    CrpConfig cfg;
    cfg.alpha = 0.5 + trial * 0.3;
    cfg.audit = true;
    oracle::ReferenceGibbs ref(rows, {cfg.alpha, cfg.beta_a, cfg.beta_b});

    const std::uint64_t seed = 1000 + trial;
    Rng lib_rng(seed), ref_rng(seed);
    CrpState state = CrpState::single_cluster(data);
    for (int s = 0; s < 300; ++s) {
      gibbs_sweep(state, data, cfg, lib_rng);
      ref.sweep([&] { return ref_rng.uniform01(); });
      REQUIRE(audit_state(state, data));
      REQUIRE(static_cast<int>(state.num_clusters()) == ref.num_clusters());
      for (std::size_t i = 0; i < n; ++i) REQUIRE(static_cast<int>(state.assignment[i]) == ref.labels()[i]);
    }
  }
}

TEST_CASE("audit catches corrupted states") {
  Rng rng(5);
  const auto data = to_vectors(random_bits(rng, 5, 4));
  CrpState good = CrpState::single_cluster(data);
  CHECK(audit_state(good, data));

  auto bad = good;
  bad.clusters[0].size += 1;
  CHECK_FALSE(audit_state(bad, data));
  bad = good;
  bad.clusters[0].ones[0] += 1;
  CHECK_FALSE(audit_state(bad, data));
  bad = good;
  bad.clusters.push_back(ClusterStats{0, std::vector<int>(4, 0), std::vector<int>(4, 0)});
  CHECK_FALSE(audit_state(bad, data));
  bad = good;
  bad.assignment[2] = 7;
  CHECK_FALSE(audit_state(bad, data));

  CrpConfig cfg;
  cfg.audit = true;
  bad = good;
  bad.clusters[0].size += 1;
  CHECK_THROWS_CODE(gibbs_sweep(bad, data, cfg, rng), ErrorCode::kInconsistentState);
  bad = good;
  bad.assignment.pop_back();
  CHECK_THROWS_CODE(gibbs_sweep(bad, data, cfg, rng), ErrorCode::kInconsistentState);
}

TEST_CASE("one subject always forms one concept") {
  const auto data = to_vectors({{1, 0, 1}});
  const auto post = run_chain(data, CrpConfig{});
  CHECK(post.p_one_concept == 1.0);
  CHECK(post.p_multiple == 0.0);
  CHECK(post.mode_k() == 1);
  CHECK(exact_posterior(data, CrpConfig{}).p_one_concept == 1.0);
}

TEST_CASE("Gibbs estimates agree with exact enumeration") {
  Rng rng(2);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(7);
    const auto rows = trial % 2 ? random_bits(rng, n, 6, 0.1) : planted(rng, n, 6, 0.1);
    const auto data = to_vectors(rows);
    CrpConfig cfg;
    cfg.seed = 40 + trial;
    const auto exact = exact_posterior(data, cfg);
    const auto gibbs = run_chain(data, cfg);
    CAPTURE(n);
    CHECK(std::abs(gibbs.p_one_concept - exact.p_one_concept) < 0.02);
  }
}

TEST_CASE("run_chain is deterministic per seed and validates input") {
  Rng rng(9);
  const auto data = to_vectors(random_bits(rng, 10, 8));
  CrpConfig cfg;
  cfg.seed = 5;
  cfg.burn_in = 50;
  cfg.samples = 200;
  const auto a = run_chain(data, cfg);
  const auto b = run_chain(data, cfg);
  CHECK(a.k_probability == b.k_probability);
  double total = 0.0;
  for (double p : a.k_probability) {
    CHECK(p >= 0.0);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0));

  CHECK_THROWS_CODE(run_chain(std::vector<JudgmentVector>{}, cfg), ErrorCode::kEmptyPopulation);
  auto ragged = data;
  ragged[3].bits.pop_back();
  CHECK_THROWS_CODE(run_chain(ragged, cfg), ErrorCode::kSchemaError);
  const auto eleven = to_vectors(random_bits(rng, 11, 3));
  CHECK_THROWS_CODE(exact_posterior(eleven, cfg), ErrorCode::kTooManySubjects);
}

TEST_CASE("all-missing vectors leave the prior in charge") {
  const auto data = to_vectors({{-1, -1}, {-1, -1}, {-1, -1}});
  CrpConfig cfg;
  const auto post = exact_posterior(data, cfg);
  // CRP prior for n = 3: P(K = 1) = 2 / ((1 + a)(2 + a)).
  CHECK(post.p_one_concept == doctest::Approx(2.0 / ((1 + cfg.alpha) * (2 + cfg.alpha))));
}

TEST_CASE("two all-missing subjects at alpha = 1 split evenly") {
  const auto data = to_vectors({{-1, -1}, {-1, -1}});
  CrpConfig cfg;
  cfg.alpha = 1.0;
  CHECK(exact_posterior(data, cfg).p_one_concept == doctest::Approx(0.5).epsilon(1e-12));

  // One sweep from separate tables: subject 2 joins subject 1 with probability 1 / (1 + alpha).
  int joined = 0;
  const int trials = 20000;
  Rng rng(6);
  for (int t = 0; t < trials; ++t) {
    CrpState state;
    state.assignment = {0, 1};
    state.clusters = {ClusterStats{1, {0, 0}, {0, 0}}, ClusterStats{1, {0, 0}, {0, 0}}};
    // Without data every move seats the subject with the other w.p. 1 / (1 + alpha).
    gibbs_sweep(state, data, cfg, rng);
    joined += state.num_clusters() == 1;
  }
  CHECK(std::abs(static_cast<double>(joined) / trials - 1.0 / (1.0 + cfg.alpha)) < 0.02);
}

TEST_CASE("5 subjects x 4 dimensions replay the reference trace") {
  const std::vector<oracle::Bits> rows{{1, 0, 1, -1}, {1, 0, 1, 1}, {0, 1, -1, 0}, {0, 1, 0, 0}, {1, 1, 1, 0}};
  const auto data = to_vectors(rows);
  CrpConfig cfg;
  oracle::ReferenceGibbs ref(rows, {cfg.alpha, cfg.beta_a, cfg.beta_b});
  Rng lib_rng(123), ref_rng(123);
  CrpState state = CrpState::single_cluster(data);
  for (int s = 0; s < 100; ++s) {
    gibbs_sweep(state, data, cfg, lib_rng);
    ref.sweep([&] { return ref_rng.uniform01(); });
    for (std::size_t i = 0; i < rows.size(); ++i) REQUIRE(static_cast<int>(state.assignment[i]) == ref.labels()[i]);
  }
}
