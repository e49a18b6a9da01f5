#include <cmath>

#include "doctest.h"
#include "semhmm/pta.hpp"
#include "semhmm/scoring.hpp"
#include "semhmm/structure.hpp"
#include "support/fixtures.hpp"

using namespace semhmm;
using namespace semhmm::testing;

TEST_CASE("z-test matches the frozen normal-CDF values") {
  // (v/n - p0) / sqrt(p0 (1-p0) / n) against the lower tail.
  CHECK(z_test_p_value(200, 1, 0.05) == doctest::Approx(0.0017509).epsilon(1e-3));
  CHECK(z_test_p_value(200, 1, 0.05) < 0.01);
  CHECK(z_test_p_value(100, 0, 0.05) == doctest::Approx(0.0108853).epsilon(1e-3));
  CHECK(z_test_p_value(100, 0, 0.05) > 0.01);
}

TEST_CASE("mine_constraints keeps only significantly rare followers") {
  // "b" follows "a" every time; "c" never follows "a". With 120
  // opportunities a zero-violation rule is significant at 0.01 (the
  // break-even n for p0 = 0.05 is 103), while (b, a) never can be.
  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < 120; ++k) rows.push_back({"a", "b", "c"});
  const Corpus corpus = corpus_from_labels(rows);
  const ConstraintSet mined = mine_constraints(corpus, 0.05, 0.01, 20);

  const SymbolId a = *corpus.vocab.find("a");
  const SymbolId b = *corpus.vocab.find("b");
  const SymbolId c = *corpus.vocab.find("c");
  auto has_rule = [&](SymbolId x, SymbolId y) {
    for (const auto& r : mined.rules)
      if (r.x == x && r.y == y) return true;
    return false;
  };
  CHECK(has_rule(c, a));       // c never immediately follows a
  CHECK(has_rule(a, b));       // a never follows b
  CHECK_FALSE(has_rule(b, a));  // the observed rate 1.0 >= p0
  CHECK_FALSE(has_rule(c, b));  // c always follows b

  // Determinism: mining twice gives the same set.
  const ConstraintSet again = mine_constraints(corpus, 0.05, 0.01, 20);
  CHECK(again.rules == mined.rules);

  // Pairs with too few opportunities are skipped.
  const ConstraintSet strict = mine_constraints(corpus, 0.05, 0.01, 500);
  CHECK(strict.empty());
}

namespace {

struct ViolationFixture {
  Vocabulary vocab;
  SymbolId x, y;
  ConstraintSet rule_x_after_y;

  ViolationFixture() {
    x = vocab.intern("x");
    y = vocab.intern("y");
    rule_x_after_y.rules.push_back({x, y, 100, 0});
  }
};

}  // namespace

TEST_CASE("count_model_violations walks the null closure") {
  ViolationFixture f;

  SUBCASE("y-state directly precedes x-state") {
    Hmm hmm = make_empty_model(f.vocab);
    const StateId s1 = hmm.new_state();
    const StateId s2 = hmm.new_state();
    hmm.order = {hmm.order[0], s1, s2, hmm.order[1]};
    hmm.trans[hmm.initial_state()] = {{s1, 1.0}};
    hmm.trans[s1] = {{s2, 1.0}};
    hmm.trans[s2] = {{hmm.final_state(), 1.0}};
    hmm.emit[s1] = {{f.y, 1.0}};
    hmm.emit[s2] = {{f.x, 1.0}};
    CHECK(count_model_violations(hmm, f.rule_x_after_y) == 1);
  }

  SUBCASE("same state without a self-loop cannot violate") {
    Hmm hmm = make_empty_model(f.vocab);
    const StateId s1 = hmm.new_state();
    hmm.order = {hmm.order[0], s1, hmm.order[1]};
    hmm.trans[hmm.initial_state()] = {{s1, 1.0}};
    hmm.trans[s1] = {{hmm.final_state(), 1.0}};
    hmm.emit[s1] = {{f.x, 0.5}, {f.y, 0.5}};
    CHECK(count_model_violations(hmm, f.rule_x_after_y) == 0);
    // A self-loop turns it into a violation.
    hmm.trans[s1] = {{s1, 0.5}, {hmm.final_state(), 0.5}};
    CHECK(count_model_violations(hmm, f.rule_x_after_y) == 1);
  }

  SUBCASE("a null-only interior state transmits adjacency") {
    const SymbolId z = f.vocab.intern("z");
    Hmm hmm = make_empty_model(f.vocab);
    const StateId s1 = hmm.new_state();
    const StateId s2 = hmm.new_state();
    const StateId s3 = hmm.new_state();
    hmm.order = {hmm.order[0], s1, s2, s3, hmm.order[1]};
    hmm.trans[hmm.initial_state()] = {{s1, 1.0}};
    hmm.trans[s1] = {{s2, 1.0}};
    hmm.trans[s2] = {{s3, 1.0}};
    hmm.trans[s3] = {{hmm.final_state(), 1.0}};
    hmm.emit[s1] = {{f.y, 1.0}};
    hmm.emit[s2] = {{kNullSymbol, 1.0}};
    hmm.emit[s3] = {{f.x, 1.0}};
    CHECK(count_model_violations(hmm, f.rule_x_after_y) == 1);

    // Once the interior state must emit something, adjacency is broken.
    hmm.emit[s2] = {{z, 1.0}};
    CHECK(count_model_violations(hmm, f.rule_x_after_y) == 0);
  }
}

TEST_CASE("adding a transition never decreases the violation count") {
  ViolationFixture f;
  Hmm hmm = make_empty_model(f.vocab);
  const StateId s1 = hmm.new_state();
  const StateId s2 = hmm.new_state();
  hmm.order = {hmm.order[0], s1, s2, hmm.order[1]};
  hmm.trans[hmm.initial_state()] = {{s1, 0.5}, {s2, 0.5}};
  hmm.trans[s1] = {{hmm.final_state(), 1.0}};
  hmm.trans[s2] = {{hmm.final_state(), 1.0}};
  hmm.emit[s1] = {{f.y, 1.0}};
  hmm.emit[s2] = {{f.x, 1.0}};
  const int before = count_model_violations(hmm, f.rule_x_after_y);

  Hmm wider = hmm;
  wider.trans[s1] = {{s2, 0.5}, {hmm.final_state(), 0.5}};
  const int after = count_model_violations(wider, f.rule_x_after_y);
  CHECK(after >= before);
  CHECK(after == 1);
}

TEST_CASE("log_prior arithmetic") {
  const Hmm m0 = make_m0();
  ConstraintSet none;

  ScoreConfig config;
  CHECK(log_prior(m0, none, config) == doctest::Approx(-5.0));  // 3 states + 2 edges

  config.kappa_q = config.kappa_t = config.kappa_c = 0.0;
  CHECK(log_prior(m0, none, config) == 0.0);

  // One extra edge with kappa_t = 2 costs exactly 2.
  Vocabulary vocab = m0.vocab;
  Hmm wider = m0;
  const StateId s1 = wider.order[1];
  wider.trans[wider.initial_state()] = {{s1, 0.5}, {wider.final_state(), 0.5}};
  ScoreConfig kt;
  kt.kappa_q = 0.0;
  kt.kappa_t = 2.0;
  kt.kappa_c = 0.0;
  CHECK(log_prior(wider, none, kt) - log_prior(m0, none, kt) ==
        doctest::Approx(-2.0));
}

TEST_CASE("log_likelihood_exact sums the narrative log-probabilities") {
  const Hmm m0 = make_m0();
  const SymbolId a = *m0.vocab.find("a");
  Corpus corpus;
  corpus.vocab = m0.vocab;
  corpus.narratives = {{kStartSymbol, a, kEndSymbol}};
  CHECK(log_likelihood_exact(m0, corpus, TmaxPolicy{}) ==
        doctest::Approx(std::log(0.7)).epsilon(1e-12));

  corpus.narratives.push_back({kStartSymbol, kEndSymbol});
  CHECK(log_likelihood_exact(m0, corpus, TmaxPolicy{}) ==
        doctest::Approx(std::log(0.7) + std::log(0.3)).epsilon(1e-12));

  Corpus empty;
  empty.vocab = m0.vocab;
  CHECK(log_likelihood_exact(m0, empty, TmaxPolicy{}) == 0.0);
}

TEST_CASE("approximate likelihood equals exact on deterministic-path models") {
  const Corpus corpus = corpus_from_labels({{"a", "b"}, {"a", "c"}, {"a", "b"}});
  const auto [hmm, counts] = build_pta(corpus);
  const double exact = log_likelihood_exact(hmm, corpus, TmaxPolicy{});
  const double approx = log_likelihood_approx(hmm, counts);
  CHECK(std::abs(exact - approx) < 1e-9);
}

TEST_CASE("approximate likelihood of an all-zero table is zero") {
  const Hmm m0 = make_m0();
  CHECK(log_likelihood_approx(m0, CountTable{}) == 0.0);
}

TEST_CASE("a positive count with a zero parameter is an error") {
  const Hmm m0 = make_m0();
  CountTable counts;
  counts.add_transition(m0.initial_state(), m0.final_state(), 1.0);
  CHECK_THROWS_WITH_AS(log_likelihood_approx(m0, counts),
                       doctest::Contains("inconsistent count/parameter"),
                       std::runtime_error);
}

TEST_CASE("incremental update equals recomputing from scratch") {
  const Corpus corpus = corpus_from_labels(
      {{"a", "b"}, {"a", "c"}, {"a", "b", "c"}, {"b"}, {"a", "c"}});
  auto [hmm, counts] = build_pta(corpus);
  const Hmm smoothed = m_step(hmm, counts, MStepOptions{});

  ApproxLikelihood cache = ApproxLikelihood::build(smoothed, counts);
  CHECK(cache.total() ==
        doctest::Approx(log_likelihood_approx(smoothed, counts)).epsilon(1e-12));

  // Merge two sibling states and compare the incremental total with a full
  // rebuild on the edited model.
  SearchConfig config;
  const auto candidates = enumerate_candidates(smoothed, counts, config);
  std::size_t checked = 0;
  for (const auto& cand : candidates) {
    if (cand.kind != StructureChange::Kind::merge) continue;
    const auto edited = merge_states(smoothed, counts, cand.a, cand.b);
    const double incremental =
        cache.updated(edited.hmm, edited.counts, edited.changed.trans_rows,
                      edited.changed.emit_rows, edited.changed.removed_states);
    const double scratch = log_likelihood_approx(edited.hmm, edited.counts);
    CHECK(incremental == doctest::Approx(scratch).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("score follows the configured likelihood mode") {
  const Corpus corpus = corpus_from_labels({{"a", "b"}, {"a", "b"}});
  const auto [hmm, counts] = build_pta(corpus);
  ConstraintSet none;

  ScoreConfig exact;
  exact.mode = ScoreConfig::Mode::exact;
  ScoreConfig approx;
  approx.mode = ScoreConfig::Mode::approx;

  // Deterministic-path model: both modes agree.
  CHECK(score(hmm, counts, corpus, none, exact) ==
        doctest::Approx(score(hmm, counts, corpus, none, approx)).epsilon(1e-9));

  // kappa = 0 turns the score into the plain corpus log-likelihood.
  ScoreConfig free;
  free.kappa_q = free.kappa_t = free.kappa_c = 0.0;
  CHECK(score(hmm, counts, corpus, none, free) ==
        doctest::Approx(log_likelihood_exact(hmm, corpus, free.tmax)));
}
