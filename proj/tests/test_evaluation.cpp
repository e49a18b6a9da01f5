#include <set>

#include "doctest.h"
#include "semhmm/evaluation.hpp"
#include "support/fixtures.hpp"

using namespace semhmm;
using namespace semhmm::testing;

TEST_CASE("make_eval_set splits deterministically and gaps one event") {
  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < 10; ++k) rows.push_back({"a", "b", "c"});
  const Corpus corpus = corpus_from_labels(rows);

  const EvalSet eval = make_eval_set(corpus, 0.4, 7);
  CHECK(eval.items.size() == 4);
  CHECK(eval.train.size() == 6);
  for (const auto& item : eval.items) {
    CHECK(item.gapped.size() == 4);  // one interior event removed
    CHECK(item.gap_pos >= 1);
    CHECK(item.gap_pos <= 3);
    // Restoring the truth at the gap reproduces a legal narrative.
    std::vector<SymbolId> restored = item.gapped;
    restored.insert(restored.begin() + item.gap_pos, item.truth);
    CHECK(restored.size() == 5);
  }

  const EvalSet again = make_eval_set(corpus, 0.4, 7);
  for (std::size_t i = 0; i < eval.items.size(); ++i) {
    CHECK(again.items[i].gapped == eval.items[i].gapped);
    CHECK(again.items[i].gap_pos == eval.items[i].gap_pos);
    CHECK(again.items[i].truth == eval.items[i].truth);
  }
}

TEST_CASE("make_eval_set excludes narratives that are too short to gap") {
  const Corpus corpus = corpus_from_labels({{"a"}, {"a"}, {"a"}, {"a"}, {}});
  const EvalSet eval = make_eval_set(corpus, 0.4, 1);
  CHECK(eval.items.empty());
  CHECK(eval.excluded == 2);
}

TEST_CASE("baseline_frequency prefers unseen frequent events") {
  const Corpus train = corpus_from_labels(
      {{"a", "a", "a", "b"}, {"a", "a", "b", "b"}, {"b"}});
  const TrainStats stats = collect_stats(train);
  const SymbolId a = *train.vocab.find("a");
  const SymbolId b = *train.vocab.find("b");

  TestItem item;
  item.gapped = {kStartSymbol, a, kEndSymbol};
  item.gap_pos = 1;
  CHECK(baseline_frequency(stats, train.vocab, item) == b);

  // All training symbols observed: fall back to the global most frequent.
  item.gapped = {kStartSymbol, a, b, kEndSymbol};
  CHECK(baseline_frequency(stats, train.vocab, item) == a);

  // Empty interior: the global most frequent.
  item.gapped = {kStartSymbol, kEndSymbol};
  CHECK(baseline_frequency(stats, train.vocab, item) == a);
}

TEST_CASE("baseline_conditional follows the prior event") {
  const Corpus train = corpus_from_labels(
      {{"a", "b"}, {"a", "b"}, {"a", "b"}, {"a", "c"}});
  const TrainStats stats = collect_stats(train);
  const SymbolId a = *train.vocab.find("a");
  const SymbolId b = *train.vocab.find("b");

  TestItem item;
  item.gapped = {kStartSymbol, a, kEndSymbol};
  item.gap_pos = 2;  // gap right after "a"
  CHECK(baseline_conditional(stats, train.vocab, item) == b);

  // Gap at the first position conditions on "<".
  item.gapped = {kStartSymbol, b, kEndSymbol};
  item.gap_pos = 1;
  CHECK(baseline_conditional(stats, train.vocab, item) == a);

  // Unseen prior symbol falls back to the frequency baseline.
  Corpus wider = train;
  const SymbolId z = wider.vocab.intern("z");
  TestItem unseen;
  unseen.gapped = {kStartSymbol, z, kEndSymbol};
  unseen.gap_pos = 2;
  CHECK(baseline_conditional(stats, wider.vocab, unseen) == a);
}

TEST_CASE("parse_method lists valid names on failure") {
  CHECK(parse_method("sem-hmm") == Method::sem_hmm);
  CHECK(parse_method("bmm-em") == Method::bmm_em);
  CHECK_THROWS_WITH_AS(parse_method("viterbi"), doctest::Contains("sem-hmm-approx"),
                       std::runtime_error);
}

TEST_CASE("bmm models assign zero probability to the null symbol") {
  const Hmm generator = make_doorbell();
  const Corpus corpus = sample_corpus(generator, 40, 11);

  SearchConfig config = configure_method(SearchConfig{}, Method::bmm);
  const LearnResult result = learn(corpus, config);
  CHECK(validate(result.hmm).ok);
  for (StateId q : result.hmm.order)
    CHECK(result.hmm.omega(q, kNullSymbol) == 0.0);

  SearchConfig with_em = configure_method(SearchConfig{}, Method::bmm_em);
  const LearnResult em_result = learn(corpus, with_em);
  for (StateId q : em_result.hmm.order)
    CHECK(em_result.hmm.omega(q, kNullSymbol) == 0.0);
}

TEST_CASE("run_method bookkeeping: correct plus incorrect equals total") {
  const Hmm generator = make_doorbell();
  const Corpus corpus = sample_corpus(generator, 50, 3);
  const EvalSet eval = make_eval_set(corpus, 0.4, 3);
  REQUIRE(!eval.items.empty());

  for (Method method : {Method::frequency, Method::conditional, Method::bmm}) {
    SearchConfig sc = configure_method(SearchConfig{}, method);
    const MethodResult result = run_method(method, eval.train, eval.items, sc);
    CHECK(result.total == eval.items.size());
    CHECK(result.correct <= result.total);
  }
}

TEST_CASE("perfect single-chain domain is fully predictable") {
  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < 20; ++k) rows.push_back({"a", "b", "c"});
  const Corpus corpus = corpus_from_labels(rows);
  const EvalSet eval = make_eval_set(corpus, 0.4, 5);
  REQUIRE(!eval.items.empty());

  for (Method method : {Method::sem_hmm, Method::sem_hmm_approx, Method::bmm_em,
                        Method::bmm}) {
    SearchConfig sc = configure_method(SearchConfig{}, method);
    const MethodResult result = run_method(method, eval.train, eval.items, sc);
    CHECK(result.accuracy() == 1.0);
  }
}

TEST_CASE("evaluate_domains applies the domain filter and renders reports") {
  const Hmm generator = make_doorbell();
  std::vector<std::pair<std::string, Corpus>> domains;
  domains.emplace_back("doorbell", sample_corpus(generator, 60, 21));
  Corpus tiny = corpus_from_labels({{"a", "b"}, {"a", "b"}, {"a", "b"}});
  domains.emplace_back("tiny", tiny);

  RunConfig rc;
  rc.methods = {Method::frequency, Method::conditional};
  rc.batch_sizes = {5, 10};
  const EvalReport report = evaluate_domains(domains, rc);
  CHECK(report.domains == std::vector<std::string>{"doorbell"});
  CHECK(report.filtered_domains == 1);

  const std::string table = render_table(report, rc);
  CHECK(table.find("frequency") != std::string::npos);
  CHECK(table.find("r=10") != std::string::npos);
  const std::string tsv = render_tsv(report, rc);
  CHECK(tsv.find("conditional\t-\tdoorbell") != std::string::npos);
  CHECK(tsv.find("ALL") != std::string::npos);

  // Identical runs produce identical reports.
  const EvalReport again = evaluate_domains(domains, rc);
  CHECK(render_tsv(again, rc) == tsv);
}
