#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "semhmm/model_io.hpp"
#include "semhmm/pta.hpp"
#include "semhmm/scoring.hpp"
#include "support/fixtures.hpp"

using namespace semhmm;
using namespace semhmm::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("semhmm-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path file(const std::string& name) const { return path / name; }
};

}  // namespace

TEST_CASE("model save/load round-trips bit-exactly") {
  const Corpus corpus =
      corpus_from_labels({{"a", "b"}, {"a", "c"}, {"a", "b", "b"}});
  auto [hmm, counts] = build_pta(corpus);
  hmm.emit[hmm.order[1]] = {{*hmm.vocab.find("a"), 0.7},
                            {kNullSymbol, 0.30000000000000004}};

  TempDir tmp;
  const auto path = tmp.file("model.txt");
  save_model(hmm, counts, path);
  const LoadedModel loaded = load_model(path);
  CHECK(loaded.hmm.equals(hmm));
  CHECK(loaded.counts.visits == counts.visits);
  CHECK(loaded.counts.trans == counts.trans);
  REQUIRE(loaded.counts.emit.size() == counts.emit.size());
  // Emission count keys survive label translation.
  for (const auto& [key, c] : counts.emit) {
    const auto label = hmm.vocab.label(std::get<2>(key));
    const SymbolId translated = *loaded.hmm.vocab.find(label);
    CHECK(loaded.counts.emission(std::get<0>(key), std::get<1>(key),
                                 translated) == c);
  }

  // Saving the loaded model reproduces the file byte for byte.
  const auto path2 = tmp.file("model2.txt");
  save_model(loaded.hmm, loaded.counts, path2);
  std::ifstream f1(path), f2(path2);
  const std::string text1((std::istreambuf_iterator<char>(f1)), {});
  const std::string text2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(text1 == text2);
}

TEST_CASE("load_model rejects a negative probability, naming the line") {
  TempDir tmp;
  const auto path = tmp.file("bad.txt");
  {
    std::ofstream out(path);
    out << "STATES\nq0 0\nq2 1\nq1 2\n"
        << "TRANS\nq0 q2 1\nq2 q1 1\n"
        << "EMIT\nq0 < 1\nq2 a -0.5\nq2 &lambda; 1.5\nq1 > 1\n";
  }
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("bad.txt:10"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("negative probability"),
                       std::runtime_error);
}

TEST_CASE("load_model rejects an unknown state in a transition row") {
  TempDir tmp;
  const auto path = tmp.file("bad.txt");
  {
    std::ofstream out(path);
    out << "STATES\nq0 0\nq1 1\n"
        << "TRANS\nq0 q7 1\n"
        << "EMIT\nq0 < 1\nq1 > 1\n";
  }
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("unknown state"),
                       std::runtime_error);
}

TEST_CASE("corpus file round-trip, comments, and blank lines") {
  TempDir tmp;
  const auto path = tmp.file("corpus.txt");
  {
    std::ofstream out(path);
    out << "# a comment\n"
        << "open door\n"
        << "\n"
        << "close door\n";
  }
  const Corpus corpus = load_corpus(path);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus.narratives[0].size() == 4);
  CHECK(corpus.narratives[1].size() == 2);  // blank line = empty narrative

  const auto path2 = tmp.file("corpus2.txt");
  save_corpus(corpus, path2);
  const Corpus again = load_corpus(path2);
  CHECK(again.narratives == corpus.narratives);
}

TEST_CASE("corpus loader rejects reserved tokens with the line number") {
  TempDir tmp;
  const auto path = tmp.file("corpus.txt");
  {
    std::ofstream out(path);
    out << "open door\nopen < door\n";
  }
  CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains(":2"),
                       std::runtime_error);
}

TEST_CASE("constraints file round-trip") {
  Vocabulary vocab;
  ConstraintSet set;
  set.rules.push_back({vocab.intern("open"), vocab.intern("close"), 120, 1});
  set.rules.push_back({vocab.intern("walk"), vocab.intern("close"), 80, 0});

  TempDir tmp;
  const auto path = tmp.file("constraints.txt");
  save_constraints(set, vocab, path);

  Vocabulary fresh;
  const ConstraintSet loaded = load_constraints(fresh, path);
  REQUIRE(loaded.size() == 2);
  CHECK(fresh.label(loaded.rules[0].x) == "open");
  CHECK(fresh.label(loaded.rules[0].y) == "close");
  CHECK(loaded.rules[0].opportunities == 120);
  CHECK(loaded.rules[0].violations == 1);
}
