#pragma once

#include "semhmm/corpus.hpp"
#include "semhmm/model.hpp"

namespace semhmm {

struct PtaResult {
  Hmm hmm;
  CountTable counts;
};

/// Builds a Prefix Tree Acceptor over the corpus: sequences are inserted one
/// at a time, branching at the first place a new sequence differs from the
/// tree; every branch tail rejoins the single final state. Each state emits
/// exactly one symbol with probability 1 and transition probabilities are
/// the raw branching fractions; the counts are the raw traversal counts.
PtaResult build_pta(const Corpus& corpus);

}  // namespace semhmm
