#pragma once

#include <iosfwd>
#include <optional>

#include "semhmm/pta.hpp"
#include "semhmm/scoring.hpp"

namespace semhmm {

/// A candidate structure edit. Materialization is deferred: the search
/// builds the edited model and counts only when it scores the candidate.
struct StructureChange {
  enum class Kind { merge, delete_edge } kind = Kind::merge;
  StateId a = 0;  // merge: first state / delete: edge source
  StateId b = 0;  // merge: second state / delete: edge target
};

/// Rows whose parameters were re-derived by a structure operator, for the
/// incremental likelihood update.
struct ChangedRows {
  std::vector<StateId> trans_rows;
  std::vector<StateId> emit_rows;
  std::vector<StateId> removed_states;
};

struct StructureOpResult {
  Hmm hmm;
  CountTable counts;
  ChangedRows changed;
};

/// Merges two interior states into a fresh state carrying the union of
/// their transitions and emissions; counts are combined additively and any
/// edge between the pair folds into a self-loop. Only the affected rows are
/// re-estimated; everything else is copied. Requires that no directed path
/// connects the pair other than the direct edge (the merge would otherwise
/// create a cycle).
StructureOpResult merge_states(const Hmm& hmm, const CountTable& counts,
                               StateId p, StateId q,
                               const MStepOptions& options = {});

/// Removes the transition (from -> to) and redistributes its expected count
/// N over the alternative paths between the pair whose interior states can
/// emit null. Path weights are the products of transition and interior
/// null-emission probabilities, normalized by their total so exactly N units
/// of evidence are re-homed per path position. Returns nullopt when no such
/// path exists ("no redistribution path").
std::optional<StructureOpResult> delete_edge(const Hmm& hmm,
                                             const CountTable& counts,
                                             StateId from, StateId to,
                                             const MStepOptions& options = {});

struct SearchConfig {
  int batch_size = 10;  // narratives folded in per outer iteration
  enum class Pruning { all_pairs, shared_neighbor } pruning = Pruning::all_pairs;
  EmConfig em;
  ScoreConfig score;
  bool run_em = true;  // re-run EM after each batch (off for plain BMM)
  std::optional<ConstraintSet> constraints;  // preloaded; mined when absent
  std::ostream* search_log = nullptr;  // one line per evaluated candidate
};

/// All structure changes worth scoring: interior state pairs that survive
/// the acyclicity filter and edges with a usable redistribution path, in
/// deterministic order (merges first, lexicographic by state ordinals).
std::vector<StructureChange> enumerate_candidates(const Hmm& hmm,
                                                  const CountTable& counts,
                                                  const SearchConfig& config);

struct LearnResult {
  Hmm hmm;
  CountTable counts;
  ConstraintSet constraints;
  std::size_t accepted_changes = 0;
};

/// Greedy incremental structure learning: narratives are consumed in
/// batches; each batch is folded in as a fresh prefix tree sharing only the
/// sentinel states, hill climbing accepts the best-scoring merge or
/// deletion until no candidate improves the score, and EM then re-estimates
/// the parameters on all sequences seen so far.
LearnResult learn(const Corpus& corpus, const SearchConfig& config = {});

}  // namespace semhmm
