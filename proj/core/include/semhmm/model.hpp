#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "semhmm/vocabulary.hpp"

namespace semhmm {

using StateId = std::uint32_t;

/// Expected (or raw) counts of state visits, transitions, and
/// transition/observation triples. Counts are reals throughout because
/// E-steps and structure operators produce fractional evidence.
struct CountTable {
  std::map<StateId, double> visits;
  std::map<std::pair<StateId, StateId>, double> trans;
  std::map<std::tuple<StateId, StateId, SymbolId>, double> emit;

  double visit(StateId q) const;
  double transition(StateId from, StateId to) const;
  double emission(StateId from, StateId to, SymbolId o) const;

  void add_visit(StateId q, double w);
  void add_transition(StateId from, StateId to, double w);
  void add_emission(StateId from, StateId to, SymbolId o, double w);

  /// Sum of C(q -> q') over q'.
  double transitions_out(StateId q) const;
  /// Per-symbol emission counts of q marginalized over the predecessor.
  std::map<SymbolId, double> emissions_into(StateId q) const;

  double total_visits() const;
  double total_transitions() const;

  CountTable& operator+=(const CountTable& other);
  bool operator==(const CountTable&) const = default;
};

/// A Left-to-Right HMM: states admit a topological order in which every
/// transition goes forward (self-loops allowed). The initial state always
/// emits "<" and the final state always emits ">"; interior states emit
/// event symbols or the null symbol.
///
/// Instances are plain values; treat them as immutable once built and
/// produce edited copies through the structure operators. Const access is
/// safe to share across threads.
struct Hmm {
  Vocabulary vocab;
  std::vector<StateId> order;  // topological; front() initial, back() final
  std::map<StateId, std::map<StateId, double>> trans;
  std::map<StateId, std::map<SymbolId, double>> emit;
  StateId next_id = 0;

  StateId initial_state() const { return order.front(); }
  StateId final_state() const { return order.back(); }
  std::size_t num_states() const { return order.size(); }
  std::size_t num_edges() const;

  int ordinal_of(StateId q) const;  // -1 when unknown
  double transition(StateId from, StateId to) const;
  double omega(StateId q, SymbolId o) const;
  bool lambda_capable(StateId q) const { return omega(q, kNullSymbol) > 0.0; }

  StateId new_state() { return next_id++; }

  /// Distinct predecessors of q (excluding q itself unless self-loop).
  std::vector<StateId> predecessors(StateId q) const;

  /// Field-for-field equality; emission rows are compared through labels so
  /// two models agree regardless of vocabulary interning order.
  bool equals(const Hmm& other) const;
};

/// A fresh two-state model (initial and final, no edges) over the given
/// vocabulary. Used as the seed of incremental learning.
Hmm make_empty_model(Vocabulary vocab);

struct ValidationResult {
  bool ok = true;
  std::string message;  // first violated invariant, names the state/edge
};

/// Checks every structural invariant of a model; violations are reported,
/// not thrown.
ValidationResult validate(const Hmm& hmm);

/// Walks the model from the initial to the final state, sampling
/// transitions and emissions; null emissions are dropped from the output.
/// Deterministic for a given seed. Throws if the final state is not reached
/// within max_steps transitions.
std::vector<SymbolId> sample(const Hmm& hmm, std::uint64_t seed,
                             std::size_t max_steps = 10000);

}  // namespace semhmm
