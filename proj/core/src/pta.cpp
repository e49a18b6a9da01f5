#include "semhmm/pta.hpp"

#include <stdexcept>

namespace semhmm {

PtaResult build_pta(const Corpus& corpus) {
  if (corpus.empty()) throw std::runtime_error("empty corpus");
  for (std::size_t n = 0; n < corpus.narratives.size(); ++n) {
    const auto& seq = corpus.narratives[n];
    if (seq.size() < 2 || seq.front() != kStartSymbol || seq.back() != kEndSymbol)
      throw std::runtime_error("narrative " + std::to_string(n) +
                               " is not sentinel-wrapped");
  }

  Hmm hmm = make_empty_model(corpus.vocab);
  const StateId q0 = hmm.initial_state();
  const StateId qn = hmm.final_state();
  CountTable counts;

  // Tree children per state, keyed by the single symbol each child emits.
  std::map<StateId, std::map<SymbolId, StateId>> children;
  std::map<StateId, SymbolId> emits;  // interior states only

  std::vector<StateId> interior_order;
  for (const auto& seq : corpus.narratives) {
    StateId cur = q0;
    counts.add_visit(q0, 1.0);
    for (std::size_t i = 1; i + 1 < seq.size(); ++i) {
      const SymbolId o = seq[i];
      StateId next;
      auto& kids = children[cur];
      if (auto it = kids.find(o); it != kids.end()) {
        next = it->second;
      } else {
        next = hmm.new_state();
        kids.emplace(o, next);
        emits[next] = o;
        interior_order.push_back(next);
      }
      counts.add_visit(next, 1.0);
      counts.add_transition(cur, next, 1.0);
      counts.add_emission(cur, next, o, 1.0);
      cur = next;
    }
    counts.add_visit(qn, 1.0);
    counts.add_transition(cur, qn, 1.0);
    counts.add_emission(cur, qn, kEndSymbol, 1.0);
  }

  // Creation order is topological: a state's parent always precedes it.
  hmm.order.clear();
  hmm.order.push_back(q0);
  hmm.order.insert(hmm.order.end(), interior_order.begin(), interior_order.end());
  hmm.order.push_back(qn);

  for (const auto& [q, o] : emits) hmm.emit[q] = {{o, 1.0}};

  // Raw branching fractions; smoothing happens only in the M-step.
  for (const auto& [edge, c] : counts.trans) {
    const double out = counts.transitions_out(edge.first);
    hmm.trans[edge.first][edge.second] = c / out;
  }

  return {std::move(hmm), std::move(counts)};
}

}  // namespace semhmm
