#include "semhmm/em.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace semhmm {

std::map<StateId, double> derive_transition_row(
    const std::vector<StateId>& successors, const CountTable& counts,
    StateId q, double pseudocount) {
  std::map<StateId, double> row;
  if (successors.empty()) return row;

  double denom = counts.visit(q) + pseudocount * successors.size();
  if (denom <= 0.0) {
    const double u = 1.0 / successors.size();
    for (StateId to : successors) row[to] = u;
    return row;
  }
  double sum = 0.0;
  for (StateId to : successors) {
    const double v = (counts.transition(q, to) + pseudocount) / denom;
    row[to] = v;
    sum += v;
  }
  for (auto& [to, v] : row) v /= sum;
  return row;
}

std::map<SymbolId, double> derive_emission_row(const Hmm& structure,
                                               const CountTable& counts,
                                               StateId q,
                                               const MStepOptions& options) {
  if (q == structure.initial_state()) return {{kStartSymbol, 1.0}};
  if (q == structure.final_state()) return {{kEndSymbol, 1.0}};

  const auto incoming = counts.emissions_into(q);
  std::map<SymbolId, double> row;
  double total = 0.0;
  for (const auto& [o, c] : incoming) {
    if (c <= 0.0) continue;
    row[o] = c;
    total += c;
  }
  if (options.full_vocab_smoothing)
    for (SymbolId o : structure.vocab.event_symbols()) row.emplace(o, 0.0);
  if (options.allow_lambda) row.emplace(kNullSymbol, 0.0);
  row.erase(kStartSymbol);
  row.erase(kEndSymbol);

  if (row.empty()) {
    if (!options.allow_lambda)
      throw std::runtime_error("state q" + std::to_string(q) +
                               " has no allowed emission symbols");
    return {{kNullSymbol, 1.0}};
  }

  const double denom = total + options.pseudocount * row.size();
  if (denom <= 0.0) {
    const double u = 1.0 / row.size();
    for (auto& [o, v] : row) v = u;
    return row;
  }
  double sum = 0.0;
  for (auto& [o, v] : row) {
    v = (v + options.pseudocount) / denom;
    sum += v;
  }
  for (auto& [o, v] : row) v /= sum;
  return row;
}

Hmm m_step(const Hmm& structure, const CountTable& counts,
           const MStepOptions& options) {
  Hmm out = structure;
  for (auto& [q, row] : out.trans) {
    std::vector<StateId> succ;
    succ.reserve(row.size());
    for (const auto& [to, p] : row) succ.push_back(to);
    row = derive_transition_row(succ, counts, q, options.pseudocount);
  }
  for (StateId q : out.order)
    out.emit[q] = derive_emission_row(structure, counts, q, options);
  return out;
}

double corpus_log_likelihood(const Hmm& hmm, const Corpus& corpus,
                             const TmaxPolicy& policy) {
  const auto c = CompiledHmm::build(hmm);
  const double floor = std::log(kUnderflowFloor);
  // Narratives repeat heavily in practice; compute each distinct one once.
  std::map<std::vector<SymbolId>, std::size_t> distinct;
  for (const auto& seq : corpus.narratives) ++distinct[seq];
  double total = 0.0;
  for (const auto& [seq, multiplicity] : distinct) {
    const int m = static_cast<int>(seq.size()) - 1;
    const double z = forward_z(c, seq, policy.t_max(m, hmm.num_states()));
    total += static_cast<double>(multiplicity) *
             (z < kUnderflowFloor ? floor : std::log(z));
  }
  return total;
}

double map_prior_log_density(const Hmm& hmm, double pseudocount) {
  if (pseudocount <= 0.0) return 0.0;
  double sum = 0.0;
  for (const auto& [q, row] : hmm.trans)
    for (const auto& [to, p] : row) sum += pseudocount * std::log(p);
  for (StateId q : hmm.order) {
    if (q == hmm.initial_state() || q == hmm.final_state()) continue;
    for (const auto& [o, p] : hmm.emit.at(q)) sum += pseudocount * std::log(p);
  }
  return sum;
}

EmResult em_fit(const Hmm& hmm, const Corpus& corpus, const EmConfig& config) {
  if (corpus.empty()) throw std::runtime_error("empty corpus");
  if (config.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

  EmResult result;
  result.hmm = hmm;
  double prev_loglik = 0.0;
  double prev_obj = 0.0;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    ExpectedCounts e = expected_counts(result.hmm, corpus, config.tmax);
    if (e.unreachable == corpus.size())
      throw std::runtime_error("model excludes corpus");
    result.unreachable = e.unreachable;
    result.hmm = m_step(result.hmm, e.counts, config.mstep);

    const double loglik = corpus_log_likelihood(result.hmm, corpus, config.tmax);
    const double obj =
        loglik + map_prior_log_density(result.hmm, config.mstep.pseudocount);
    const double delta = result.trace.empty() ? 0.0 : loglik - prev_loglik;
    result.trace.push_back(loglik);
    if (config.log)
      (*config.log) << iter << '\t' << loglik << '\t' << delta << '\n';

    if (result.trace.size() > 1) {
      const double rel =
          std::abs(obj - prev_obj) / std::max(1.0, std::abs(prev_obj));
      if (rel < config.rel_tol) break;
    }
    prev_loglik = loglik;
    prev_obj = obj;
  }

  // Counts above were taken under the pre-update parameters; refresh them
  // so the returned table matches the returned model.
  ExpectedCounts final_e = expected_counts(result.hmm, corpus, config.tmax);
  result.counts = std::move(final_e.counts);
  result.unreachable = final_e.unreachable;
  return result;
}

}  // namespace semhmm
