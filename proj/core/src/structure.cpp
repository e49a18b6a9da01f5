#include "semhmm/structure.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>
#include <set>
#include <stdexcept>

namespace semhmm {

namespace {

std::map<StateId, int> ordinal_map(const Hmm& hmm) {
  std::map<StateId, int> out;
  for (std::size_t i = 0; i < hmm.order.size(); ++i)
    out[hmm.order[i]] = static_cast<int>(i);
  return out;
}

// True when a directed path from a to b exists that is not the direct edge.
bool has_indirect_path(const Hmm& hmm, const std::map<StateId, int>& ord,
                       StateId a, StateId b) {
  const int lo = ord.at(a), hi = ord.at(b);
  if (lo + 1 >= hi) return false;  // no interior ordinal can exist
  std::vector<StateId> stack;
  std::set<StateId> seen;

  // Plain DFS, excluding the direct edge out of a.
  auto row = hmm.trans.find(a);
  if (row == hmm.trans.end()) return false;
  for (const auto& [to, p] : row->second) {
    if (p <= 0.0 || to == a || to == b) continue;
    if (ord.at(to) < hi && seen.insert(to).second) stack.push_back(to);
  }
  while (!stack.empty()) {
    const StateId q = stack.back();
    stack.pop_back();
    auto r = hmm.trans.find(q);
    if (r == hmm.trans.end()) continue;
    for (const auto& [to, p] : r->second) {
      if (p <= 0.0 || to == q) continue;
      if (to == b) return true;
      if (ord.at(to) < hi && seen.insert(to).second) stack.push_back(to);
    }
  }
  return false;
}

// Rebuilds the topological order after a structure edit. Kahn's algorithm
// with the smallest prior ordinal first keeps the renumbering deterministic.
std::vector<StateId> rebuild_order(
    const std::map<StateId, std::map<StateId, double>>& trans,
    const std::vector<std::pair<int, StateId>>& priority) {
  std::map<StateId, int> indegree;
  for (const auto& [prio, q] : priority) indegree[q];
  for (const auto& [from, row] : trans)
    for (const auto& [to, p] : row)
      if (to != from) ++indegree[to];

  std::set<std::pair<int, StateId>> ready;
  std::map<StateId, int> prio_of;
  for (const auto& [prio, q] : priority) prio_of[q] = prio;
  for (const auto& [q, deg] : indegree)
    if (deg == 0) ready.insert({prio_of.at(q), q});

  std::vector<StateId> order;
  while (!ready.empty()) {
    const auto [prio, q] = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(q);
    auto row = trans.find(q);
    if (row == trans.end()) continue;
    for (const auto& [to, p] : row->second) {
      if (to == q) continue;
      if (--indegree.at(to) == 0) ready.insert({prio_of.at(to), to});
    }
  }
  if (order.size() != indegree.size())
    throw std::logic_error("structure edit introduced a cycle");
  return order;
}

struct LambdaPaths {
  std::vector<double> alpha, beta;  // indexed by ordinal within [s, e]
  double z = 0.0;
};

// Forward/backward over the null-emitting alternative paths between the
// endpoints of an edge, excluding the edge itself. The null factor of the
// endpoint cancels in the normalized weights, so only interior states need
// to be null-capable.
LambdaPaths lambda_paths(const Hmm& hmm, const std::map<StateId, int>& ord,
                         StateId from, StateId to) {
  const int s = ord.at(from), e = ord.at(to);
  const int n = static_cast<int>(hmm.order.size());
  LambdaPaths lp;
  lp.alpha.assign(n, 0.0);
  lp.beta.assign(n, 0.0);
  lp.alpha[s] = 1.0;
  lp.beta[e] = 1.0;

  for (int v = s + 1; v <= e; ++v) {
    const StateId qv = hmm.order[v];
    const double lam = v == e ? 1.0 : hmm.omega(qv, kNullSymbol);
    if (lam <= 0.0) continue;
    double acc = 0.0;
    for (int u = s; u < v; ++u) {
      if (lp.alpha[u] == 0.0) continue;
      if (u == s && v == e) continue;  // the edge being deleted
      acc += lp.alpha[u] * hmm.transition(hmm.order[u], qv);
    }
    lp.alpha[v] = acc * lam;
  }
  for (int v = e - 1; v >= s; --v) {
    const StateId qv = hmm.order[v];
    double acc = 0.0;
    for (int w = v + 1; w <= e; ++w) {
      if (lp.beta[w] == 0.0) continue;
      if (v == s && w == e) continue;
      const double lam = w == e ? 1.0 : hmm.omega(hmm.order[w], kNullSymbol);
      acc += hmm.transition(qv, hmm.order[w]) * lam * lp.beta[w];
    }
    lp.beta[v] = acc;
  }
  lp.z = lp.alpha[e];
  return lp;
}

}  // namespace

StructureOpResult merge_states(const Hmm& hmm, const CountTable& counts,
                               StateId p, StateId q,
                               const MStepOptions& options) {
  if (p == q) throw std::invalid_argument("merge_states: identical states");
  const StateId q0 = hmm.initial_state();
  const StateId qn = hmm.final_state();
  if (p == q0 || q == q0 || p == qn || q == qn)
    throw std::invalid_argument("merge_states: sentinel states cannot merge");

  auto ord = ordinal_map(hmm);
  StateId lo = p, hi = q;
  if (ord.at(lo) > ord.at(hi)) std::swap(lo, hi);
  if (has_indirect_path(hmm, ord, lo, hi))
    throw std::invalid_argument("merge_states: merge would create a cycle");

  Hmm out;
  out.vocab = hmm.vocab;
  out.next_id = hmm.next_id;
  const StateId r = out.new_state();
  auto remap = [&](StateId s) { return (s == p || s == q) ? r : s; };

  CountTable new_counts;
  for (const auto& [s, c] : counts.visits) new_counts.add_visit(remap(s), c);
  for (const auto& [edge, c] : counts.trans)
    new_counts.add_transition(remap(edge.first), remap(edge.second), c);
  for (const auto& [key, c] : counts.emit)
    new_counts.add_emission(remap(std::get<0>(key)), remap(std::get<1>(key)),
                            std::get<2>(key), c);

  // Structure: union of the rows, with the pair's mutual edge (if any)
  // folding into a self-loop on r. Parameters of rows that do not touch the
  // pair are copied; the rest are re-derived from the merged counts.
  std::set<StateId> touched_preds;
  std::map<StateId, std::set<StateId>> support;
  for (const auto& [from, row] : hmm.trans) {
    for (const auto& [to, prob] : row) {
      support[remap(from)].insert(remap(to));
      if ((to == p || to == q) && from != p && from != q)
        touched_preds.insert(from);
    }
  }

  for (const auto& [from, succ] : support) {
    if (from == r || touched_preds.count(from)) continue;
    out.trans[from] = hmm.trans.at(from);  // untouched row, copy params
  }
  StructureOpResult result;
  result.changed.removed_states = {p, q};
  for (StateId from : touched_preds) {
    const std::set<StateId>& succ = support.at(from);
    out.trans[from] = derive_transition_row({succ.begin(), succ.end()},
                                            new_counts, from, options.pseudocount);
    result.changed.trans_rows.push_back(from);
  }
  if (auto it = support.find(r); it != support.end()) {
    out.trans[r] = derive_transition_row({it->second.begin(), it->second.end()},
                                         new_counts, r, options.pseudocount);
    result.changed.trans_rows.push_back(r);
  }

  for (StateId s : hmm.order)
    if (s != p && s != q) out.emit[s] = hmm.emit.at(s);

  std::vector<std::pair<int, StateId>> priority;
  for (const auto& [s, o] : ord)
    if (s != p && s != q) priority.push_back({o, s});
  priority.push_back({std::min(ord.at(p), ord.at(q)), r});
  std::sort(priority.begin(), priority.end());
  out.order = rebuild_order(out.trans, priority);

  out.emit[r] = derive_emission_row(out, new_counts, r, options);
  result.changed.emit_rows.push_back(r);

  result.hmm = std::move(out);
  result.counts = std::move(new_counts);
  return result;
}

std::optional<StructureOpResult> delete_edge(const Hmm& hmm,
                                             const CountTable& counts,
                                             StateId from, StateId to,
                                             const MStepOptions& options) {
  if (hmm.transition(from, to) <= 0.0)
    throw std::invalid_argument("delete_edge: no such transition");
  if (from == to) return std::nullopt;  // a self-loop has no alternative path

  auto ord = ordinal_map(hmm);
  const LambdaPaths lp = lambda_paths(hmm, ord, from, to);
  if (lp.z <= 0.0) return std::nullopt;  // no redistribution path

  const int s = ord.at(from), e = ord.at(to);
  const double n_evidence = counts.transition(from, to);
  const auto deleted_emissions = [&] {
    std::map<SymbolId, double> out;
    for (const auto& [key, c] : counts.emit)
      if (std::get<0>(key) == from && std::get<1>(key) == to)
        out[std::get<2>(key)] = c;
    return out;
  }();

  StructureOpResult result;
  result.hmm = hmm;
  result.counts = counts;
  Hmm& out = result.hmm;
  CountTable& nc = result.counts;

  nc.trans.erase({from, to});
  for (const auto& [o, c] : deleted_emissions) nc.emit.erase({from, to, o});
  out.trans.at(from).erase(to);

  std::set<StateId> touched_trans{from};
  std::set<StateId> touched_emit;

  if (n_evidence > 0.0) {
    const double scale = n_evidence / lp.z;
    for (int u = s; u < e; ++u) {
      if (lp.alpha[u] == 0.0) continue;
      const StateId qu = hmm.order[u];
      auto row = hmm.trans.find(qu);
      if (row == hmm.trans.end()) continue;
      for (const auto& [dst, prob] : row->second) {
        const int w = ord.at(dst);
        if (w <= u || w > e) continue;
        if (u == s && w == e) continue;
        const double lam = w == e ? 1.0 : hmm.omega(dst, kNullSymbol);
        const double evidence = lp.alpha[u] * prob * lam * lp.beta[w] * scale;
        if (evidence <= 0.0) continue;
        nc.add_transition(qu, dst, evidence);
        touched_trans.insert(qu);
        if (w == e) {
          // The endpoint keeps emitting what it emitted when reached over
          // the deleted edge; re-home those counts proportionally.
          for (const auto& [o, c] : deleted_emissions)
            nc.add_emission(qu, dst, o, c * evidence / n_evidence);
        } else {
          nc.add_emission(qu, dst, kNullSymbol, evidence);
          touched_emit.insert(dst);
        }
      }
    }
    for (int v = s + 1; v < e; ++v) {
      const double visits = lp.alpha[v] * lp.beta[v] * scale;
      if (visits > 0.0) nc.add_visit(hmm.order[v], visits);
    }
  }

  for (StateId q : touched_trans) {
    std::vector<StateId> succ;
    for (const auto& [dst, prob] : out.trans.at(q)) succ.push_back(dst);
    if (succ.empty())
      return std::nullopt;  // deletion would leave the source with no exit
    out.trans[q] = derive_transition_row(succ, nc, q, options.pseudocount);
    result.changed.trans_rows.push_back(q);
  }
  for (StateId q : touched_emit) {
    out.emit[q] = derive_emission_row(out, nc, q, options);
    result.changed.emit_rows.push_back(q);
  }
  return result;
}

std::vector<StructureChange> enumerate_candidates(const Hmm& hmm,
                                                  const CountTable& counts,
                                                  const SearchConfig& config) {
  (void)counts;
  std::vector<StructureChange> out;
  const int n = static_cast<int>(hmm.order.size());
  auto ord = ordinal_map(hmm);

  std::map<StateId, std::set<StateId>> preds;
  for (const auto& [from, row] : hmm.trans)
    for (const auto& [to, p] : row)
      if (p > 0.0) preds[to].insert(from);

  auto shares_neighbor = [&](StateId a, StateId b) {
    const auto& pa = preds[a];
    const auto& pb = preds[b];
    for (StateId s : pa)
      if (pb.count(s)) return true;
    auto ra = hmm.trans.find(a);
    auto rb = hmm.trans.find(b);
    if (ra == hmm.trans.end() || rb == hmm.trans.end()) return false;
    for (const auto& [to, p] : ra->second)
      if (p > 0.0 && rb->second.count(to) && rb->second.at(to) > 0.0) return true;
    return false;
  };

  for (int i = 1; i + 1 < n; ++i) {
    for (int j = i + 1; j + 1 < n; ++j) {
      const StateId a = hmm.order[i];
      const StateId b = hmm.order[j];
      if (config.pruning == SearchConfig::Pruning::shared_neighbor &&
          !shares_neighbor(a, b))
        continue;
      if (has_indirect_path(hmm, ord, a, b)) continue;
      out.push_back({StructureChange::Kind::merge, a, b});
    }
  }

  for (int i = 0; i < n; ++i) {
    const StateId from = hmm.order[i];
    auto row = hmm.trans.find(from);
    if (row == hmm.trans.end()) continue;
    std::vector<std::pair<int, StateId>> targets;
    for (const auto& [to, p] : row->second)
      if (p > 0.0 && to != from) targets.push_back({ord.at(to), to});
    std::sort(targets.begin(), targets.end());
    for (const auto& [o, to] : targets) {
      if (row->second.size() < 2) continue;  // only exit; deletion strands it
      if (lambda_paths(hmm, ord, from, to).z <= 0.0) continue;
      out.push_back({StructureChange::Kind::delete_edge, from, to});
    }
  }
  return out;
}

namespace {

// Grafts a freshly built prefix tree into the model: interior tree states
// get new ids, the sentinels are shared, counts add up, and only the new
// rows plus the initial state's row are (re-)derived.
void graft_pta(Hmm& model, CountTable& counts, const PtaResult& pta,
               const MStepOptions& options) {
  const StateId q0 = model.initial_state();
  const StateId qn = model.final_state();
  const StateId pq0 = pta.hmm.initial_state();
  const StateId pqn = pta.hmm.final_state();

  std::map<StateId, StateId> remap{{pq0, q0}, {pqn, qn}};
  std::vector<StateId> fresh;
  for (StateId s : pta.hmm.order) {
    if (s == pq0 || s == pqn) continue;
    const StateId id = model.new_state();
    remap[s] = id;
    fresh.push_back(id);
  }

  for (const auto& [s, c] : pta.counts.visits) counts.add_visit(remap.at(s), c);
  for (const auto& [edge, c] : pta.counts.trans)
    counts.add_transition(remap.at(edge.first), remap.at(edge.second), c);
  for (const auto& [key, c] : pta.counts.emit)
    counts.add_emission(remap.at(std::get<0>(key)), remap.at(std::get<1>(key)),
                        std::get<2>(key), c);

  for (const auto& [s, row] : pta.hmm.trans)
    for (const auto& [to, p] : row) model.trans[remap.at(s)][remap.at(to)];

  // New interior states enter just before the final state, in creation
  // order; that order is topological because tree parents precede children.
  model.order.insert(model.order.end() - 1, fresh.begin(), fresh.end());

  for (StateId s : fresh) {
    std::vector<StateId> succ;
    for (const auto& [to, p] : model.trans.at(s)) succ.push_back(to);
    model.trans[s] = derive_transition_row(succ, counts, s, options.pseudocount);
    model.emit[s] = derive_emission_row(model, counts, s, options);
  }
  std::vector<StateId> q0succ;
  for (const auto& [to, p] : model.trans.at(q0)) q0succ.push_back(to);
  model.trans[q0] = derive_transition_row(q0succ, counts, q0, options.pseudocount);
}

struct ScoredCandidate {
  StructureChange change;
  StructureOpResult result;
  double score = 0.0;
};

// Exact-mode likelihood with per-narrative caching. A structure edit only
// re-estimates a handful of rows; a narrative whose forward mass never
// touches those rows keeps its exact z, so only the affected narratives are
// re-run through the trellis. The truncation bound is anchored per rebuild
// so cached and recomputed terms stay comparable across candidates.
class ExactScorer {
 public:
  void rebuild(const Hmm& hmm, const Corpus& seen, const TmaxPolicy& policy) {
    words_ = (hmm.next_id + 63) / 64;
    std::map<std::vector<SymbolId>, double> distinct;
    for (const auto& seq : seen.narratives) distinct[seq] += 1.0;

    const auto compiled = CompiledHmm::build(hmm);
    entries_.clear();
    entries_.reserve(distinct.size());
    total_ = 0.0;
    const double floor = std::log(kUnderflowFloor);
    std::vector<std::uint64_t> ordinal_mask;
    for (const auto& [seq, weight] : distinct) {
      Entry entry;
      entry.seq = seq;
      entry.weight = weight;
      entry.t_max = policy.t_max(static_cast<int>(seq.size()) - 1,
                                 hmm.num_states());
      const double z = forward_z(compiled, entry.seq, entry.t_max, &ordinal_mask);
      entry.logz = z < kUnderflowFloor ? floor : std::log(z);
      entry.support.assign(words_, 0);
      for (int j = 0; j < compiled.n; ++j)
        if (ordinal_mask[j >> 6] & (std::uint64_t{1} << (j & 63))) {
          const StateId id = compiled.id[j];
          entry.support[id >> 6] |= std::uint64_t{1} << (id & 63);
        }
      total_ += weight * entry.logz;
      entries_.push_back(std::move(entry));
    }
  }

  double log_likelihood(const Hmm& cand, const ChangedRows& changed) const {
    std::vector<std::uint64_t> mask(words_, 0);
    auto mark = [&](StateId id) {
      if ((id >> 6) < words_) mask[id >> 6] |= std::uint64_t{1} << (id & 63);
    };
    for (StateId id : changed.trans_rows) mark(id);
    for (StateId id : changed.emit_rows) mark(id);
    for (StateId id : changed.removed_states) mark(id);

    const double floor = std::log(kUnderflowFloor);
    double total = total_;
    std::optional<CompiledHmm> compiled;
    for (const auto& entry : entries_) {
      bool affected = false;
      for (std::size_t w = 0; w < words_; ++w)
        if (entry.support[w] & mask[w]) {
          affected = true;
          break;
        }
      if (!affected) continue;
      if (!compiled) compiled = CompiledHmm::build(cand);
      const double z = forward_z(*compiled, entry.seq, entry.t_max);
      const double logz = z < kUnderflowFloor ? floor : std::log(z);
      total += entry.weight * (logz - entry.logz);
    }
    return total;
  }

  double total() const { return total_; }

 private:
  struct Entry {
    std::vector<SymbolId> seq;
    double weight = 1.0;
    double logz = 0.0;
    int t_max = 0;
    std::vector<std::uint64_t> support;  // by state id
  };
  std::vector<Entry> entries_;
  std::size_t words_ = 0;
  double total_ = 0.0;
};

}  // namespace

LearnResult learn(const Corpus& corpus, const SearchConfig& config) {
  if (corpus.empty()) throw std::runtime_error("empty corpus");
  if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

  LearnResult result;
  result.constraints = config.constraints
                           ? *config.constraints
                           : mine_constraints(corpus, config.score.p0,
                                              config.score.significance,
                                              config.score.min_opportunities,
                                              config.score.eventual_follow);

  result.hmm = make_empty_model(corpus.vocab);
  Corpus seen{corpus.vocab, {}};
  const bool approx = config.score.mode == ScoreConfig::Mode::approx;

  for (std::size_t start = 0; start < corpus.size();
       start += static_cast<std::size_t>(config.batch_size)) {
    const std::size_t stop =
        std::min(corpus.size(), start + static_cast<std::size_t>(config.batch_size));
    Corpus batch{corpus.vocab, {corpus.narratives.begin() + start,
                                corpus.narratives.begin() + stop}};
    seen.narratives.insert(seen.narratives.end(), batch.narratives.begin(),
                           batch.narratives.end());
    if (config.search_log)
      (*config.search_log) << "batch\t" << start / config.batch_size << '\t'
                           << batch.size() << '\n';

    graft_pta(result.hmm, result.counts, build_pta(batch), config.em.mstep);

    ApproxLikelihood cache = ApproxLikelihood::build(result.hmm, result.counts);
    double current = approx
                         ? log_prior(result.hmm, result.constraints, config.score) +
                               cache.total()
                         : score(result.hmm, result.counts, seen,
                                 result.constraints, config.score);

    for (;;) {
      const auto candidates = enumerate_candidates(result.hmm, result.counts, config);
      std::optional<ScoredCandidate> best;
      for (const auto& cand : candidates) {
        std::optional<StructureOpResult> edited;
        if (cand.kind == StructureChange::Kind::merge)
          edited = merge_states(result.hmm, result.counts, cand.a, cand.b,
                                config.em.mstep);
        else
          edited = delete_edge(result.hmm, result.counts, cand.a, cand.b,
                               config.em.mstep);
        if (!edited) continue;

        double cand_score;
        if (approx) {
          cand_score = log_prior(edited->hmm, result.constraints, config.score) +
                       cache.updated(edited->hmm, edited->counts,
                                     edited->changed.trans_rows,
                                     edited->changed.emit_rows,
                                     edited->changed.removed_states);
        } else {
          cand_score = score(edited->hmm, edited->counts, seen,
                             result.constraints, config.score);
        }
        if (config.search_log) {
          (*config.search_log)
              << (cand.kind == StructureChange::Kind::merge ? "merge" : "delete")
              << "\tq" << cand.a << "\tq" << cand.b << '\t'
              << cand_score - current << '\t'
              << (cand_score > current && (!best || cand_score > best->score)
                      ? "best-so-far"
                      : "rejected")
              << '\n';
        }
        if (cand_score > current && (!best || cand_score > best->score))
          best = ScoredCandidate{cand, std::move(*edited), cand_score};
      }
      if (!best) break;

      if (approx)
        cache.apply(best->result.hmm, best->result.counts,
                    best->result.changed.trans_rows, best->result.changed.emit_rows,
                    best->result.changed.removed_states);
      result.hmm = std::move(best->result.hmm);
      result.counts = std::move(best->result.counts);
      current = best->score;
      ++result.accepted_changes;
      if (config.search_log)
        (*config.search_log)
            << "accept\t"
            << (best->change.kind == StructureChange::Kind::merge ? "merge" : "delete")
            << "\tq" << best->change.a << "\tq" << best->change.b << '\t'
            << current << '\n';
    }

    if (config.run_em) {
      EmResult em = em_fit(result.hmm, seen, config.em);
      result.hmm = std::move(em.hmm);
      result.counts = std::move(em.counts);
    }
  }
  return result;
}

}  // namespace semhmm
