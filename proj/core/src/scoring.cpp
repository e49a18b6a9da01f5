#include "semhmm/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semhmm {

double z_test_p_value(long n, long v, double p0) {
  const double rate = static_cast<double>(v) / static_cast<double>(n);
  const double se = std::sqrt(p0 * (1.0 - p0) / static_cast<double>(n));
  const double z = (rate - p0) / se;
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

ConstraintSet mine_constraints(const Corpus& corpus, double p0,
                               double significance, int min_opportunities,
                               bool eventual_follow) {
  if (corpus.empty()) throw std::runtime_error("empty corpus");
  if (significance <= 0.0 || significance >= 1.0)
    throw std::invalid_argument("significance must lie in (0, 1)");

  // opportunities[y]: interior occurrences of y with at least one later
  // event; followed[{x,y}]: how often x came (immediately) after.
  std::map<SymbolId, long> opportunities;
  std::map<std::pair<SymbolId, SymbolId>, long> followed;
  for (const auto& seq : corpus.narratives) {
    const std::size_t last = seq.size() - 2;  // last interior position
    for (std::size_t i = 1; i + 1 <= last; ++i) {
      const SymbolId y = seq[i];
      ++opportunities[y];
      if (eventual_follow) {
        std::set<SymbolId> seen;
        for (std::size_t j = i + 1; j <= last; ++j) seen.insert(seq[j]);
        for (SymbolId x : seen) ++followed[{x, y}];
      } else {
        ++followed[{seq[i + 1], y}];
      }
    }
  }

  ConstraintSet out;
  for (SymbolId x : corpus.used_event_symbols()) {
    for (SymbolId y : corpus.used_event_symbols()) {
      if (x == y) continue;
      auto nit = opportunities.find(y);
      if (nit == opportunities.end() || nit->second < min_opportunities) continue;
      const long n = nit->second;
      auto vit = followed.find({x, y});
      const long v = vit == followed.end() ? 0 : vit->second;
      if (static_cast<double>(v) / n >= p0) continue;
      if (z_test_p_value(n, v, p0) < significance)
        out.rules.push_back({x, y, n, v});
    }
  }
  std::sort(out.rules.begin(), out.rules.end());
  return out;
}

namespace {

// reach[q] = states reachable from q along a directed path whose interior
// states can all emit null; includes direct successors.
std::map<StateId, std::set<StateId>> lambda_closure(const Hmm& hmm) {
  std::map<StateId, std::set<StateId>> reach;
  for (auto it = hmm.order.rbegin(); it != hmm.order.rend(); ++it) {
    const StateId q = *it;
    auto& r = reach[q];
    auto row = hmm.trans.find(q);
    if (row == hmm.trans.end()) continue;
    for (const auto& [to, p] : row->second) {
      if (p <= 0.0) continue;
      r.insert(to);
      if (to != q && hmm.lambda_capable(to)) {
        const auto& sub = reach[to];
        r.insert(sub.begin(), sub.end());
      }
    }
  }
  return reach;
}

}  // namespace

int count_model_violations(const Hmm& hmm, const ConstraintSet& constraints) {
  if (constraints.empty()) return 0;

  std::map<SymbolId, std::vector<StateId>> emitters;
  for (StateId q : hmm.order)
    for (const auto& [o, p] : hmm.emit.at(q))
      if (p > 0.0 && !Vocabulary::is_reserved(o)) emitters[o].push_back(q);

  const auto reach = lambda_closure(hmm);
  int violated = 0;
  for (const auto& rule : constraints.rules) {
    auto ys = emitters.find(rule.y);
    auto xs = emitters.find(rule.x);
    if (ys == emitters.end() || xs == emitters.end()) continue;
    bool hit = false;
    for (StateId qy : ys->second) {
      const auto& r = reach.at(qy);
      for (StateId qx : xs->second) {
        if (r.count(qx)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) ++violated;
  }
  return violated;
}

double log_prior(const Hmm& hmm, const ConstraintSet& constraints,
                 const ScoreConfig& config) {
  const double q = static_cast<double>(hmm.num_states());
  const double t = static_cast<double>(hmm.num_edges());
  const double c = config.kappa_c == 0.0
                       ? 0.0
                       : static_cast<double>(count_model_violations(hmm, constraints));
  return -(config.kappa_q * q + config.kappa_t * t + config.kappa_c * c);
}

double log_likelihood_exact(const Hmm& hmm, const Corpus& corpus,
                            const TmaxPolicy& policy) {
  return corpus_log_likelihood(hmm, corpus, policy);
}

namespace {

double trans_term(const Hmm& hmm, const CountTable& counts, StateId q) {
  double term = 0.0;
  for (auto it = counts.trans.lower_bound({q, 0});
       it != counts.trans.end() && it->first.first == q; ++it) {
    const double c = it->second;
    if (c == 0.0) continue;
    const double p = hmm.transition(q, it->first.second);
    if (p <= 0.0)
      throw std::runtime_error("inconsistent count/parameter pair on transition q" +
                               std::to_string(q) + " -> q" +
                               std::to_string(it->first.second));
    term += c * std::log(p);
  }
  return term;
}

double emit_term(const Hmm& hmm, const CountTable& counts, StateId q) {
  double term = 0.0;
  for (const auto& [o, c] : counts.emissions_into(q)) {
    if (c == 0.0) continue;
    const double p = hmm.omega(q, o);
    if (p <= 0.0)
      throw std::runtime_error(
          "inconsistent count/parameter pair on emission of \"" +
          hmm.vocab.label(o) + "\" at q" + std::to_string(q));
    term += c * std::log(p);
  }
  return term;
}

}  // namespace

ApproxLikelihood ApproxLikelihood::build(const Hmm& hmm, const CountTable& counts) {
  ApproxLikelihood a;
  for (StateId q : hmm.order) {
    const double tt = trans_term(hmm, counts, q);
    const double et = emit_term(hmm, counts, q);
    a.trans_terms_[q] = tt;
    a.emit_terms_[q] = et;
    a.total_ += tt + et;
  }
  return a;
}

double ApproxLikelihood::updated(const Hmm& hmm, const CountTable& counts,
                                 const std::vector<StateId>& trans_rows,
                                 const std::vector<StateId>& emit_rows,
                                 const std::vector<StateId>& removed_states) const {
  double total = total_;
  std::set<StateId> removed(removed_states.begin(), removed_states.end());
  for (StateId q : removed) {
    if (auto it = trans_terms_.find(q); it != trans_terms_.end()) total -= it->second;
    if (auto it = emit_terms_.find(q); it != emit_terms_.end()) total -= it->second;
  }
  for (StateId q : trans_rows) {
    if (removed.count(q)) continue;
    if (auto it = trans_terms_.find(q); it != trans_terms_.end()) total -= it->second;
    total += trans_term(hmm, counts, q);
  }
  for (StateId q : emit_rows) {
    if (removed.count(q)) continue;
    if (auto it = emit_terms_.find(q); it != emit_terms_.end()) total -= it->second;
    total += emit_term(hmm, counts, q);
  }
  return total;
}

void ApproxLikelihood::apply(const Hmm& hmm, const CountTable& counts,
                             const std::vector<StateId>& trans_rows,
                             const std::vector<StateId>& emit_rows,
                             const std::vector<StateId>& removed_states) {
  total_ = updated(hmm, counts, trans_rows, emit_rows, removed_states);
  for (StateId q : removed_states) {
    trans_terms_.erase(q);
    emit_terms_.erase(q);
  }
  for (StateId q : trans_rows) trans_terms_[q] = trans_term(hmm, counts, q);
  for (StateId q : emit_rows) emit_terms_[q] = emit_term(hmm, counts, q);
}

double log_likelihood_approx(const Hmm& hmm, const CountTable& counts) {
  return ApproxLikelihood::build(hmm, counts).total();
}

double score(const Hmm& hmm, const CountTable& counts, const Corpus& corpus,
             const ConstraintSet& constraints, const ScoreConfig& config) {
  const double prior = log_prior(hmm, constraints, config);
  const double lik = config.mode == ScoreConfig::Mode::exact
                         ? log_likelihood_exact(hmm, corpus, config.tmax)
                         : log_likelihood_approx(hmm, counts);
  return prior + lik;
}

void save_constraints(const ConstraintSet& constraints, const Vocabulary& vocab,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write constraints file: " + path.string());
  for (const auto& r : constraints.rules)
    out << vocab.label(r.x) << " NEVER_FOLLOWS " << vocab.label(r.y) << ' '
        << r.opportunities << ' ' << r.violations << '\n';
}

ConstraintSet load_constraints(Vocabulary& vocab,
                               const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open constraints file: " + path.string());
  ConstraintSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string x, kw, y;
    long n = 0, v = 0;
    if (!(ss >> x)) continue;  // blank line
    if (!(ss >> kw >> y >> n >> v) || kw != "NEVER_FOLLOWS" || v < 0 || n < v)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": malformed constraint line");
    out.rules.push_back({vocab.intern(x), vocab.intern(y), n, v});
  }
  std::sort(out.rules.begin(), out.rules.end());
  return out;
}

}  // namespace semhmm
