#include "support/fixtures.hpp"

#include <stdexcept>

namespace semhmm::testing {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::map<SymbolId, double> dirichletish(std::mt19937_64& rng,
                                        const std::vector<SymbolId>& keys,
                                        double mass) {
  std::map<SymbolId, double> row;
  double total = 0.0;
  for (SymbolId k : keys) {
    const double w = -std::log(1.0 - uniform01(rng));
    row[k] = w;
    total += w;
  }
  for (auto& [k, w] : row) w *= mass / total;
  return row;
}

}  // namespace

Hmm make_m0() {
  Vocabulary vocab;
  const SymbolId a = vocab.intern("a");
  Hmm hmm = make_empty_model(vocab);
  const StateId q0 = hmm.initial_state();
  const StateId qn = hmm.final_state();
  const StateId s1 = hmm.new_state();
  hmm.order = {q0, s1, qn};
  hmm.trans[q0] = {{s1, 1.0}};
  hmm.trans[s1] = {{qn, 1.0}};
  hmm.emit[s1] = {{a, 0.7}, {kNullSymbol, 0.3}};
  return hmm;
}

Hmm make_doorbell() {
  Vocabulary vocab;
  const SymbolId hear = vocab.intern("hear");
  const SymbolId listen = vocab.intern("listen");
  const SymbolId walk = vocab.intern("walk");
  const SymbolId go = vocab.intern("go");
  const SymbolId open = vocab.intern("open");
  const SymbolId greet = vocab.intern("greet");
  const SymbolId allow = vocab.intern("allow");

  Hmm hmm = make_empty_model(vocab);
  const StateId q0 = hmm.initial_state();
  const StateId qn = hmm.final_state();
  const StateId s1 = hmm.new_state();
  const StateId s2 = hmm.new_state();
  const StateId s3 = hmm.new_state();
  const StateId s4 = hmm.new_state();
  hmm.order = {q0, s1, s2, s3, s4, qn};

  hmm.trans[q0] = {{s1, 1.0}};
  hmm.trans[s1] = {{s2, 0.8}, {s3, 0.2}};
  hmm.trans[s2] = {{s3, 1.0}};
  hmm.trans[s3] = {{s4, 1.0}};
  hmm.trans[s4] = {{qn, 1.0}};

  hmm.emit[s1] = {{hear, 0.55}, {listen, 0.30}, {kNullSymbol, 0.15}};
  hmm.emit[s2] = {{walk, 0.45}, {go, 0.40}, {kNullSymbol, 0.15}};
  hmm.emit[s3] = {{open, 0.85}, {kNullSymbol, 0.15}};
  hmm.emit[s4] = {{greet, 0.45}, {allow, 0.40}, {kNullSymbol, 0.15}};
  return hmm;
}

Hmm random_left_right_hmm(std::uint64_t seed, const RandomModelSpec& spec) {
  std::mt19937_64 rng(seed);
  const int n = spec.min_states +
                static_cast<int>(rng() % static_cast<std::uint64_t>(
                                     spec.max_states - spec.min_states + 1));

  Vocabulary vocab;
  std::vector<SymbolId> alphabet;
  for (int k = 0; k < spec.alphabet; ++k)
    alphabet.push_back(vocab.intern(std::string(1, static_cast<char>('a' + k))));

  Hmm hmm = make_empty_model(vocab);
  const StateId q0 = hmm.initial_state();
  const StateId qn = hmm.final_state();
  std::vector<StateId> states{q0};
  for (int i = 0; i < n - 2; ++i) states.push_back(hmm.new_state());
  states.push_back(qn);
  hmm.order = states;

  // Random forward edges, then patch so every non-final state can leave and
  // every non-initial state can be entered.
  std::vector<std::vector<StateId>> succ(n);
  for (int i = 0; i + 1 < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < 0.5) succ[i].push_back(states[j]);
  for (int i = 0; i + 1 < n; ++i)
    if (succ[i].empty()) {
      const int j = i + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - i - 1));
      succ[i].push_back(states[j]);
    }
  for (int j = 1; j < n; ++j) {
    bool entered = false;
    for (int i = 0; i < j; ++i)
      for (StateId t : succ[i]) entered |= (t == states[j]);
    if (!entered) {
      const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(j));
      succ[i].push_back(states[j]);
    }
  }
  std::vector<bool> self_loop(n, false);
  for (int i = 1; i + 1 < n; ++i)
    if (uniform01(rng) < spec.self_loop_prob) {
      self_loop[i] = true;
      succ[i].push_back(states[i]);
    }

  for (int i = 0; i + 1 < n; ++i)
    hmm.trans[states[i]] = dirichletish(rng, succ[i], 1.0);

  for (int i = 1; i + 1 < n; ++i) {
    const bool allow_lambda = spec.lambda_self_loops || !self_loop[i];
    const double lambda_mass = allow_lambda ? uniform01(rng) * spec.max_lambda : 0.0;
    const int n_symbols =
        1 + static_cast<int>(rng() % static_cast<std::uint64_t>(alphabet.size()));
    std::vector<SymbolId> chosen;
    std::vector<SymbolId> pool = alphabet;
    for (int k = 0; k < n_symbols; ++k) {
      const std::size_t pick = rng() % pool.size();
      chosen.push_back(pool[pick]);
      pool.erase(pool.begin() + pick);
    }
    auto row = dirichletish(rng, chosen, 1.0 - lambda_mass);
    if (lambda_mass > 0.0) row[kNullSymbol] = lambda_mass;
    hmm.emit[states[i]] = std::move(row);
  }

  if (auto v = validate(hmm); !v.ok)
    throw std::logic_error("random model invalid: " + v.message);
  return hmm;
}

Corpus sample_corpus(const Hmm& hmm, std::size_t n, std::uint64_t seed) {
  Corpus corpus;
  corpus.vocab = hmm.vocab;
  for (std::size_t i = 0; i < n; ++i)
    corpus.narratives.push_back(sample(hmm, seed + i));
  return corpus;
}

Hmm randomize_parameters(const Hmm& hmm, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Hmm out = hmm;
  for (auto& [q, row] : out.trans) {
    std::vector<StateId> keys;
    for (const auto& [to, p] : row) keys.push_back(to);
    row = dirichletish(rng, keys, 1.0);
  }
  for (StateId q : out.order) {
    if (q == out.initial_state() || q == out.final_state()) continue;
    std::vector<SymbolId> keys;
    for (const auto& [o, p] : out.emit.at(q)) keys.push_back(o);
    auto fresh = dirichletish(rng, keys, 1.0);
    std::map<SymbolId, double> row(fresh.begin(), fresh.end());
    out.emit[q] = std::move(row);
  }
  return out;
}

std::vector<SymbolId> wrap(const Corpus& corpus,
                           const std::vector<std::string>& labels) {
  std::vector<SymbolId> seq{kStartSymbol};
  for (const auto& label : labels) {
    auto id = corpus.vocab.find(label);
    if (!id) throw std::runtime_error("unknown label " + label);
    seq.push_back(*id);
  }
  seq.push_back(kEndSymbol);
  return seq;
}

}  // namespace semhmm::testing
