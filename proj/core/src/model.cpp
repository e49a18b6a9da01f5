#include "semhmm/model.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace semhmm {

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53-bit mantissa draw; avoids the implementation-defined distributions.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

double CountTable::visit(StateId q) const {
  auto it = visits.find(q);
  return it == visits.end() ? 0.0 : it->second;
}

double CountTable::transition(StateId from, StateId to) const {
  auto it = trans.find({from, to});
  return it == trans.end() ? 0.0 : it->second;
}

double CountTable::emission(StateId from, StateId to, SymbolId o) const {
  auto it = emit.find({from, to, o});
  return it == emit.end() ? 0.0 : it->second;
}

void CountTable::add_visit(StateId q, double w) {
  if (w != 0.0) visits[q] += w;
}

void CountTable::add_transition(StateId from, StateId to, double w) {
  if (w != 0.0) trans[{from, to}] += w;
}

void CountTable::add_emission(StateId from, StateId to, SymbolId o, double w) {
  if (w != 0.0) emit[{from, to, o}] += w;
}

double CountTable::transitions_out(StateId q) const {
  double sum = 0.0;
  for (auto it = trans.lower_bound({q, 0}); it != trans.end() && it->first.first == q; ++it)
    sum += it->second;
  return sum;
}

std::map<SymbolId, double> CountTable::emissions_into(StateId q) const {
  std::map<SymbolId, double> out;
  for (const auto& [key, value] : emit)
    if (std::get<1>(key) == q) out[std::get<2>(key)] += value;
  return out;
}

double CountTable::total_visits() const {
  double sum = 0.0;
  for (const auto& [q, c] : visits) sum += c;
  return sum;
}

double CountTable::total_transitions() const {
  double sum = 0.0;
  for (const auto& [edge, c] : trans) sum += c;
  return sum;
}

CountTable& CountTable::operator+=(const CountTable& other) {
  for (const auto& [q, c] : other.visits) visits[q] += c;
  for (const auto& [edge, c] : other.trans) trans[edge] += c;
  for (const auto& [key, c] : other.emit) emit[key] += c;
  return *this;
}

std::size_t Hmm::num_edges() const {
  std::size_t n = 0;
  for (const auto& [q, row] : trans) n += row.size();
  return n;
}

int Hmm::ordinal_of(StateId q) const {
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] == q) return static_cast<int>(i);
  return -1;
}

double Hmm::transition(StateId from, StateId to) const {
  auto row = trans.find(from);
  if (row == trans.end()) return 0.0;
  auto it = row->second.find(to);
  return it == row->second.end() ? 0.0 : it->second;
}

double Hmm::omega(StateId q, SymbolId o) const {
  auto row = emit.find(q);
  if (row == emit.end()) return 0.0;
  auto it = row->second.find(o);
  return it == row->second.end() ? 0.0 : it->second;
}

std::vector<StateId> Hmm::predecessors(StateId q) const {
  std::vector<StateId> preds;
  for (const auto& [s, row] : trans)
    if (row.count(q)) preds.push_back(s);
  return preds;
}

bool Hmm::equals(const Hmm& other) const {
  if (order != other.order || next_id != other.next_id) return false;
  if (trans != other.trans) return false;
  auto row_labels = [](const Vocabulary& v,
                       const std::map<SymbolId, double>& row) {
    std::map<std::string, double> out;
    for (const auto& [o, p] : row) out[v.label(o)] = p;
    return out;
  };
  if (emit.size() != other.emit.size()) return false;
  for (const auto& [q, row] : emit) {
    auto it = other.emit.find(q);
    if (it == other.emit.end()) return false;
    if (row_labels(vocab, row) != row_labels(other.vocab, it->second))
      return false;
  }
  return true;
}

Hmm make_empty_model(Vocabulary vocab) {
  Hmm hmm;
  hmm.vocab = std::move(vocab);
  const StateId q0 = hmm.new_state();
  const StateId qn = hmm.new_state();
  hmm.order = {q0, qn};
  hmm.emit[q0] = {{kStartSymbol, 1.0}};
  hmm.emit[qn] = {{kEndSymbol, 1.0}};
  return hmm;
}

ValidationResult validate(const Hmm& hmm) {
  auto fail = [](std::string msg) { return ValidationResult{false, std::move(msg)}; };
  auto state_name = [&](StateId q) { return "q" + std::to_string(q); };

  if (hmm.order.size() < 2) return fail("model must have at least two states");
  std::set<StateId> seen(hmm.order.begin(), hmm.order.end());
  if (seen.size() != hmm.order.size()) return fail("duplicate state in order");

  const StateId q0 = hmm.initial_state();
  const StateId qn = hmm.final_state();
  std::map<StateId, int> ordinal;
  for (std::size_t i = 0; i < hmm.order.size(); ++i)
    ordinal[hmm.order[i]] = static_cast<int>(i);

  // Sentinel emissions are pinned.
  if (hmm.omega(q0, kStartSymbol) != 1.0)
    return fail("initial state " + state_name(q0) + " must emit \"<\" with probability 1");
  if (hmm.omega(qn, kEndSymbol) != 1.0)
    return fail("final state " + state_name(qn) + " must emit \">\" with probability 1");
  for (StateId q : hmm.order) {
    if (q != q0 && hmm.omega(q, kStartSymbol) > 0.0)
      return fail("state " + state_name(q) + " emits reserved sentinel \"<\"");
    if (q != qn && hmm.omega(q, kEndSymbol) > 0.0)
      return fail("state " + state_name(q) + " emits reserved sentinel \">\"");
  }

  if (auto it = hmm.trans.find(qn); it != hmm.trans.end() && !it->second.empty())
    return fail("final state has outgoing transition");

  for (const auto& [q, row] : hmm.trans) {
    if (!ordinal.count(q))
      return fail("transition row for unknown state " + state_name(q));
    for (const auto& [to, p] : row) {
      if (!ordinal.count(to))
        return fail("transition " + state_name(q) + " -> unknown state " + state_name(to));
      if (to == q0)
        return fail("initial state has incoming transition from " + state_name(q));
      if (p < 0.0 || p > 1.0)
        return fail("transition probability out of range on " + state_name(q) +
                    " -> " + state_name(to));
      if (ordinal[q] > ordinal[to])
        return fail("backward transition " + state_name(q) + " -> " + state_name(to));
    }
  }

  for (StateId q : hmm.order) {
    if (q == qn) continue;
    double sum = 0.0;
    auto row = hmm.trans.find(q);
    if (row != hmm.trans.end())
      for (const auto& [to, p] : row->second) sum += p;
    if (std::abs(sum - 1.0) > 1e-9)
      return fail("transition row of " + state_name(q) + " sums to " + std::to_string(sum));
  }

  for (StateId q : hmm.order) {
    auto row = hmm.emit.find(q);
    if (row == hmm.emit.end() || row->second.empty())
      return fail("state " + state_name(q) + " has no emission row");
    double sum = 0.0;
    for (const auto& [o, p] : row->second) {
      if (o >= hmm.vocab.size())
        return fail("state " + state_name(q) + " emits unknown symbol id");
      if (p < 0.0 || p > 1.0)
        return fail("emission probability out of range at " + state_name(q));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      return fail("emission row of " + state_name(q) + " sums to " + std::to_string(sum));
  }

  return {};
}

std::vector<SymbolId> sample(const Hmm& hmm, std::uint64_t seed,
                             std::size_t max_steps) {
  if (auto v = validate(hmm); !v.ok)
    throw std::invalid_argument("sample: invalid model: " + v.message);

  std::mt19937_64 rng(seed);
  auto draw = [&](const auto& row) {
    const double u = uniform01(rng);
    double acc = 0.0;
    auto last = row.begin()->first;
    for (const auto& [key, p] : row) {
      acc += p;
      last = key;
      if (u < acc) return key;
    }
    return last;  // guard against rounding at the tail
  };

  std::vector<SymbolId> out{kStartSymbol};
  StateId q = hmm.initial_state();
  const StateId qn = hmm.final_state();
  std::size_t steps = 0;
  while (q != qn) {
    if (++steps > max_steps) throw std::runtime_error("max_steps exceeded");
    q = draw(hmm.trans.at(q));
    const SymbolId o = draw(hmm.emit.at(q));
    if (o != kNullSymbol) out.push_back(o);
  }
  return out;
}

}  // namespace semhmm
