#include "semhmm/vocabulary.hpp"

#include <stdexcept>

namespace semhmm {

Vocabulary::Vocabulary() {
  intern(kStartLabel);
  intern(kEndLabel);
  intern(kNullLabel);
}

SymbolId Vocabulary::intern(std::string_view label) {
  if (auto it = index_.find(label); it != index_.end()) return it->second;
  const SymbolId id = static_cast<SymbolId>(labels_.size());
  labels_.emplace_back(label);
  index_.emplace(labels_.back(), id);
  return id;
}

std::optional<SymbolId> Vocabulary::find(std::string_view label) const {
  if (auto it = index_.find(label); it != index_.end()) return it->second;
  return std::nullopt;
}

const std::string& Vocabulary::label(SymbolId id) const {
  if (id >= labels_.size()) throw std::out_of_range("unknown symbol id");
  return labels_[id];
}

std::vector<SymbolId> Vocabulary::event_symbols() const {
  std::vector<SymbolId> out;
  for (SymbolId id = 3; id < labels_.size(); ++id) out.push_back(id);
  return out;
}

}  // namespace semhmm
