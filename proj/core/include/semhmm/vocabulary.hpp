#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace semhmm {

using SymbolId = std::uint32_t;

// Reserved symbols. The start/end sentinels are emitted only by the initial
// and final states; the null symbol is an emission that produces no output
// and never appears in a stored sequence.
inline constexpr SymbolId kStartSymbol = 0;
inline constexpr SymbolId kEndSymbol = 1;
inline constexpr SymbolId kNullSymbol = 2;

inline constexpr std::string_view kStartLabel = "<";
inline constexpr std::string_view kEndLabel = ">";
inline constexpr std::string_view kNullLabel = "&lambda;";

/// Interns event-type labels to dense ids. Ids 0..2 are pre-assigned to the
/// sentinels and the null symbol.
class Vocabulary {
 public:
  Vocabulary();

  SymbolId intern(std::string_view label);
  std::optional<SymbolId> find(std::string_view label) const;
  const std::string& label(SymbolId id) const;

  std::size_t size() const { return labels_.size(); }
  static bool is_reserved(SymbolId id) { return id < 3; }
  static bool is_reserved_label(std::string_view label) {
    return label == kStartLabel || label == kEndLabel || label == kNullLabel;
  }

  /// All non-reserved symbols, ascending by id.
  std::vector<SymbolId> event_symbols() const;

  bool operator==(const Vocabulary& other) const {
    return labels_ == other.labels_;
  }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, SymbolId, std::less<>> index_;
};

}  // namespace semhmm
