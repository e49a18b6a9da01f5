#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "semhmm/vocabulary.hpp"

namespace semhmm {

/// An ordered set of narratives. Every stored sequence is sentinel-wrapped:
/// it begins with "<" and ends with ">", interior symbols are event types.
struct Corpus {
  Vocabulary vocab;
  std::vector<std::vector<SymbolId>> narratives;

  bool empty() const { return narratives.empty(); }
  std::size_t size() const { return narratives.size(); }

  /// Distinct interior event types actually used by the narratives.
  std::vector<SymbolId> used_event_symbols() const;
};

/// Builds a corpus from label sequences (without sentinels; they are added
/// here). Rejects reserved tokens and empty labels.
Corpus corpus_from_labels(const std::vector<std::vector<std::string>>& narratives);

/// Corpus file format: one narrative per line, whitespace-separated event
/// labels without sentinels; lines whose first non-blank character is '#'
/// are comments. A blank line is an empty narrative ("<" ">").
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Renders one sentinel-wrapped sequence as space-separated labels.
std::string format_sequence(const Vocabulary& vocab,
                            const std::vector<SymbolId>& seq);

}  // namespace semhmm
