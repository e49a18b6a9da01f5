#include "semhmm/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace semhmm {

std::vector<SymbolId> Corpus::used_event_symbols() const {
  std::set<SymbolId> used;
  for (const auto& seq : narratives)
    for (std::size_t i = 1; i + 1 < seq.size(); ++i) used.insert(seq[i]);
  return {used.begin(), used.end()};
}

Corpus corpus_from_labels(const std::vector<std::vector<std::string>>& narratives) {
  Corpus corpus;
  for (std::size_t n = 0; n < narratives.size(); ++n) {
    std::vector<SymbolId> seq{kStartSymbol};
    for (const auto& label : narratives[n]) {
      if (label.empty())
        throw std::runtime_error("narrative " + std::to_string(n) + ": empty event label");
      if (Vocabulary::is_reserved_label(label))
        throw std::runtime_error("narrative " + std::to_string(n) +
                                 ": reserved token \"" + label + "\"");
      seq.push_back(corpus.vocab.intern(label));
    }
    seq.push_back(kEndSymbol);
    corpus.narratives.push_back(std::move(seq));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());

  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string token;
    std::vector<std::string> labels;
    bool comment = false;
    while (ss >> token) {
      if (labels.empty() && token[0] == '#') {
        comment = true;
        break;
      }
      if (Vocabulary::is_reserved_label(token))
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": reserved token \"" + token + "\"");
      labels.push_back(token);
    }
    if (comment) continue;
    rows.push_back(std::move(labels));
  }
  return corpus_from_labels(rows);
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path.string());
  for (const auto& seq : corpus.narratives) {
    for (std::size_t i = 1; i + 1 < seq.size(); ++i) {
      if (i > 1) out << ' ';
      out << corpus.vocab.label(seq[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string format_sequence(const Vocabulary& vocab,
                            const std::vector<SymbolId>& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += vocab.label(seq[i]);
  }
  return out;
}

}  // namespace semhmm
