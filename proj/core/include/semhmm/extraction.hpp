#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "semhmm/corpus.hpp"

namespace semhmm {

/// One event description reduced to its verb and (optional) object.
struct Sentence {
  std::string raw;
  std::string verb;
  std::string object;  // empty when absent
  bool has_object() const { return !object.empty(); }
};

std::set<std::string> default_stopwords();

/// Heuristic for imperative sentences: the verb is the first non-stopword
/// token, the object the last non-stopword token when distinct. Tokens are
/// lowercased with surrounding punctuation stripped.
Sentence parse_sentence(const std::string& text,
                        const std::set<std::string>& stopwords = default_stopwords());

/// Symmetric token-pair similarities loaded from a "token1 token2 value"
/// file. Lookups of pairs the file does not cover are an error.
class SimilarityMatrix {
 public:
  static SimilarityMatrix load(const std::filesystem::path& path);
  double at(const std::string& a, const std::string& b) const;
  bool empty() const { return values_.empty(); }

 private:
  std::map<std::pair<std::string, std::string>, double> values_;
};

struct SimilaritySpec {
  double verb_weight = 0.7;
  double object_weight = 0.3;
  const SimilarityMatrix* matrix = nullptr;  // lexical fallback when null
};

/// Token similarity: the external matrix when provided, otherwise 1 on
/// equality and the Dice coefficient over character bigrams.
double path_similarity(const std::string& a, const std::string& b,
                       const SimilaritySpec& spec);

/// Weighted sentence similarity in [0, 1]:
///   (w1 PS(V1,V2) + w2 PS(O1,O2)) / (w1 + w2).
/// A missing object contributes 0 against a present one and 1 against
/// another missing one.
double similarity(const Sentence& s1, const Sentence& s2,
                  const SimilaritySpec& spec);

struct Clustering {
  std::vector<std::vector<std::size_t>> clusters;  // sentence indices
  std::vector<std::string> labels;                 // unique event-type names
  std::vector<std::size_t> cluster_of;             // sentence -> cluster
};

enum class Linkage { average, single, complete };

/// Agglomerative clustering: repeatedly joins the cluster pair with the
/// best linkage similarity until it drops below the threshold. Ties break
/// toward the smallest cluster indices, so the result is deterministic for
/// a fixed input order. Each cluster is labeled by its most frequent verb
/// (ties lexicographic), deduplicated with numeric suffixes.
Clustering cluster(const std::vector<Sentence>& sentences,
                   const SimilaritySpec& spec, double threshold,
                   Linkage linkage = Linkage::average);

/// Replaces each narrative's sentences by their cluster labels and wraps
/// the result in sentinels. narrative_sizes gives the number of sentences
/// per narrative, in order, over the flattened sentence list. Narratives
/// that end up empty are dropped (their count is reported).
struct ExtractionResult {
  Corpus corpus;
  Clustering clustering;
  std::size_t dropped_narratives = 0;
};

ExtractionResult corpus_from_narratives(
    const std::vector<std::vector<Sentence>>& narratives,
    const SimilaritySpec& spec, double threshold,
    Linkage linkage = Linkage::average);

/// Raw narrative text: blank-line-separated blocks, one sentence per line.
std::vector<std::vector<std::string>> load_raw_narratives(
    const std::filesystem::path& path);

}  // namespace semhmm
