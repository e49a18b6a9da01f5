#include "semhmm/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semhmm {

std::set<std::string> default_stopwords() {
  return {"a",    "an",   "and",  "are",  "at",   "be",    "been", "but",
          "by",   "did",  "do",   "does", "for",  "from",  "had",  "has",
          "have", "he",   "her",  "his",  "i",    "if",    "in",   "into",
          "is",   "it",   "its",  "me",   "my",   "of",    "off",  "on",
          "or",   "our",  "out",  "she",  "should", "so",  "some", "that",
          "the",  "their", "them", "then", "they", "this", "to",   "up",
          "was",  "we",   "were", "what", "when", "which", "who",  "will",
          "with", "would", "you",  "your"};
}

namespace {

std::string normalize_token(std::string token) {
  std::size_t begin = 0, end = token.size();
  auto is_punct = [](unsigned char c) { return std::ispunct(c) != 0; };
  while (begin < end && is_punct(token[begin])) ++begin;
  while (end > begin && is_punct(token[end - 1])) --end;
  token = token.substr(begin, end - begin);
  std::transform(token.begin(), token.end(), token.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return token;
}

std::set<std::string> bigrams(const std::string& token) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + 1 < token.size(); ++i)
    out.insert(token.substr(i, 2));
  return out;
}

}  // namespace

Sentence parse_sentence(const std::string& text,
                        const std::set<std::string>& stopwords) {
  Sentence s;
  s.raw = text;
  std::istringstream ss(text);
  std::string raw_token;
  std::vector<std::string> content;
  while (ss >> raw_token) {
    std::string token = normalize_token(raw_token);
    if (token.empty() || stopwords.count(token)) continue;
    content.push_back(std::move(token));
  }
  if (content.empty()) throw std::runtime_error("no content tokens");
  s.verb = content.front();
  if (content.size() > 1 && content.back() != s.verb) s.object = content.back();
  return s;
}

SimilarityMatrix SimilarityMatrix::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open similarity matrix: " + path.string());
  SimilarityMatrix m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string a, b;
    double v = 0.0;
    if (!(ss >> a)) continue;
    if (a[0] == '#') continue;
    if (!(ss >> b >> v) || v < 0.0 || v > 1.0)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected \"token1 token2 value\" with value in [0,1]");
    m.values_[{a, b}] = v;
    m.values_[{b, a}] = v;  // symmetric closure
  }
  return m;
}

double SimilarityMatrix::at(const std::string& a, const std::string& b) const {
  if (a == b) return 1.0;
  auto it = values_.find({a, b});
  if (it == values_.end())
    throw std::runtime_error("similarity matrix has no entry for pair (" + a +
                             ", " + b + ")");
  return it->second;
}

double path_similarity(const std::string& a, const std::string& b,
                       const SimilaritySpec& spec) {
  if (spec.matrix && !spec.matrix->empty()) return spec.matrix->at(a, b);
  if (a == b) return 1.0;
  const auto ba = bigrams(a);
  const auto bb = bigrams(b);
  if (ba.empty() || bb.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& g : ba) common += bb.count(g);
  return 2.0 * static_cast<double>(common) /
         static_cast<double>(ba.size() + bb.size());
}

double similarity(const Sentence& s1, const Sentence& s2,
                  const SimilaritySpec& spec) {
  const double w1 = spec.verb_weight;
  const double w2 = spec.object_weight;
  if (w1 < 0.0 || w2 < 0.0 || w1 + w2 <= 0.0)
    throw std::invalid_argument("similarity weights must be nonnegative and not both zero");
  const double verb_ps = path_similarity(s1.verb, s2.verb, spec);
  double object_ps = 0.0;
  if (s1.has_object() && s2.has_object())
    object_ps = path_similarity(s1.object, s2.object, spec);
  else if (!s1.has_object() && !s2.has_object())
    object_ps = 1.0;
  return (w1 * verb_ps + w2 * object_ps) / (w1 + w2);
}

Clustering cluster(const std::vector<Sentence>& sentences,
                   const SimilaritySpec& spec, double threshold,
                   Linkage linkage) {
  const std::size_t n = sentences.size();
  if (n == 0) throw std::runtime_error("cluster: no sentences");

  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sim[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = similarity(sentences[i], sentences[j], spec);
      sim[i * n + j] = s;
      sim[j * n + i] = s;
    }
  }

  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};

  // Pairwise similarity sums between clusters; merging adds rows, which
  // keeps average linkage O(k) per merge instead of rescanning members.
  std::vector<std::vector<double>> sums(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sums[i][j] = sim[i * n + j];

  auto linkage_value = [&](std::size_t ci, std::size_t cj) {
    if (linkage == Linkage::average)
      return sums[ci][cj] /
             static_cast<double>(clusters[ci].size() * clusters[cj].size());
    double acc = linkage == Linkage::complete ? 1.0 : 0.0;
    for (std::size_t i : clusters[ci])
      for (std::size_t j : clusters[cj]) {
        const double s = sim[i * n + j];
        acc = linkage == Linkage::single ? std::max(acc, s) : std::min(acc, s);
      }
    return acc;
  };

  while (clusters.size() > 1) {
    double best = -1.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double v = linkage_value(i, j);
        if (v > best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    if (best < threshold) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(),
                        clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + bj);
    for (std::size_t c = 0; c < sums.size(); ++c) sums[c][bi] += sums[c][bj];
    for (std::size_t c = 0; c < sums.size(); ++c) sums[bi][c] = sums[c][bi];
    for (auto& row : sums) row.erase(row.begin() + bj);
    sums.erase(sums.begin() + bj);
  }

  // Order clusters by their smallest member so labeling is stable.
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  Clustering out;
  out.clusters = std::move(clusters);
  out.cluster_of.assign(n, 0);
  std::set<std::string> taken;
  for (std::size_t c = 0; c < out.clusters.size(); ++c) {
    std::map<std::string, std::size_t> verb_freq;
    for (std::size_t i : out.clusters[c]) {
      ++verb_freq[sentences[i].verb];
      out.cluster_of[i] = c;
    }
    std::string label;
    std::size_t best_freq = 0;
    for (const auto& [verb, freq] : verb_freq)
      if (freq > best_freq) {
        best_freq = freq;
        label = verb;
      }
    std::string unique = label;
    for (int suffix = 2; taken.count(unique); ++suffix)
      unique = label + "_" + std::to_string(suffix);
    taken.insert(unique);
    out.labels.push_back(std::move(unique));
  }
  return out;
}

ExtractionResult corpus_from_narratives(
    const std::vector<std::vector<Sentence>>& narratives,
    const SimilaritySpec& spec, double threshold, Linkage linkage) {
  std::vector<Sentence> flat;
  for (const auto& block : narratives)
    flat.insert(flat.end(), block.begin(), block.end());
  if (flat.empty()) throw std::runtime_error("no sentences to extract from");

  ExtractionResult result;
  result.clustering = cluster(flat, spec, threshold, linkage);

  std::vector<std::vector<std::string>> labeled;
  std::size_t offset = 0;
  for (const auto& block : narratives) {
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < block.size(); ++k)
      labels.push_back(
          result.clustering.labels[result.clustering.cluster_of[offset + k]]);
    offset += block.size();
    if (labels.empty()) {
      ++result.dropped_narratives;
      continue;
    }
    labeled.push_back(std::move(labels));
  }
  result.corpus = corpus_from_labels(labeled);
  return result;
}

std::vector<std::vector<std::string>> load_raw_narratives(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open narratives file: " + path.string());
  std::vector<std::vector<std::string>> blocks;
  std::vector<std::string> current;
  std::string line;
  auto flush = [&] {
    if (!current.empty()) blocks.push_back(std::move(current));
    current = {};
  };
  while (std::getline(in, line)) {
    const bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
    if (blank) {
      flush();
      continue;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    current.push_back(line);
  }
  flush();
  return blocks;
}

}  // namespace semhmm
