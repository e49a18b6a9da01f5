#pragma once

#include <string>

#include "semhmm/structure.hpp"

namespace semhmm {

/// One held-out gap-prediction item: the narrative with one interior event
/// removed, the position where it would be restored, and the answer.
struct TestItem {
  std::vector<SymbolId> gapped;
  int gap_pos = 0;
  SymbolId truth = 0;
};

struct EvalSet {
  Corpus train;
  std::vector<TestItem> items;
  std::size_t excluded = 0;  // held-out narratives too short to gap
};

/// Seeded split: `split` of the narratives are withheld and each test
/// narrative loses one uniformly chosen interior event. Narratives with
/// fewer than two interior events are excluded with a warning count, so the
/// remaining sequence always retains at least one event.
EvalSet make_eval_set(const Corpus& corpus, double split, std::uint64_t seed);

struct TrainStats {
  std::map<SymbolId, double> freq;                         // interior events
  std::map<std::pair<SymbolId, SymbolId>, double> bigram;  // (prev -> next)
};

TrainStats collect_stats(const Corpus& train);

/// The most frequent training event absent from the observed sequence
/// (falling back to the overall most frequent one); ties lexicographic.
SymbolId baseline_frequency(const TrainStats& stats, const Vocabulary& vocab,
                            const TestItem& item);

/// The event that most frequently follows the one before the gap ("<" when
/// the gap is first); unseen priors fall back to the frequency baseline.
SymbolId baseline_conditional(const TrainStats& stats, const Vocabulary& vocab,
                              const TestItem& item);

enum class Method { sem_hmm, sem_hmm_approx, bmm, bmm_em, conditional, frequency };

std::string method_name(Method m);
Method parse_method(const std::string& name);  // throws, listing valid names
std::vector<Method> all_methods();

/// Per-method search configuration: the bmm variants disable null
/// emissions, and plain bmm also skips the EM re-runs, updating parameters
/// by count normalization alone.
SearchConfig configure_method(SearchConfig base, Method method);

struct MethodResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double seconds = 0.0;  // training + prediction wall time
  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / total;
  }
};

/// Trains (for the model-based methods) and predicts every test item,
/// scoring top-1 exact matches.
MethodResult run_method(Method method, const Corpus& train,
                        const std::vector<TestItem>& items,
                        const SearchConfig& config);

struct RunConfig {
  double split = 0.4;
  std::uint64_t seed = 0;
  std::vector<int> batch_sizes = {10};
  std::vector<Method> methods = all_methods();
  SearchConfig search;
  bool domain_filter = true;       // >= 50 narratives and >= 3 event types
  std::size_t min_narratives = 50;
  std::size_t min_event_types = 3;
};

struct EvalReport {
  struct Row {
    std::string domain;
    Method method = Method::frequency;
    int batch_size = 0;
    MethodResult result;
  };
  std::vector<Row> rows;                 // per-domain results
  std::vector<std::string> domains;      // evaluated, in input order
  std::size_t filtered_domains = 0;
  std::size_t excluded_items = 0;

  /// Macro-average across domains for one (method, r) cell.
  double average_accuracy(Method method, int batch_size) const;
  double total_seconds(Method method) const;
};

/// Evaluates every (method, batch size) combination on each domain; domains
/// are independent train/test problems.
EvalReport evaluate_domains(
    const std::vector<std::pair<std::string, Corpus>>& domains,
    const RunConfig& config);

/// Aligned accuracy table in the style of a method x batch-size grid, plus
/// machine-readable tab-separated rows.
std::string render_table(const EvalReport& report, const RunConfig& config);
std::string render_tsv(const EvalReport& report, const RunConfig& config);

}  // namespace semhmm
