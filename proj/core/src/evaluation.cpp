#include "semhmm/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

namespace semhmm {

namespace {

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  return rng() % n;  // slight modulo bias is irrelevant here
}

}  // namespace

EvalSet make_eval_set(const Corpus& corpus, double split, std::uint64_t seed) {
  if (split <= 0.0 || split >= 1.0)
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  if (corpus.empty()) throw std::runtime_error("empty corpus");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(corpus.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = idx.size(); i > 1; --i)  // Fisher-Yates
    std::swap(idx[i - 1], idx[bounded_draw(rng, i)]);

  const std::size_t n_test =
      static_cast<std::size_t>(split * static_cast<double>(corpus.size()) + 0.5);
  std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + n_test);
  std::vector<std::size_t> train_idx(idx.begin() + n_test, idx.end());
  std::sort(train_idx.begin(), train_idx.end());

  EvalSet out;
  out.train.vocab = corpus.vocab;
  for (std::size_t i : train_idx) out.train.narratives.push_back(corpus.narratives[i]);

  for (std::size_t i : test_idx) {
    const auto& seq = corpus.narratives[i];
    const std::size_t interior = seq.size() - 2;
    if (interior < 2) {
      ++out.excluded;
      continue;
    }
    const int pos = 1 + static_cast<int>(bounded_draw(rng, interior));
    TestItem item;
    item.gapped = seq;
    item.truth = seq[pos];
    item.gap_pos = pos;
    item.gapped.erase(item.gapped.begin() + pos);
    out.items.push_back(std::move(item));
  }
  return out;
}

TrainStats collect_stats(const Corpus& train) {
  TrainStats stats;
  for (const auto& seq : train.narratives) {
    for (std::size_t i = 1; i + 1 < seq.size(); ++i) {
      stats.freq[seq[i]] += 1.0;
      stats.bigram[{seq[i - 1], seq[i]}] += 1.0;
    }
  }
  return stats;
}

namespace {

SymbolId argmax_symbol(const std::map<SymbolId, double>& scores,
                       const Vocabulary& vocab) {
  SymbolId best = 0;
  double best_score = -1.0;
  bool have = false;
  for (const auto& [symbol, value] : scores) {
    if (!have || value > best_score ||
        (value == best_score && vocab.label(symbol) < vocab.label(best))) {
      best = symbol;
      best_score = value;
      have = true;
    }
  }
  if (!have) throw std::runtime_error("no candidate symbols");
  return best;
}

}  // namespace

SymbolId baseline_frequency(const TrainStats& stats, const Vocabulary& vocab,
                            const TestItem& item) {
  std::set<SymbolId> observed(item.gapped.begin() + 1, item.gapped.end() - 1);
  std::map<SymbolId, double> candidates;
  for (const auto& [symbol, freq] : stats.freq)
    if (!observed.count(symbol)) candidates[symbol] = freq;
  if (candidates.empty()) candidates = stats.freq;  // all symbols observed
  return argmax_symbol(candidates, vocab);
}

SymbolId baseline_conditional(const TrainStats& stats, const Vocabulary& vocab,
                              const TestItem& item) {
  const SymbolId prior = item.gapped[item.gap_pos - 1];
  std::map<SymbolId, double> followers;
  for (const auto& [pair, count] : stats.bigram)
    if (pair.first == prior && !Vocabulary::is_reserved(pair.second))
      followers[pair.second] = count;
  if (followers.empty()) return baseline_frequency(stats, vocab, item);
  return argmax_symbol(followers, vocab);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::sem_hmm: return "sem-hmm";
    case Method::sem_hmm_approx: return "sem-hmm-approx";
    case Method::bmm: return "bmm";
    case Method::bmm_em: return "bmm-em";
    case Method::conditional: return "conditional";
    case Method::frequency: return "frequency";
  }
  return "?";
}

std::vector<Method> all_methods() {
  return {Method::sem_hmm, Method::sem_hmm_approx, Method::bmm_em,
          Method::bmm,     Method::conditional,    Method::frequency};
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  std::string valid;
  for (Method m : all_methods()) {
    if (!valid.empty()) valid += ", ";
    valid += method_name(m);
  }
  throw std::runtime_error("unknown method \"" + name + "\" (valid: " + valid + ")");
}

SearchConfig configure_method(SearchConfig base, Method method) {
  switch (method) {
    case Method::sem_hmm:
      base.score.mode = ScoreConfig::Mode::exact;
      break;
    case Method::sem_hmm_approx:
      base.score.mode = ScoreConfig::Mode::approx;
      break;
    case Method::bmm_em:
      base.em.mstep.allow_lambda = false;
      base.score.mode = ScoreConfig::Mode::exact;
      break;
    case Method::bmm:
      base.em.mstep.allow_lambda = false;
      base.em.mstep.pseudocount = 0.0;
      base.run_em = false;
      base.score.mode = ScoreConfig::Mode::exact;
      break;
    case Method::conditional:
    case Method::frequency:
      break;
  }
  return base;
}

MethodResult run_method(Method method, const Corpus& train,
                        const std::vector<TestItem>& items,
                        const SearchConfig& config) {
  MethodResult result;
  result.total = items.size();
  const auto t0 = std::chrono::steady_clock::now();

  if (method == Method::conditional || method == Method::frequency) {
    const TrainStats stats = collect_stats(train);
    if (stats.freq.empty()) throw std::runtime_error("training corpus has no events");
    for (const auto& item : items) {
      const SymbolId guess = method == Method::frequency
                                 ? baseline_frequency(stats, train.vocab, item)
                                 : baseline_conditional(stats, train.vocab, item);
      if (guess == item.truth) ++result.correct;
    }
  } else {
    const LearnResult learned = learn(train, config);
    const TrainStats stats = collect_stats(train);
    std::map<SymbolId, double> candidates;
    for (const auto& [symbol, freq] : stats.freq) candidates[symbol] = freq;
    if (candidates.empty()) throw std::runtime_error("training corpus has no events");
    for (const auto& item : items) {
      const auto ranked = predict_missing(learned.hmm, item.gapped, item.gap_pos,
                                          candidates, config.score.tmax);
      if (!ranked.empty() && ranked.front().symbol == item.truth) ++result.correct;
    }
  }

  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double EvalReport::average_accuracy(Method method, int batch_size) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : rows) {
    if (row.method != method || row.batch_size != batch_size) continue;
    sum += row.result.accuracy();
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double EvalReport::total_seconds(Method method) const {
  double sum = 0.0;
  for (const auto& row : rows)
    if (row.method == method) sum += row.result.seconds;
  return sum;
}

EvalReport evaluate_domains(
    const std::vector<std::pair<std::string, Corpus>>& domains,
    const RunConfig& config) {
  EvalReport report;
  for (const auto& [name, corpus] : domains) {
    if (config.domain_filter) {
      if (corpus.size() < config.min_narratives ||
          corpus.used_event_symbols().size() < config.min_event_types) {
        ++report.filtered_domains;
        continue;
      }
    }
    const EvalSet eval = make_eval_set(corpus, config.split, config.seed);
    if (eval.items.empty() || eval.train.empty()) {
      ++report.filtered_domains;
      continue;
    }
    report.domains.push_back(name);
    report.excluded_items += eval.excluded;

    for (Method method : config.methods) {
      const bool model_based =
          method != Method::conditional && method != Method::frequency;
      for (int r : config.batch_sizes) {
        SearchConfig sc = configure_method(config.search, method);
        sc.batch_size = r;
        report.rows.push_back(
            {name, method, model_based ? r : 0,
             run_method(method, eval.train, eval.items, sc)});
        if (!model_based) break;  // baselines do not depend on r
      }
    }
  }
  return report;
}

namespace {

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * fraction);
  return buf;
}

}  // namespace

std::string render_table(const EvalReport& report, const RunConfig& config) {
  std::ostringstream out;
  const int name_w = 16;
  const int col_w = 9;

  out << std::string(name_w, ' ');
  for (int r : config.batch_sizes) {
    std::string header = "r=" + std::to_string(r);
    out << std::string(col_w - header.size(), ' ') << header;
  }
  out << '\n';

  for (Method method : config.methods) {
    const std::string name = method_name(method);
    out << name << std::string(name_w - name.size(), ' ');
    const bool model_based =
        method != Method::conditional && method != Method::frequency;
    if (model_based) {
      for (int r : config.batch_sizes) {
        const std::string cell = percent(report.average_accuracy(method, r));
        out << std::string(col_w - cell.size(), ' ') << cell;
      }
    } else {
      const std::string cell = percent(report.average_accuracy(method, 0));
      const std::size_t span = col_w * config.batch_sizes.size();
      out << std::string(span - cell.size(), ' ') << cell;
    }
    out << '\n';
  }

  out << "domains: " << report.domains.size()
      << "  filtered: " << report.filtered_domains
      << "  short-narratives excluded: " << report.excluded_items << '\n';
  return out.str();
}

std::string render_tsv(const EvalReport& report, const RunConfig& config) {
  std::ostringstream out;
  out << "method\tr\tdomain\tgaps\tcorrect\taccuracy\n";
  char buf[32];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", row.result.accuracy());
    out << method_name(row.method) << '\t';
    if (row.batch_size == 0)
      out << '-';
    else
      out << row.batch_size;
    out << '\t' << row.domain << '\t' << row.result.total << '\t'
        << row.result.correct << '\t' << buf << '\n';
  }
  for (Method method : config.methods) {
    const bool model_based =
        method != Method::conditional && method != Method::frequency;
    for (int r : config.batch_sizes) {
      std::snprintf(buf, sizeof(buf), "%.6f",
                    report.average_accuracy(method, model_based ? r : 0));
      out << method_name(method) << '\t';
      if (model_based)
        out << r;
      else
        out << '-';
      out << "\tALL\t-\t-\t" << buf << '\n';
      if (!model_based) break;
    }
  }
  return out.str();
}

}  // namespace semhmm
