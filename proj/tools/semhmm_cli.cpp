// Command-line frontend: extract | train | evaluate | generate | inspect.
//
// Exit codes: 0 success, 1 usage error, 2 data/file error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "semhmm/evaluation.hpp"
#include "semhmm/extraction.hpp"
#include "semhmm/model_io.hpp"

namespace fs = std::filesystem;
using namespace semhmm;

namespace {

struct CommonOpts {
  std::string corpus;
  std::string model;
  std::string constraints;
  std::vector<int> r = {10};
  double split = 0.4;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  std::string similarity_matrix;
  double threshold = 0.55;
  double kappa_q = 1.0;
  double kappa_t = 1.0;
  double kappa_c = 1.0;
  double p0 = 0.05;
  std::string mode = "exact";
  bool verbose = false;
};

SearchConfig make_search_config(const CommonOpts& o) {
  SearchConfig sc;
  sc.batch_size = o.r.empty() ? 10 : o.r.front();
  sc.score.kappa_q = o.kappa_q;
  sc.score.kappa_t = o.kappa_t;
  sc.score.kappa_c = o.kappa_c;
  sc.score.p0 = o.p0;
  if (o.mode == "approx")
    sc.score.mode = ScoreConfig::Mode::approx;
  else if (o.mode == "exact")
    sc.score.mode = ScoreConfig::Mode::exact;
  else
    throw CLI::ValidationError("--mode", "expected exact or approx");
  if (o.verbose) {
    sc.search_log = &std::cerr;
    sc.em.log = &std::cerr;
  }
  return sc;
}

// A directory corpus is a multi-domain evaluation: each regular file inside
// is one domain named after its stem.
std::vector<std::pair<std::string, Corpus>> load_domains(const fs::path& path) {
  std::vector<std::pair<std::string, Corpus>> domains;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files)
      domains.emplace_back(file.stem().string(), load_corpus(file));
  } else {
    domains.emplace_back(path.stem().string(), load_corpus(path));
  }
  return domains;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_extract(const CommonOpts& o, const std::string& input,
                const std::string& out, double w1, double w2) {
  const auto raw = load_raw_narratives(input);
  if (raw.empty()) throw std::runtime_error("no narratives in " + input);

  std::vector<std::vector<Sentence>> parsed;
  std::size_t skipped = 0;
  const auto stopwords = default_stopwords();
  for (const auto& block : raw) {
    std::vector<Sentence> sentences;
    for (const auto& text : block) {
      try {
        sentences.push_back(parse_sentence(text, stopwords));
      } catch (const std::exception&) {
        ++skipped;  // all-stopword line
      }
    }
    parsed.push_back(std::move(sentences));
  }

  SimilarityMatrix matrix;
  SimilaritySpec spec;
  spec.verb_weight = w1;
  spec.object_weight = w2;
  if (!o.similarity_matrix.empty()) {
    matrix = SimilarityMatrix::load(o.similarity_matrix);
    spec.matrix = &matrix;
  }

  const ExtractionResult result =
      corpus_from_narratives(parsed, spec, o.threshold);
  save_corpus(result.corpus, out);
  if (o.verbose || skipped || result.dropped_narratives)
    std::cerr << "extract: " << result.corpus.size() << " narratives, "
              << result.clustering.clusters.size() << " event types, "
              << skipped << " unparsable sentences, "
              << result.dropped_narratives << " empty narratives dropped\n";
  return 0;
}

int cmd_train(const CommonOpts& o, const std::string& model_out) {
  const Corpus corpus = load_corpus(o.corpus);
  SearchConfig sc = make_search_config(o);
  const LearnResult result = learn(corpus, sc);
  save_model(result.hmm, result.counts, model_out);
  if (!o.constraints.empty())
    save_constraints(result.constraints, result.hmm.vocab, o.constraints);
  if (o.verbose)
    std::cerr << "train: " << result.hmm.num_states() << " states, "
              << result.hmm.num_edges() << " transitions, "
              << result.accepted_changes << " structure changes\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& out,
                 bool domain_filter_flag, bool no_domain_filter) {
  const fs::path path(o.corpus);
  const auto domains = load_domains(path);

  RunConfig rc;
  rc.split = o.split;
  rc.seed = o.seed;
  rc.batch_sizes = o.r;
  rc.search = make_search_config(o);
  rc.domain_filter = fs::is_directory(path);
  if (domain_filter_flag) rc.domain_filter = true;
  if (no_domain_filter) rc.domain_filter = false;
  if (!o.methods.empty()) {
    rc.methods.clear();
    for (const auto& name : o.methods) rc.methods.push_back(parse_method(name));
  }

  if (!o.model.empty()) {
    // Evaluate one pre-trained model instead of training per method.
    const LoadedModel loaded = load_model(o.model);
    EvalReport report;
    for (const auto& [name, corpus] : domains) {
      EvalSet eval = make_eval_set(corpus, rc.split, rc.seed);
      const TrainStats stats = collect_stats(eval.train);
      std::map<SymbolId, double> candidates;
      for (const auto& [label_id, freq] : stats.freq)
        candidates[label_id] = freq;
      MethodResult mr;
      mr.total = eval.items.size();
      for (const auto& item : eval.items) {
        // The corpus and the model file intern symbols independently, so
        // translate through labels.
        std::vector<SymbolId> gapped;
        bool unknown = false;
        for (SymbolId s : item.gapped) {
          auto id = loaded.hmm.vocab.find(corpus.vocab.label(s));
          if (!id) {
            unknown = true;
            break;
          }
          gapped.push_back(*id);
        }
        if (unknown) continue;
        std::map<SymbolId, double> model_candidates;
        for (const auto& [cand, freq] : candidates)
          if (auto id = loaded.hmm.vocab.find(corpus.vocab.label(cand)))
            model_candidates[*id] = freq;
        if (model_candidates.empty()) continue;
        const auto ranked = predict_missing(loaded.hmm, gapped, item.gap_pos,
                                            model_candidates, rc.search.score.tmax);
        if (!ranked.empty() &&
            loaded.hmm.vocab.label(ranked.front().symbol) ==
                corpus.vocab.label(item.truth))
          ++mr.correct;
      }
      report.domains.push_back(name);
      report.rows.push_back({name, Method::sem_hmm, rc.batch_sizes.front(), mr});
    }
    const std::string tsv = render_tsv(report, rc);
    std::cout << render_table(report, rc);
    if (!out.empty()) write_text(out, tsv);
    return 0;
  }

  const EvalReport report = evaluate_domains(domains, rc);
  std::cout << render_table(report, rc);
  if (!out.empty()) write_text(out, render_tsv(report, rc));
  return 0;
}

int cmd_generate(const CommonOpts& o, int count, const std::string& out) {
  const LoadedModel loaded = load_model(o.model);
  Corpus corpus;
  corpus.vocab = loaded.hmm.vocab;
  for (int i = 0; i < count; ++i)
    corpus.narratives.push_back(sample(loaded.hmm, o.seed + static_cast<std::uint64_t>(i)));
  save_corpus(corpus, out);
  return 0;
}

int cmd_inspect(const CommonOpts& o, const std::string& trellis_obs) {
  const LoadedModel loaded = load_model(o.model);
  const Hmm& hmm = loaded.hmm;
  char buf[64];

  std::cout << "model: " << hmm.num_states() << " states, " << hmm.num_edges()
            << " transitions\n";
  for (std::size_t i = 0; i < hmm.order.size(); ++i) {
    const StateId q = hmm.order[i];
    std::cout << "state q" << q << " [ordinal " << i << "]";
    if (q == hmm.initial_state()) std::cout << " initial";
    if (q == hmm.final_state()) std::cout << " final";
    std::cout << "\n  emits:";
    std::vector<std::pair<double, SymbolId>> emissions;
    for (const auto& [sym, p] : hmm.emit.at(q)) emissions.push_back({p, sym});
    std::sort(emissions.begin(), emissions.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return hmm.vocab.label(a.second) < hmm.vocab.label(b.second);
              });
    for (const auto& [p, sym] : emissions) {
      std::snprintf(buf, sizeof(buf), "%.3f", p);
      std::cout << ' ' << hmm.vocab.label(sym) << ':' << buf;
    }
    std::cout << '\n';
    auto row = hmm.trans.find(q);
    if (row != hmm.trans.end() && !row->second.empty()) {
      std::cout << "  next:";
      std::vector<std::pair<int, StateId>> targets;
      for (const auto& [to, p] : row->second)
        targets.push_back({hmm.ordinal_of(to), to});
      std::sort(targets.begin(), targets.end());
      for (const auto& [ord, to] : targets) {
        std::snprintf(buf, sizeof(buf), "%.3f", row->second.at(to));
        std::cout << " q" << to << ':' << buf;
      }
      std::cout << '\n';
    }
  }

  if (!trellis_obs.empty()) {
    std::istringstream ss(trellis_obs);
    std::vector<SymbolId> obs{kStartSymbol};
    std::string token;
    std::size_t pos = 1;
    while (ss >> token) {
      auto id = hmm.vocab.find(token);
      if (!id)
        throw std::runtime_error("symbol \"" + token + "\" at position " +
                                 std::to_string(pos) +
                                 " is outside the model alphabet");
      obs.push_back(*id);
      ++pos;
    }
    obs.push_back(kEndSymbol);
    const int m = static_cast<int>(obs.size()) - 1;
    const int t_max = TmaxPolicy{}.t_max(m, hmm.num_states());
    const Trellis fwd = forward(hmm, obs, t_max);
    const Trellis bwd = backward(hmm, obs, t_max);
    std::cout << "trellis: m=" << m << " t_max=" << t_max << '\n';
    for (int t = 0; t <= t_max; ++t)
      for (int i = 0; i <= m; ++i)
        for (int j = 0; j < fwd.n; ++j) {
          const double a = fwd.a(t, i, j);
          const double b = bwd.b(t, i, j);
          if (a == 0.0 && b == 0.0) continue;
          std::snprintf(buf, sizeof(buf), "%.12g %.12g", a, b);
          std::cout << "t=" << t << " i=" << i << " q" << hmm.order[j]
                    << " alpha/beta " << buf << '\n';
        }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Script learning with Left-to-Right HMMs and null observations"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file; flags override");

  CommonOpts o;
  std::string input, out, model_out, trellis_obs;
  double w1 = 0.7, w2 = 0.3;
  int count = 100;
  bool domain_filter = false, no_domain_filter = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_flag("--verbose", o.verbose, "diagnostic logging to stderr");
  };
  auto add_training = [&](CLI::App* cmd) {
    cmd->add_option("--r", o.r, "batch size(s) r");
    cmd->add_option("--kappa-q", o.kappa_q, "state-count prior weight");
    cmd->add_option("--kappa-t", o.kappa_t, "transition-count prior weight");
    cmd->add_option("--kappa-c", o.kappa_c, "constraint-violation prior weight");
    cmd->add_option("--p0", o.p0, "baseline violation rate for constraint mining");
    cmd->add_option("--mode", o.mode, "likelihood mode: exact|approx");
    cmd->add_option("--constraints", o.constraints, "constraints file to write");
  };

  CLI::App* extract = app.add_subcommand("extract", "raw narratives -> corpus file");
  extract->add_option("--input", input, "raw narratives (blank-line-separated)")
      ->required();
  extract->add_option("--out", out, "corpus file to write")->required();
  extract->add_option("--similarity-matrix", o.similarity_matrix,
                      "token-pair similarity file");
  extract->add_option("--threshold", o.threshold, "clustering stop threshold");
  extract->add_option("--w1", w1, "verb similarity weight");
  extract->add_option("--w2", w2, "object similarity weight");
  add_common(extract);

  CLI::App* train = app.add_subcommand("train", "corpus -> model file");
  train->add_option("--corpus", o.corpus, "corpus file")->required();
  train->add_option("--model", model_out, "model file to write")->required();
  add_training(train);
  add_common(train);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "gap-prediction accuracy per method (corpus file or domain dir)");
  evaluate->add_option("--corpus", o.corpus, "corpus file or directory of domains")
      ->required();
  evaluate->add_option("--model", o.model, "evaluate this model instead of training");
  evaluate->add_option("--split", o.split, "held-out fraction");
  evaluate->add_option("--method", o.methods, "methods to run (repeatable)");
  evaluate->add_option("--out", out, "write machine-readable rows here");
  evaluate->add_flag("--domain-filter", domain_filter,
                     "require >= 50 narratives and >= 3 event types");
  evaluate->add_flag("--no-domain-filter", no_domain_filter,
                     "disable the domain filter");
  add_training(evaluate);
  add_common(evaluate);

  CLI::App* generate = app.add_subcommand("generate", "model -> sampled corpus");
  generate->add_option("--model", o.model, "model file")->required();
  generate->add_option("--count", count, "number of narratives");
  generate->add_option("--out", out, "corpus file to write")->required();
  add_common(generate);

  CLI::App* inspect = app.add_subcommand("inspect", "model file -> readable summary");
  inspect->add_option("--model", o.model, "model file")->required();
  inspect->add_option("--dump-trellis", trellis_obs,
                      "narrative (labels, no sentinels) to dump the trellis for");
  add_common(inspect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*extract) return cmd_extract(o, input, out, w1, w2);
    if (*train) return cmd_train(o, model_out);
    if (*evaluate) return cmd_evaluate(o, out, domain_filter, no_domain_filter);
    if (*generate) return cmd_generate(o, count, out);
    if (*inspect) return cmd_inspect(o, trellis_obs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
