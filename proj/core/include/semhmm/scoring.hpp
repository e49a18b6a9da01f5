#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "semhmm/em.hpp"

namespace semhmm {

/// Ordering rules of the form "X never follows Y", mined from a corpus with
/// a one-sided z-test on the observed violation rate.
struct ConstraintSet {
  struct Rule {
    SymbolId x = 0;  // the event that must not follow
    SymbolId y = 0;  // the preceding event
    long opportunities = 0;  // occurrences of y followed by another event
    long violations = 0;     // of those, how often x came immediately next

    auto operator<=>(const Rule&) const = default;
  };
  std::vector<Rule> rules;  // sorted by (x, y)

  bool empty() const { return rules.empty(); }
  std::size_t size() const { return rules.size(); }
};

struct ScoreConfig {
  double kappa_q = 1.0;  // weight on the number of states
  double kappa_t = 1.0;  // weight on the number of nonzero transitions
  double kappa_c = 1.0;  // weight on the number of violated constraints
  double p0 = 0.05;      // baseline violation rate for the z-test
  double significance = 0.01;
  int min_opportunities = 20;  // below this the normal approximation is off
  bool eventual_follow = false;  // count any later occurrence, not just bigrams
  enum class Mode { exact, approx } mode = Mode::exact;
  TmaxPolicy tmax;
};

/// Lower-tail p-value of the one-proportion z-test for rate v/n against p0.
double z_test_p_value(long n, long v, double p0);

/// Mines "X never follows Y" rules: a rule is kept when its observed
/// violation rate is significantly below p0.
ConstraintSet mine_constraints(const Corpus& corpus, double p0,
                               double significance, int min_opportunities = 20,
                               bool eventual_follow = false);

/// Number of rules the model can violate: (X,Y) counts as violated when
/// some state emitting Y reaches a state emitting X through a directed path
/// whose interior states can all emit null, so X can appear immediately
/// after Y in an output string.
int count_model_violations(const Hmm& hmm, const ConstraintSet& constraints);

/// log P(M) up to the model-independent normalizer:
///   -(kappa_q |Q| + kappa_t |T| + kappa_c |C|)
double log_prior(const Hmm& hmm, const ConstraintSet& constraints,
                 const ScoreConfig& config);

/// Exact data log-likelihood: sum of per-narrative log z, with unreachable
/// narratives contributing the underflow floor.
double log_likelihood_exact(const Hmm& hmm, const Corpus& corpus,
                            const TmaxPolicy& policy);

/// The complete-data surrogate sum_{q,q'} C(q->q') log T(q'|q) +
/// sum_{q,q',o} C(q,q'^o) log Omega(o|q'), with expected counts standing in
/// for observed ones. Cached per row so a structure change only touches the
/// rows it re-estimated.
class ApproxLikelihood {
 public:
  static ApproxLikelihood build(const Hmm& hmm, const CountTable& counts);

  double total() const { return total_; }

  /// Total after re-deriving the given rows against an edited model and
  /// count table; removed states' terms drop out. Does not mutate *this.
  double updated(const Hmm& hmm, const CountTable& counts,
                 const std::vector<StateId>& trans_rows,
                 const std::vector<StateId>& emit_rows,
                 const std::vector<StateId>& removed_states) const;

  /// Commits the same edit to the cache.
  void apply(const Hmm& hmm, const CountTable& counts,
             const std::vector<StateId>& trans_rows,
             const std::vector<StateId>& emit_rows,
             const std::vector<StateId>& removed_states);

 private:
  std::map<StateId, double> trans_terms_;
  std::map<StateId, double> emit_terms_;
  double total_ = 0.0;
};

double log_likelihood_approx(const Hmm& hmm, const CountTable& counts);

/// The structure score log P(M) + log P(D|M) used for candidate acceptance;
/// the likelihood term follows config.mode.
double score(const Hmm& hmm, const CountTable& counts, const Corpus& corpus,
             const ConstraintSet& constraints, const ScoreConfig& config);

/// Constraints file: one "X NEVER_FOLLOWS Y n v" line per rule.
void save_constraints(const ConstraintSet& constraints, const Vocabulary& vocab,
                      const std::filesystem::path& path);
ConstraintSet load_constraints(Vocabulary& vocab,
                               const std::filesystem::path& path);

}  // namespace semhmm
