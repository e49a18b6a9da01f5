#pragma once

#include <iosfwd>
#include <vector>

#include "semhmm/inference.hpp"

namespace semhmm {

struct MStepOptions {
  double pseudocount = 1.0;
  bool allow_lambda = true;         // give the null symbol smoothed mass
  bool full_vocab_smoothing = false;  // smooth over the whole alphabet

  MStepOptions with_pseudocount(double pc) const {
    MStepOptions o = *this;
    o.pseudocount = pc;
    return o;
  }
};

/// MAP re-estimation of one transition row. Each structurally allowed
/// successor receives one pseudocount:
///   T(q'|q) = (C(q->q') + pc) / (C(q) + pc * |successors|)
/// and the row is renormalized so it sums to one exactly.
std::map<StateId, double> derive_transition_row(
    const std::vector<StateId>& successors, const CountTable& counts,
    StateId q, double pseudocount);

/// MAP re-estimation of one emission row over the allowed symbols: the
/// symbols with nonzero incoming count, plus the null symbol when enabled
/// (the whole alphabet under full-vocab smoothing).
std::map<SymbolId, double> derive_emission_row(const Hmm& structure,
                                               const CountTable& counts,
                                               StateId q,
                                               const MStepOptions& options);

/// Full M-step: re-derives every transition and emission row from the
/// counts while keeping the structure (edge support) fixed. The sentinel
/// emissions of the initial and final states stay pinned.
Hmm m_step(const Hmm& structure, const CountTable& counts,
           const MStepOptions& options = {});

struct EmConfig {
  int max_iters = 100;
  // Relative-change stopping tolerance. Applied to the MAP objective
  // (likelihood plus prior density), the quantity each iteration actually
  // improves; with smoothing the raw likelihood may drift down on flat
  // ridges and never settle.
  double rel_tol = 1e-6;
  TmaxPolicy tmax;
  MStepOptions mstep;
  std::ostream* log = nullptr;  // tab-separated (iteration, loglik, delta)
};

struct EmResult {
  Hmm hmm;
  std::vector<double> trace;  // total corpus log-likelihood after each M-step
  CountTable counts;          // expected counts under the final parameters
  std::size_t unreachable = 0;
};

/// Alternates expected_counts and m_step until the relative change of the
/// corpus log-likelihood drops below rel_tol or max_iters is reached.
EmResult em_fit(const Hmm& hmm, const Corpus& corpus, const EmConfig& config = {});

/// Corpus log-likelihood with unreachable narratives clamped to the
/// underflow floor; the building block of likelihood traces and scoring.
double corpus_log_likelihood(const Hmm& hmm, const Corpus& corpus,
                             const TmaxPolicy& policy);

/// log density (up to its constant) of the Dirichlet prior the M-step's
/// pseudocounts encode: pseudocount * sum of log of every free parameter.
double map_prior_log_density(const Hmm& hmm, double pseudocount);

}  // namespace semhmm
