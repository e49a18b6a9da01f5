#pragma once

#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "semhmm/corpus.hpp"
#include "semhmm/trellis.hpp"

namespace semhmm {

/// Sequence posteriors. gamma holds the full (state, time, index) joint;
/// delta is stored sparsely keyed by (from, to, symbol) with the time axis
/// already marginalized out, which is all the count equations need.
struct Posteriors {
  double z = 0.0;  // sequence probability P(obs), truncated at t_max
  int t_max = 0;
  int m = 0;
  int n = 0;
  std::vector<StateId> id;    // ordinal -> state id
  std::vector<double> gamma;  // same layout as Trellis::alpha
  std::map<std::tuple<StateId, StateId, SymbolId>, double> delta;

  double gamma_at(int ordinal, int t, int i) const {
    return gamma[(static_cast<std::size_t>(t) * (m + 1) + i) * n + ordinal];
  }
  /// Expected number of visits of a state, summed over time and index.
  double visit_total(int ordinal) const;
};

/// Runs both passes and normalizes by z. Throws "sequence unreachable under
/// model" when z vanishes (or underflows below 1e-300).
Posteriors posteriors(const Hmm& hmm, std::span<const SymbolId> obs, int t_max);

/// log P(obs) truncated at t_max; nullopt when the sequence is unreachable.
std::optional<double> sequence_likelihood(const Hmm& hmm,
                                          std::span<const SymbolId> obs,
                                          int t_max);

struct ExpectedCounts {
  CountTable counts;
  std::size_t unreachable = 0;  // narratives skipped with a warning
};

/// Corpus-level E-step: sums gamma and delta over all narratives. Each
/// narrative's posterior is independent, so this is a map over narratives
/// followed by a commutative reduction; unreachable narratives are skipped
/// and counted rather than aborting the caller.
ExpectedCounts expected_counts(const Hmm& hmm, const Corpus& corpus,
                               const TmaxPolicy& policy = {});

struct Prediction {
  SymbolId symbol;
  std::optional<double> log_likelihood;  // nullopt = completion unreachable
};

/// Ranks every candidate symbol by the likelihood of the sequence with the
/// candidate inserted at the gap. Ties break toward higher training
/// frequency, then lexicographically smaller label. gap_pos indexes the
/// position in `gapped` where the missing event would be restored and must
/// lie strictly inside the sentinels.
std::vector<Prediction> predict_missing(
    const Hmm& hmm, std::span<const SymbolId> gapped, int gap_pos,
    const std::map<SymbolId, double>& candidate_freq, const TmaxPolicy& policy = {});

}  // namespace semhmm
