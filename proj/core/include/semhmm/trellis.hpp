#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "semhmm/model.hpp"

namespace semhmm {

/// Truncation policy for the time axis of the trellis. Null emissions on
/// self-loops make the path set infinite, so the marginalization over time
/// is cut off at t_max(m, |Q|) = round(multiplier * (m + |Q|)), never below
/// the observation count m.
struct TmaxPolicy {
  double multiplier = 1.0;

  int t_max(int obs_count, std::size_t num_states) const {
    const int t = static_cast<int>(
        std::llround(multiplier * (obs_count + static_cast<double>(num_states))));
    return std::max(obs_count, t);
  }
};

/// Likelihoods below this are treated as "sequence unreachable".
inline constexpr double kUnderflowFloor = 1e-300;

/// Ordinal-indexed view of a model for the inner loops: CSR edge lists plus
/// per-state null-emission probabilities. Valid only while the source model
/// is alive.
struct CompiledHmm {
  int n = 0;
  std::vector<StateId> id;       // ordinal -> state id
  std::vector<double> lambda;    // Omega(null | q) per ordinal
  std::vector<int> in_off, in_src;
  std::vector<double> in_prob;
  std::vector<int> out_off, out_dst;
  std::vector<double> out_prob;
  const Hmm* model = nullptr;

  static CompiledHmm build(const Hmm& hmm);

  /// Emission probabilities against one sequence: e[j * (m+1) + i] =
  /// Omega(obs[i] | state j). Throws when a symbol is outside the model's
  /// alphabet, naming the symbol and its position.
  std::vector<double> emission_matrix(std::span<const SymbolId> obs) const;
};

/// The two-index dynamic-programming tables. alpha[q](t, i) is the joint
/// probability of being in state q at time t having produced the first i+1
/// observations; beta[q](t, i) is the probability of producing the rest of
/// the sequence in exactly t further steps starting from q. The extra index
/// is needed because null emissions decouple time from observation position.
struct Trellis {
  int t_max = 0;
  int m = 0;  // index of the last observation ("<" is index 0)
  int n = 0;  // number of states
  std::vector<double> alpha;
  std::vector<double> beta;

  std::size_t idx(int t, int i, int j) const {
    return (static_cast<std::size_t>(t) * (m + 1) + i) * n + j;
  }
  double a(int t, int i, int j) const { return alpha[idx(t, i, j)]; }
  double b(int t, int i, int j) const { return beta[idx(t, i, j)]; }
};

/// Forward pass:
///   alpha_j(t, i) = sum_{k <= j} T(j|k) * { Omega(null|j) alpha_k(t-1, i)
///                                         + Omega(o_i|j)  alpha_k(t-1, i-1) }
/// with alpha_{q0}(0,0) = 1. The observation index does not advance on a
/// null emission. Requires a sentinel-wrapped sequence and t_max >= m.
Trellis forward(const Hmm& hmm, std::span<const SymbolId> obs, int t_max);

/// Backward pass, the mirror recursion with t counting remaining steps:
///   beta_j(t, i) = sum_{k >= j} T(k|j) * { Omega(null|k) beta_k(t-1, i)
///                                        + Omega(o_{i+1}|k) beta_k(t-1, i+1) }
/// with beta_{qn}(0, m) = 1.
Trellis backward(const Hmm& hmm, std::span<const SymbolId> obs, int t_max);

// Internal fast paths shared with scoring; the rolling-plane forward keeps
// only two time layers. When `support` is given it receives one bit per
// ordinal, set when that state carries forward mass anywhere in the trellis.
void fill_forward(const CompiledHmm& chmm, std::span<const double> eprob,
                  int m, int t_max, Trellis& out);
void fill_backward(const CompiledHmm& chmm, std::span<const double> eprob,
                   int m, int t_max, Trellis& out);
double forward_z(const CompiledHmm& chmm, std::span<const SymbolId> obs,
                 int t_max, std::vector<std::uint64_t>* support = nullptr);

}  // namespace semhmm
