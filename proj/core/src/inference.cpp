#include "semhmm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace semhmm {

double Posteriors::visit_total(int ordinal) const {
  double sum = 0.0;
  for (int t = 0; t <= t_max; ++t)
    for (int i = 0; i <= m; ++i) sum += gamma_at(ordinal, t, i);
  return sum;
}

namespace {

// Posteriors marginalize the total path length tau out by convolving alpha
// and beta entries whose time indices sum to tau <= t_max. bcum(L, i, j) =
// sum_{t' <= L} beta_j(t', i) turns each convolution into one lookup.
Posteriors posteriors_impl(const CompiledHmm& c, std::span<const SymbolId> obs,
                           int t_max) {
  const int m = static_cast<int>(obs.size()) - 1;
  const int n = c.n;
  const auto e = c.emission_matrix(obs);

  Trellis tr;
  fill_forward(c, e, m, t_max, tr);
  fill_backward(c, e, m, t_max, tr);

  double z = 0.0;
  for (int t = 0; t <= t_max; ++t) z += tr.a(t, m, n - 1);

  Posteriors post;
  post.z = z;
  post.t_max = t_max;
  post.m = m;
  post.n = n;
  post.id = c.id;
  if (z < kUnderflowFloor) return post;  // caller decides how to report

  const std::size_t plane = static_cast<std::size_t>(m + 1) * n;
  std::vector<double> bcum(tr.beta.size());
  std::copy(tr.beta.begin(), tr.beta.begin() + plane, bcum.begin());
  for (int t = 1; t <= t_max; ++t)
    for (std::size_t cell = 0; cell < plane; ++cell)
      bcum[plane * t + cell] = bcum[plane * (t - 1) + cell] + tr.beta[plane * t + cell];

  const double inv_z = 1.0 / z;
  post.gamma.assign(tr.alpha.size(), 0.0);
  for (int t = 0; t <= t_max; ++t) {
    const double* a = tr.alpha.data() + plane * t;
    const double* bc = bcum.data() + plane * (t_max - t);
    double* g = post.gamma.data() + plane * t;
    for (std::size_t cell = 0; cell < plane; ++cell)
      g[cell] = a[cell] * bc[cell] * inv_z;
  }

  // delta, marginalized over t on the fly. A transition into `dst` at step
  // t+1 either emits null (index stays) or the next observation (index
  // advances); the remaining path may take at most t_max - t - 1 steps.
  for (int j = 0; j < n; ++j) {
    for (int k = c.out_off[j]; k < c.out_off[j + 1]; ++k) {
      const int dst = c.out_dst[k];
      const double p = c.out_prob[k];
      const double lam = c.lambda[dst];
      const double* ed = e.data() + static_cast<std::size_t>(dst) * (m + 1);
      double null_sum = 0.0;
      std::vector<double> obs_sum(m + 1, 0.0);  // indexed by the emitted o_{i+1}
      for (int t = 0; t < t_max; ++t) {
        const double* a = tr.alpha.data() + plane * t;
        const double* bc = bcum.data() + plane * (t_max - t - 1);
        const int i_hi = std::min(t, m);
        for (int i = 0; i <= i_hi; ++i) {
          const double aji = a[static_cast<std::size_t>(i) * n + j];
          if (aji == 0.0) continue;
          if (lam > 0.0)
            null_sum += aji * bc[static_cast<std::size_t>(i) * n + dst];
          if (i < m && ed[i + 1] > 0.0)
            obs_sum[i + 1] += aji * bc[static_cast<std::size_t>(i + 1) * n + dst];
        }
      }
      const StateId from = c.id[j];
      const StateId to = c.id[dst];
      if (lam > 0.0 && null_sum > 0.0)
        post.delta[{from, to, kNullSymbol}] += p * lam * null_sum * inv_z;
      for (int i = 1; i <= m; ++i)
        if (obs_sum[i] > 0.0)
          post.delta[{from, to, obs[i]}] += p * ed[i] * obs_sum[i] * inv_z;
    }
  }
  return post;
}

}  // namespace

Posteriors posteriors(const Hmm& hmm, std::span<const SymbolId> obs, int t_max) {
  if (obs.size() < 2 || obs.front() != kStartSymbol || obs.back() != kEndSymbol)
    throw std::runtime_error("observation sequence is not sentinel-wrapped");
  const auto c = CompiledHmm::build(hmm);
  Posteriors post = posteriors_impl(c, obs, t_max);
  if (post.z < kUnderflowFloor)
    throw std::runtime_error("sequence unreachable under model");
  return post;
}

std::optional<double> sequence_likelihood(const Hmm& hmm,
                                          std::span<const SymbolId> obs,
                                          int t_max) {
  const auto c = CompiledHmm::build(hmm);
  const double z = forward_z(c, obs, t_max);
  if (z < kUnderflowFloor) return std::nullopt;
  return std::log(z);
}

ExpectedCounts expected_counts(const Hmm& hmm, const Corpus& corpus,
                               const TmaxPolicy& policy) {
  const auto c = CompiledHmm::build(hmm);
  ExpectedCounts result;
  // Per-narrative posteriors are independent, so identical narratives share
  // one trellis pass and scale by their multiplicity.
  std::map<std::vector<SymbolId>, std::size_t> distinct;
  for (const auto& seq : corpus.narratives) ++distinct[seq];
  for (const auto& [seq, multiplicity] : distinct) {
    const double scale = static_cast<double>(multiplicity);
    const int m = static_cast<int>(seq.size()) - 1;
    const int t_max = policy.t_max(m, hmm.num_states());
    Posteriors post = posteriors_impl(c, seq, t_max);
    if (post.z < kUnderflowFloor) {
      result.unreachable += multiplicity;
      continue;
    }
    for (int j = 0; j < post.n; ++j) {
      const double visits = post.visit_total(j);
      result.counts.add_visit(post.id[j], scale * visits);
    }
    for (const auto& [key, w] : post.delta) {
      result.counts.add_transition(std::get<0>(key), std::get<1>(key), scale * w);
      result.counts.add_emission(std::get<0>(key), std::get<1>(key),
                                 std::get<2>(key), scale * w);
    }
  }
  return result;
}

std::vector<Prediction> predict_missing(
    const Hmm& hmm, std::span<const SymbolId> gapped, int gap_pos,
    const std::map<SymbolId, double>& candidate_freq, const TmaxPolicy& policy) {
  if (gapped.size() < 2 || gapped.front() != kStartSymbol ||
      gapped.back() != kEndSymbol)
    throw std::runtime_error("gapped sequence is not sentinel-wrapped");
  if (gap_pos < 1 || gap_pos > static_cast<int>(gapped.size()) - 1)
    throw std::runtime_error("gap position outside the sentinels");
  if (candidate_freq.empty()) throw std::runtime_error("empty candidate vocabulary");

  const auto c = CompiledHmm::build(hmm);
  std::vector<SymbolId> filled(gapped.begin(), gapped.end());
  filled.insert(filled.begin() + gap_pos, kNullSymbol);  // placeholder
  const int m = static_cast<int>(filled.size()) - 1;
  const int t_max = policy.t_max(m, hmm.num_states());

  std::vector<Prediction> out;
  out.reserve(candidate_freq.size());
  for (const auto& [symbol, freq] : candidate_freq) {
    (void)freq;
    filled[gap_pos] = symbol;
    const double z = forward_z(c, filled, t_max);
    Prediction p{symbol, std::nullopt};
    if (z >= kUnderflowFloor) p.log_likelihood = std::log(z);
    out.push_back(p);
  }

  std::stable_sort(out.begin(), out.end(),
                   [&](const Prediction& lhs, const Prediction& rhs) {
                     const double ll = lhs.log_likelihood.value_or(
                         -std::numeric_limits<double>::infinity());
                     const double rl = rhs.log_likelihood.value_or(
                         -std::numeric_limits<double>::infinity());
                     if (ll != rl) return ll > rl;
                     const double lf = candidate_freq.at(lhs.symbol);
                     const double rf = candidate_freq.at(rhs.symbol);
                     if (lf != rf) return lf > rf;
                     return hmm.vocab.label(lhs.symbol) < hmm.vocab.label(rhs.symbol);
                   });
  return out;
}

}  // namespace semhmm
