#include "semhmm/trellis.hpp"

#include <algorithm>
#include <stdexcept>

namespace semhmm {

CompiledHmm CompiledHmm::build(const Hmm& hmm) {
  CompiledHmm c;
  c.model = &hmm;
  c.n = static_cast<int>(hmm.order.size());
  c.id = hmm.order;
  c.lambda.assign(c.n, 0.0);

  std::map<StateId, int> ordinal;
  for (int j = 0; j < c.n; ++j) ordinal[c.id[j]] = j;
  for (int j = 0; j < c.n; ++j) c.lambda[j] = hmm.omega(c.id[j], kNullSymbol);

  std::vector<std::vector<std::pair<int, double>>> in(c.n), out(c.n);
  for (const auto& [from, row] : hmm.trans) {
    const int jf = ordinal.at(from);
    for (const auto& [to, p] : row) {
      const int jt = ordinal.at(to);
      in[jt].emplace_back(jf, p);
      out[jf].emplace_back(jt, p);
    }
  }
  auto pack = [](const std::vector<std::vector<std::pair<int, double>>>& adj,
                 std::vector<int>& off, std::vector<int>& node,
                 std::vector<double>& prob) {
    off.assign(adj.size() + 1, 0);
    for (std::size_t j = 0; j < adj.size(); ++j)
      off[j + 1] = off[j] + static_cast<int>(adj[j].size());
    node.resize(off.back());
    prob.resize(off.back());
    int k = 0;
    for (const auto& edges : adj) {
      auto sorted = edges;
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [other, p] : sorted) {
        node[k] = other;
        prob[k] = p;
        ++k;
      }
    }
  };
  pack(in, c.in_off, c.in_src, c.in_prob);
  pack(out, c.out_off, c.out_dst, c.out_prob);
  return c;
}

std::vector<double> CompiledHmm::emission_matrix(
    std::span<const SymbolId> obs) const {
  const int m = static_cast<int>(obs.size()) - 1;
  std::vector<double> e(static_cast<std::size_t>(n) * (m + 1), 0.0);
  const Vocabulary& vocab = model->vocab;
  for (int i = 0; i <= m; ++i) {
    if (obs[i] >= vocab.size())
      throw std::runtime_error("symbol id " + std::to_string(obs[i]) +
                               " at position " + std::to_string(i) +
                               " is outside the model alphabet");
    if (obs[i] == kNullSymbol)
      throw std::runtime_error("null symbol \"" + std::string(kNullLabel) +
                               "\" in observation sequence at position " +
                               std::to_string(i));
  }
  for (int j = 0; j < n; ++j) {
    const auto& row = model->emit.at(id[j]);
    for (int i = 0; i <= m; ++i) {
      auto it = row.find(obs[i]);
      if (it != row.end()) e[static_cast<std::size_t>(j) * (m + 1) + i] = it->second;
    }
  }
  return e;
}

namespace {

void check_obs(std::span<const SymbolId> obs, int t_max) {
  if (obs.size() < 2 || obs.front() != kStartSymbol || obs.back() != kEndSymbol)
    throw std::runtime_error("observation sequence is not sentinel-wrapped");
  if (t_max < static_cast<int>(obs.size()) - 1)
    throw std::runtime_error("t_max smaller than observation count");
}

}  // namespace

void fill_forward(const CompiledHmm& c, std::span<const double> e, int m,
                  int t_max, Trellis& tr) {
  tr.t_max = t_max;
  tr.m = m;
  tr.n = c.n;
  const std::size_t plane = static_cast<std::size_t>(m + 1) * c.n;
  tr.alpha.assign(plane * (t_max + 1), 0.0);
  tr.alpha[tr.idx(0, 0, 0)] = 1.0;

  for (int t = 1; t <= t_max; ++t) {
    const double* prev = tr.alpha.data() + plane * (t - 1);
    double* curr = tr.alpha.data() + plane * t;
    const int i_hi = std::min(t, m);
    for (int j = 0; j < c.n; ++j) {
      const double lam = c.lambda[j];
      const double* ej = e.data() + static_cast<std::size_t>(j) * (m + 1);
      for (int k = c.in_off[j]; k < c.in_off[j + 1]; ++k) {
        const int src = c.in_src[k];
        const double p = c.in_prob[k];
        for (int i = 0; i <= i_hi; ++i) {
          double acc = lam * prev[static_cast<std::size_t>(i) * c.n + src];
          if (i > 0)
            acc += ej[i] * prev[static_cast<std::size_t>(i - 1) * c.n + src];
          curr[static_cast<std::size_t>(i) * c.n + j] += p * acc;
        }
      }
    }
  }
}

void fill_backward(const CompiledHmm& c, std::span<const double> e, int m,
                   int t_max, Trellis& tr) {
  tr.t_max = t_max;
  tr.m = m;
  tr.n = c.n;
  const std::size_t plane = static_cast<std::size_t>(m + 1) * c.n;
  tr.beta.assign(plane * (t_max + 1), 0.0);
  tr.beta[tr.idx(0, m, c.n - 1)] = 1.0;

  for (int t = 1; t <= t_max; ++t) {
    const double* prev = tr.beta.data() + plane * (t - 1);
    double* curr = tr.beta.data() + plane * t;
    for (int j = 0; j < c.n; ++j) {
      double* bj = curr + j;
      for (int k = c.out_off[j]; k < c.out_off[j + 1]; ++k) {
        const int dst = c.out_dst[k];
        const double p = c.out_prob[k];
        const double lam = c.lambda[dst];
        const double* ed = e.data() + static_cast<std::size_t>(dst) * (m + 1);
        for (int i = 0; i <= m; ++i) {
          double acc = lam * prev[static_cast<std::size_t>(i) * c.n + dst];
          if (i < m)
            acc += ed[i + 1] * prev[static_cast<std::size_t>(i + 1) * c.n + dst];
          bj[static_cast<std::size_t>(i) * c.n] += p * acc;
        }
      }
    }
  }
}

double forward_z(const CompiledHmm& c, std::span<const SymbolId> obs,
                 int t_max, std::vector<std::uint64_t>* support) {
  check_obs(obs, t_max);
  const int m = static_cast<int>(obs.size()) - 1;
  const auto e = c.emission_matrix(obs);
  const std::size_t plane = static_cast<std::size_t>(m + 1) * c.n;

  if (support) support->assign((c.n + 63) / 64, 0);
  auto mark = [&](int j) {
    if (support) (*support)[j >> 6] |= std::uint64_t{1} << (j & 63);
  };

  std::vector<double> prev(plane, 0.0), curr(plane, 0.0);
  prev[0] = 1.0;  // alpha_{q0}(0, 0); the final state has ordinal n-1
  mark(0);
  double z = 0.0;
  const std::size_t z_cell = static_cast<std::size_t>(m) * c.n + (c.n - 1);

  for (int t = 1; t <= t_max; ++t) {
    std::fill(curr.begin(), curr.end(), 0.0);
    const int i_hi = std::min(t, m);
    bool alive = false;
    for (int j = 0; j < c.n; ++j) {
      const double lam = c.lambda[j];
      const double* ej = e.data() + static_cast<std::size_t>(j) * (m + 1);
      bool touched = false;
      for (int k = c.in_off[j]; k < c.in_off[j + 1]; ++k) {
        const int src = c.in_src[k];
        const double p = c.in_prob[k];
        for (int i = 0; i <= i_hi; ++i) {
          double acc = lam * prev[static_cast<std::size_t>(i) * c.n + src];
          if (i > 0)
            acc += ej[i] * prev[static_cast<std::size_t>(i - 1) * c.n + src];
          if (acc != 0.0) {
            curr[static_cast<std::size_t>(i) * c.n + j] += p * acc;
            alive = true;
            touched = true;
          }
        }
      }
      if (touched) mark(j);
    }
    z += curr[z_cell];
    if (!alive) break;
    prev.swap(curr);
  }
  return z;
}

Trellis forward(const Hmm& hmm, std::span<const SymbolId> obs, int t_max) {
  check_obs(obs, t_max);
  const auto c = CompiledHmm::build(hmm);
  const auto e = c.emission_matrix(obs);
  Trellis tr;
  fill_forward(c, e, static_cast<int>(obs.size()) - 1, t_max, tr);
  return tr;
}

Trellis backward(const Hmm& hmm, std::span<const SymbolId> obs, int t_max) {
  check_obs(obs, t_max);
  const auto c = CompiledHmm::build(hmm);
  const auto e = c.emission_matrix(obs);
  Trellis tr;
  fill_backward(c, e, static_cast<int>(obs.size()) - 1, t_max, tr);
  return tr;
}

}  // namespace semhmm
