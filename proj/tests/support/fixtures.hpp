#pragma once

#include <random>

#include "semhmm/corpus.hpp"
#include "semhmm/model.hpp"

namespace semhmm::testing {

/// The three-state chain used across the examples: q0 -> s1 -> qn with
/// Omega(a|s1) = 0.7 and a 0.3 chance of emitting nothing.
Hmm make_m0();

/// A six-state doorbell-style script (initial, four interior, final) with a
/// skip transition and 15% null emission at every interior state. The
/// synthetic generator behind the prediction-ordering experiments.
Hmm make_doorbell();

struct RandomModelSpec {
  int min_states = 3;
  int max_states = 6;
  int alphabet = 4;          // event symbols a, b, c, ...
  double max_lambda = 0.5;   // cap on the null-emission mass
  double self_loop_prob = 0.3;
  bool lambda_self_loops = false;  // allow null mass on self-looping states
};

/// Seeded random Left-to-Right HMM; always passes validate().
Hmm random_left_right_hmm(std::uint64_t seed, const RandomModelSpec& spec = {});

/// Samples a corpus from a model with consecutive seeds.
Corpus sample_corpus(const Hmm& hmm, std::size_t n, std::uint64_t seed);

/// Replaces all free parameters with fresh random ones on the same support
/// (used to start EM away from the generator).
Hmm randomize_parameters(const Hmm& hmm, std::uint64_t seed);

std::vector<SymbolId> wrap(const Corpus& corpus,
                           const std::vector<std::string>& labels);

}  // namespace semhmm::testing
