#pragma once

#include <filesystem>

#include "semhmm/model.hpp"

namespace semhmm {

/// Model files are UTF-8 text with four sections:
///
///   STATES   one "q<id> <ordinal>" line per state, in topological order
///   TRANS    "q q' prob" lines
///   EMIT     "q symbol prob" lines ("&lambda;" escapes the null symbol)
///   COUNTS   "visit q value", "trans q q' value", "emit q q' symbol value"
///
/// Probabilities and counts are written with 17 significant digits so a
/// round trip reproduces every double bit-exactly.
void save_model(const Hmm& hmm, const CountTable& counts,
                const std::filesystem::path& path);

struct LoadedModel {
  Hmm hmm;
  CountTable counts;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace semhmm
