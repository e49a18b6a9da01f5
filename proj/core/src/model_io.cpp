#include "semhmm/model_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semhmm {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Parser {
  std::filesystem::path path;
  std::size_t lineno = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                             ": " + what);
  }

  StateId parse_state(const std::string& token) const {
    if (token.size() < 2 || token[0] != 'q') fail("expected state id, got \"" + token + "\"");
    char* end = nullptr;
    const unsigned long v = std::strtoul(token.c_str() + 1, &end, 10);
    if (*end != '\0') fail("malformed state id \"" + token + "\"");
    return static_cast<StateId>(v);
  }

  double parse_number(const std::string& token, const char* field) const {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0')
      fail(std::string("malformed ") + field + " \"" + token + "\"");
    return v;
  }
};

}  // namespace

void save_model(const Hmm& hmm, const CountTable& counts,
                const std::filesystem::path& path) {
  if (auto v = validate(hmm); !v.ok)
    throw std::invalid_argument("save_model: invalid model: " + v.message);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path.string());

  out << "STATES\n";
  for (std::size_t i = 0; i < hmm.order.size(); ++i)
    out << 'q' << hmm.order[i] << ' ' << i << '\n';

  out << "TRANS\n";
  for (StateId q : hmm.order) {
    auto row = hmm.trans.find(q);
    if (row == hmm.trans.end()) continue;
    for (const auto& [to, p] : row->second)
      out << 'q' << q << " q" << to << ' ' << fmt(p) << '\n';
  }

  out << "EMIT\n";
  for (StateId q : hmm.order)
    for (const auto& [o, p] : hmm.emit.at(q))
      out << 'q' << q << ' ' << hmm.vocab.label(o) << ' ' << fmt(p) << '\n';

  out << "COUNTS\n";
  for (const auto& [q, c] : counts.visits)
    out << "visit q" << q << ' ' << fmt(c) << '\n';
  for (const auto& [edge, c] : counts.trans)
    out << "trans q" << edge.first << " q" << edge.second << ' ' << fmt(c) << '\n';
  for (const auto& [key, c] : counts.emit)
    out << "emit q" << std::get<0>(key) << " q" << std::get<1>(key) << ' '
        << hmm.vocab.label(std::get<2>(key)) << ' ' << fmt(c) << '\n';

  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());

  Parser p{path};
  LoadedModel result;
  Hmm& hmm = result.hmm;
  CountTable& counts = result.counts;

  enum class Section { none, states, trans, emit, counts } section = Section::none;
  std::vector<std::pair<StateId, std::size_t>> states;  // (id, ordinal)
  std::string line;

  auto known = [&](StateId q) {
    for (const auto& [id, ord] : states)
      if (id == q) return true;
    return false;
  };

  while (std::getline(in, line)) {
    ++p.lineno;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty()) continue;

    if (tok.size() == 1 &&
        (tok[0] == "STATES" || tok[0] == "TRANS" || tok[0] == "EMIT" || tok[0] == "COUNTS")) {
      section = tok[0] == "STATES"  ? Section::states
                : tok[0] == "TRANS" ? Section::trans
                : tok[0] == "EMIT"  ? Section::emit
                                    : Section::counts;
      continue;
    }

    switch (section) {
      case Section::none:
        p.fail("content before any section header");
      case Section::states: {
        if (tok.size() != 2) p.fail("STATES line needs \"id ordinal\"");
        const StateId id = p.parse_state(tok[0]);
        const double ord = p.parse_number(tok[1], "ordinal");
        if (ord < 0 || ord != static_cast<std::size_t>(ord)) p.fail("bad ordinal");
        states.emplace_back(id, static_cast<std::size_t>(ord));
        break;
      }
      case Section::trans: {
        if (tok.size() != 3) p.fail("TRANS line needs \"q q' prob\"");
        const StateId from = p.parse_state(tok[0]);
        const StateId to = p.parse_state(tok[1]);
        if (!known(from) || !known(to)) p.fail("transition row references unknown state");
        const double prob = p.parse_number(tok[2], "probability");
        if (prob < 0.0) p.fail("negative probability in TRANS row q" + std::to_string(from));
        hmm.trans[from][to] = prob;
        break;
      }
      case Section::emit: {
        if (tok.size() != 3) p.fail("EMIT line needs \"q symbol prob\"");
        const StateId q = p.parse_state(tok[0]);
        if (!known(q)) p.fail("emission row references unknown state");
        const double prob = p.parse_number(tok[2], "probability");
        if (prob < 0.0)
          p.fail("negative probability in EMIT row q" + std::to_string(q) +
                 " symbol " + tok[1]);
        hmm.emit[q][hmm.vocab.intern(tok[1])] = prob;
        break;
      }
      case Section::counts: {
        auto parse_count = [&](const std::string& token) {
          const double v = p.parse_number(token, "count");
          if (v < 0.0) p.fail("negative count \"" + token + "\"");
          return v;
        };
        if (tok[0] == "visit") {
          if (tok.size() != 3) p.fail("visit line needs \"visit q value\"");
          counts.visits[p.parse_state(tok[1])] = parse_count(tok[2]);
        } else if (tok[0] == "trans") {
          if (tok.size() != 4) p.fail("trans line needs \"trans q q' value\"");
          counts.trans[{p.parse_state(tok[1]), p.parse_state(tok[2])}] =
              parse_count(tok[3]);
        } else if (tok[0] == "emit") {
          if (tok.size() != 5) p.fail("emit line needs \"emit q q' symbol value\"");
          counts.emit[{p.parse_state(tok[1]), p.parse_state(tok[2]),
                       hmm.vocab.intern(tok[3])}] = parse_count(tok[4]);
        } else {
          p.fail("unknown COUNTS record \"" + tok[0] + "\"");
        }
        break;
      }
    }
  }

  if (states.empty()) {
    p.lineno = 0;
    p.fail("model file has no STATES section");
  }
  hmm.order.resize(states.size());
  StateId max_id = 0;
  for (const auto& [id, ord] : states) {
    if (ord >= states.size()) {
      p.lineno = 0;
      p.fail("state ordinal out of range");
    }
    hmm.order[ord] = id;
    max_id = std::max(max_id, id);
  }
  hmm.next_id = max_id + 1;

  if (auto v = validate(hmm); !v.ok) {
    p.lineno = 0;
    p.fail("loaded model is invalid: " + v.message);
  }
  return result;
}

}  // namespace semhmm
