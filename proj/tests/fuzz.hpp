#pragma once

// Mutation fuzzing of the model, deployment and property front ends. Every input must end
// in a document or in diagnostics; any other exception is reported as a finding.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cpssv/engine.hpp"
#include "cpssv/model.hpp"
#include "cpssv/monitor.hpp"
#include "cpssv/random.hpp"
#include "cpssv/weaver.hpp"

namespace fuzz {

using namespace cpssv;

struct Seed {
  std::string model;
  std::string deployment;
  std::string property;
};

inline const std::vector<std::string>& dictionary() {
  static const std::vector<std::string> words = {
      "{", "}", "(", ")", "[", "]", ";", ",", "=", "->", "==", "&&", "||", "!", "-", "+", "*", "/", "%", "<=",
      ".", "\"", "\n", " ", "//", "agentclass", "spatial", "interaction", "predicates", "hooks", "globals",
      "locals", "const", "state", "on", "guard", "prob", "do", "delay", "exp(1)", "det(0)", "uniform(2,1)",
      "cap", "timed", "labels", "entry", "exit", "initial", "success", "failure", "when", "int", "real",
      "bool", "if", "else", "true", "false", "self_pos()", "now()", "agent_count(RA)", "0", "1", "0.5",
      "-1", "1e9", "99999999999999999999", "0.0000001", "__origin", "F", "G", "X", "U", "[<=3]",
      "SystemTime", "[instances.robot]", "count", "initial_dist", "near", "distance", "horizon",
      "max_events", "property", "[globals]", "[constants]", "{ A = 1 }", "inf", "nan"};
  return words;
}

inline std::string random_bytes(RandomStream& rng, std::size_t max_len) {
  std::string s(rng.below(max_len + 1), '\0');
  for (auto& c : s) c = static_cast<char>(rng.below(256));
  return s;
}

inline std::string random_tokens(RandomStream& rng, std::size_t max_tokens) {
  const auto& dict = dictionary();
  std::string s;
  const auto n = rng.below(max_tokens + 1);
  for (std::uint64_t i = 0; i < n; ++i) {
    s += dict[rng.below(dict.size())];
    if (rng.below(2)) s += ' ';
  }
  return s;
}

inline std::string mutate(std::string s, RandomStream& rng) {
  const auto& dict = dictionary();
  const int rounds = 1 + static_cast<int>(rng.below(6));
  for (int r = 0; r < rounds; ++r) {
    const std::size_t pos = s.empty() ? 0 : rng.below(s.size() + 1);
    switch (rng.below(7)) {
      case 0:
        if (!s.empty() && pos < s.size()) s[pos] = static_cast<char>(rng.below(256));
        break;
      case 1: s.insert(pos, dict[rng.below(dict.size())]); break;
      case 2: s.erase(pos, rng.below(16)); break;
      case 3: {
        const std::size_t from = s.empty() ? 0 : rng.below(s.size());
        s.insert(pos, s.substr(from, rng.below(64)));
        break;
      }
      case 4: s.resize(pos); break;
      case 5:
        if (!s.empty() && pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
          s[pos] = static_cast<char>('0' + rng.below(10));
        }
        break;
      default: s.insert(pos, std::string(1 + rng.below(3), "(){}[]"[rng.below(6)])); break;
    }
  }
  return s;
}

inline bool spans_valid(const std::vector<Diagnostic>& ds) {
  return std::all_of(ds.begin(), ds.end(), [](const Diagnostic& d) { return d.span.line >= 1 && d.span.column >= 1; });
}

/// Drives a model text as far through the pipeline as it gets. Returns a description of
/// the finding, or nullopt.
inline std::optional<std::string> exercise_model(const std::string& text, const Deployment& dep, std::uint64_t seed) {
  try {
    ModelDocument doc;
    try {
      doc = parse_model(text);
    } catch (const ParseError& e) {
      if (e.diagnostics().empty() || !spans_valid(e.diagnostics())) return "parse error without a valid span";
      return std::nullopt;
    }
    const ValidationReport rep = validate_model(doc);
    if (!rep.ok()) return std::nullopt;
    for (const auto& cls : doc.classes) {
      try {
        (void)validate_composed(weave(cls));
      } catch (const WeaveError&) {
      }
    }
    Network net;
    try {
      net = instantiate(doc, dep);
    } catch (const std::invalid_argument&) {
      return std::nullopt;  // InstantiationError, WeaveError
    } catch (const ParseError&) {
      return std::nullopt;
    }
    (void)run(net, seed, 5.0, 200);
    return std::nullopt;
  } catch (const std::exception& e) {
    return std::string("unexpected exception: ") + e.what();
  }
}

inline std::optional<std::string> exercise_deployment(const std::string& text, const ModelDocument& doc,
                                                      std::uint64_t seed) {
  try {
    Deployment dep;
    try {
      dep = parse_deployment(text);
    } catch (const ParseError& e) {
      if (e.diagnostics().empty() || !spans_valid(e.diagnostics())) return "parse error without a valid span";
      return std::nullopt;
    }
    Network net;
    try {
      net = instantiate(doc, dep);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    } catch (const ParseError&) {
      return std::nullopt;
    }
    (void)run(net, seed, 5.0, 200);
    return std::nullopt;
  } catch (const std::exception& e) {
    return std::string("unexpected exception: ") + e.what();
  }
}

inline std::optional<std::string> exercise_property(const std::string& text, const Network& net) {
  try {
    MtlFormula f;
    try {
      f = parse_property(text);
    } catch (const ParseError& e) {
      if (e.diagnostics().empty() || !spans_valid(e.diagnostics())) return "parse error without a valid span";
      return std::nullopt;
    }
    const std::string again = to_string(f);
    try {
      (void)parse_property(again);
    } catch (const ParseError&) {
      return "printed property does not parse: " + again;
    }
    try {
      (void)bind(f, net);
    } catch (const ParseError&) {
    }
    return std::nullopt;
  } catch (const std::exception& e) {
    return std::string("unexpected exception: ") + e.what();
  }
}

struct Report {
  std::uint64_t inputs = 0;
  std::uint64_t findings = 0;
  std::string first;
  std::uint64_t first_index = 0;
};

/// `count` inputs spread over models (60%), deployments (25%) and properties (15%); each is
/// a mutated seed, random tokens or random bytes.
inline Report campaign(const std::vector<Seed>& seeds, std::uint64_t count, std::uint64_t base_seed) {
  Report rep;
  // Parsed seed documents for the deployment and property legs.
  std::vector<ModelDocument> docs;
  std::vector<Deployment> deps;
  std::vector<Network> nets;
  for (const auto& s : seeds) {
    docs.push_back(parse_model(s.model));
    deps.push_back(parse_deployment(s.deployment));
    nets.push_back(instantiate(docs.back(), deps.back()));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    RandomStream rng = RandomStream::derive(base_seed, i);
    const std::size_t k = rng.below(seeds.size());
    const auto leg = rng.below(20);
    const auto source = rng.below(10);
    auto make = [&](const std::string& base, std::size_t tokens, std::size_t bytes) {
      if (source < 7) return mutate(base, rng);
      if (source < 9) return random_tokens(rng, tokens);
      return random_bytes(rng, bytes);
    };
    std::optional<std::string> finding;
    if (leg < 12) {
      finding = exercise_model(make(seeds[k].model, 200, 400), deps[k], i);
    } else if (leg < 17) {
      finding = exercise_deployment(make(seeds[k].deployment, 40, 200), docs[k], i);
    } else {
      finding = exercise_property(make(seeds[k].property, 20, 80), nets[k]);
    }
    ++rep.inputs;
    if (finding) {
      if (rep.findings++ == 0) {
        rep.first = *finding;
        rep.first_index = i;
      }
    }
  }
  return rep;
}

}  // namespace fuzz
