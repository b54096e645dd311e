#include "cpssv/sta.hpp"

#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "cpssv/numfmt.hpp"

namespace cpssv {

std::string_view to_string(StaRole r) {
  switch (r) {
    case StaRole::Spatial: return "spatial";
    case StaRole::Interaction: return "interaction";
    case StaRole::PredicateSet: return "predicate-set";
    case StaRole::Composed: return "composed";
  }
  return "?";
}

int Sta::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::string guard_key(const Expr& guard) { return guard ? to_string(guard) : std::string("true"); }

namespace {

std::vector<bool> reachable_from(const Sta& sta, const std::unordered_map<std::string, int>& index, int start) {
  std::vector<std::vector<int>> adj(sta.states.size());
  for (const auto& t : sta.transitions) {
    auto s = index.find(t.source);
    auto d = index.find(t.target);
    if (s != index.end() && d != index.end()) adj[s->second].push_back(d->second);
  }
  std::vector<bool> seen(sta.states.size(), false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

bool has_cycle(const Sta& sta, const std::unordered_map<std::string, int>& index, std::string* witness) {
  const std::size_t n = sta.states.size();
  std::vector<std::vector<int>> adj(n);
  for (const auto& t : sta.transitions) {
    auto s = index.find(t.source);
    auto d = index.find(t.target);
    if (s != index.end() && d != index.end()) adj[s->second].push_back(d->second);
  }
  // iterative three-colour DFS
  std::vector<int> colour(n, 0);
  for (std::size_t root = 0; root < n; ++root) {
    if (colour[root] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(root), 0}};
    colour[root] = 1;
    while (!stack.empty()) {
      auto& [v, k] = stack.back();
      if (k < adj[v].size()) {
        const int w = adj[v][k++];
        if (colour[w] == 1) {
          *witness = sta.states[w].id;
          return true;
        }
        if (colour[w] == 0) {
          colour[w] = 1;
          stack.push_back({w, 0});
        }
      } else {
        colour[v] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

}  // namespace

ValidationReport validate_sta(const Sta& sta) {
  ValidationReport r;
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < sta.states.size(); ++i) {
    const StaState& s = sta.states[i];
    if (!index.emplace(s.id, static_cast<int>(i)).second) r.error("duplicate state '" + s.id + "'", s.id, s.span);
    if (auto why = check_distribution(s.delay); !why.empty()) r.error(why, s.id, s.span);
    if (s.cap && !(*s.cap >= 0.0)) r.error("cap must be >= 0", s.id, s.span);
  }
  if (sta.states.empty()) r.error("automaton has no states");

  const bool initial_ok = index.count(sta.initial) != 0;
  if (!initial_ok) r.error("initial state '" + sta.initial + "' is not declared", sta.initial);

  struct Group {
    double mass = 0.0;
    SourceSpan span;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const auto& t : sta.transitions) {
    const std::string subject = t.source + "->" + t.target;
    if (index.count(t.source) == 0) r.error("transition from undeclared state '" + t.source + "'", subject, t.span);
    if (index.count(t.target) == 0) r.error("transition to undeclared state '" + t.target + "'", subject, t.span);
    if (!(t.prob > 0.0 && t.prob <= 1.0)) {
      r.error("transition probability " + format_number(t.prob) + " outside (0, 1]", subject, t.span);
    }
    auto& g = groups[{t.source, guard_key(t.guard)}];
    if (g.mass == 0.0) g.span = t.span;
    g.mass += t.prob;
  }
  for (const auto& [key, g] : groups) {
    if (std::fabs(g.mass - 1.0) > 1e-9) {
      r.error("probability mass " + format_number(g.mass) + " ≠ 1 for guard '" + key.second + "'", key.first, g.span);
    }
  }

  int start = initial_ok ? index.at(sta.initial) : -1;
  if (sta.role == StaRole::Interaction) {
    const bool entry_ok = sta.entry && index.count(*sta.entry) != 0;
    const bool exit_ok = sta.exit && index.count(*sta.exit) != 0;
    if (!sta.entry) r.error("interaction automaton has no entry state");
    else if (!entry_ok) r.error("entry state '" + *sta.entry + "' is not declared", *sta.entry);
    if (!sta.exit) r.error("interaction automaton has no exit state");
    else if (!exit_ok) r.error("exit state '" + *sta.exit + "' is not declared", *sta.exit);
    std::string witness;
    if (has_cycle(sta, index, &witness)) r.error("interaction not guaranteed terminating: cycle through '" + witness + "'", witness);
    if (entry_ok && exit_ok) {
      start = index.at(*sta.entry);
      const auto seen = reachable_from(sta, index, start);
      if (!seen[index.at(*sta.exit)]) r.error("exit state '" + *sta.exit + "' unreachable from entry", *sta.exit);
      std::set<std::string> has_out;
      for (const auto& t : sta.transitions) has_out.insert(t.source);
      if (has_out.count(*sta.exit) != 0) r.error("exit state '" + *sta.exit + "' must not have outgoing transitions", *sta.exit);
      for (std::size_t i = 0; i < sta.states.size(); ++i) {
        const auto& id = sta.states[i].id;
        if (seen[i] && id != *sta.exit && has_out.count(id) == 0) {
          r.error("interaction state '" + id + "' has no way to the exit", id, sta.states[i].span);
        }
      }
    } else {
      start = -1;
    }
  }

  if (start >= 0) {
    const auto seen = reachable_from(sta, index, start);
    for (std::size_t i = 0; i < sta.states.size(); ++i) {
      if (!seen[i]) r.warning("state '" + sta.states[i].id + "' is unreachable", sta.states[i].id, sta.states[i].span);
    }
  }
  return r;
}

double sample_delay(const StaState& state, RandomStream& rng) { return sample_truncated(state.delay, state.cap, rng); }

}  // namespace cpssv
