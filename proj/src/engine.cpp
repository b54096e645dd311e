#include "cpssv/engine.hpp"

#include <algorithm>
#include <cstring>
#include <functional>

#include "json.hpp"

namespace cpssv {

std::string_view to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::None: return "none";
    case TerminalReason::Horizon: return "horizon";
    case TerminalReason::EventCap: return "event-cap";
    case TerminalReason::AllAbsorbed: return "all-absorbed";
    case TerminalReason::Deadlock: return "deadlock";
    case TerminalReason::Fault: return "fault";
    case TerminalReason::Decided: return "decided";
  }
  return "?";
}

void NetworkSnapshot::move(const Network& net, std::uint32_t inst, std::uint32_t to) {
  const std::uint32_t c = net.instances[inst].cls;
  const CompiledClass& cls = *net.classes[c];
  const std::uint32_t from = state[inst];
  if (from != kNone) {
    const CompiledState& s = cls.states[from];
    if (s.name_id != kNone) --name_counts[s.name_id];
    if (s.part == AgentClass::Part::Predicate) --class_predicate_counts[c];
  }
  const CompiledState& t = cls.states[to];
  if (t.name_id != kNone) ++name_counts[t.name_id];
  if (t.part == AgentClass::Part::Predicate) ++class_predicate_counts[c];
  state[inst] = to;
}

void NetworkSnapshot::apply(const Delta& d) {
  for (const Write& w : d) {
    if (w.scope == VarScope::Global) globals[w.slot] = w.value;
  }
}

namespace {

bool same_bits(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(Scalar)) == 0);
}

std::uint32_t pick_weighted(const std::vector<std::pair<std::uint32_t, double>>& choices, RandomStream& rng) {
  if (choices.size() == 1) return choices.front().first;
  const double u = rng.uniform01();
  double acc = 0.0;
  for (const auto& [state, w] : choices) {
    acc += w;
    if (u < acc) return state;
  }
  for (auto it = choices.rbegin(); it != choices.rend(); ++it) {
    if (it->second > 0) return it->first;
  }
  return choices.back().first;
}

}  // namespace

bool RunState::absorbed(std::uint32_t inst) const {
  const auto& cls = *net_->classes[net_->instances[inst].cls];
  return cls.states[snap_.state[inst]].part == AgentClass::Part::Predicate;
}

std::optional<double> RunState::next_time() const {
  if (heap_.empty()) return std::nullopt;
  return heap_.front().time;
}

void RunState::stop(TerminalReason reason) {
  if (terminal_ == TerminalReason::None) terminal_ = reason;
}

void RunState::fail(TerminalReason reason, std::string detail) {
  terminal_ = reason;
  detail_ = std::move(detail);
}

bool RunState::operator==(const RunState& o) const {
  auto heap_eq = [](const std::vector<Pending>& a, const std::vector<Pending>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].time != b[i].time || a[i].inst != b[i].inst) return false;
    }
    return true;
  };
  return net_ == o.net_ && snap_.time == o.snap_.time && snap_.state == o.snap_.state &&
         same_bits(snap_.globals, o.snap_.globals) && snap_.name_counts == o.snap_.name_counts &&
         snap_.class_predicate_counts == o.snap_.class_predicate_counts && departure_ == o.departure_ &&
         same_bits(locals_, o.locals_) && rng_ == o.rng_ && heap_eq(heap_, o.heap_) && events_ == o.events_ &&
         terminal_ == o.terminal_;
}

EvalContext RunState::context(std::uint32_t inst, std::int64_t pos) const {
  EvalContext ctx;
  ctx.globals = snap_.globals.data();
  ctx.locals = locals_.data() + local_offset_[inst];
  ctx.now = snap_.time;
  ctx.self_pos = pos;
  ctx.world = &snap_;
  return ctx;
}

bool RunState::guard_holds(std::uint32_t c, std::uint32_t guard, const EvalContext& ctx) {
  const CompiledClass& cls = *net_->classes[c];
  auto& stamps = memo_stamp_[c];
  auto& values = memo_value_[c];
  for (const std::uint32_t k : cls.guards[guard]) {
    if (stamps[k] != stamp_) {
      stamps[k] = stamp_;
      values[k] = cls.conjuncts[k].test(ctx) ? 1 : 0;
    }
    if (values[k] == 0) return false;
  }
  return true;
}

bool RunState::decide(std::uint32_t inst, std::uint32_t state, std::int64_t pos, std::uint32_t& target,
                      std::uint32_t& action) {
  const std::uint32_t c = net_->instances[inst].cls;
  const CompiledState& s = net_->classes[c]->states[state];
  ++stamp_;
  const EvalContext ctx = context(inst, pos);
  enabled_.clear();
  int tier = -1;
  for (std::uint32_t g = 0; g < s.groups.size(); ++g) {
    const CompiledGroup& group = s.groups[g];
    if (tier >= 0 && group.tier != tier) break;
    if (guard_holds(c, group.guard, ctx)) {
      tier = group.tier;
      enabled_.push_back(g);
    }
  }
  if (enabled_.empty()) return false;
  RandomStream& rng = rng_[inst];
  const CompiledGroup& group = s.groups[enabled_.size() == 1 ? enabled_[0] : enabled_[rng.below(enabled_.size())]];
  const CompiledTransition* chosen = &group.transitions.back();
  if (group.transitions.size() > 1) {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (const auto& t : group.transitions) {
      acc += t.prob;
      if (u < acc) {
        chosen = &t;
        break;
      }
    }
  }
  target = chosen->target;
  action = chosen->action;
  return true;
}

RunState init_run(const Network& net, std::uint64_t seed, double horizon, std::uint64_t max_events) {
  RunState rs;
  rs.net_ = &net;
  rs.horizon_ = horizon < 0 ? net.horizon : horizon;
  rs.max_events_ = max_events == 0 ? net.max_events : max_events;
  const std::size_t n = net.instances.size();
  rs.snap_.time = 0.0;
  rs.snap_.state.assign(n, kNone);
  rs.snap_.globals = net.globals_init;
  rs.snap_.name_counts.assign(net.state_names.size(), 0);
  rs.snap_.class_predicate_counts.assign(net.classes.size(), 0);
  rs.departure_.assign(n, 0.0);
  rs.rng_.reserve(n);
  rs.local_offset_.reserve(n);
  for (std::size_t c = 0; c < net.classes.size(); ++c) {
    rs.memo_stamp_.emplace_back(net.classes[c]->conjuncts.size(), 0);
    rs.memo_value_.emplace_back(net.classes[c]->conjuncts.size(), 0);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const InstanceInit& init = net.instances[i];
    const CompiledClass& cls = *net.classes[init.cls];
    rs.rng_.push_back(RandomStream::derive(seed, i));
    rs.local_offset_.push_back(static_cast<std::uint32_t>(rs.locals_.size()));
    rs.locals_.insert(rs.locals_.end(), cls.local_init.begin(), cls.local_init.end());
    rs.snap_.move(net, i, pick_weighted(init.initial, rs.rng_[i]));
  }
  for (std::uint32_t i = 0; i < n && !rs.done(); ++i) {
    const CompiledClass& cls = *net.classes[net.instances[i].cls];
    if (cls.on_init.empty()) continue;
    rs.scratch_.clear();
    try {
      cls.on_init.run(rs.context(i, rs.snap_.state[i]), rs.scratch_);
    } catch (const EvalFault& f) {
      rs.fail(TerminalReason::Fault, instance_name(net, i) + " on_init: " + f.what());
      break;
    }
    for (const Write& w : rs.scratch_) {
      if (w.scope == VarScope::Global) rs.snap_.globals[w.slot] = w.value;
      else rs.locals_[rs.local_offset_[i] + w.slot] = w.value;
    }
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const CompiledClass& cls = *net.classes[net.instances[i].cls];
    const CompiledState& s = cls.states[rs.snap_.state[i]];
    rs.departure_[i] = sample_truncated(s.delay, s.cap, rs.rng_[i]);
    rs.heap_.push_back({rs.departure_[i], i});
  }
  std::make_heap(rs.heap_.begin(), rs.heap_.end(), std::greater<>());
  return rs;
}

std::optional<TraceEntry> step(RunState& rs) {
  if (rs.done()) return std::nullopt;
  if (rs.heap_.empty()) {
    rs.terminal_ = TerminalReason::AllAbsorbed;
    return std::nullopt;
  }
  if (rs.events_ >= rs.max_events_) {
    rs.terminal_ = TerminalReason::EventCap;
    return std::nullopt;
  }
  const RunState::Pending next = rs.heap_.front();
  if (!(next.time < rs.horizon_)) {
    rs.terminal_ = TerminalReason::Horizon;
    return std::nullopt;
  }
  std::pop_heap(rs.heap_.begin(), rs.heap_.end(), std::greater<>());
  rs.heap_.pop_back();

  const Network& net = *rs.net_;
  const std::uint32_t inst = next.inst;
  const CompiledClass& cls = *net.classes[net.instances[inst].cls];
  rs.snap_.time = next.time;
  ++rs.events_;

  TraceEntry entry;
  entry.time = next.time;
  entry.instance = inst;
  entry.from = rs.snap_.state[inst];
  const std::int64_t origin = entry.from;

  auto execute = [&](std::uint32_t action, std::int64_t pos) {
    if (action == kNone) return;
    rs.scratch_.clear();
    cls.blocks[action].run(rs.context(inst, pos), rs.scratch_);
    for (const Write& w : rs.scratch_) {
      if (w.scope == VarScope::Global) rs.snap_.globals[w.slot] = w.value;
      else rs.locals_[rs.local_offset_[inst] + w.slot] = w.value;
    }
    entry.writes.insert(entry.writes.end(), rs.scratch_.begin(), rs.scratch_.end());
  };
  auto deadlock = [&](std::uint32_t state) {
    rs.fail(TerminalReason::Deadlock, instance_name(net, inst) + " has no enabled transition in state '" +
                                          cls.states[state].id + "' at t=" + std::to_string(rs.snap_.time));
  };

  try {
    std::uint32_t target = 0;
    std::uint32_t action = kNone;
    if (!rs.decide(inst, entry.from, origin, target, action)) {
      deadlock(entry.from);
      return std::nullopt;
    }
    const auto part = cls.states[target].part;
    execute(action, part == AgentClass::Part::Spatial ? static_cast<std::int64_t>(target) : origin);
    rs.snap_.move(net, inst, target);
    double accrued = 0.0;
    if (part == AgentClass::Part::Interaction) {
      // Excursion: entry .. exit and back, all at the current instant.
      std::uint32_t cur = target;
      for (;;) {
        entry.via.push_back(cur);
        const CompiledState& cs = cls.states[cur];
        accrued += sample_truncated(cs.delay, cs.cap, rs.rng_[inst]);
        if (!rs.decide(inst, cur, origin, target, action)) {
          deadlock(cur);
          return std::nullopt;
        }
        execute(action, origin);
        rs.snap_.move(net, inst, target);
        if (cls.states[target].part != AgentClass::Part::Interaction) break;
        cur = target;
      }
    }
    entry.to = target;
    if (cls.states[target].part == AgentClass::Part::Predicate) {
      rs.departure_[inst] = std::numeric_limits<double>::infinity();
    } else {
      const CompiledState& s = cls.states[target];
      rs.departure_[inst] = rs.snap_.time + accrued + sample_truncated(s.delay, s.cap, rs.rng_[inst]);
      rs.heap_.push_back({rs.departure_[inst], inst});
      std::push_heap(rs.heap_.begin(), rs.heap_.end(), std::greater<>());
    }
  } catch (const EvalFault& f) {
    rs.fail(TerminalReason::Fault, instance_name(net, inst) + ": " + f.what());
    return std::nullopt;
  }
  return entry;
}

Trace run(const Network& network, std::uint64_t seed, double horizon, std::uint64_t max_events) {
  RunState rs = init_run(network, seed, horizon, max_events);
  Trace trace;
  trace.network = &network;
  trace.initial = rs.snapshot();
  while (auto e = step(rs)) trace.entries.push_back(std::move(*e));
  trace.terminal = rs.terminal();
  trace.detail = rs.detail();
  trace.end_time = rs.terminal() == TerminalReason::Horizon ? rs.horizon() : rs.clock();
  return trace;
}

std::string instance_name(const Network& net, std::uint32_t inst) {
  const InstanceInit& i = net.instances[inst];
  return net.classes[i.cls]->name + "[" + std::to_string(i.index_in_class) + "]";
}

std::string state_name(const Network& net, std::uint32_t inst, std::uint32_t state) {
  return net.classes[net.instances[inst].cls]->states[state].id;
}

namespace {

nlohmann::json scalar_json(ScalarType t, Scalar v) {
  switch (t) {
    case ScalarType::Int: return v.i;
    case ScalarType::Real: return v.r;
    case ScalarType::Bool: return v.b;
  }
  return nullptr;
}

}  // namespace

void write_trace_ndjson(std::ostream& os, const Trace& trace) {
  const Network& net = *trace.network;
  for (const auto& e : trace.entries) {
    const CompiledClass& cls = *net.classes[net.instances[e.instance].cls];
    nlohmann::ordered_json rec;
    rec["t"] = e.time;
    rec["inst"] = e.instance;
    rec["agent"] = instance_name(net, e.instance);
    rec["from"] = cls.states[e.from].id;
    rec["to"] = cls.states[e.to].id;
    if (!e.via.empty()) {
      auto via = nlohmann::json::array();
      for (auto s : e.via) via.push_back(cls.states[s].id);
      rec["via"] = via;
    }
    nlohmann::ordered_json writes = nlohmann::ordered_json::object();
    for (const Write& w : e.writes) {
      const SymbolTable& sym = w.scope == VarScope::Global ? net.global_symbols : cls.symbols;
      writes[sym.slot_name(w.scope, w.slot)] = scalar_json(sym.slot_type(w.scope, w.slot), w.value);
    }
    rec["writes"] = writes;
    os << rec.dump() << "\n";
  }
  nlohmann::ordered_json end;
  end["terminal"] = std::string(to_string(trace.terminal));
  end["t"] = trace.end_time;
  end["events"] = trace.entries.size();
  if (!trace.detail.empty()) end["detail"] = trace.detail;
  os << end.dump() << "\n";
}

}  // namespace cpssv
