#include "cpssv/weaver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "cpssv/numfmt.hpp"

namespace cpssv {

namespace {

bool mentions_reserved(const Expr& e) {
  if (!e) return false;
  if (!e->name.empty() && is_reserved_name(e->name)) return true;
  return std::any_of(e->args.begin(), e->args.end(), [](const Expr& a) { return mentions_reserved(a); });
}

bool mentions_reserved(const Block& b) {
  for (const auto& s : b) {
    if (s->kind == StmtNode::Kind::Assign) {
      if (is_reserved_name(s->target) || mentions_reserved(s->index) || mentions_reserved(s->value)) return true;
    } else if (mentions_reserved(s->condition) || mentions_reserved(s->then_block) || mentions_reserved(s->else_block)) {
      return true;
    }
  }
  return false;
}

Block concat(const Block& a, const Block& b) {
  Block out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::string first_error(const ValidationReport& r) {
  for (const auto& d : r.items) {
    if (d.severity == Severity::Error) return d.message + (d.subject.empty() ? "" : " [" + d.subject + "]");
  }
  return {};
}

Expr predicate_guard(const PredicateState& p) { return p.guard ? p.guard : bool_lit(false); }

}  // namespace

AgentClass weave(const Sta& P, const std::vector<PredicateState>& R, const Sta* I, const Hooks& hooks, std::string name,
                 std::vector<VarDecl> locals) {
  if (P.role != StaRole::Spatial) throw WeaveError("spatial automaton expected, got " + std::string(to_string(P.role)));
  if (auto r = validate_sta(P); !r.ok()) throw WeaveError("spatial automaton invalid: " + first_error(r));

  Sta trivial;
  if (I == nullptr) {
    trivial.role = StaRole::Interaction;
    trivial.states.push_back({kTrivialInteraction, Deterministic{0.0}, std::nullopt, {}, false, {}});
    trivial.initial = kTrivialInteraction;
    trivial.entry = kTrivialInteraction;
    trivial.exit = kTrivialInteraction;
  } else {
    if (I->role != StaRole::Interaction) throw WeaveError("interaction automaton expected, got " + std::string(to_string(I->role)));
    if (!I->entry || !I->exit) throw WeaveError("interaction automaton lacks entry/exit state");
    if (auto r = validate_sta(*I); !r.ok()) throw WeaveError("interaction automaton invalid: " + first_error(r));
    if (!hooks.check_interaction) throw WeaveError("interaction declared but no check_interaction hook");
  }
  const Sta& inter = I ? *I : trivial;

  std::set<std::string> ids;
  auto claim = [&](const std::string& id) {
    if (!ids.insert(id).second) throw WeaveError("state '" + id + "' appears in more than one concern");
  };
  for (const auto& s : P.states) claim(s.id);
  for (const auto& p : R) claim(p.id);
  for (const auto& s : inter.states) claim(s.id);

  std::set<std::string> pred_guards;
  for (const auto& p : R) {
    if (!pred_guards.insert(to_string(predicate_guard(p))).second) {
      throw WeaveError("predicate state '" + p.id + "' repeats another predicate's guard");
    }
    if (mentions_reserved(p.guard) || mentions_reserved(p.on_enter)) throw WeaveError("reserved identifier in predicate '" + p.id + "'");
  }
  for (const Sta* s : {&P, &inter}) {
    for (const auto& t : s->transitions) {
      if (mentions_reserved(t.guard) || mentions_reserved(t.action)) {
        throw WeaveError("reserved identifier in transition " + t.source + "->" + t.target);
      }
    }
  }
  if (mentions_reserved(hooks.check_interaction) || mentions_reserved(hooks.on_move) ||
      mentions_reserved(hooks.on_interaction_entry) || mentions_reserved(hooks.on_interaction_exit) ||
      mentions_reserved(hooks.on_init)) {
    throw WeaveError("reserved identifier in hooks");
  }
  for (const auto& l : locals) {
    if (is_reserved_name(l.name)) throw WeaveError("reserved identifier '" + l.name + "'");
  }

  AgentClass c;
  c.name = std::move(name);
  c.predicate_states = R;
  c.hooks = hooks;
  c.locals = std::move(locals);
  c.locals.push_back({kOriginVar, ScalarType::Int, 0, {Scalar::of_int(-1)}, {}});
  c.spatial_count = P.states.size();
  c.predicate_count = R.size();
  c.interaction_count = inter.states.size();
  c.entry = *inter.entry;
  c.exit = *inter.exit;
  c.trivial_interaction = I == nullptr;

  Sta& C = c.composed;
  C.role = StaRole::Composed;
  C.initial = P.initial;
  C.clocks = P.clocks;
  for (const auto& x : inter.clocks) {
    if (std::find(C.clocks.begin(), C.clocks.end(), x) == C.clocks.end()) C.clocks.push_back(x);
  }
  C.entry = inter.entry;
  C.exit = inter.exit;
  C.states = P.states;
  for (const auto& p : R) C.states.push_back({p.id, Deterministic{0.0}, std::nullopt, {}, false, p.span});
  C.states.insert(C.states.end(), inter.states.begin(), inter.states.end());

  const Expr ci = hooks.check_interaction ? hooks.check_interaction : bool_lit(false);
  std::vector<Expr> not_sf;
  for (const auto& p : R) not_sf.push_back(logical_not(predicate_guard(p)));

  // Family 4: original moves behind the predicate and interaction checks.
  for (const auto& t : P.transitions) {
    StaTransition u = t;
    std::vector<Expr> parts;
    if (t.guard) parts.push_back(t.guard);
    parts.insert(parts.end(), not_sf.begin(), not_sf.end());
    parts.push_back(logical_not(ci));
    u.guard = conjunction(parts);
    u.action = concat(t.action, hooks.on_move);
    C.transitions.push_back(std::move(u));
  }
  C.transitions.insert(C.transitions.end(), inter.transitions.begin(), inter.transitions.end());
  for (std::size_t q = 0; q < P.states.size(); ++q) {
    const std::string& id = P.states[q].id;
    // Family 1: predicate entry.
    for (const auto& p : R) {
      StaTransition u;
      u.source = id;
      u.target = p.id;
      u.guard = predicate_guard(p);
      u.action = p.on_enter;
      u.span = p.span;
      C.transitions.push_back(std::move(u));
    }
    // Family 2: interaction entry, recording the origin.
    {
      StaTransition u;
      u.source = id;
      u.target = c.entry;
      std::vector<Expr> parts{ci};
      parts.insert(parts.end(), not_sf.begin(), not_sf.end());
      u.guard = conjunction(parts);
      u.action = concat({assign(kOriginVar, int_lit(static_cast<std::int64_t>(q)))}, hooks.on_interaction_entry);
      C.transitions.push_back(std::move(u));
    }
    // Family 3: return to the origin.
    {
      StaTransition u;
      u.source = c.exit;
      u.target = id;
      u.guard = binary(BinaryOp::Eq, var(kOriginVar), int_lit(static_cast<std::int64_t>(q)));
      u.action = hooks.on_interaction_exit;
      C.transitions.push_back(std::move(u));
    }
  }
  return c;
}

AgentClass weave(const AgentClassDecl& decl) {
  return weave(decl.spatial, decl.predicates, decl.interaction ? &*decl.interaction : nullptr, decl.hooks, decl.name,
               decl.locals);
}

ValidationReport validate_composed(const AgentClass& c) {
  ValidationReport r;
  const Sta& C = c.composed;
  const std::size_t n = c.spatial_count + c.predicate_count + c.interaction_count;
  if (C.states.size() != n) {
    r.error("composed state count " + std::to_string(C.states.size()) + " does not match its parts (" + std::to_string(n) + ")");
    return r;
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < C.states.size(); ++i) index[C.states[i].id] = i;
  if (index.count(c.entry) == 0 || index.count(c.exit) == 0) r.error("interaction entry/exit missing from composed automaton");
  if (C.states.empty() || C.initial != C.states.front().id) {
    if (index.count(C.initial) == 0 || c.part_of(index.at(C.initial)) != AgentClass::Part::Spatial) {
      r.error("initial state must be a spatial state", C.initial);
    }
  }

  const Expr ci = c.hooks.check_interaction ? c.hooks.check_interaction : bool_lit(false);
  std::vector<Expr> required_not_sf;
  for (const auto& p : c.predicate_states) required_not_sf.push_back(logical_not(predicate_guard(p)));
  auto has_conjunct = [](const std::vector<Expr>& parts, const Expr& want) {
    return std::any_of(parts.begin(), parts.end(), [&](const Expr& e) { return same_expr(e, want); });
  };

  for (const auto& t : C.transitions) {
    const std::string subject = t.source + "->" + t.target;
    auto s = index.find(t.source);
    auto d = index.find(t.target);
    if (s == index.end() || d == index.end()) continue;  // reported by validate_sta below
    const auto from = c.part_of(s->second);
    const auto to = c.part_of(d->second);
    if (from == AgentClass::Part::Predicate) {
      r.error("predicate state '" + t.source + "' is not absorbing", subject, t.span);
      continue;
    }
    if (from != AgentClass::Part::Spatial) continue;
    const std::vector<Expr> parts = t.guard ? conjuncts(t.guard) : std::vector<Expr>{};
    if (to == AgentClass::Part::Spatial) {
      bool ok = has_conjunct(parts, logical_not(ci));
      for (const auto& g : required_not_sf) ok = ok && has_conjunct(parts, g);
      if (!ok) r.error("control-flow guard missing on spatial move", subject, t.span);
    } else if (to == AgentClass::Part::Interaction) {
      if (t.target != c.entry) {
        r.error("spatial state enters interaction at '" + t.target + "' instead of its entry", subject, t.span);
        continue;
      }
      bool ok = true;
      for (const auto& g : conjuncts(ci)) ok = ok && has_conjunct(parts, g);
      for (const auto& g : required_not_sf) ok = ok && has_conjunct(parts, g);
      if (!ok) r.error("control-flow guard missing on interaction entry", subject, t.span);
    }
  }
  for (std::size_t i = c.spatial_count + c.predicate_count; i < n; ++i) {
    const auto& s = C.states[i];
    if (!s.timed && !is_zero_delay(s.delay)) {
      r.warning("interaction state '" + s.id + "' has nonzero delay; excursions are meant to take no time", s.id, s.span);
    }
  }
  ValidationReport base = validate_sta(C);
  for (const auto& d : base.items) {
    if (d.severity == Severity::Error) r.items.push_back(d);
  }
  return r;
}

std::string to_dot(const AgentClass& c) {
  std::ostringstream os;
  auto q = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out += '\\';
      out += ch;
    }
    return out + "\"";
  };
  os << "digraph " << q(c.name) << " {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < c.composed.states.size(); ++i) {
    const auto& s = c.composed.states[i];
    std::string shape = "ellipse";
    switch (c.part_of(i)) {
      case AgentClass::Part::Spatial: shape = "ellipse"; break;
      case AgentClass::Part::Predicate: shape = "doublecircle"; break;
      case AgentClass::Part::Interaction: shape = "box"; break;
    }
    os << "  " << q(s.id) << " [shape=" << shape << ", label=" << q(s.id + "\n" + to_string(s.delay)) << "];\n";
  }
  for (const auto& t : c.composed.transitions) {
    std::string label = guard_key(t.guard);
    if (t.prob != 1.0) label += " [" + format_number(t.prob) + "]";
    os << "  " << q(t.source) << " -> " << q(t.target) << " [label=" << q(label) << "];\n";
  }
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Compilation and instantiation

namespace {

class ClassCompiler {
 public:
  ClassCompiler(CompiledClass& out, const CompileOptions& opt) : out_(out), opt_(opt) {}

  std::uint32_t guard(const Expr& g) {
    const std::string key = guard_key(g);
    if (auto it = guard_ids_.find(key); it != guard_ids_.end()) return it->second;
    std::vector<std::uint32_t> ids;
    if (g) {
      for (const auto& part : conjuncts(g)) ids.push_back(conjunct(part));
    }
    out_.guards.push_back(std::move(ids));
    const auto id = static_cast<std::uint32_t>(out_.guards.size() - 1);
    guard_ids_.emplace(key, id);
    return id;
  }

  std::uint32_t block(const Block& b) {
    if (b.empty()) return kNone;
    out_.blocks.push_back(compile_block(b, out_.symbols, opt_));
    return static_cast<std::uint32_t>(out_.blocks.size() - 1);
  }

 private:
  std::uint32_t conjunct(const Expr& e) {
    const std::string key = to_string(e);
    if (auto it = conjunct_ids_.find(key); it != conjunct_ids_.end()) return it->second;
    out_.conjuncts.push_back(compile_guard(e, out_.symbols, opt_));
    const auto id = static_cast<std::uint32_t>(out_.conjuncts.size() - 1);
    conjunct_ids_.emplace(key, id);
    return id;
  }

  CompiledClass& out_;
  const CompileOptions& opt_;
  std::map<std::string, std::uint32_t> guard_ids_;
  std::map<std::string, std::uint32_t> conjunct_ids_;
};

std::shared_ptr<CompiledClass> compile_class(const ModelDocument& doc, const AgentClassDecl& decl,
                                             const std::vector<std::string>& state_names) {
  auto out = std::make_shared<CompiledClass>();
  out->name = decl.name;
  out->woven = weave(decl);
  const AgentClass& w = out->woven;
  out->symbols = build_symbols(doc, &decl);
  out->origin_slot = out->symbols.add_local(kOriginVar, ScalarType::Int);
  for (const auto& l : w.locals) {
    for (std::uint32_t k = 0; k < l.width(); ++k) out->local_init.push_back(l.initial(k));
  }
  CompileOptions opt;
  opt.allow_reserved = true;
  ClassCompiler cc(*out, opt);

  std::map<std::string, std::uint32_t> index;
  for (std::size_t i = 0; i < w.composed.states.size(); ++i) {
    const auto& s = w.composed.states[i];
    index[s.id] = static_cast<std::uint32_t>(i);
    CompiledState cs;
    cs.id = s.id;
    cs.part = w.part_of(i);
    cs.delay = s.delay;
    cs.cap = s.cap;
    auto it = std::lower_bound(state_names.begin(), state_names.end(), s.id);
    if (it != state_names.end() && *it == s.id) cs.name_id = static_cast<std::uint32_t>(it - state_names.begin());
    out->states.push_back(std::move(cs));
  }
  out->entry = index.at(w.entry);
  out->exit = index.at(w.exit);

  // Transitions grouped by (source, guard text), preserving first-appearance order.
  std::map<std::pair<std::uint32_t, std::string>, std::pair<std::uint32_t, std::size_t>> group_of;
  for (const auto& t : w.composed.transitions) {
    const std::uint32_t src = index.at(t.source);
    const std::uint32_t dst = index.at(t.target);
    CompiledState& s = out->states[src];
    const std::string key = guard_key(t.guard);
    auto found = group_of.find({src, key});
    std::size_t gi = 0;
    if (found == group_of.end()) {
      CompiledGroup g;
      g.guard = cc.guard(t.guard);
      if (s.part == AgentClass::Part::Spatial) {
        const auto to = w.part_of(dst);
        g.tier = to == AgentClass::Part::Predicate ? 0 : to == AgentClass::Part::Interaction ? 1 : 2;
      } else {
        g.tier = 0;
      }
      s.groups.push_back(std::move(g));
      gi = s.groups.size() - 1;
      group_of[{src, key}] = {src, gi};
    } else {
      gi = found->second.second;
    }
    s.groups[gi].transitions.push_back({dst, t.prob, cc.block(t.action)});
  }
  for (auto& s : out->states) {
    std::stable_sort(s.groups.begin(), s.groups.end(),
                     [](const CompiledGroup& a, const CompiledGroup& b) { return a.tier < b.tier; });
  }
  out->on_init = compile_block(w.hooks.on_init, out->symbols, opt);
  return out;
}

Scalar convert(const ConfigValue& v, std::size_t k, ScalarType want, const std::string& name) {
  const Scalar s = v.items[k];
  if (v.type == want) return s;
  if (want == ScalarType::Real && v.type == ScalarType::Int) return Scalar::of_real(static_cast<double>(s.i));
  throw InstantiationError("global '" + name + "' is " + std::string(to_string(want)) + ", deployment gives " +
                           std::string(to_string(v.type)));
}

}  // namespace

int Network::class_index(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i]->name == name) return static_cast<int>(i);
  }
  return -1;
}

int Network::instance_of(std::uint32_t cls, std::uint32_t k) const {
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].cls == cls && instances[i].index_in_class == k) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> spatial_distances(const CompiledClass& cls, const std::vector<std::uint32_t>& sources) {
  const std::size_t n = cls.woven.spatial_count;
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (const auto& g : cls.states[s].groups) {
      for (const auto& t : g.transitions) {
        if (t.target < n) adj[s].push_back(t.target);
      }
    }
  }
  std::vector<int> dist(n, -1);
  std::deque<std::uint32_t> queue;
  for (auto s : sources) {
    if (s < n && dist[s] < 0) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (auto w : adj[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

Network instantiate(const ModelDocument& source, const Deployment& dep) {
  ModelDocument doc;
  try {
    doc = apply_constants(source, dep);
  } catch (const std::invalid_argument& e) {
    throw InstantiationError(e.what());
  }
  if (auto r = validate_model(doc); !r.ok()) throw InstantiationError("model invalid: " + first_error(r));
  if (!(dep.horizon >= 0.0)) throw InstantiationError("horizon must be >= 0");
  if (dep.max_events < 1) throw InstantiationError("max_events must be >= 1");

  Network net;
  net.horizon = dep.horizon;
  net.max_events = dep.max_events;
  net.state_names = state_name_universe(doc);
  net.global_symbols = build_symbols(doc, nullptr);
  for (const auto& cls : doc.classes) net.classes.push_back(compile_class(doc, cls, net.state_names));

  for (const auto& g : doc.globals) {
    for (std::uint32_t k = 0; k < g.width(); ++k) net.globals_init.push_back(g.initial(k));
  }
  for (const auto& [name, v] : dep.globals) {
    const Symbol* s = net.global_symbols.find(name);
    if (s == nullptr || s->kind != Symbol::Kind::Global) throw InstantiationError("deployment sets undeclared global '" + name + "'");
    if (v.items.empty()) throw InstantiationError("empty value for global '" + name + "'");
    if (!v.array || v.items.size() == 1) {
      const Scalar x = convert(v, 0, s->type, name);
      for (std::uint32_t k = 0; k < s->width(); ++k) net.globals_init[s->offset + k] = x;
    } else {
      if (v.items.size() != s->width()) {
        throw InstantiationError("global '" + name + "' has " + std::to_string(s->width()) + " elements, deployment gives " +
                                 std::to_string(v.items.size()));
      }
      for (std::uint32_t k = 0; k < s->width(); ++k) net.globals_init[s->offset + k] = convert(v, k, s->type, name);
    }
  }

  std::int64_t total = 0;
  for (const auto& spec : dep.instances) {
    if (net.class_index(spec.cls) < 0) throw InstantiationError("deployment names unknown class '" + spec.cls + "'");
    if (spec.count <= 0) throw InstantiationError("class '" + spec.cls + "' needs a positive instance count");
    total += spec.count;
    if (total > kMaxInstances) {
      throw InstantiationError("more than " + std::to_string(kMaxInstances) + " instances in the deployment");
    }
  }

  // Initial support (state names) of each class's placement, for near-rules.
  auto support_names = [&](const InstanceSpec& spec) {
    std::vector<std::string> out;
    if (!spec.initial.empty()) out = spec.initial;
    for (const auto& [n, w] : spec.initial_dist) {
      if (w > 0) out.push_back(n);
    }
    if (out.empty()) {
      const auto& cls = net.classes[net.class_index(spec.cls)];
      out.push_back(cls->woven.composed.initial);
    }
    return out;
  };

  for (std::size_t ci = 0; ci < net.classes.size(); ++ci) {
    const auto& cls = *net.classes[ci];
    const InstanceSpec* spec = dep.find(cls.name);
    if (spec == nullptr) continue;
    auto spatial_index = [&](const std::string& id) -> std::uint32_t {
      for (std::uint32_t i = 0; i < cls.woven.spatial_count; ++i) {
        if (cls.states[i].id == id) return i;
      }
      throw InstantiationError("'" + id + "' is not a spatial state of class '" + cls.name + "'");
    };
    std::vector<std::pair<std::uint32_t, double>> dist;
    std::vector<std::uint32_t> fixed;
    if (spec->near) {
      const InstanceSpec* other = dep.find(*spec->near);
      if (other == nullptr) throw InstantiationError("near-rule of '" + cls.name + "' names absent class '" + *spec->near + "'");
      std::vector<std::uint32_t> sources;
      for (const auto& n : support_names(*other)) {
        for (std::uint32_t i = 0; i < cls.woven.spatial_count; ++i) {
          if (cls.states[i].id == n) sources.push_back(i);
        }
      }
      if (sources.empty()) throw InstantiationError("near-rule: no shared locations between '" + cls.name + "' and '" + *spec->near + "'");
      const auto d = spatial_distances(cls, sources);
      for (std::uint32_t i = 0; i < d.size(); ++i) {
        if (d[i] == spec->distance) dist.push_back({i, 1.0});
      }
      if (dist.empty()) {
        throw InstantiationError("impossible distance constraint: no location of '" + cls.name + "' at distance " +
                                 std::to_string(spec->distance) + " from '" + *spec->near + "'");
      }
      for (auto& e : dist) e.second = 1.0 / static_cast<double>(dist.size());
    } else if (!spec->initial.empty()) {
      if (spec->initial.size() != 1 && spec->initial.size() != static_cast<std::size_t>(spec->count)) {
        throw InstantiationError("class '" + cls.name + "': " + std::to_string(spec->initial.size()) +
                                 " initial states for " + std::to_string(spec->count) + " instances");
      }
      for (const auto& id : spec->initial) fixed.push_back(spatial_index(id));
    } else if (!spec->initial_dist.empty()) {
      double total = 0.0;
      for (const auto& [id, w] : spec->initial_dist) {
        if (!(w >= 0.0)) throw InstantiationError("negative initial weight for '" + id + "'");
        dist.push_back({spatial_index(id), w});
        total += w;
      }
      if (std::fabs(total - 1.0) > 1e-9) {
        throw InstantiationError("initial distribution of '" + cls.name + "' sums to " + format_number(total) + ", not 1");
      }
    } else {
      fixed.push_back(spatial_index(cls.woven.composed.initial));
    }
    for (std::int64_t k = 0; k < spec->count; ++k) {
      InstanceInit inst;
      inst.cls = static_cast<std::uint32_t>(ci);
      inst.index_in_class = static_cast<std::uint32_t>(k);
      if (!fixed.empty()) inst.initial.push_back({fixed[fixed.size() == 1 ? 0 : k], 1.0});
      else inst.initial = dist;
      net.instances.push_back(std::move(inst));
    }
  }
  if (net.instances.empty()) throw InstantiationError("deployment creates no agent instances");
  return net;
}

}  // namespace cpssv
