#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cpssv/model.hpp"
#include "cpssv/numfmt.hpp"

namespace cpssv {

const AgentClassDecl* ModelDocument::find_class(std::string_view name) const {
  for (const auto& c : classes) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::shared_ptr<const std::string> file_ptr(std::string name) {
  if (name.empty()) return nullptr;
  return std::make_shared<const std::string>(std::move(name));
}

struct Literal {
  ScalarType type = ScalarType::Int;
  Scalar value;
};

class ModelParser {
 public:
  ModelParser(std::string_view text, std::string file) : cur_(tokenize(text, file_ptr(std::move(file)))) {}

  ModelDocument parse() {
    ModelDocument doc;
    if (cur_.at_end()) cur_.fail("'const', 'globals' or 'agentclass'");
    while (!cur_.at_end()) {
      if (cur_.peek().is_ident("const")) {
        doc.constants.push_back(parse_const());
        declare(doc.constants.back().name, doc.constants.back().span);
        consts_[doc.constants.back().name] = {doc.constants.back().type, doc.constants.back().value};
      } else if (cur_.accept_ident("globals")) {
        cur_.expect("{");
        while (!cur_.accept("}")) {
          doc.globals.push_back(parse_var());
          declare(doc.globals.back().name, doc.globals.back().span);
        }
      } else if (cur_.peek().is_ident("agentclass")) {
        doc.classes.push_back(parse_class());
        if (!class_names_.insert(doc.classes.back().name).second) {
          throw ParseError("duplicate agent class '" + doc.classes.back().name + "'", doc.classes.back().span);
        }
      } else {
        cur_.fail("'const', 'globals' or 'agentclass'");
      }
    }
    return doc;
  }

 private:
  void declare(const std::string& name, const SourceSpan& span) {
    if (is_reserved_name(name)) throw ParseError("reserved identifier '" + name + "'", span);
    if (!names_.insert(name).second) throw ParseError("duplicate name '" + name + "'", span);
  }

  const Token& name_token(std::string_view what) {
    const Token& t = cur_.peek();
    if (t.kind != TokenKind::Ident || is_keyword(t.text)) cur_.fail(what);
    return cur_.next();
  }

  Literal parse_literal() {
    const Token& t = cur_.peek();
    if (t.is_ident("true") || t.is_ident("false")) {
      cur_.next();
      return {ScalarType::Bool, Scalar::of_bool(t.text == "true")};
    }
    bool neg = false;
    if (cur_.peek().is("-")) {
      cur_.next();
      neg = true;
    }
    const Token& n = cur_.peek();
    if (n.kind == TokenKind::Int) {
      cur_.next();
      return {ScalarType::Int, Scalar::of_int(neg ? -n.int_value : n.int_value)};
    }
    if (n.kind == TokenKind::Real) {
      cur_.next();
      return {ScalarType::Real, Scalar::of_real(neg ? -n.real_value : n.real_value)};
    }
    if (n.kind == TokenKind::Ident && consts_.count(n.text) != 0) {
      cur_.next();
      Literal l = consts_.at(n.text);
      if (neg) {
        if (l.type == ScalarType::Bool) cur_.fail_at(n, "type error: cannot negate bool constant");
        if (l.type == ScalarType::Int) l.value.i = -l.value.i;
        else l.value.r = -l.value.r;
      }
      return l;
    }
    cur_.fail("literal");
  }

  ConstDecl parse_const() {
    const Token& kw = cur_.expect_ident("const");
    ConstDecl c;
    c.span = kw.span;
    c.name = name_token("constant name").text;
    cur_.expect("=");
    const Literal l = parse_literal();
    c.type = l.type;
    c.value = l.value;
    cur_.expect(";");
    return c;
  }

  ScalarType parse_type() {
    const Token& t = cur_.peek();
    if (t.is_ident("int")) {
      cur_.next();
      return ScalarType::Int;
    }
    if (t.is_ident("real")) {
      cur_.next();
      return ScalarType::Real;
    }
    if (t.is_ident("bool")) {
      cur_.next();
      return ScalarType::Bool;
    }
    cur_.fail("type ('int', 'real' or 'bool')");
  }

  Scalar coerce(const Literal& l, ScalarType want, const Token& at) {
    if (l.type == want) return l.value;
    if (want == ScalarType::Real && l.type == ScalarType::Int) return Scalar::of_real(static_cast<double>(l.value.i));
    cur_.fail_at(at, "type error: cannot initialise " + std::string(to_string(want)) + " with " +
                         std::string(to_string(l.type)));
  }

  VarDecl parse_var() {
    VarDecl v;
    const Token& first = cur_.peek();
    v.type = parse_type();
    const Token& name = name_token("variable name");
    v.name = name.text;
    v.span = name.span;
    if (cur_.accept("[")) {
      const Token& st = cur_.peek();
      std::int64_t size = 0;
      if (st.kind == TokenKind::Int) {
        size = st.int_value;
        cur_.next();
      } else if (st.kind == TokenKind::Ident && consts_.count(st.text) != 0 && consts_.at(st.text).type == ScalarType::Int) {
        size = consts_.at(st.text).value.i;
        cur_.next();
      } else {
        cur_.fail("array size");
      }
      if (size < 1 || size > 1000000) cur_.fail_at(st, "array size must be between 1 and 1000000");
      v.size = static_cast<std::uint32_t>(size);
      cur_.expect("]");
    }
    (void)first;
    if (cur_.accept("=")) {
      if (v.size > 0) {
        cur_.expect("{");
        if (!cur_.peek().is("}")) {
          do {
            const Token& at = cur_.peek();
            v.init.push_back(coerce(parse_literal(), v.type, at));
          } while (cur_.accept(","));
        }
        const Token& close = cur_.expect("}");
        if (v.init.size() == 1 && v.size > 1) {
          v.init.assign(v.size, v.init.front());
        } else if (v.init.size() != v.size) {
          cur_.fail_at(close, "array '" + v.name + "' has " + std::to_string(v.size) + " elements but " +
                                  std::to_string(v.init.size()) + " initialisers");
        }
      } else {
        const Token& at = cur_.peek();
        v.init.push_back(coerce(parse_literal(), v.type, at));
      }
    }
    cur_.expect(";");
    bool all_zero = true;
    for (const auto& s : v.init) all_zero = all_zero && s.i == 0;
    if (all_zero) v.init.clear();
    return v;
  }

  Distribution parse_dist() {
    const Token& t = cur_.peek();
    if (t.is_ident("exp")) {
      cur_.next();
      cur_.expect("(");
      const double r = cur_.expect_number();
      cur_.expect(")");
      return Exponential{r};
    }
    if (t.is_ident("uniform")) {
      cur_.next();
      cur_.expect("(");
      const double a = cur_.expect_number();
      cur_.expect(",");
      const double b = cur_.expect_number();
      cur_.expect(")");
      return Uniform{a, b};
    }
    if (t.is_ident("det")) {
      cur_.next();
      cur_.expect("(");
      const double d = cur_.expect_number();
      cur_.expect(")");
      return Deterministic{d};
    }
    cur_.fail("distribution ('exp', 'uniform' or 'det')");
  }

  StaState parse_state() {
    cur_.expect_ident("state");
    const Token& name = name_token("state name");
    StaState s;
    s.id = name.text;
    s.span = name.span;
    if (cur_.accept_ident("delay")) {
      const Token& at = cur_.peek();
      s.delay = parse_dist();
      if (auto why = check_distribution(s.delay); !why.empty()) cur_.fail_at(at, why);
    }
    if (cur_.accept_ident("cap")) {
      const Token& at = cur_.peek();
      s.cap = cur_.expect_number();
      if (*s.cap < 0) cur_.fail_at(at, "cap must be >= 0");
    }
    if (cur_.accept_ident("timed")) s.timed = true;
    if (cur_.accept_ident("labels")) {
      s.labels.push_back(name_token("label").text);
      while (cur_.peek().kind == TokenKind::Ident && !is_keyword(cur_.peek().text)) s.labels.push_back(cur_.next().text);
    }
    return s;
  }

  struct PendingRef {
    std::string name;
    SourceSpan span;
  };

  StaTransition parse_transition(std::vector<PendingRef>& refs) {
    const Token& on = cur_.expect_ident("on");
    StaTransition t;
    t.span = on.span;
    const Token& src = name_token("source state");
    t.source = src.text;
    refs.push_back({src.text, src.span});
    cur_.expect("->");
    const Token& dst = name_token("target state");
    t.target = dst.text;
    refs.push_back({dst.text, dst.span});
    if (cur_.accept_ident("guard")) t.guard = parse_expression(cur_);
    if (cur_.accept_ident("prob")) t.prob = cur_.expect_number();
    if (cur_.accept_ident("do")) t.action = parse_block(cur_);
    return t;
  }

  void check_refs(const Sta& sta, const std::vector<PendingRef>& refs) {
    for (const auto& r : refs) {
      if (sta.index_of(r.name) < 0) throw ParseError("undeclared state '" + r.name + "'", r.span);
    }
  }

  void check_unique_states(const Sta& sta) {
    std::set<std::string> seen;
    for (const auto& s : sta.states) {
      if (!seen.insert(s.id).second) throw ParseError("duplicate state '" + s.id + "'", s.span);
    }
  }

  Sta parse_spatial() {
    cur_.expect_ident("spatial");
    cur_.expect("{");
    Sta sta;
    sta.role = StaRole::Spatial;
    std::vector<PendingRef> refs;
    if (cur_.accept_ident("initial")) {
      const Token& t = name_token("initial state");
      sta.initial = t.text;
      refs.push_back({t.text, t.span});
    }
    if (!cur_.peek().is_ident("state")) cur_.fail("'state'");
    while (cur_.peek().is_ident("state")) sta.states.push_back(parse_state());
    while (cur_.peek().is_ident("on")) sta.transitions.push_back(parse_transition(refs));
    cur_.expect("}");
    if (sta.initial.empty()) sta.initial = sta.states.front().id;
    check_unique_states(sta);
    check_refs(sta, refs);
    return sta;
  }

  Sta parse_interaction() {
    cur_.expect_ident("interaction");
    cur_.expect("{");
    Sta sta;
    sta.role = StaRole::Interaction;
    std::vector<PendingRef> refs;
    cur_.expect_ident("entry");
    const Token& e = name_token("entry state");
    sta.entry = e.text;
    refs.push_back({e.text, e.span});
    cur_.expect_ident("exit");
    const Token& x = name_token("exit state");
    sta.exit = x.text;
    refs.push_back({x.text, x.span});
    while (cur_.peek().is_ident("state")) sta.states.push_back(parse_state());
    while (cur_.peek().is_ident("on")) sta.transitions.push_back(parse_transition(refs));
    cur_.expect("}");
    sta.initial = *sta.entry;
    check_unique_states(sta);
    check_refs(sta, refs);
    return sta;
  }

  std::vector<PredicateState> parse_predicates() {
    cur_.expect_ident("predicates");
    cur_.expect("{");
    std::vector<PredicateState> out;
    while (!cur_.accept("}")) {
      PredicateState p;
      if (cur_.accept_ident("success")) p.kind = PredicateKind::Success;
      else if (cur_.accept_ident("failure")) p.kind = PredicateKind::Failure;
      else cur_.fail("'success', 'failure' or '}'");
      const Token& name = name_token("predicate state name");
      p.id = name.text;
      p.span = name.span;
      cur_.expect_ident("when");
      p.guard = parse_expression(cur_);
      if (cur_.accept_ident("do")) p.on_enter = parse_block(cur_);
      out.push_back(std::move(p));
    }
    return out;
  }

  Hooks parse_hooks() {
    cur_.expect_ident("hooks");
    cur_.expect("{");
    Hooks h;
    std::set<std::string> seen;
    while (!cur_.accept("}")) {
      const Token& t = cur_.peek();
      if (t.kind != TokenKind::Ident) cur_.fail("hook name or '}'");
      const std::string name = t.text;
      if (name != "on_move" && name != "check_interaction" && name != "on_interaction_entry" &&
          name != "on_interaction_exit" && name != "on_init") {
        cur_.fail("hook name ('on_move', 'check_interaction', 'on_interaction_entry', 'on_interaction_exit', 'on_init')");
      }
      cur_.next();
      if (!seen.insert(name).second) cur_.fail_at(t, "duplicate hook '" + name + "'");
      if (name == "check_interaction") h.check_interaction = parse_expression(cur_);
      else if (name == "on_move") h.on_move = parse_block(cur_);
      else if (name == "on_interaction_entry") h.on_interaction_entry = parse_block(cur_);
      else if (name == "on_interaction_exit") h.on_interaction_exit = parse_block(cur_);
      else h.on_init = parse_block(cur_);
    }
    return h;
  }

  AgentClassDecl parse_class() {
    cur_.expect_ident("agentclass");
    const Token& name = name_token("class name");
    AgentClassDecl c;
    c.name = name.text;
    c.span = name.span;
    if (is_reserved_name(c.name)) throw ParseError("reserved identifier '" + c.name + "'", c.span);
    cur_.expect("{");
    std::set<std::string> local_names;
    if (cur_.accept_ident("locals")) {
      cur_.expect("{");
      while (!cur_.accept("}")) {
        c.locals.push_back(parse_var());
        const auto& v = c.locals.back();
        if (is_reserved_name(v.name)) throw ParseError("reserved identifier '" + v.name + "'", v.span);
        if (names_.count(v.name) != 0 || !local_names.insert(v.name).second) {
          throw ParseError("duplicate name '" + v.name + "'", v.span);
        }
      }
    }
    c.spatial = parse_spatial();
    if (cur_.peek().is_ident("interaction")) c.interaction = parse_interaction();
    if (cur_.peek().is_ident("predicates")) c.predicates = parse_predicates();
    if (cur_.peek().is_ident("hooks")) c.hooks = parse_hooks();
    if (!cur_.peek().is("}")) cur_.fail("'interaction', 'predicates', 'hooks' or '}'");
    cur_.next();
    return c;
  }

  TokenCursor cur_;
  std::set<std::string> names_;
  std::set<std::string> class_names_;
  std::map<std::string, Literal> consts_;
};

// Type checking of all scripts in a document.
void check_scripts(const ModelDocument& doc, ValidationReport& report) {
  for (const auto& cls : doc.classes) {
    SymbolTable sym;
    try {
      sym = build_symbols(doc, &cls);
    } catch (const std::exception& e) {
      report.error(e.what(), cls.name, cls.span);
      continue;
    }
    auto guard = [&](const Expr& e, const std::string& subject) {
      if (!e) return;
      try {
        compile_guard(e, sym);
      } catch (const ParseError& err) {
        for (const auto& d : err.diagnostics()) report.error(d.message, subject, d.span);
      }
    };
    auto block = [&](const Block& b, const std::string& subject) {
      try {
        compile_block(b, sym);
      } catch (const ParseError& err) {
        for (const auto& d : err.diagnostics()) report.error(d.message, subject, d.span);
      }
    };
    auto sta = [&](const Sta& s) {
      for (const auto& t : s.transitions) {
        guard(t.guard, t.source + "->" + t.target);
        block(t.action, t.source + "->" + t.target);
      }
    };
    sta(cls.spatial);
    if (cls.interaction) sta(*cls.interaction);
    for (const auto& p : cls.predicates) {
      guard(p.guard, p.id);
      block(p.on_enter, p.id);
    }
    guard(cls.hooks.check_interaction, cls.name + ".check_interaction");
    block(cls.hooks.on_move, cls.name + ".on_move");
    block(cls.hooks.on_interaction_entry, cls.name + ".on_interaction_entry");
    block(cls.hooks.on_interaction_exit, cls.name + ".on_interaction_exit");
    block(cls.hooks.on_init, cls.name + ".on_init");
  }
}

}  // namespace

std::vector<std::string> state_name_universe(const ModelDocument& doc) {
  std::set<std::string> names;
  for (const auto& c : doc.classes) {
    for (const auto& s : c.spatial.states) names.insert(s.id);
    if (c.interaction) {
      for (const auto& s : c.interaction->states) names.insert(s.id);
    }
    for (const auto& p : c.predicates) names.insert(p.id);
  }
  return {names.begin(), names.end()};
}

SymbolTable build_symbols(const ModelDocument& doc, const AgentClassDecl* cls) {
  SymbolTable sym;
  for (const auto& c : doc.constants) sym.add_constant(c.name, c.type, c.value);
  for (const auto& g : doc.globals) sym.add_global(g.name, g.type, g.size);
  if (cls != nullptr) {
    for (const auto& l : cls->locals) sym.add_local(l.name, l.type, l.size);
  }
  const auto names = state_name_universe(doc);
  for (std::size_t i = 0; i < names.size(); ++i) sym.add_state_name(names[i], static_cast<std::uint32_t>(i));
  return sym;
}

ModelDocument parse_model(std::string_view text, std::string file_name) {
  ModelParser parser(text, std::move(file_name));
  ModelDocument doc = parser.parse();
  ValidationReport types;
  check_scripts(doc, types);
  if (!types.ok()) {
    std::vector<Diagnostic> errors;
    for (const auto& d : types.items) {
      if (d.severity == Severity::Error) errors.push_back(d);
    }
    throw ParseError(std::move(errors));
  }
  return doc;
}

ValidationReport validate_model(const ModelDocument& doc) {
  ValidationReport r;
  check_scripts(doc, r);
  if (doc.classes.empty()) r.error("model declares no agent class");
  for (const auto& cls : doc.classes) {
    ValidationReport s = validate_sta(cls.spatial);
    for (auto& d : s.items) d.subject = cls.name + "." + d.subject;
    r.append(s);
    std::set<std::string> ids;
    for (const auto& st : cls.spatial.states) ids.insert(st.id);
    const bool nontrivial_interaction = cls.interaction.has_value();
    if (cls.interaction) {
      ValidationReport i = validate_sta(*cls.interaction);
      for (auto& d : i.items) d.subject = cls.name + "." + d.subject;
      r.append(i);
      for (const auto& st : cls.interaction->states) {
        if (!ids.insert(st.id).second) {
          r.error("state '" + st.id + "' declared in more than one concern", cls.name + "." + st.id, st.span);
        }
        if (!st.timed && !is_zero_delay(st.delay)) {
          r.warning("interaction state '" + st.id + "' has nonzero delay without 'timed'", cls.name + "." + st.id, st.span);
        }
      }
    }
    std::map<std::string, std::string> guards;
    for (const auto& p : cls.predicates) {
      if (!ids.insert(p.id).second) {
        r.error("state '" + p.id + "' declared in more than one concern", cls.name + "." + p.id, p.span);
      }
      const std::string key = p.guard ? to_string(p.guard) : "false";
      if (auto [it, fresh] = guards.emplace(key, p.id); !fresh) {
        r.error("predicate states '" + it->second + "' and '" + p.id + "' share the guard '" + key + "'",
                cls.name + "." + p.id, p.span);
      }
    }
    if (nontrivial_interaction && !cls.hooks.check_interaction) {
      r.error("interaction declared but no check_interaction hook", cls.name, cls.span);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string literal_text(ScalarType t, Scalar v) { return format_value(t, v); }

void write_var(std::ostream& os, const VarDecl& v, const std::string& pad) {
  os << pad << to_string(v.type) << " " << v.name;
  if (v.size > 0) os << "[" << v.size << "]";
  if (!v.init.empty()) {
    os << " = ";
    if (v.size > 0) {
      os << "{";
      for (std::uint32_t k = 0; k < v.size; ++k) os << (k ? ", " : "") << literal_text(v.type, v.initial(k));
      os << "}";
    } else {
      os << literal_text(v.type, v.init.front());
    }
  }
  os << ";\n";
}

void write_state(std::ostream& os, const StaState& s, const std::string& pad) {
  os << pad << "state " << s.id << " delay " << to_string(s.delay);
  if (s.cap) os << " cap " << format_number(*s.cap);
  if (s.timed) os << " timed";
  if (!s.labels.empty()) {
    os << " labels";
    for (const auto& l : s.labels) os << " " << l;
  }
  os << "\n";
}

void write_transition(std::ostream& os, const StaTransition& t, const std::string& pad, int indent) {
  os << pad << "on " << t.source << " -> " << t.target;
  if (t.guard) os << " guard " << to_string(t.guard);
  if (t.prob != 1.0) os << " prob " << format_number(t.prob);
  if (!t.action.empty()) os << " do " << to_string(t.action, indent);
  os << "\n";
}

}  // namespace

std::string serialize_model(const ModelDocument& doc) {
  std::ostringstream os;
  for (const auto& c : doc.constants) os << "const " << c.name << " = " << literal_text(c.type, c.value) << ";\n";
  if (!doc.constants.empty()) os << "\n";
  if (!doc.globals.empty()) {
    os << "globals {\n";
    for (const auto& g : doc.globals) write_var(os, g, "  ");
    os << "}\n\n";
  }
  for (std::size_t ci = 0; ci < doc.classes.size(); ++ci) {
    const auto& c = doc.classes[ci];
    if (ci > 0) os << "\n";
    os << "agentclass " << c.name << " {\n";
    if (!c.locals.empty()) {
      os << "  locals {\n";
      for (const auto& l : c.locals) write_var(os, l, "    ");
      os << "  }\n";
    }
    os << "  spatial {\n";
    os << "    initial " << c.spatial.initial << "\n";
    for (const auto& s : c.spatial.states) write_state(os, s, "    ");
    for (const auto& t : c.spatial.transitions) write_transition(os, t, "    ", 2);
    os << "  }\n";
    if (c.interaction) {
      os << "  interaction {\n";
      os << "    entry " << c.interaction->entry.value_or("") << " exit " << c.interaction->exit.value_or("") << "\n";
      for (const auto& s : c.interaction->states) write_state(os, s, "    ");
      for (const auto& t : c.interaction->transitions) write_transition(os, t, "    ", 2);
      os << "  }\n";
    }
    if (!c.predicates.empty()) {
      os << "  predicates {\n";
      for (const auto& p : c.predicates) {
        os << "    " << (p.kind == PredicateKind::Success ? "success " : "failure ") << p.id << " when "
           << (p.guard ? to_string(p.guard) : std::string("false"));
        if (!p.on_enter.empty()) os << " do " << to_string(p.on_enter, 2);
        os << "\n";
      }
      os << "  }\n";
    }
    const Hooks& h = c.hooks;
    if (!h.on_move.empty() || h.check_interaction || !h.on_interaction_entry.empty() || !h.on_interaction_exit.empty() ||
        !h.on_init.empty()) {
      os << "  hooks {\n";
      if (!h.on_init.empty()) os << "    on_init " << to_string(h.on_init, 2) << "\n";
      if (!h.on_move.empty()) os << "    on_move " << to_string(h.on_move, 2) << "\n";
      if (h.check_interaction) os << "    check_interaction " << to_string(h.check_interaction) << "\n";
      if (!h.on_interaction_entry.empty()) os << "    on_interaction_entry " << to_string(h.on_interaction_entry, 2) << "\n";
      if (!h.on_interaction_exit.empty()) os << "    on_interaction_exit " << to_string(h.on_interaction_exit, 2) << "\n";
      os << "  }\n";
    }
    os << "}\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Structural equality

namespace {

bool same_scalars(ScalarType t, const std::vector<Scalar>& a, const std::vector<Scalar>& b, std::uint32_t width) {
  for (std::uint32_t k = 0; k < width; ++k) {
    const Scalar x = k < a.size() ? a[k] : Scalar{};
    const Scalar y = k < b.size() ? b[k] : Scalar{};
    if (!same_value(t, x, y)) return false;
  }
  return true;
}

bool same_var(const VarDecl& a, const VarDecl& b) {
  return a.name == b.name && a.type == b.type && a.size == b.size && same_scalars(a.type, a.init, b.init, a.width());
}

bool same_state(const StaState& a, const StaState& b) {
  return a.id == b.id && a.delay == b.delay && a.cap == b.cap && a.labels == b.labels && a.timed == b.timed;
}

bool same_transition(const StaTransition& a, const StaTransition& b) {
  return a.source == b.source && a.target == b.target && same_expr(a.guard, b.guard) && a.prob == b.prob &&
         same_block(a.action, b.action);
}

bool same_sta(const Sta& a, const Sta& b) {
  if (a.role != b.role || a.initial != b.initial || a.clocks != b.clocks || a.entry != b.entry || a.exit != b.exit) return false;
  if (a.states.size() != b.states.size() || a.transitions.size() != b.transitions.size()) return false;
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    if (!same_state(a.states[i], b.states[i])) return false;
  }
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    if (!same_transition(a.transitions[i], b.transitions[i])) return false;
  }
  return true;
}

bool same_class(const AgentClassDecl& a, const AgentClassDecl& b) {
  if (a.name != b.name || a.locals.size() != b.locals.size() || a.predicates.size() != b.predicates.size()) return false;
  for (std::size_t i = 0; i < a.locals.size(); ++i) {
    if (!same_var(a.locals[i], b.locals[i])) return false;
  }
  if (!same_sta(a.spatial, b.spatial)) return false;
  if (a.interaction.has_value() != b.interaction.has_value()) return false;
  if (a.interaction && !same_sta(*a.interaction, *b.interaction)) return false;
  for (std::size_t i = 0; i < a.predicates.size(); ++i) {
    const auto& p = a.predicates[i];
    const auto& q = b.predicates[i];
    if (p.id != q.id || p.kind != q.kind || !same_expr(p.guard, q.guard) || !same_block(p.on_enter, q.on_enter)) return false;
  }
  const Hooks& h = a.hooks;
  const Hooks& k = b.hooks;
  return same_block(h.on_move, k.on_move) && same_expr(h.check_interaction, k.check_interaction) &&
         same_block(h.on_interaction_entry, k.on_interaction_entry) &&
         same_block(h.on_interaction_exit, k.on_interaction_exit) && same_block(h.on_init, k.on_init);
}

}  // namespace

bool structurally_equal(const ModelDocument& a, const ModelDocument& b) {
  if (a.constants.size() != b.constants.size() || a.globals.size() != b.globals.size() ||
      a.classes.size() != b.classes.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.constants.size(); ++i) {
    const auto& x = a.constants[i];
    const auto& y = b.constants[i];
    if (x.name != y.name || x.type != y.type || !same_value(x.type, x.value, y.value)) return false;
  }
  for (std::size_t i = 0; i < a.globals.size(); ++i) {
    if (!same_var(a.globals[i], b.globals[i])) return false;
  }
  for (std::size_t i = 0; i < a.classes.size(); ++i) {
    if (!same_class(a.classes[i], b.classes[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Deployment

bool operator==(const ConfigValue& a, const ConfigValue& b) {
  if (a.type != b.type || a.array != b.array || a.items.size() != b.items.size()) return false;
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    if (!same_value(a.type, a.items[i], b.items[i])) return false;
  }
  return true;
}

std::string to_string(const ConfigValue& v) {
  if (!v.array) return v.items.empty() ? "0" : format_value(v.type, v.items.front());
  std::string s = "[";
  for (std::size_t i = 0; i < v.items.size(); ++i) {
    if (i) s += ", ";
    s += format_value(v.type, v.items[i]);
  }
  return s + "]";
}

InstanceSpec* Deployment::find(std::string_view cls) {
  for (auto& i : instances) {
    if (i.cls == cls) return &i;
  }
  return nullptr;
}

const InstanceSpec* Deployment::find(std::string_view cls) const {
  for (const auto& i : instances) {
    if (i.cls == cls) return &i;
  }
  return nullptr;
}

namespace {

std::string strip_hash_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  bool in_comment = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_comment) {
      if (c == '\n') {
        in_comment = false;
        out += c;
      } else {
        out += ' ';
      }
      continue;
    }
    if (in_string) {
      if (c == '\\' && i + 1 < text.size()) {
        out += c;
        out += text[++i];
        continue;
      }
      if (c == '"' || c == '\n') in_string = false;
      out += c;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == '#') {
      in_comment = true;
      out += ' ';
      continue;
    }
    out += c;
  }
  return out;
}

class DeploymentParser {
 public:
  DeploymentParser(std::string_view text, std::string file)
      : cur_(tokenize(strip_hash_comments(text), file_ptr(std::move(file)))) {}

  Deployment parse() {
    Deployment d;
    enum class Table { Top, Instance, Globals, Constants } table = Table::Top;
    InstanceSpec* inst = nullptr;
    std::set<std::string> seen_keys;
    std::set<std::string> seen_tables;
    while (!cur_.at_end()) {
      if (cur_.accept("[")) {
        const Token& first = cur_.expect_identifier("table name");
        std::string header = first.text;
        if (first.text == "instances") {
          cur_.expect(".");
          const Token& cls = cur_.expect_identifier("class name");
          header += "." + cls.text;
          d.instances.push_back({});
          inst = &d.instances.back();
          inst->cls = cls.text;
          table = Table::Instance;
        } else if (first.text == "globals") {
          table = Table::Globals;
        } else if (first.text == "constants") {
          table = Table::Constants;
        } else {
          cur_.fail_at(first, "unknown table '" + first.text + "' (expected instances.<class>, globals or constants)");
        }
        if (!seen_tables.insert(header).second) cur_.fail_at(first, "duplicate table [" + header + "]");
        cur_.expect("]");
        seen_keys.clear();
        continue;
      }
      const Token& key = cur_.expect_identifier("key or '['");
      if (!seen_keys.insert(key.text).second) cur_.fail_at(key, "duplicate key '" + key.text + "'");
      cur_.expect("=");
      switch (table) {
        case Table::Top:
          top_key(d, key);
          break;
        case Table::Instance:
          instance_key(*inst, key);
          break;
        case Table::Globals:
          d.globals[key.text] = value();
          break;
        case Table::Constants: {
          const ConfigValue v = value();
          if (v.array) cur_.fail_at(key, "constant override must be a scalar");
          d.constants[key.text] = v;
          break;
        }
      }
    }
    for (const auto& i : d.instances) {
      if (std::count_if(d.instances.begin(), d.instances.end(), [&](const InstanceSpec& o) { return o.cls == i.cls; }) > 1) {
        throw ParseError("class '" + i.cls + "' listed twice", {});
      }
    }
    return d;
  }

 private:
  double number() {
    const Token& at = cur_.peek();
    const ConfigValue v = value();
    if (v.array || v.type == ScalarType::Bool) cur_.fail_at(at, "expected a number");
    return v.type == ScalarType::Int ? static_cast<double>(v.items[0].i) : v.items[0].r;
  }

  std::int64_t integer() {
    const Token& at = cur_.peek();
    const ConfigValue v = value();
    if (v.array || v.type != ScalarType::Int) cur_.fail_at(at, "expected an integer");
    return v.items[0].i;
  }

  std::string string_value() {
    const Token& t = cur_.peek();
    if (t.kind != TokenKind::String) cur_.fail("string");
    return cur_.next().text;
  }

  Scalar scalar(ScalarType* type) {
    const Token& t = cur_.peek();
    if (t.is_ident("true") || t.is_ident("false")) {
      cur_.next();
      *type = ScalarType::Bool;
      return Scalar::of_bool(t.text == "true");
    }
    bool neg = cur_.accept("-");
    const Token& n = cur_.peek();
    if (n.kind == TokenKind::Int) {
      cur_.next();
      *type = ScalarType::Int;
      return Scalar::of_int(neg ? -n.int_value : n.int_value);
    }
    if (n.kind == TokenKind::Real) {
      cur_.next();
      *type = ScalarType::Real;
      return Scalar::of_real(neg ? -n.real_value : n.real_value);
    }
    cur_.fail("value");
  }

  ConfigValue value() {
    ConfigValue v;
    if (cur_.accept("[")) {
      v.array = true;
      bool any_real = false;
      bool any_bool = false;
      std::vector<ScalarType> types;
      if (!cur_.peek().is("]")) {
        do {
          if (cur_.peek().is("]")) break;  // trailing comma
          ScalarType t{};
          v.items.push_back(scalar(&t));
          types.push_back(t);
          any_real = any_real || t == ScalarType::Real;
          any_bool = any_bool || t == ScalarType::Bool;
        } while (cur_.accept(","));
      }
      const Token& close = cur_.expect("]");
      if (any_bool && (any_real || std::count(types.begin(), types.end(), ScalarType::Int) > 0)) {
        cur_.fail_at(close, "mixed bool and number array");
      }
      v.type = any_bool ? ScalarType::Bool : any_real ? ScalarType::Real : ScalarType::Int;
      if (v.type == ScalarType::Real) {
        for (std::size_t i = 0; i < v.items.size(); ++i) {
          if (types[i] == ScalarType::Int) v.items[i] = Scalar::of_real(static_cast<double>(v.items[i].i));
        }
      }
      return v;
    }
    ScalarType t{};
    v.items.push_back(scalar(&t));
    v.type = t;
    return v;
  }

  void top_key(Deployment& d, const Token& key) {
    if (key.text == "horizon") {
      d.horizon = number();
      if (!(d.horizon >= 0.0)) cur_.fail_at(key, "horizon must be >= 0");
    } else if (key.text == "max_events") {
      const std::int64_t n = integer();
      if (n < 1) cur_.fail_at(key, "max_events must be >= 1");
      d.max_events = static_cast<std::uint64_t>(n);
    } else if (key.text == "property") {
      d.property = string_value();
    } else {
      cur_.fail_at(key, "unknown key '" + key.text + "' (expected horizon, max_events or property)");
    }
  }

  void instance_key(InstanceSpec& inst, const Token& key) {
    if (key.text == "count") {
      inst.count = integer();
    } else if (key.text == "initial") {
      if (cur_.accept("[")) {
        if (!cur_.peek().is("]")) {
          do {
            if (cur_.peek().is("]")) break;
            inst.initial.push_back(string_value());
          } while (cur_.accept(","));
        }
        cur_.expect("]");
      } else {
        inst.initial.push_back(string_value());
      }
    } else if (key.text == "initial_dist") {
      cur_.expect("{");
      if (!cur_.peek().is("}")) {
        do {
          const Token& k = cur_.peek();
          std::string name;
          if (k.kind == TokenKind::String) name = cur_.next().text;
          else name = cur_.expect_identifier("state name").text;
          cur_.expect("=");
          inst.initial_dist.push_back({name, number()});
        } while (cur_.accept(","));
      }
      cur_.expect("}");
    } else if (key.text == "near") {
      inst.near = string_value();
    } else if (key.text == "distance") {
      inst.distance = integer();
      if (inst.distance < 0) cur_.fail_at(key, "distance must be >= 0");
    } else {
      cur_.fail_at(key, "unknown key '" + key.text + "' (expected count, initial, initial_dist, near or distance)");
    }
  }

  TokenCursor cur_;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace

Deployment parse_deployment(std::string_view text, std::string file_name) {
  return DeploymentParser(text, std::move(file_name)).parse();
}

std::string serialize_deployment(const Deployment& d) {
  std::ostringstream os;
  os << "horizon = " << format_real(d.horizon) << "\n";
  os << "max_events = " << d.max_events << "\n";
  if (!d.property.empty()) os << "property = " << quote(d.property) << "\n";
  for (const auto& i : d.instances) {
    os << "\n[instances." << i.cls << "]\n";
    os << "count = " << i.count << "\n";
    if (!i.initial.empty()) {
      os << "initial = [";
      for (std::size_t k = 0; k < i.initial.size(); ++k) os << (k ? ", " : "") << quote(i.initial[k]);
      os << "]\n";
    }
    if (!i.initial_dist.empty()) {
      os << "initial_dist = { ";
      for (std::size_t k = 0; k < i.initial_dist.size(); ++k) {
        os << (k ? ", " : "") << i.initial_dist[k].first << " = " << format_real(i.initial_dist[k].second);
      }
      os << " }\n";
    }
    if (i.near) os << "near = " << quote(*i.near) << "\ndistance = " << i.distance << "\n";
  }
  if (!d.globals.empty()) {
    os << "\n[globals]\n";
    for (const auto& [k, v] : d.globals) os << k << " = " << to_string(v) << "\n";
  }
  if (!d.constants.empty()) {
    os << "\n[constants]\n";
    for (const auto& [k, v] : d.constants) os << k << " = " << to_string(v) << "\n";
  }
  return os.str();
}

ModelDocument apply_constants(const ModelDocument& doc, const Deployment& dep) {
  ModelDocument out = doc;
  for (const auto& [name, v] : dep.constants) {
    auto it = std::find_if(out.constants.begin(), out.constants.end(), [&](const ConstDecl& c) { return c.name == name; });
    if (it == out.constants.end()) throw std::invalid_argument("deployment overrides undeclared constant '" + name + "'");
    if (it->type == v.type) {
      it->value = v.items.front();
    } else if (it->type == ScalarType::Real && v.type == ScalarType::Int) {
      it->value = Scalar::of_real(static_cast<double>(v.items.front().i));
    } else {
      throw std::invalid_argument("constant '" + name + "' is " + std::string(to_string(it->type)) + ", override is " +
                                  std::string(to_string(v.type)));
    }
  }
  return out;
}

}  // namespace cpssv
