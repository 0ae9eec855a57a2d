#include "aquas/egraph.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include "json.hpp"

namespace aquas::eg {

std::string payload_str(const Payload& p) {
  if (const auto* i = std::get_if<int64_t>(&p)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&p)) return *s;
  return "";
}

namespace {

size_t hash_combine(size_t h, size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
}

size_t hash_type(const ir::Type& t) {
  size_t h = static_cast<size_t>(t.kind());
  h = hash_combine(h, static_cast<size_t>(t.elem_kind()));
  h = hash_combine(h, static_cast<size_t>(t.array_len()));
  if (t.partition()) {
    h = hash_combine(h, static_cast<size_t>(t.partition()->kind) + 1);
    h = hash_combine(h, static_cast<size_t>(t.partition()->factor));
  }
  return h;
}

// Deterministic total order used to canonicalize node lists.
auto type_key(const ir::Type& t) {
  int pk = t.partition() ? static_cast<int>(t.partition()->kind) + 1 : 0;
  int64_t pf = t.partition() ? t.partition()->factor : 0;
  return std::make_tuple(static_cast<int>(t.kind()),
                         static_cast<int>(t.elem_kind()), t.array_len(), pk, pf);
}

bool node_less(const ENode& a, const ENode& b) {
  if (a.sym != b.sym) return a.sym < b.sym;
  if (a.payload.index() != b.payload.index())
    return a.payload.index() < b.payload.index();
  if (const auto* ai = std::get_if<int64_t>(&a.payload)) {
    if (auto bi = std::get<int64_t>(b.payload); *ai != bi) return *ai < bi;
  } else if (const auto* as = std::get_if<std::string>(&a.payload)) {
    if (const auto& bs = std::get<std::string>(b.payload); *as != bs)
      return *as < bs;
  }
  if (auto ak = type_key(a.type), bk = type_key(b.type); ak != bk)
    return ak < bk;
  return a.children < b.children;
}

}  // namespace

size_t ENodeHash::operator()(const ENode& n) const {
  size_t h = n.sym;
  h = hash_combine(h, n.payload.index());
  if (const auto* i = std::get_if<int64_t>(&n.payload))
    h = hash_combine(h, static_cast<size_t>(*i));
  else if (const auto* s = std::get_if<std::string>(&n.payload))
    h = hash_combine(h, std::hash<std::string>{}(*s));
  h = hash_combine(h, hash_type(n.type));
  for (ClassId c : n.children) h = hash_combine(h, c);
  return h;
}

SymId EGraph::intern(std::string_view name) {
  auto it = sym_ids_.find(std::string(name));
  if (it != sym_ids_.end()) return it->second;
  SymId id = static_cast<SymId>(sym_names_.size());
  sym_names_.emplace_back(name);
  sym_ids_.emplace(sym_names_.back(), id);
  return id;
}

std::optional<SymId> EGraph::lookup_sym(std::string_view name) const {
  auto it = sym_ids_.find(std::string(name));
  if (it == sym_ids_.end()) return std::nullopt;
  return it->second;
}

ClassId EGraph::find(ClassId c) const {
  while (uf_[c] != c) {
    uf_[c] = uf_[uf_[c]];
    c = uf_[c];
  }
  return c;
}

void EGraph::canonicalize(ENode& n) const {
  for (ClassId& c : n.children) c = find(c);
}

ClassId EGraph::add(ENode n) {
  canonicalize(n);
  auto it = hashcons_.find(n);
  if (it != hashcons_.end()) return find(it->second);

  ClassId id = static_cast<ClassId>(classes_.size());
  EClass cls;
  cls.type = n.type;
  if (sym_name(n.sym) == "const")
    if (const auto* v = std::get_if<int64_t>(&n.payload)) cls.const_value = *v;
  cls.nodes.push_back(n);
  classes_.push_back(std::move(cls));
  uf_.push_back(id);
  hashcons_.emplace(std::move(n), id);
  return id;
}

ClassId EGraph::merge(ClassId a, ClassId b) {
  a = find(a);
  b = find(b);
  if (a == b) return a;
  ClassId rep = std::min(a, b);
  ClassId loser = std::max(a, b);
  uf_[loser] = rep;
  auto& w = classes_[rep];
  auto& l = classes_[loser];
  w.nodes.insert(w.nodes.end(), std::make_move_iterator(l.nodes.begin()),
                 std::make_move_iterator(l.nodes.end()));
  l.nodes.clear();
  if (!w.const_value) w.const_value = l.const_value;
  w.tags.insert(w.tags.end(), std::make_move_iterator(l.tags.begin()),
                std::make_move_iterator(l.tags.end()));
  l.tags.clear();
  clean_ = false;
  return rep;
}

void EGraph::rebuild() {
  // Full-sweep congruence repair: re-canonicalize every node, dedupe, and
  // merge any two classes that hold an identical node, until settled.
  bool changed = true;
  while (changed) {
    changed = false;
    hashcons_.clear();
    for (ClassId c = 0; c < classes_.size() && !changed; ++c) {
      if (find(c) != c) continue;
      auto& nodes = classes_[c].nodes;
      for (auto& n : nodes) canonicalize(n);
      std::sort(nodes.begin(), nodes.end(), node_less);
      nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
      for (const auto& n : nodes) {
        auto [it, inserted] = hashcons_.try_emplace(n, c);
        if (!inserted && find(it->second) != c) {
          merge(it->second, c);
          changed = true;  // class storage moved; restart the sweep
          break;
        }
      }
    }
  }
  // Canonicalize tag bindings accumulated before this rebuild.
  for (ClassId c = 0; c < classes_.size(); ++c) {
    if (find(c) != c || classes_[c].tags.empty()) continue;
    auto& tags = classes_[c].tags;
    for (auto& t : tags)
      for (ClassId& b : t.binding)
        if (b != kNoClass) b = find(b);
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  }
  clean_ = true;
}

void EGraph::add_tag(ClassId c, ComponentTag tag) {
  for (ClassId& b : tag.binding)
    if (b != kNoClass) b = find(b);
  auto& tags = classes_[find(c)].tags;
  if (std::find(tags.begin(), tags.end(), tag) == tags.end())
    tags.push_back(std::move(tag));
}

std::vector<ClassId> EGraph::canonical_classes() const {
  std::vector<ClassId> out;
  for (ClassId c = 0; c < classes_.size(); ++c)
    if (find(c) == c) out.push_back(c);
  return out;
}

size_t EGraph::num_classes() const { return canonical_classes().size(); }

size_t EGraph::num_nodes() const {
  size_t n = 0;
  for (ClassId c = 0; c < classes_.size(); ++c)
    if (find(c) == c) n += classes_[c].nodes.size();
  return n;
}

std::string EGraph::to_json() const {
  nlohmann::json j;
  j["classes"] = nlohmann::json::array();
  for (ClassId c : canonical_classes()) {
    nlohmann::json jc;
    jc["id"] = c;
    jc["type"] = ir::to_string(classes_[c].type);
    if (classes_[c].const_value) jc["const"] = *classes_[c].const_value;
    jc["nodes"] = nlohmann::json::array();
    for (const auto& n : classes_[c].nodes) {
      nlohmann::json jn;
      jn["sym"] = sym_name(n.sym);
      std::string p = payload_str(n.payload);
      if (!p.empty()) jn["payload"] = p;
      jn["children"] = n.children;
      jc["nodes"].push_back(std::move(jn));
    }
    for (const auto& t : classes_[c].tags) {
      nlohmann::json jt;
      jt["isax"] = t.isax;
      jt["component"] = t.component;
      jt["binding"] = t.binding;
      jc["tags"].push_back(std::move(jt));
    }
    j["classes"].push_back(std::move(jc));
  }
  j["union_find"] = uf_;
  return j.dump(2);
}

std::string EGraph::to_dot() const {
  std::ostringstream out;
  out << "digraph egraph {\n  compound=true;\n  node [shape=record];\n";
  for (ClassId c : canonical_classes()) {
    out << "  subgraph cluster_" << c << " {\n    label=\"c" << c << "\";\n";
    for (size_t i = 0; i < classes_[c].nodes.size(); ++i) {
      const auto& n = classes_[c].nodes[i];
      std::string label = sym_name(n.sym);
      std::string p = payload_str(n.payload);
      if (!p.empty()) label += ":" + p;
      out << "    n" << c << "_" << i << " [label=\"" << label << "\"];\n";
    }
    out << "  }\n";
  }
  for (ClassId c : canonical_classes())
    for (size_t i = 0; i < classes_[c].nodes.size(); ++i)
      for (ClassId ch : classes_[c].nodes[i].children)
        out << "  n" << c << "_" << i << " -> n" << find(ch)
            << "_0 [lhead=cluster_" << find(ch) << "];\n";
  out << "}\n";
  return out.str();
}

// --------------------------------------------------------------------------
// Patterns
// --------------------------------------------------------------------------

Pattern Pattern::make_var(int v) {
  Pattern p;
  p.kind = Kind::Var;
  p.var = v;
  return p;
}

Pattern Pattern::app(std::string sym, std::vector<Pattern> kids, Payload payload) {
  Pattern p;
  p.kind = Kind::App;
  p.sym = std::move(sym);
  p.kids = std::move(kids);
  p.payload = std::move(payload);
  return p;
}

Pattern Pattern::constant(std::function<int64_t(const EGraph&, const Subst&)> fn,
                          int type_from_var) {
  Pattern p;
  p.kind = Kind::Calc;
  p.calc = std::move(fn);
  p.type_from_var = type_from_var;
  return p;
}

namespace {

void match_into(const EGraph& g, const Pattern& p, ClassId cls, const Subst& s,
                std::vector<Subst>& out) {
  cls = g.find(cls);
  if (p.kind == Pattern::Kind::Var) {
    if (s[p.var] == kNoClass) {
      Subst s2 = s;
      s2[p.var] = cls;
      out.push_back(std::move(s2));
    } else if (g.find(s[p.var]) == cls) {
      out.push_back(s);
    }
    return;
  }
  auto sym = g.lookup_sym(p.sym);
  if (!sym) return;
  for (const auto& n : g.eclass(cls).nodes) {
    if (n.sym != *sym || n.children.size() != p.kids.size()) continue;
    if (!std::holds_alternative<std::monostate>(p.payload) &&
        !(n.payload == p.payload))
      continue;
    std::vector<Subst> partial{s};
    for (size_t i = 0; i < p.kids.size() && !partial.empty(); ++i) {
      std::vector<Subst> next;
      for (const auto& ps : partial)
        match_into(g, p.kids[i], n.children[i], ps, next);
      partial = std::move(next);
    }
    for (auto& ps : partial) out.push_back(std::move(ps));
  }
}

}  // namespace

std::vector<EMatch> ematch(const EGraph& g, const Pattern& p, int nvars) {
  std::vector<EMatch> matches;
  for (ClassId c : g.canonical_classes()) {
    std::vector<Subst> substs;
    match_into(g, p, c, Subst(nvars, kNoClass), substs);
    for (auto& s : substs) {
      for (ClassId& b : s)
        if (b != kNoClass) b = g.find(b);
      matches.push_back(EMatch{c, std::move(s)});
    }
  }
  std::sort(matches.begin(), matches.end(),
            [](const EMatch& a, const EMatch& b) {
              return std::tie(a.cls, a.subst) < std::tie(b.cls, b.subst);
            });
  matches.erase(std::unique(matches.begin(), matches.end(),
                            [](const EMatch& a, const EMatch& b) {
                              return a.cls == b.cls && a.subst == b.subst;
                            }),
                matches.end());
  return matches;
}

namespace {

ir::Type infer_type(const EGraph& g, const std::string& sym,
                    const std::vector<ClassId>& kids, ir::Type fallback) {
  if (sym == "addi" || sym == "subi" || sym == "muli" || sym == "shli" ||
      sym == "shri" || sym == "andi" || sym == "ori")
    return g.type_of(kids[0]);
  if (sym == "cmpi") return ir::Type::i1();
  if (sym == "select") return g.type_of(kids[1]);
  if (sym == "ptradd") return g.type_of(kids[0]);
  if (sym == "load" || sym == "memload") return g.type_of(kids[0]).elem_type();
  if (sym == "store" || sym == "memstore" || sym == "blockload" ||
      sym == "blockstore" || sym == "writerf")
    return ir::Type::void_();
  return fallback;
}

}  // namespace

ClassId instantiate(EGraph& g, const Pattern& p, const Subst& subst,
                    ir::Type root_type) {
  switch (p.kind) {
    case Pattern::Kind::Var:
      return g.find(subst[p.var]);
    case Pattern::Kind::Calc: {
      int64_t v = p.calc(g, subst);
      ir::Type t = p.type_from_var >= 0 ? g.type_of(subst[p.type_from_var])
                                        : root_type;
      return g.add(ENode{g.intern("const"), v, t, {}});
    }
    case Pattern::Kind::App: {
      std::vector<ClassId> kids;
      kids.reserve(p.kids.size());
      for (const auto& k : p.kids)
        kids.push_back(instantiate(g, k, subst, root_type));
      ir::Type t = infer_type(g, p.sym, kids, root_type);
      return g.add(ENode{g.intern(p.sym), p.payload, t, std::move(kids)});
    }
  }
  return kNoClass;
}

SaturationReport saturate(EGraph& g, const std::vector<RewriteRule>& rules,
                          const SaturationLimits& limits) {
  SaturationReport report;
  report.nodes_before = g.num_nodes();
  for (int iter = 0; iter < limits.max_iterations; ++iter) {
    // Read phase: collect matches against the frozen graph.
    struct PendingApp {
      const RewriteRule* rule;
      EMatch m;
    };
    std::vector<PendingApp> apps;
    for (const auto& rule : rules) {
      auto ms = ematch(g, rule.lhs, rule.nvars);
      int taken = 0;
      for (auto& m : ms) {
        if (taken >= limits.per_rule_match_cap) {
          report.hit_match_cap = true;
          break;
        }
        if (rule.guard && !rule.guard(g, m)) continue;
        apps.push_back(PendingApp{&rule, std::move(m)});
        ++taken;
      }
    }
    // Write phase: union every instantiated right-hand side.
    int64_t changed = 0;
    for (const auto& app : apps) {
      size_t classes_before = g.raw_class_count();
      ClassId rhs =
          instantiate(g, app.rule->rhs, app.m.subst, g.type_of(app.m.cls));
      bool did = g.raw_class_count() != classes_before;
      if (g.find(rhs) != g.find(app.m.cls)) {
        g.merge(rhs, app.m.cls);
        did = true;
      }
      if (did) {
        ++report.applied[app.rule->name];
        ++changed;
      }
    }
    g.rebuild();
    ++report.iterations;
    if (changed == 0) break;
    if (g.num_nodes() > limits.max_nodes) {
      report.hit_node_cap = true;
      break;
    }
    if (iter + 1 == limits.max_iterations) report.hit_iteration_cap = true;
  }
  report.nodes_after = g.num_nodes();
  return report;
}

// --------------------------------------------------------------------------
// Extraction
// --------------------------------------------------------------------------

CostModel CostModel::defaults() {
  CostModel cm;
  cm.base = {
      {"const", 0}, {"var", 0},   {"epoch", 0},   {"get", 0},
      {"tuple", 0}, {"yield", 0}, {"return", 0},  {"load", 2},
      {"store", 2}, {"for", 4},   {"memload", 2}, {"memstore", 2},
      {"ptradd", 1},
  };
  return cm;
}

int64_t CostModel::node_cost(const EGraph& g, const ENode& n,
                             bool in_loop) const {
  const std::string& sym = g.sym_name(n.sym);
  if (sym.rfind("isax", 0) == 0) return isax_cost;
  int64_t c = default_cost;
  if (auto it = base.find(sym); it != base.end()) c = it->second;
  if (in_loop && n.type.kind() == ir::TypeKind::Index &&
      (sym == "shli" || sym == "shri" || sym == "andi"))
    c += nonaffine_penalty;
  return c;
}

namespace {

// Prefer isax nodes, then fewer children, then lowest symbol name, then
// lowest child ids; applied only among equal-cost candidates.
bool better_tie(const EGraph& g, const ENode& a, const ENode& b) {
  bool ai = g.sym_name(a.sym).rfind("isax", 0) == 0;
  bool bi = g.sym_name(b.sym).rfind("isax", 0) == 0;
  if (ai != bi) return ai;
  if (a.children.size() != b.children.size())
    return a.children.size() < b.children.size();
  if (g.sym_name(a.sym) != g.sym_name(b.sym))
    return g.sym_name(a.sym) < g.sym_name(b.sym);
  return a.children < b.children;
}

}  // namespace

bool Extraction::has(const EGraph& g, ClassId c, bool in_loop) const {
  return (in_loop ? cost_in : cost_out)[g.find(c)] < kInfCost;
}

int64_t Extraction::cost(const EGraph& g, ClassId c, bool in_loop) const {
  return (in_loop ? cost_in : cost_out)[g.find(c)];
}

const ENode& Extraction::node(const EGraph& g, ClassId c, bool in_loop) const {
  ClassId r = g.find(c);
  return g.eclass(r).nodes[(in_loop ? choice_in : choice_out)[r]];
}

Extraction extract(const EGraph& g, const CostModel& cm) {
  auto classes = g.canonical_classes();
  size_t slots = g.raw_class_count();

  Extraction ex;
  ex.cost_out.assign(slots, kInfCost);
  ex.cost_in.assign(slots, kInfCost);
  ex.choice_out.assign(slots, -1);
  ex.choice_in.assign(slots, -1);

  auto for_sym = g.lookup_sym("for");

  bool changed = true;
  while (changed) {
    changed = false;
    for (ClassId c : classes) {
      for (bool in_loop : {false, true}) {
        int64_t best = kInfCost;
        int32_t best_idx = -1;
        const auto& nodes = g.eclass(c).nodes;
        for (size_t i = 0; i < nodes.size(); ++i) {
          const ENode& n = nodes[i];
          int64_t cost = cm.node_cost(g, n, in_loop);
          bool feasible = true;
          for (size_t j = 0; j < n.children.size(); ++j) {
            // A loop body is always loop context; bounds and inits inherit.
            bool child_in = in_loop;
            if (for_sym && n.sym == *for_sym && j + 1 == n.children.size())
              child_in = true;
            int64_t cc =
                (child_in ? ex.cost_in : ex.cost_out)[g.find(n.children[j])];
            if (cc >= kInfCost) {
              feasible = false;
              break;
            }
            cost += cc;
          }
          if (!feasible) continue;
          if (cost < best || (cost == best && best_idx >= 0 &&
                              better_tie(g, n, nodes[best_idx]))) {
            best = cost;
            best_idx = static_cast<int32_t>(i);
          }
        }
        auto& cost_slot = in_loop ? ex.cost_in[c] : ex.cost_out[c];
        auto& choice_slot = in_loop ? ex.choice_in[c] : ex.choice_out[c];
        if (best != cost_slot || best_idx != choice_slot) {
          cost_slot = best;
          choice_slot = best_idx;
          changed = true;
        }
      }
    }
  }
  return ex;
}

Term extract_term(const EGraph& g, const Extraction& ex, ClassId root,
                  bool in_loop) {
  root = g.find(root);
  if (!ex.has(g, root, in_loop))
    throw std::runtime_error("no finite witness for class " +
                             std::to_string(root));
  const ENode& n = ex.node(g, root, in_loop);
  Term t;
  t.sym = g.sym_name(n.sym);
  t.payload = n.payload;
  t.type = n.type;
  auto for_sym = g.lookup_sym("for");
  for (size_t j = 0; j < n.children.size(); ++j) {
    bool child_in = in_loop;
    if (for_sym && n.sym == *for_sym && j + 1 == n.children.size())
      child_in = true;
    t.kids.push_back(extract_term(g, ex, n.children[j], child_in));
  }
  return t;
}

}  // namespace aquas::eg
