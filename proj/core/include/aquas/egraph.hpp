#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "aquas/ir.hpp"

// Congruence-closed e-graph with hashconsing, union-find, e-matching,
// bounded equality saturation, and cost-based witness extraction.
//
// Symbols are interned strings: IR opcodes plus the synthetic symbols used
// by the encoding ("tuple", "for", "var", "epoch", "get", "const",
// "isax:<name>" / "isax!<name>" for pure / effectful instruction nodes).
// Every e-node carries the type of the value it produces; types participate
// in hashconsing, so const 4 : index and const 4 : i32 stay distinct.

namespace aquas::eg {

using SymId = uint32_t;
using ClassId = uint32_t;
inline constexpr ClassId kNoClass = 0xffffffffu;
inline constexpr int64_t kInfCost = INT64_MAX / 4;

using Payload = std::variant<std::monostate, int64_t, std::string>;

std::string payload_str(const Payload& p);

struct ENode {
  SymId sym = 0;
  Payload payload;
  ir::Type type;
  std::vector<ClassId> children;

  bool operator==(const ENode&) const = default;
};

struct ENodeHash {
  size_t operator()(const ENode& n) const;
};

// A component label attached to an e-class during matching, together with
// the substitution its pattern matched under.
struct ComponentTag {
  std::string isax;
  int component = 0;
  std::vector<ClassId> binding;  // indexed by pattern variable id

  auto operator<=>(const ComponentTag&) const = default;
};

struct EClass {
  std::vector<ENode> nodes;
  ir::Type type;
  std::optional<int64_t> const_value;
  std::vector<ComponentTag> tags;
};

class EGraph {
 public:
  SymId intern(std::string_view name);
  const std::string& sym_name(SymId s) const { return sym_names_[s]; }
  std::optional<SymId> lookup_sym(std::string_view name) const;

  ClassId find(ClassId c) const;
  ClassId add(ENode n);
  // Union two classes; congruence is restored by the next rebuild().
  ClassId merge(ClassId a, ClassId b);
  void rebuild();
  bool clean() const { return clean_; }

  const EClass& eclass(ClassId c) const { return classes_[find(c)]; }
  EClass& eclass_mut(ClassId c) { return classes_[find(c)]; }
  ir::Type type_of(ClassId c) const { return classes_[find(c)].type; }
  std::optional<int64_t> const_of(ClassId c) const {
    return classes_[find(c)].const_value;
  }

  // Deduplicates; tags survive unions.
  void add_tag(ClassId c, ComponentTag tag);

  std::vector<ClassId> canonical_classes() const;
  size_t num_classes() const;
  size_t num_nodes() const;
  // Total class slots ever created (canonical or not); grows only in add().
  size_t raw_class_count() const { return classes_.size(); }

  // Fresh scope ids for region-scoped leaf symbols (used by the encoder).
  int64_t fresh_scope() { return next_scope_++; }

  std::string to_json() const;
  std::string to_dot() const;

 private:
  void canonicalize(ENode& n) const;

  std::vector<std::string> sym_names_;
  std::unordered_map<std::string, SymId> sym_ids_;
  std::vector<EClass> classes_;
  mutable std::vector<ClassId> uf_;  // parent pointers, path-compressed
  std::unordered_map<ENode, ClassId, ENodeHash> hashcons_;
  int64_t next_scope_ = 0;
  bool clean_ = true;
};

// --------------------------------------------------------------------------
// Patterns and rewrite rules
// --------------------------------------------------------------------------

using Subst = std::vector<ClassId>;  // variable id -> class (kNoClass unbound)

struct Pattern {
  enum class Kind { Var, App, Calc };
  Kind kind = Kind::App;

  int var = -1;  // Var

  std::string sym;  // App. A monostate payload matches any node payload.
  Payload payload;
  std::vector<Pattern> kids;

  // Calc (rhs only): a constant computed from the matched substitution;
  // its type is taken from the binding of `type_from_var`.
  std::function<int64_t(const EGraph&, const Subst&)> calc;
  int type_from_var = -1;

  static Pattern make_var(int v);
  static Pattern app(std::string sym, std::vector<Pattern> kids = {},
                     Payload payload = {});
  static Pattern constant(std::function<int64_t(const EGraph&, const Subst&)> fn,
                          int type_from_var);
};

struct EMatch {
  ClassId cls = kNoClass;
  Subst subst;
};

// Complete up to canonical classes; deterministic order; no duplicates.
std::vector<EMatch> ematch(const EGraph& g, const Pattern& p, int nvars);

struct RewriteRule {
  std::string name;
  Pattern lhs;
  Pattern rhs;
  int nvars = 0;
  // Optional; pure predicate over matched constants/types.
  std::function<bool(const EGraph&, const EMatch&)> guard;
};

struct SaturationLimits {
  int max_iterations = 30;
  size_t max_nodes = 50000;
  int per_rule_match_cap = 1000;
};

struct SaturationReport {
  int iterations = 0;
  std::map<std::string, int64_t> applied;
  bool hit_iteration_cap = false;
  bool hit_node_cap = false;
  bool hit_match_cap = false;
  size_t nodes_before = 0;
  size_t nodes_after = 0;

  int64_t total_applied() const {
    int64_t n = 0;
    for (const auto& [_, c] : applied) n += c;
    return n;
  }
};

// Instantiates `p` under `subst`, adding nodes as needed. `root_type` types
// nodes whose type cannot be inferred from their children.
ClassId instantiate(EGraph& g, const Pattern& p, const Subst& subst,
                    ir::Type root_type);

// Repeats {match all rules, union right-hand sides, rebuild} until fixpoint
// or a limit trips. Non-destructive: never removes represented terms.
SaturationReport saturate(EGraph& g, const std::vector<RewriteRule>& rules,
                          const SaturationLimits& limits = {});

// --------------------------------------------------------------------------
// Cost-based extraction
// --------------------------------------------------------------------------

struct CostModel {
  std::map<std::string, int64_t> base;  // per-symbol base cost
  int64_t default_cost = 1;
  // Extra cost for index-typed shli/shri/andi inside loop bodies.
  int64_t nonaffine_penalty = 4;
  int64_t isax_cost = 1;

  int64_t node_cost(const EGraph& g, const ENode& n, bool in_loop) const;
  static CostModel defaults();
};

// One chosen node per reachable (class, context); context distinguishes
// loop-body positions so the non-affine penalty can act there.
struct Extraction {
  std::vector<int64_t> cost_out, cost_in;
  std::vector<int32_t> choice_out, choice_in;

  bool has(const EGraph& g, ClassId c, bool in_loop) const;
  int64_t cost(const EGraph& g, ClassId c, bool in_loop) const;
  const ENode& node(const EGraph& g, ClassId c, bool in_loop) const;
};

Extraction extract(const EGraph& g, const CostModel& cm);

// A concrete term materialized from an extraction, for tests and dumps.
struct Term {
  std::string sym;
  Payload payload;
  ir::Type type;
  std::vector<Term> kids;
};

Term extract_term(const EGraph& g, const Extraction& ex, ClassId root,
                  bool in_loop = false);

}  // namespace aquas::eg
