#include "support/oracles.hpp"

#include <algorithm>
#include <map>

namespace aquas::testing {

int RefCongruence::add_node(std::string sym, std::vector<int> children,
                            std::optional<int64_t> payload) {
  nodes_.push_back(Node{std::move(sym), payload, std::move(children)});
  parent_.push_back(static_cast<int>(parent_.size()));
  return static_cast<int>(nodes_.size()) - 1;
}

int RefCongruence::find(int a) {
  while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
  return a;
}

void RefCongruence::union_nodes(int a, int b) {
  parent_[find(a)] = find(b);
}

void RefCongruence::close() {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < nodes_.size(); ++i) {
      for (size_t j = i + 1; j < nodes_.size(); ++j) {
        if (find(int(i)) == find(int(j))) continue;
        const Node& a = nodes_[i];
        const Node& b = nodes_[j];
        if (a.sym != b.sym || a.payload != b.payload ||
            a.children.size() != b.children.size())
          continue;
        bool congruent = true;
        for (size_t k = 0; k < a.children.size(); ++k)
          if (find(a.children[k]) != find(b.children[k])) {
            congruent = false;
            break;
          }
        if (congruent) {
          union_nodes(int(i), int(j));
          changed = true;
        }
      }
    }
  }
}

bool RefCongruence::equivalent(int a, int b) { return find(a) == find(b); }

std::vector<ClassTerm> enumerate_terms(const eg::EGraph& g, eg::ClassId cls,
                                       int depth, size_t cap) {
  cls = g.find(cls);
  std::vector<ClassTerm> out;
  if (depth <= 0) return out;
  for (const auto& n : g.eclass(cls).nodes) {
    std::vector<std::vector<ClassTerm>> kid_choices;
    bool feasible = true;
    for (eg::ClassId ch : n.children) {
      auto ts = enumerate_terms(g, ch, depth - 1, cap);
      if (ts.empty()) {
        feasible = false;
        break;
      }
      kid_choices.push_back(std::move(ts));
    }
    if (!feasible) continue;
    // Cartesian product of child terms.
    std::vector<std::vector<ClassTerm>> combos{{}};
    for (const auto& choices : kid_choices) {
      std::vector<std::vector<ClassTerm>> next;
      for (const auto& partial : combos)
        for (const auto& t : choices) {
          auto ext = partial;
          ext.push_back(t);
          next.push_back(std::move(ext));
          if (next.size() > cap) throw std::runtime_error("enumeration blowup");
        }
      combos = std::move(next);
    }
    for (auto& kids : combos) {
      ClassTerm t;
      t.sym = g.sym_name(n.sym);
      t.payload = n.payload;
      t.cls = cls;
      t.kids = std::move(kids);
      out.push_back(std::move(t));
      if (out.size() > cap) throw std::runtime_error("enumeration blowup");
    }
  }
  return out;
}

void match_term(const eg::Pattern& p, const ClassTerm& t, eg::Subst subst,
                std::vector<eg::Subst>& out) {
  if (p.kind == eg::Pattern::Kind::Var) {
    if (subst[p.var] == eg::kNoClass) {
      subst[p.var] = t.cls;
      out.push_back(std::move(subst));
    } else if (subst[p.var] == t.cls) {
      out.push_back(std::move(subst));
    }
    return;
  }
  if (p.sym != t.sym || p.kids.size() != t.kids.size()) return;
  if (!std::holds_alternative<std::monostate>(p.payload) &&
      !(p.payload == t.payload))
    return;
  std::vector<eg::Subst> partial{std::move(subst)};
  for (size_t i = 0; i < p.kids.size() && !partial.empty(); ++i) {
    std::vector<eg::Subst> next;
    for (const auto& s : partial) match_term(p.kids[i], t.kids[i], s, next);
    partial = std::move(next);
  }
  for (auto& s : partial) out.push_back(std::move(s));
}

int64_t min_cost_to_depth(const eg::EGraph& g, const eg::CostModel& cm,
                          eg::ClassId cls, bool in_loop, int depth) {
  cls = g.find(cls);
  if (depth <= 0) return eg::kInfCost;
  auto for_sym = g.lookup_sym("for");
  int64_t best = eg::kInfCost;
  for (const auto& n : g.eclass(cls).nodes) {
    int64_t cost = cm.node_cost(g, n, in_loop);
    bool feasible = true;
    for (size_t j = 0; j < n.children.size(); ++j) {
      bool child_in = in_loop;
      if (for_sym && n.sym == *for_sym && j + 1 == n.children.size())
        child_in = true;
      int64_t cc = min_cost_to_depth(g, cm, n.children[j], child_in, depth - 1);
      if (cc >= eg::kInfCost) {
        feasible = false;
        break;
      }
      cost += cc;
    }
    if (feasible) best = std::min(best, cost);
  }
  return best;
}

}  // namespace aquas::testing
