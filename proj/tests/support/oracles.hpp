#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aquas/egraph.hpp"

// Independent reference implementations used as test oracles. These stay
// deliberately naive: correctness over speed, and no sharing of code with
// the structures they check.

namespace aquas::testing {

// Reference congruence closure over explicit term nodes (children are node
// ids, not classes), closed by naive fixpoint.
class RefCongruence {
 public:
  int add_node(std::string sym, std::vector<int> children,
               std::optional<int64_t> payload = std::nullopt);
  void union_nodes(int a, int b);
  void close();  // fixpoint congruence
  bool equivalent(int a, int b);
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  int find(int a);

  struct Node {
    std::string sym;
    std::optional<int64_t> payload;
    std::vector<int> children;
  };
  std::vector<Node> nodes_;
  std::vector<int> parent_;
};

// A term enumerated from an e-graph, remembering the class of every subterm.
struct ClassTerm {
  std::string sym;
  eg::Payload payload;
  eg::ClassId cls = eg::kNoClass;
  std::vector<ClassTerm> kids;
};

// All terms represented by `cls` up to `depth` (inclusive of leaves at any
// level). The list is capped to keep pathological cases bounded.
std::vector<ClassTerm> enumerate_terms(const eg::EGraph& g, eg::ClassId cls,
                                       int depth, size_t cap = 200000);

// Tree-matches `p` against an enumerated term; appends every substitution.
void match_term(const eg::Pattern& p, const ClassTerm& t, eg::Subst subst,
                std::vector<eg::Subst>& out);

// Minimal represented-term cost for (cls, context) over terms of bounded
// depth; kInfCost when no witness exists within the bound.
int64_t min_cost_to_depth(const eg::EGraph& g, const eg::CostModel& cm,
                          eg::ClassId cls, bool in_loop, int depth);

}  // namespace aquas::testing
