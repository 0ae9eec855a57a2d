#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "aquas/egraph.hpp"
#include "aquas/ir.hpp"

// Bidirectional, lossless translation between functions and the e-graph.
//
// Within each block we distinguish roots (terminators, side-effecting ops,
// control flow) from order-independent operations. A block becomes a
// tuple(...) e-node whose ordered children are its root classes; non-root
// ops become dataflow subtrees beneath the roots that consume them. Block
// arguments encode as "var" leaves scoped by a region id, so induction
// variables of different loops never unify. Loads carry a block-scoped
// epoch leaf that increments after each side-effecting root, which keeps a
// load from being shared across a store it may alias. Saturation rewrites
// only the dataflow subtrees; tuples stay fixed.

namespace aquas::bridge {

struct BridgeError : std::runtime_error {
  explicit BridgeError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class RootKind { Terminator, SideEffect, ControlFlow };

// Root classification is a pure function of the opcode (isax.call consults
// its effects attribute); nullopt means the op is ordinary dataflow.
std::optional<RootKind> root_kind(const ir::Operation& op);

// Loop-scope bookkeeping recorded while encoding.
struct ScopeInfo {
  int64_t scope = -1;
  eg::ClassId induction = eg::kNoClass;
  std::vector<eg::ClassId> iter_leaves;
  std::vector<ir::Type> iter_types;
};

struct LoopRecord {
  eg::ClassId cls = eg::kNoClass;
  int64_t scope = -1;
  int depth = 0;  // 0 = loop sits in the function body block
};

struct Encoded {
  eg::ClassId root = eg::kNoClass;  // the function body tuple class
  std::map<ir::ValueId, eg::ClassId> valuemap;
  std::map<int64_t, ScopeInfo> scopes;
  std::vector<LoopRecord> loops;  // preorder

  std::string func_name;
  ir::FuncKind func_kind = ir::FuncKind::Application;
  int64_t param_scope = -1;
  std::vector<ir::Type> param_types;
  std::vector<eg::ClassId> param_classes;
};

// Encodes a verified function into g.
Encoded encode(eg::EGraph& g, const ir::Function& f);

// Witness extraction: picks one e-node per reachable class under the cost
// model and materializes the tuple's roots in order, emitting shared
// dataflow subtrees once per block at their first use.
ir::Function witness_extract(const eg::EGraph& g, const Encoded& enc,
                             const eg::CostModel& cm);

// Extracts the loop rooted at `loop_cls` as a standalone function whose
// parameters stand for the loop's free values; `free_classes` receives the
// e-class each parameter maps to.
ir::Function extract_loop_fragment(const eg::EGraph& g, const Encoded& enc,
                                   const eg::CostModel& cm,
                                   eg::ClassId loop_cls,
                                   std::vector<eg::ClassId>& free_classes);

// Encodes a fragment function whose parameters map to existing classes and
// returns the class of its (single) top-level loop. New scopes and loop
// records are appended to enc; the caller is responsible for unioning the
// result with the original class and rebuilding.
eg::ClassId encode_fragment(eg::EGraph& g, Encoded& enc,
                            const ir::Function& fragment,
                            const std::vector<eg::ClassId>& param_classes);

}  // namespace aquas::bridge
