#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "aquas/ir.hpp"

// Reference interpreter, the semantic oracle for every transform in the
// project. Deterministic big-step evaluation over a flat byte-addressed
// memory; reading uninitialized memory is an error, never zero.

namespace aquas::ir {

struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MachineState {
  std::unordered_map<uint64_t, uint8_t> memory;
  std::map<std::string, int64_t> regfile;

  bool memory_equals(const MachineState& other) const;
};

// Typed little-endian accessors. mem_read throws EvalError when any byte of
// the element is uninitialized.
void mem_write(MachineState& state, uint64_t addr, int64_t value, TypeKind elem);
int64_t mem_read(const MachineState& state, uint64_t addr, TypeKind elem);

struct InterpOptions {
  // Total loop iterations across the whole run (nontermination guard).
  uint64_t max_loop_steps = uint64_t{1} << 20;
  // Bodies used to inline isax.call sites (translated isax functions keyed
  // by name). Calls to names not present here are an evaluation error.
  const std::map<std::string, const Function*>* isax_bodies = nullptr;
};

// `args` carries one scalar per non-array parameter in order (pointers as
// addresses). Array-typed parameters (isax bodies) get fresh uninitialized
// scratchpads. Returns the values of the final `return`.
std::vector<int64_t> interpret(const Function& f,
                               const std::vector<int64_t>& args,
                               MachineState& state,
                               const InterpOptions& opts = {});

}  // namespace aquas::ir
