#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aquas/ir.hpp"

// Accelerator instruction (isax) descriptions and their software-level
// projection. An isax body talks to the base processor through register-file
// reads/writes and moves bulk data between main memory and its static arrays;
// semantic translation removes that transport layer and leaves an ordinary
// function over pointers, which is what the matching engine consumes.

namespace aquas::isax {

struct TranslateError : std::runtime_error {
  explicit TranslateError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IsaxDescription {
  std::string name;
  // Register operands in declaration order, e.g. {"rs1", "rs2"} or
  // {"rs1", "rs2", "rd"}.
  std::vector<std::string> registers;
  bool has_rd = false;
  // kind == IsaxBody; params are the declared static arrays.
  ir::Function body;
  // True iff the body contains memstore/blockstore.
  bool effects = false;
};

struct TranslatedIsax {
  std::string name;
  // One parameter per non-rd register operand, pointer- or integer-typed.
  ir::Function body;
  bool effects = false;
};

// Parses an isax description file. Throws ir::ParseError / ir::VerifyError.
IsaxDescription parse_isax(const std::string& text);

// Eliminates readrf/writerf and static-array transport, producing a function
// over main memory with identical semantics. Throws TranslateError when the
// body does not follow the single-fill / write-then-drain buffer discipline.
TranslatedIsax semantic_translate(const IsaxDescription& d);

}  // namespace aquas::isax
