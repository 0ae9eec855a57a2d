#pragma once

#include <stdexcept>
#include <string>

#include "aquas/ir.hpp"

// Textual IR format. Canonical form renumbers values as %0, %1, ... in
// definition order, so print(parse(print(f))) == print(f).

namespace aquas::ir {

struct ParseError : std::runtime_error {
  ParseError(int line, int col, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

struct VerifyError : std::runtime_error {
  explicit VerifyError(const std::vector<Diagnostic>& diags)
      : std::runtime_error(join(diags)) {}
  static std::string join(const std::vector<Diagnostic>& diags);
};

// Parses one application function. Throws ParseError on syntax errors and
// VerifyError when the parsed function fails verification.
Function parse(const std::string& text);

// Canonical text; stable value numbering in definition order.
std::string print(const Function& f);

}  // namespace aquas::ir
