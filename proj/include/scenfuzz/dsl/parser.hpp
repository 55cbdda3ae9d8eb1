#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scenfuzz/dsl/ast.hpp"

namespace scenfuzz::dsl {

struct Diagnostic {
  enum class Kind { Syntax, Name, Type, Value };

  Kind kind = Kind::Syntax;
  SourceLoc loc;
  std::string message;

  // "line:col: SyntaxError: message"
  std::string format() const;
};

std::string_view to_string(Diagnostic::Kind kind);

struct ParseResult {
  std::optional<ScenarioProgram> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value(); }
  bool has(Diagnostic::Kind kind) const;
};

// Parses and validates a scenario program. Never throws on malformed input:
// every problem is reported as a diagnostic and `program` is left empty.
ParseResult parse(std::string_view source);

// Renders a program back to source text that reparses to an equal AST.
std::string pretty_print(const ScenarioProgram& program);

}  // namespace scenfuzz::dsl
