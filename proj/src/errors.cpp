// SPDX-License-Identifier: Apache-2.0
#include "fxir/errors.hpp"

#include <sstream>

namespace fxir {
namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::ostringstream out;
  out << violations.size() << " lint violation(s)";
  for (const std::string& v : violations) out << "; " << v;
  return out.str();
}

}  // namespace

std::string_view trace_fault_name(TraceFault fault) {
  switch (fault) {
    case TraceFault::kControlFlowOnProxy: return "ControlFlowOnProxy";
    case TraceFault::kConcreteCoercion: return "ConcreteCoercion";
    case TraceFault::kUnsupportedOperation: return "UnsupportedOperation";
  }
  return "?";
}

TraceError::TraceError(TraceFault fault, std::string value_name, const std::string& message)
    : Error(std::string(trace_fault_name(fault)),
            "value '" + value_name + "': " + message),
      fault_(fault),
      value_name_(std::move(value_name)) {}

ParseError::ParseError(int line, int column, const std::string& message)
    : Error("ParseError",
            "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                message),
      line_(line),
      column_(column) {}

LintError::LintError(std::vector<std::string> violations)
    : Error("LintFailed", join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace fxir
