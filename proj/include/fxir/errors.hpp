// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fxir {

/// Every failure in the library carries a stable, machine-checkable kind
/// string ("ShapeMismatch", "UseBeforeDef", ...) next to the human-readable
/// message.  Tests and the CLI dispatch on kind(), never on message text.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, std::string message)
      : std::runtime_error(kind + ": " + message),
        kind_(std::move(kind)),
        message_(std::move(message)) {}

  const std::string& kind() const noexcept { return kind_; }
  /// The message without the kind prefix, for re-wrapping with context.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string kind_;
  std::string message_;
};

/// Why a trace was rejected.
enum class TraceFault {
  kControlFlowOnProxy,   // branch/loop condition depends on a traced value
  kConcreteCoercion,     // traced value forced to a concrete int/float/bool
  kUnsupportedOperation  // operator or method outside the recordable surface
};

std::string_view trace_fault_name(TraceFault fault);

/// Raised while recording a program.  Carries the name of the node (or the
/// rendering of the immediate) whose use was rejected so diagnostics can
/// point at the offending value.
class TraceError : public Error {
 public:
  TraceError(TraceFault fault, std::string value_name, const std::string& message);

  TraceFault fault() const noexcept { return fault_; }
  const std::string& value_name() const noexcept { return value_name_; }

 private:
  TraceFault fault_;
  std::string value_name_;
};

/// Raised by the linear-form parser; line/column are 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Raised when code generation or interpretation is attempted on a graph
/// that fails structural validation.  Keeps the violation codes as data.
class LintError : public Error {
 public:
  explicit LintError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace fxir
