// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fxir/graph.hpp"

namespace fxir {

class TraceSession;

/// Stand-in value flowed through a program while it is being recorded.
/// A proxy usually wraps a reference to the node that computes it; when a
/// tracer hook substitutes a precomputed immediate, it wraps that instead
/// and downstream operations embed the immediate directly.
///
/// Arithmetic (+, *, unary -, matmul) and the whitelisted methods record
/// nodes and hand back fresh proxies.  Anything that would force a concrete
/// answer out of a proxy raises TraceError instead of guessing:
///   - use as a branch/loop condition or comparison -> ControlFlowOnProxy
///   - as_int()/as_real()                           -> ConcreteCoercion
///   - operators/methods outside the surface        -> UnsupportedOperation
class Proxy {
 public:
  Proxy(TraceSession* session, Argument value);

  TraceSession* session() const { return session_; }
  const Argument& arg() const { return value_; }

  /// Name used in diagnostics: the node name, or the immediate's rendering.
  std::string describe() const;

  /// Records a binary arithmetic node; `op` is one of "add", "mul",
  /// "matmul" (anything else raises UnsupportedOperation).
  Proxy binop(const std::string& op, const Proxy& rhs) const;
  Proxy binop(const std::string& op, const Argument& rhs) const;

  /// Records a method call with this proxy as args[0].  The method must be
  /// registered (neg, relu, gelu, reshape, shape, ndim by default).
  Proxy method(const std::string& name, ArgList extra_args = {}, KwargDict kwargs = {}) const;

  Proxy neg() const { return method("neg"); }
  Proxy relu() const { return method("relu"); }
  Proxy gelu() const { return method("gelu"); }
  Proxy reshape(const std::vector<std::int64_t>& dims) const;
  Proxy shape() const { return method("shape"); }
  Proxy ndim() const { return method("ndim"); }

  /// Concrete coercions: always rejected while tracing.
  std::int64_t as_int() const;
  double as_real() const;

  /// Truthiness of a traced value is a data-dependent control-flow
  /// decision; always rejected.
  explicit operator bool() const;

 private:
  [[noreturn]] void raise_control_flow(const char* what) const;

  TraceSession* session_;
  Argument value_;
};

Proxy operator+(const Proxy& a, const Proxy& b);
Proxy operator+(const Proxy& a, double b);
Proxy operator+(double a, const Proxy& b);
Proxy operator+(const Proxy& a, std::int64_t b);
Proxy operator+(std::int64_t a, const Proxy& b);
Proxy operator*(const Proxy& a, const Proxy& b);
Proxy operator*(const Proxy& a, double b);
Proxy operator*(double a, const Proxy& b);
Proxy operator-(const Proxy& a);
Proxy matmul(const Proxy& a, const Proxy& b);

/// Comparisons on proxies exist only so the failure mode of data-dependent
/// control flow is a clean TraceError at the comparison site.
bool operator<(const Proxy& a, const Proxy& b);
bool operator<(const Proxy& a, std::int64_t b);
bool operator<(std::int64_t a, const Proxy& b);
bool operator>(const Proxy& a, std::int64_t b);
bool operator==(const Proxy& a, std::int64_t b);

/// Free functions that record call_function nodes while tracing.
namespace fn {
Proxy relu(const Proxy& x);
Proxy gelu(const Proxy& x);
Proxy neg(const Proxy& x);
Proxy add(const Proxy& a, const Proxy& b);
Proxy mul(const Proxy& a, const Proxy& b);
Proxy cat(const std::vector<Proxy>& parts, std::int64_t dim);
}  // namespace fn

}  // namespace fxir
