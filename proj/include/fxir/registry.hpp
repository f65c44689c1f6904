// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fxir/errors.hpp"
#include "fxir/tensor.hpp"

namespace fxir {

/// A runtime value flowing through the interpreter: either a tensor or one of
/// the immediate kinds a node argument can denote.  Lists stay lists so that
/// e.g. cat([a, b], 0) receives its operands grouped the way the node spells
/// them.
class Value {
 public:
  using List = std::vector<Value>;
  using Storage =
      std::variant<std::monostate, bool, std::int64_t, double, std::string, Tensor, List>;

  Value() = default;
  Value(bool v) : storage_(v) {}                        // NOLINT(google-explicit-constructor)
  Value(std::int64_t v) : storage_(v) {}                // NOLINT(google-explicit-constructor)
  Value(double v) : storage_(v) {}                      // NOLINT(google-explicit-constructor)
  Value(std::string v) : storage_(std::move(v)) {}      // NOLINT(google-explicit-constructor)
  Value(Tensor v) : storage_(std::move(v)) {}           // NOLINT(google-explicit-constructor)
  Value(List v) : storage_(std::move(v)) {}             // NOLINT(google-explicit-constructor)

  bool is_none() const { return std::holds_alternative<std::monostate>(storage_); }
  bool is_bool() const { return std::holds_alternative<bool>(storage_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(storage_); }
  bool is_real() const { return std::holds_alternative<double>(storage_); }
  bool is_text() const { return std::holds_alternative<std::string>(storage_); }
  bool is_tensor() const { return std::holds_alternative<Tensor>(storage_); }
  bool is_list() const { return std::holds_alternative<List>(storage_); }

  bool as_bool() const;
  std::int64_t as_int() const;
  double as_real() const;          ///< accepts an integer value too (widening)
  const std::string& as_text() const;
  const Tensor& as_tensor() const;
  const List& as_list() const;

  /// Non-throwing tensor access for callers that branch on the kind.
  const Tensor* if_tensor() const { return std::get_if<Tensor>(&storage_); }

  std::string_view kind_name() const;
  std::string to_string() const;

  const Storage& storage() const { return storage_; }

 private:
  Storage storage_;
};

/// Positional arguments plus keyword arguments, already resolved to Values.
struct CallInputs {
  std::vector<Value> args;
  std::map<std::string, Value> kwargs;

  /// args[i], or the kwarg under `name`, or `fallback`; positional wins.
  const Value* find(std::size_t i, std::string_view name) const;
  const Value& require(std::size_t i, std::string_view name, std::string_view op) const;
};

using KernelFn = std::function<Value(const CallInputs&)>;

/// call_function dispatch: target name -> kernel.  Throws UnknownFunction.
const KernelFn& lookup_function(std::string_view target);
bool has_function(std::string_view target);

/// call_method dispatch: the receiver is inputs.args[0].  Throws UnknownMethod.
const KernelFn& lookup_method(std::string_view target);
bool has_method(std::string_view target);

/// Purity drives CSE and DCE.  Known side-effect-free targets return true;
/// anything unknown is treated as impure so optimization stays conservative.
bool is_pure_function(std::string_view target);
bool is_pure_method(std::string_view target);

/// Registered names in a stable (sorted) order, for the CLI's `ops` listing.
std::vector<std::string> registered_functions();
std::vector<std::string> registered_methods();

}  // namespace fxir
