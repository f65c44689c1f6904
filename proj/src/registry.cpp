// SPDX-License-Identifier: Apache-2.0
#include "fxir/registry.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "fxir/kernels.hpp"

namespace fxir {
namespace {

[[noreturn]] void wrong_kind(std::string_view want, const Value& v) {
  throw Error("TypeMismatch",
              "expected " + std::string(want) + ", got " + std::string(v.kind_name()));
}

double scalar_of(const Value& v, std::string_view op) {
  if (v.is_int()) return static_cast<double>(v.as_int());
  if (v.is_real()) return v.as_real();
  throw Error("TypeMismatch",
              std::string(op) + ": expected tensor or numeric immediate, got " +
                  std::string(v.kind_name()));
}

std::pair<std::int64_t, std::int64_t> int_pair(const Value& v, std::string_view what) {
  if (v.is_int()) return {v.as_int(), v.as_int()};
  if (v.is_list()) {
    const Value::List& items = v.as_list();
    if (items.size() == 2 && items[0].is_int() && items[1].is_int()) {
      return {items[0].as_int(), items[1].as_int()};
    }
  }
  throw Error("TypeMismatch",
              std::string(what) + " must be an integer or a pair of integers");
}

std::optional<Tensor> optional_tensor(const CallInputs& in, std::size_t i,
                                      std::string_view name) {
  const Value* v = in.find(i, name);
  if (v == nullptr || v->is_none()) return std::nullopt;
  return v->as_tensor();
}

QuantParams quant_params_at(const CallInputs& in, std::size_t scale_i, std::size_t zp_i,
                            std::string_view op) {
  QuantParams qp;
  const Value& scale = in.require(scale_i, "scale", op);
  qp.scale = scale.is_int() ? static_cast<double>(scale.as_int()) : scale.as_real();
  qp.zero_point = static_cast<std::int32_t>(in.require(zp_i, "zero_point", op).as_int());
  return qp;
}

/// add/mul accept tensor⊕tensor, tensor⊕scalar, scalar⊕tensor — exactly the
/// shapes of expression the recorder can produce for the binary operators.
Value binary_elementwise(const CallInputs& in, std::string_view op,
                         Tensor (*tt)(const Tensor&, const Tensor&),
                         Tensor (*ts)(const Tensor&, double)) {
  const Value& a = in.require(0, "a", op);
  const Value& b = in.require(1, "b", op);
  if (a.is_tensor() && b.is_tensor()) return tt(a.as_tensor(), b.as_tensor());
  if (a.is_tensor()) return ts(a.as_tensor(), scalar_of(b, op));
  if (b.is_tensor()) return ts(b.as_tensor(), scalar_of(a, op));  // both ops commute
  throw Error("TypeMismatch", std::string(op) + ": at least one operand must be a tensor");
}

std::vector<std::int64_t> int_list(const Value& v, std::string_view what) {
  if (!v.is_list()) throw Error("TypeMismatch", std::string(what) + " must be a list");
  std::vector<std::int64_t> out;
  out.reserve(v.as_list().size());
  for (const Value& item : v.as_list()) out.push_back(item.as_int());
  return out;
}

const std::map<std::string, KernelFn, std::less<>>& function_table() {
  static const std::map<std::string, KernelFn, std::less<>> table = {
      {"add",
       [](const CallInputs& in) {
         return binary_elementwise(in, "add", &ops::add, &ops::add_scalar);
       }},
      {"mul",
       [](const CallInputs& in) {
         return binary_elementwise(in, "mul", &ops::mul, &ops::mul_scalar);
       }},
      {"neg",
       [](const CallInputs& in) { return Value(ops::neg(in.require(0, "x", "neg").as_tensor())); }},
      {"relu",
       [](const CallInputs& in) {
         return Value(ops::relu(in.require(0, "x", "relu").as_tensor()));
       }},
      {"gelu",
       [](const CallInputs& in) {
         return Value(ops::gelu(in.require(0, "x", "gelu").as_tensor()));
       }},
      {"matmul",
       [](const CallInputs& in) {
         return Value(ops::matmul(in.require(0, "a", "matmul").as_tensor(),
                                  in.require(1, "b", "matmul").as_tensor()));
       }},
      {"cat",
       [](const CallInputs& in) {
         const Value& parts = in.require(0, "tensors", "cat");
         if (!parts.is_list()) throw Error("TypeMismatch", "cat: first argument must be a list");
         std::vector<Tensor> tensors;
         tensors.reserve(parts.as_list().size());
         for (const Value& part : parts.as_list()) tensors.push_back(part.as_tensor());
         std::int64_t dim = 0;
         if (const Value* d = in.find(1, "dim")) dim = d->as_int();
         return Value(ops::cat(tensors, dim));
       }},
      {"linear",
       [](const CallInputs& in) {
         return Value(ops::linear(in.require(0, "x", "linear").as_tensor(),
                                  in.require(1, "weight", "linear").as_tensor(),
                                  optional_tensor(in, 2, "bias")));
       }},
      {"conv2d",
       [](const CallInputs& in) {
         auto stride = std::pair<std::int64_t, std::int64_t>{1, 1};
         auto padding = std::pair<std::int64_t, std::int64_t>{0, 0};
         if (const Value* s = in.find(3, "stride")) stride = int_pair(*s, "conv2d stride");
         if (const Value* p = in.find(4, "padding")) padding = int_pair(*p, "conv2d padding");
         return Value(ops::conv2d(in.require(0, "x", "conv2d").as_tensor(),
                                  in.require(1, "weight", "conv2d").as_tensor(),
                                  optional_tensor(in, 2, "bias"), stride, padding));
       }},
      {"batch_norm2d",
       [](const CallInputs& in) {
         double eps = 1e-5;
         if (const Value* e = in.find(5, "eps")) eps = e->as_real();
         return Value(ops::batch_norm2d(in.require(0, "x", "batch_norm2d").as_tensor(),
                                        in.require(1, "weight", "batch_norm2d").as_tensor(),
                                        in.require(2, "bias", "batch_norm2d").as_tensor(),
                                        in.require(3, "running_mean", "batch_norm2d").as_tensor(),
                                        in.require(4, "running_var", "batch_norm2d").as_tensor(),
                                        eps));
       }},
      {"reshape",
       [](const CallInputs& in) {
         return Value(ops::reshape(in.require(0, "x", "reshape").as_tensor(),
                                   int_list(in.require(1, "dims", "reshape"), "reshape dims")));
       }},
      {"quantize_affine",
       [](const CallInputs& in) {
         return Value(ops::quantize_affine(in.require(0, "x", "quantize_affine").as_tensor(),
                                           quant_params_at(in, 1, 2, "quantize_affine")));
       }},
      {"dequantize_affine",
       [](const CallInputs& in) {
         return Value(
             ops::dequantize_affine(in.require(0, "x", "dequantize_affine").as_tensor()));
       }},
      {"quantized_linear",
       [](const CallInputs& in) {
         return Value(ops::quantized_linear(
             in.require(0, "x", "quantized_linear").as_tensor(),
             in.require(1, "weight", "quantized_linear").as_tensor(),
             optional_tensor(in, 2, "bias"), quant_params_at(in, 3, 4, "quantized_linear")));
       }},
      {"quantized_conv2d",
       [](const CallInputs& in) {
         auto stride = std::pair<std::int64_t, std::int64_t>{1, 1};
         auto padding = std::pair<std::int64_t, std::int64_t>{0, 0};
         if (const Value* s = in.find(3, "stride")) stride = int_pair(*s, "quantized_conv2d stride");
         if (const Value* p = in.find(4, "padding")) {
           padding = int_pair(*p, "quantized_conv2d padding");
         }
         return Value(ops::quantized_conv2d(
             in.require(0, "x", "quantized_conv2d").as_tensor(),
             in.require(1, "weight", "quantized_conv2d").as_tensor(),
             optional_tensor(in, 2, "bias"), stride, padding,
             quant_params_at(in, 5, 6, "quantized_conv2d")));
       }},
  };
  return table;
}

const std::map<std::string, KernelFn, std::less<>>& method_table() {
  static const std::map<std::string, KernelFn, std::less<>> table = {
      {"neg",
       [](const CallInputs& in) { return Value(ops::neg(in.require(0, "self", "neg").as_tensor())); }},
      {"relu",
       [](const CallInputs& in) {
         return Value(ops::relu(in.require(0, "self", "relu").as_tensor()));
       }},
      {"gelu",
       [](const CallInputs& in) {
         return Value(ops::gelu(in.require(0, "self", "gelu").as_tensor()));
       }},
      {"reshape",
       [](const CallInputs& in) {
         return Value(ops::reshape(
             in.require(0, "self", "reshape").as_tensor(),
             int_list(in.require(1, "dims", "reshape"), "reshape dims")));
       }},
      {"shape",
       [](const CallInputs& in) {
         return Value(ops::shape_of(in.require(0, "self", "shape").as_tensor()));
       }},
      {"ndim",
       [](const CallInputs& in) {
         return Value(ops::ndim_of(in.require(0, "self", "ndim").as_tensor()));
       }},
  };
  return table;
}

}  // namespace

bool Value::as_bool() const {
  if (const bool* v = std::get_if<bool>(&storage_)) return *v;
  wrong_kind("bool", *this);
}

std::int64_t Value::as_int() const {
  if (const std::int64_t* v = std::get_if<std::int64_t>(&storage_)) return *v;
  wrong_kind("integer", *this);
}

double Value::as_real() const {
  if (const double* v = std::get_if<double>(&storage_)) return *v;
  if (const std::int64_t* v = std::get_if<std::int64_t>(&storage_)) {
    return static_cast<double>(*v);
  }
  wrong_kind("real", *this);
}

const std::string& Value::as_text() const {
  if (const std::string* v = std::get_if<std::string>(&storage_)) return *v;
  wrong_kind("text", *this);
}

const Tensor& Value::as_tensor() const {
  if (const Tensor* v = std::get_if<Tensor>(&storage_)) return *v;
  wrong_kind("tensor", *this);
}

const Value::List& Value::as_list() const {
  if (const List* v = std::get_if<List>(&storage_)) return *v;
  wrong_kind("list", *this);
}

std::string_view Value::kind_name() const {
  switch (storage_.index()) {
    case 0: return "none";
    case 1: return "bool";
    case 2: return "integer";
    case 3: return "real";
    case 4: return "text";
    case 5: return "tensor";
    case 6: return "list";
  }
  return "?";
}

std::string Value::to_string() const {
  switch (storage_.index()) {
    case 0: return "none";
    case 1: return as_bool() ? "true" : "false";
    case 2: return std::to_string(as_int());
    case 3: return format_real(std::get<double>(storage_));
    case 4: return "\"" + as_text() + "\"";
    case 5: return as_tensor().to_string();
    case 6: {
      std::ostringstream out;
      out << "[";
      const List& items = as_list();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i != 0) out << ", ";
        out << items[i].to_string();
      }
      out << "]";
      return out.str();
    }
  }
  return "?";
}

const Value* CallInputs::find(std::size_t i, std::string_view name) const {
  if (i < args.size()) return &args[i];
  auto it = kwargs.find(std::string(name));
  if (it != kwargs.end()) return &it->second;
  return nullptr;
}

const Value& CallInputs::require(std::size_t i, std::string_view name, std::string_view op) const {
  const Value* v = find(i, name);
  if (v == nullptr) {
    throw Error("ArityMismatch", std::string(op) + ": missing argument '" + std::string(name) +
                                     "' (position " + std::to_string(i) + ")");
  }
  return *v;
}

const KernelFn& lookup_function(std::string_view target) {
  const auto& table = function_table();
  auto it = table.find(target);
  if (it == table.end()) {
    throw Error("UnknownFunction", "no registered function '" + std::string(target) + "'");
  }
  return it->second;
}

bool has_function(std::string_view target) { return function_table().count(target) != 0; }

const KernelFn& lookup_method(std::string_view target) {
  const auto& table = method_table();
  auto it = table.find(target);
  if (it == table.end()) {
    throw Error("UnknownMethod", "no registered method '" + std::string(target) + "'");
  }
  return it->second;
}

bool has_method(std::string_view target) { return method_table().count(target) != 0; }

bool is_pure_function(std::string_view target) { return has_function(target); }

bool is_pure_method(std::string_view target) { return has_method(target); }

std::vector<std::string> registered_functions() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : function_table()) names.push_back(name);
  return names;  // std::map iteration is already sorted
}

std::vector<std::string> registered_methods() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : method_table()) names.push_back(name);
  return names;
}

}  // namespace fxir
