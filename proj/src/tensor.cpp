// SPDX-License-Identifier: Apache-2.0
#include "fxir/tensor.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>

namespace fxir {
namespace {

constexpr std::size_t kMaxRank = 4;

std::string join_dims(const std::vector<std::int64_t>& dims) {
  std::string out = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i != 0) out += ", ";
    out += std::to_string(dims[i]);
  }
  out += "]";
  return out;
}

}  // namespace

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::kF32: return "f32";
    case DType::kI8: return "i8";
    case DType::kI32: return "i32";
  }
  return "?";
}

std::int64_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kF32: return 4;
    case DType::kI8: return 1;
    case DType::kI32: return 4;
  }
  return 0;
}

Shape::Shape(std::initializer_list<std::int64_t> dims) : dims_(dims) { validate(); }

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) { validate(); }

void Shape::validate() const {
  if (dims_.size() > kMaxRank) {
    throw Error("ShapeMismatch",
                "rank " + std::to_string(dims_.size()) + " exceeds the supported maximum of 4");
  }
  for (std::int64_t d : dims_) {
    if (d < 0) {
      throw Error("ShapeMismatch", "negative dimension in shape " + join_dims(dims_));
    }
  }
}

std::int64_t Shape::numel() const {
  std::int64_t n = 1;
  for (std::int64_t d : dims_) n *= d;
  return n;
}

std::int64_t Shape::dim(std::size_t axis) const {
  if (axis >= dims_.size()) {
    throw Error("ShapeMismatch", "axis " + std::to_string(axis) + " out of range for shape " +
                                     to_string());
  }
  return dims_[axis];
}

std::string Shape::to_string() const { return join_dims(dims_); }

Tensor Tensor::f32(Shape shape, std::vector<float> data) {
  if (static_cast<std::int64_t>(data.size()) != shape.numel()) {
    throw Error("ShapeMismatch", "buffer holds " + std::to_string(data.size()) +
                                     " elements but shape " + shape.to_string() + " needs " +
                                     std::to_string(shape.numel()));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = DType::kF32;
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  std::vector<float> data(static_cast<std::size_t>(shape.numel()), 0.0f);
  return f32(std::move(shape), std::move(data));
}

Tensor Tensor::full(Shape shape, float value) {
  std::vector<float> data(static_cast<std::size_t>(shape.numel()), value);
  return f32(std::move(shape), std::move(data));
}

Tensor Tensor::i8(Shape shape, std::vector<std::int8_t> data, QuantParams qparams) {
  if (static_cast<std::int64_t>(data.size()) != shape.numel()) {
    throw Error("ShapeMismatch", "buffer holds " + std::to_string(data.size()) +
                                     " elements but shape " + shape.to_string() + " needs " +
                                     std::to_string(shape.numel()));
  }
  if (!(qparams.scale > 0.0)) {
    throw Error("InvalidQuantParams", "scale must be positive, got " + format_real(qparams.scale));
  }
  if (qparams.zero_point < -128 || qparams.zero_point > 127) {
    throw Error("InvalidQuantParams",
                "zero_point " + std::to_string(qparams.zero_point) + " outside [-128, 127]");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = DType::kI8;
  t.data_ = std::move(data);
  t.qparams_ = qparams;
  return t;
}

Tensor Tensor::i32(Shape shape, std::vector<std::int32_t> data) {
  if (static_cast<std::int64_t>(data.size()) != shape.numel()) {
    throw Error("ShapeMismatch", "buffer holds " + std::to_string(data.size()) +
                                     " elements but shape " + shape.to_string() + " needs " +
                                     std::to_string(shape.numel()));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.dtype_ = DType::kI32;
  t.data_ = std::move(data);
  return t;
}

std::span<const float> Tensor::f32_data() const {
  if (dtype_ != DType::kF32) {
    throw Error("DtypeMismatch",
                std::string("expected f32 tensor, got ") + std::string(dtype_name(dtype_)));
  }
  return std::get<std::vector<float>>(data_);
}

std::span<const std::int8_t> Tensor::i8_data() const {
  if (dtype_ != DType::kI8) {
    throw Error("DtypeMismatch",
                std::string("expected i8 tensor, got ") + std::string(dtype_name(dtype_)));
  }
  return std::get<std::vector<std::int8_t>>(data_);
}

std::span<const std::int32_t> Tensor::i32_data() const {
  if (dtype_ != DType::kI32) {
    throw Error("DtypeMismatch",
                std::string("expected i32 tensor, got ") + std::string(dtype_name(dtype_)));
  }
  return std::get<std::vector<std::int32_t>>(data_);
}

const QuantParams& Tensor::qparams() const {
  if (!qparams_) {
    throw Error("InvalidQuantParams",
                std::string(dtype_name(dtype_)) + " tensor carries no quantization parameters");
  }
  return *qparams_;
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (shape_ != other.shape_ || dtype_ != other.dtype_ || qparams_ != other.qparams_) {
    return false;
  }
  switch (dtype_) {
    case DType::kF32: {
      auto a = f32_data();
      auto b = other.f32_data();
      for (std::size_t i = 0; i < a.size(); ++i) {
        // Compare representations, not values: 0.0 vs -0.0 and NaN payloads
        // must be visible to bit-exactness checks.
        if (std::memcmp(&a[i], &b[i], sizeof(float)) != 0) return false;
      }
      return true;
    }
    case DType::kI8: {
      auto a = i8_data();
      auto b = other.i8_data();
      return std::equal(a.begin(), a.end(), b.begin());
    }
    case DType::kI32: {
      auto a = i32_data();
      auto b = other.i32_data();
      return std::equal(a.begin(), a.end(), b.begin());
    }
  }
  return false;
}

std::string Tensor::to_string() const {
  std::string out = "tensor(shape=" + shape_.to_string() + ", dtype=" +
                    std::string(dtype_name(dtype_));
  if (qparams_) {
    out += ", scale=" + format_real(qparams_->scale) +
           ", zero_point=" + std::to_string(qparams_->zero_point);
  }
  out += ", data=[";
  const std::int64_t n = numel();
  for (std::int64_t i = 0; i < n; ++i) {
    if (i != 0) out += ", ";
    switch (dtype_) {
      case DType::kF32: out += format_real(static_cast<double>(f32_data()[i])); break;
      case DType::kI8: out += std::to_string(static_cast<int>(i8_data()[i])); break;
      case DType::kI32: out += std::to_string(i32_data()[i]); break;
    }
  }
  out += "])";
  return out;
}

std::string format_real(double value) {
  char buf[40];
  auto result = std::to_chars(buf, buf + sizeof(buf), value);
  std::string text(buf, result.ptr);
  // to_chars emits the shortest round-trip form, which drops ".0" from whole
  // numbers; restore it so the text never reads back as an integer.  The 'n'
  // check keeps "inf"/"nan" (and their signs) untouched.
  if (text.find_first_of(".en") == std::string::npos) text += ".0";
  return text;
}

}  // namespace fxir
