// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fxir/errors.hpp"

namespace fxir {

enum class DType { kF32, kI8, kI32 };

std::string_view dtype_name(DType dtype);

/// Bytes per element: F32 = 4, I8 = 1, I32 = 4.
std::int64_t dtype_size(DType dtype);

/// Affine quantization parameters for an I8 tensor:
///   real = (quantized - zero_point) * scale.
struct QuantParams {
  double scale = 1.0;        // must be > 0
  std::int32_t zero_point = 0;  // must lie in [-128, 127]

  bool operator==(const QuantParams&) const = default;
};

/// Dense row-major shape, rank 0 through 4.  dims may be zero (empty
/// tensors are legal inputs everywhere except where a kernel's output
/// would be empty).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::int64_t> dims);
  explicit Shape(std::vector<std::int64_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::int64_t numel() const;
  std::int64_t dim(std::size_t axis) const;
  const std::vector<std::int64_t>& dims() const { return dims_; }

  bool operator==(const Shape&) const = default;

  /// "[1, 3, 8, 8]"; scalars render as "[]".
  std::string to_string() const;

 private:
  void validate() const;

  std::vector<std::int64_t> dims_;
};

/// Immutable dense tensor.  The element buffer is flat row-major; an I8
/// tensor always carries QuantParams, other dtypes never do.  All kernels
/// produce fresh tensors, so values can be shared freely across graphs,
/// environments and module state without defensive copies.
class Tensor {
 public:
  static Tensor f32(Shape shape, std::vector<float> data);
  static Tensor zeros(Shape shape);  // F32
  static Tensor full(Shape shape, float value);
  static Tensor i8(Shape shape, std::vector<std::int8_t> data, QuantParams qparams);
  static Tensor i32(Shape shape, std::vector<std::int32_t> data);

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return shape_.numel(); }

  std::span<const float> f32_data() const;
  std::span<const std::int8_t> i8_data() const;
  std::span<const std::int32_t> i32_data() const;

  /// Only meaningful for I8 tensors; throws InvalidQuantParams otherwise.
  const QuantParams& qparams() const;

  /// Exact equality: same shape, dtype, quantization parameters and
  /// bit-identical element buffers.
  bool bitwise_equal(const Tensor& other) const;

  /// "tensor(shape=[4], dtype=f32, data=[0, 1.5, -2, 3])"
  std::string to_string() const;

 private:
  Tensor() = default;

  Shape shape_;
  DType dtype_ = DType::kF32;
  std::variant<std::vector<float>, std::vector<std::int8_t>, std::vector<std::int32_t>> data_;
  std::optional<QuantParams> qparams_;
};

/// Renders a double with the fewest digits that parse back to the same
/// value (at most 17 significant), always including '.' or an exponent so
/// integers and reals stay distinguishable in serialized text.
std::string format_real(double value);

}  // namespace fxir
