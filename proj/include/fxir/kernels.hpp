// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fxir/tensor.hpp"

namespace fxir::ops {

/// Elementwise kernels.  F32 only, identical shapes, no broadcasting; a
/// non-F32 input raises DtypeMismatch, a shape disagreement ShapeMismatch.
/// Every kernel is pure and bitwise deterministic: same inputs, same bits.
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor relu(const Tensor& x);

/// Exact formulation 0.5 * x * (1 + erf(x / sqrt(2))), evaluated in double
/// per element and rounded once to f32.
Tensor gelu(const Tensor& x);

/// Scalar variants used when a recorded operand was an immediate.
Tensor add_scalar(const Tensor& a, double b);
Tensor mul_scalar(const Tensor& a, double b);

/// Concatenates along `dim`; inputs must agree on every other dimension.
Tensor cat(const std::vector<Tensor>& parts, std::int64_t dim);

/// out[n, m] = sum_k x[n, k] * w[m, k] (+ bias[m]); x is [N, K], weight is
/// [M, K].  Accumulation runs over ascending k in float, matching the naive
/// triple loop exactly.
Tensor linear(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias);

/// out[n, m] = sum_k a[n, k] * b[k, m]; a is [N, K], b is [K, M].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Direct convolution over [N, Cin, H, W] with weight [Cout, Cin, kH, kW].
///   Hout = floor((H + 2*pad - kH) / stride) + 1 (likewise W).
/// Zero padding, accumulation over (cin, kh, kw) ascending in float.
/// Raises EmptyOutput when either output extent would be < 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias,
              std::pair<std::int64_t, std::int64_t> stride,
              std::pair<std::int64_t, std::int64_t> padding);

/// Inference-mode normalization over channel dimension 1 of [N, C, H, W]:
///   out = (x - mean_c) / sqrt(var_c + eps) * gamma_c + beta_c
/// evaluated per element in double, rounded once to f32.
Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                    const Tensor& var, double eps);

/// q = clamp(round(x / scale) + zero_point, -128, 127) with round-half-away-
/// from-zero.  Result is I8 carrying `params`.
Tensor quantize_affine(const Tensor& x, QuantParams params);

/// dq = (q - zero_point) * scale, back to F32.
Tensor dequantize_affine(const Tensor& q);

/// Simulated int8 compute: dequantize operands, run the float kernel, then
/// requantize the result with `out_params`.  Bias stays in float.
Tensor quantized_linear(const Tensor& xq, const Tensor& wq, const std::optional<Tensor>& bias,
                        QuantParams out_params);
Tensor quantized_conv2d(const Tensor& xq, const Tensor& wq, const std::optional<Tensor>& bias,
                        std::pair<std::int64_t, std::int64_t> stride,
                        std::pair<std::int64_t, std::int64_t> padding, QuantParams out_params);

/// Row-major reinterpretation to a new shape with the same element count.
Tensor reshape(const Tensor& x, const std::vector<std::int64_t>& dims);

/// shape() -> 1-D I32 tensor of extents; ndim() -> scalar I32 rank.
Tensor shape_of(const Tensor& x);
Tensor ndim_of(const Tensor& x);

}  // namespace fxir::ops
