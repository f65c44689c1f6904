// SPDX-License-Identifier: Apache-2.0
#include "fxir/kernels.hpp"

#include <cmath>
#include <string>

namespace fxir::ops {
namespace {

void require_f32(const Tensor& t, const char* op) {
  if (t.dtype() != DType::kF32) {
    throw Error("DtypeMismatch", std::string(op) + ": expected f32 input, got " +
                                     std::string(dtype_name(t.dtype())));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error("ShapeMismatch", std::string(op) + ": " + a.shape().to_string() + " vs " +
                                     b.shape().to_string());
  }
}

template <typename F>
Tensor elementwise(const Tensor& x, const char* op, F&& f) {
  require_f32(x, op);
  auto in = x.f32_data();
  std::vector<float> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return Tensor::f32(x.shape(), std::move(out));
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F&& f) {
  require_f32(a, op);
  require_f32(b, op);
  require_same_shape(a, b, op);
  auto xa = a.f32_data();
  auto xb = b.f32_data();
  std::vector<float> out(xa.size());
  for (std::size_t i = 0; i < xa.size(); ++i) out[i] = f(xa[i], xb[i]);
  return Tensor::f32(a.shape(), std::move(out));
}

/// round-half-away-from-zero, the single rounding rule used by every
/// quantization path.  std::round already rounds halves away from zero.
std::int32_t round_away(double v) { return static_cast<std::int32_t>(std::round(v)); }

std::int8_t clamp_i8(std::int64_t v) {
  if (v < -128) return -128;
  if (v > 127) return 127;
  return static_cast<std::int8_t>(v);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](float x, float y) { return x + y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, "mul", [](float x, float y) { return x * y; });
}

Tensor neg(const Tensor& x) {
  return elementwise(x, "neg", [](float v) { return -v; });
}

Tensor relu(const Tensor& x) {
  return elementwise(x, "relu", [](float v) { return v > 0.0f ? v : 0.0f; });
}

Tensor gelu(const Tensor& x) {
  return elementwise(x, "gelu", [](float v) {
    const double d = static_cast<double>(v);
    return static_cast<float>(0.5 * d * (1.0 + std::erf(d / std::sqrt(2.0))));
  });
}

Tensor add_scalar(const Tensor& a, double b) {
  return elementwise(a, "add", [b](float v) {
    return static_cast<float>(static_cast<double>(v) + b);
  });
}

Tensor mul_scalar(const Tensor& a, double b) {
  return elementwise(a, "mul", [b](float v) {
    return static_cast<float>(static_cast<double>(v) * b);
  });
}

Tensor cat(const std::vector<Tensor>& parts, std::int64_t dim) {
  if (parts.empty()) throw Error("ShapeMismatch", "cat: empty input list");
  const Shape& first = parts.front().shape();
  if (dim < 0 || static_cast<std::size_t>(dim) >= first.rank()) {
    throw Error("ShapeMismatch", "cat: dim " + std::to_string(dim) + " out of range for " +
                                     first.to_string());
  }
  std::int64_t cat_extent = 0;
  for (const Tensor& t : parts) {
    require_f32(t, "cat");
    if (t.shape().rank() != first.rank()) {
      throw Error("ShapeMismatch", "cat: rank mismatch " + t.shape().to_string() + " vs " +
                                       first.to_string());
    }
    for (std::size_t axis = 0; axis < first.rank(); ++axis) {
      if (axis != static_cast<std::size_t>(dim) && t.shape().dim(axis) != first.dim(axis)) {
        throw Error("ShapeMismatch", "cat: " + t.shape().to_string() + " vs " +
                                         first.to_string() + " along axis " +
                                         std::to_string(axis));
      }
    }
    cat_extent += t.shape().dim(static_cast<std::size_t>(dim));
  }

  std::vector<std::int64_t> out_dims = first.dims();
  out_dims[static_cast<std::size_t>(dim)] = cat_extent;
  Shape out_shape(out_dims);

  // outer = product of dims before `dim`, inner = product after; each input
  // contributes contiguous (own_extent * inner) runs per outer index.
  std::int64_t outer = 1;
  for (std::int64_t axis = 0; axis < dim; ++axis) outer *= first.dim(static_cast<std::size_t>(axis));
  std::int64_t inner = 1;
  for (std::size_t axis = static_cast<std::size_t>(dim) + 1; axis < first.rank(); ++axis) {
    inner *= first.dim(axis);
  }

  std::vector<float> out(static_cast<std::size_t>(out_shape.numel()));
  std::int64_t dest_run = cat_extent * inner;
  std::int64_t offset = 0;
  for (const Tensor& t : parts) {
    auto src = t.f32_data();
    std::int64_t run = t.shape().dim(static_cast<std::size_t>(dim)) * inner;
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t i = 0; i < run; ++i) {
        out[static_cast<std::size_t>(o * dest_run + offset + i)] =
            src[static_cast<std::size_t>(o * run + i)];
      }
    }
    offset += run;
  }
  return Tensor::f32(std::move(out_shape), std::move(out));
}

Tensor linear(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias) {
  require_f32(x, "linear");
  require_f32(weight, "linear");
  if (x.shape().rank() != 2 || weight.shape().rank() != 2) {
    throw Error("ShapeMismatch", "linear: expected 2-D input and weight, got " +
                                     x.shape().to_string() + " and " + weight.shape().to_string());
  }
  const std::int64_t n = x.shape().dim(0);
  const std::int64_t k = x.shape().dim(1);
  const std::int64_t m = weight.shape().dim(0);
  if (weight.shape().dim(1) != k) {
    throw Error("ShapeMismatch", "linear: input " + x.shape().to_string() + " vs weight " +
                                     weight.shape().to_string());
  }
  if (bias) {
    require_f32(*bias, "linear");
    if (bias->shape() != Shape{m}) {
      throw Error("ShapeMismatch",
                  "linear: bias " + bias->shape().to_string() + " for out features " +
                      std::to_string(m));
    }
  }

  auto xd = x.f32_data();
  auto wd = weight.f32_data();
  std::vector<float> out(static_cast<std::size_t>(n * m));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < m; ++j) {
      float acc = 0.0f;
      for (std::int64_t kk = 0; kk < k; ++kk) {
        acc += xd[static_cast<std::size_t>(i * k + kk)] * wd[static_cast<std::size_t>(j * k + kk)];
      }
      if (bias) acc += bias->f32_data()[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i * m + j)] = acc;
    }
  }
  return Tensor::f32(Shape{n, m}, std::move(out));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_f32(a, "matmul");
  require_f32(b, "matmul");
  if (a.shape().rank() != 2 || b.shape().rank() != 2 || a.shape().dim(1) != b.shape().dim(0)) {
    throw Error("ShapeMismatch",
                "matmul: " + a.shape().to_string() + " x " + b.shape().to_string());
  }
  const std::int64_t n = a.shape().dim(0);
  const std::int64_t k = a.shape().dim(1);
  const std::int64_t m = b.shape().dim(1);
  auto ad = a.f32_data();
  auto bd = b.f32_data();
  std::vector<float> out(static_cast<std::size_t>(n * m));
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < m; ++j) {
      float acc = 0.0f;
      for (std::int64_t kk = 0; kk < k; ++kk) {
        acc += ad[static_cast<std::size_t>(i * k + kk)] * bd[static_cast<std::size_t>(kk * m + j)];
      }
      out[static_cast<std::size_t>(i * m + j)] = acc;
    }
  }
  return Tensor::f32(Shape{n, m}, std::move(out));
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const std::optional<Tensor>& bias,
              std::pair<std::int64_t, std::int64_t> stride,
              std::pair<std::int64_t, std::int64_t> padding) {
  require_f32(x, "conv2d");
  require_f32(weight, "conv2d");
  if (x.shape().rank() != 4 || weight.shape().rank() != 4) {
    throw Error("ShapeMismatch", "conv2d: expected [N, C, H, W] input and [Cout, Cin, kH, kW] "
                                 "weight, got " + x.shape().to_string() + " and " +
                                     weight.shape().to_string());
  }
  const auto [sh, sw] = stride;
  const auto [ph, pw] = padding;
  if (sh < 1 || sw < 1) {
    throw Error("ShapeMismatch", "conv2d: stride must be >= 1");
  }
  if (ph < 0 || pw < 0) {
    throw Error("ShapeMismatch", "conv2d: padding must be >= 0");
  }
  const std::int64_t n = x.shape().dim(0);
  const std::int64_t cin = x.shape().dim(1);
  const std::int64_t h = x.shape().dim(2);
  const std::int64_t w = x.shape().dim(3);
  const std::int64_t cout = weight.shape().dim(0);
  const std::int64_t kh = weight.shape().dim(2);
  const std::int64_t kw = weight.shape().dim(3);
  if (weight.shape().dim(1) != cin) {
    throw Error("ShapeMismatch", "conv2d: input channels " + std::to_string(cin) +
                                     " vs weight " + weight.shape().to_string());
  }
  if (bias) {
    require_f32(*bias, "conv2d");
    if (bias->shape() != Shape{cout}) {
      throw Error("ShapeMismatch", "conv2d: bias " + bias->shape().to_string() +
                                       " for out channels " + std::to_string(cout));
    }
  }
  const std::int64_t hout = (h + 2 * ph - kh) / sh + 1;
  const std::int64_t wout = (w + 2 * pw - kw) / sw + 1;
  if (h + 2 * ph < kh || w + 2 * pw < kw || hout < 1 || wout < 1) {
    throw Error("EmptyOutput", "conv2d: output would be empty for input " +
                                   x.shape().to_string() + " with kernel " +
                                   weight.shape().to_string());
  }

  auto xd = x.f32_data();
  auto wd = weight.f32_data();
  std::vector<float> out(static_cast<std::size_t>(n * cout * hout * wout));
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oc = 0; oc < cout; ++oc) {
      for (std::int64_t oy = 0; oy < hout; ++oy) {
        for (std::int64_t ox = 0; ox < wout; ++ox) {
          float acc = 0.0f;
          for (std::int64_t ic = 0; ic < cin; ++ic) {
            for (std::int64_t ky = 0; ky < kh; ++ky) {
              for (std::int64_t kx = 0; kx < kw; ++kx) {
                const std::int64_t iy = oy * sh - ph + ky;
                const std::int64_t ix = ox * sw - pw + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;  // zero padding
                acc += xd[static_cast<std::size_t>(((b * cin + ic) * h + iy) * w + ix)] *
                       wd[static_cast<std::size_t>(((oc * cin + ic) * kh + ky) * kw + kx)];
              }
            }
          }
          if (bias) acc += bias->f32_data()[static_cast<std::size_t>(oc)];
          out[static_cast<std::size_t>(((b * cout + oc) * hout + oy) * wout + ox)] = acc;
        }
      }
    }
  }
  return Tensor::f32(Shape{n, cout, hout, wout}, std::move(out));
}

Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                    const Tensor& var, double eps) {
  require_f32(x, "batch_norm2d");
  if (x.shape().rank() != 4) {
    throw Error("ShapeMismatch",
                "batch_norm2d: expected [N, C, H, W] input, got " + x.shape().to_string());
  }
  const std::int64_t c = x.shape().dim(1);
  for (auto [t, what] : std::initializer_list<std::pair<const Tensor*, const char*>>{
           {&gamma, "gamma"}, {&beta, "beta"}, {&mean, "mean"}, {&var, "var"}}) {
    require_f32(*t, "batch_norm2d");
    if (t->shape() != Shape{c}) {
      throw Error("ShapeMismatch", std::string("batch_norm2d: ") + what + " " +
                                       t->shape().to_string() + " for " + std::to_string(c) +
                                       " channels");
    }
  }

  auto xd = x.f32_data();
  auto gd = gamma.f32_data();
  auto bd = beta.f32_data();
  auto md = mean.f32_data();
  auto vd = var.f32_data();
  const std::int64_t n = x.shape().dim(0);
  const std::int64_t hw = x.shape().dim(2) * x.shape().dim(3);
  std::vector<float> out(xd.size());
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double inv = 1.0 / std::sqrt(static_cast<double>(vd[static_cast<std::size_t>(ch)]) + eps);
      const double m = static_cast<double>(md[static_cast<std::size_t>(ch)]);
      const double g = static_cast<double>(gd[static_cast<std::size_t>(ch)]);
      const double bb = static_cast<double>(bd[static_cast<std::size_t>(ch)]);
      for (std::int64_t i = 0; i < hw; ++i) {
        const std::size_t idx = static_cast<std::size_t>((b * c + ch) * hw + i);
        out[idx] = static_cast<float>((static_cast<double>(xd[idx]) - m) * inv * g + bb);
      }
    }
  }
  return Tensor::f32(x.shape(), std::move(out));
}

Tensor quantize_affine(const Tensor& x, QuantParams params) {
  require_f32(x, "quantize_affine");
  if (!(params.scale > 0.0)) {
    throw Error("InvalidQuantParams", "scale must be positive, got " + format_real(params.scale));
  }
  auto xd = x.f32_data();
  std::vector<std::int8_t> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const std::int64_t q =
        static_cast<std::int64_t>(round_away(static_cast<double>(xd[i]) / params.scale)) +
        params.zero_point;
    out[i] = clamp_i8(q);
  }
  return Tensor::i8(x.shape(), std::move(out), params);
}

Tensor dequantize_affine(const Tensor& q) {
  auto qd = q.i8_data();
  const QuantParams& p = q.qparams();
  std::vector<float> out(qd.size());
  for (std::size_t i = 0; i < qd.size(); ++i) {
    out[i] = static_cast<float>((static_cast<double>(qd[i]) - p.zero_point) * p.scale);
  }
  return Tensor::f32(q.shape(), std::move(out));
}

Tensor quantized_linear(const Tensor& xq, const Tensor& wq, const std::optional<Tensor>& bias,
                        QuantParams out_params) {
  return quantize_affine(linear(dequantize_affine(xq), dequantize_affine(wq), bias), out_params);
}

Tensor quantized_conv2d(const Tensor& xq, const Tensor& wq, const std::optional<Tensor>& bias,
                        std::pair<std::int64_t, std::int64_t> stride,
                        std::pair<std::int64_t, std::int64_t> padding, QuantParams out_params) {
  return quantize_affine(conv2d(dequantize_affine(xq), dequantize_affine(wq), bias, stride, padding),
                         out_params);
}

Tensor reshape(const Tensor& x, const std::vector<std::int64_t>& dims) {
  require_f32(x, "reshape");
  Shape target(dims);
  if (target.numel() != x.numel()) {
    throw Error("ShapeMismatch", "reshape: " + x.shape().to_string() + " has " +
                                     std::to_string(x.numel()) + " elements, target " +
                                     target.to_string() + " needs " +
                                     std::to_string(target.numel()));
  }
  auto xd = x.f32_data();
  return Tensor::f32(std::move(target), std::vector<float>(xd.begin(), xd.end()));
}

Tensor shape_of(const Tensor& x) {
  std::vector<std::int32_t> dims;
  dims.reserve(x.shape().rank());
  for (std::int64_t d : x.shape().dims()) dims.push_back(static_cast<std::int32_t>(d));
  // Taken before the move below: argument evaluation order is unspecified.
  const Shape result_shape{static_cast<std::int64_t>(dims.size())};
  return Tensor::i32(result_shape, std::move(dims));
}

Tensor ndim_of(const Tensor& x) {
  return Tensor::i32(Shape{}, {static_cast<std::int32_t>(x.shape().rank())});
}

}  // namespace fxir::ops
