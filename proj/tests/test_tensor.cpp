// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "fxir/kernels.hpp"
#include "fxir/rng.hpp"
#include "fxir/tensor.hpp"
#include "test_support.hpp"

using namespace fxir;
using fxir::test::error_kind;
using fxir::test::make_f32;

TEST_CASE("splitmix64 matches the published seed-0 stream") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next() == 0x06C45D188009454FULL);
}

TEST_CASE("splitmix64 streams are reproducible and disjoint") {
  SplitMix64 a = SplitMix64::stream(42, 0);
  SplitMix64 b = SplitMix64::stream(42, 0);
  SplitMix64 c = SplitMix64::stream(42, 1);
  const std::uint64_t first_a = a.next();
  CHECK(first_a == b.next());
  CHECK(first_a != c.next());

  SplitMix64 r(7);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.uniform(-1.0, 1.0);
    CHECK(v >= -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("shape basics") {
  const Shape s{1, 3, 8, 8};
  CHECK(s.rank() == 4);
  CHECK(s.numel() == 192);
  CHECK(s.dim(2) == 8);
  CHECK(s.to_string() == "[1, 3, 8, 8]");
  CHECK(Shape{}.rank() == 0);
  CHECK(Shape{}.numel() == 1);  // a scalar holds one element
  CHECK(Shape{}.to_string() == "[]");

  CHECK(error_kind([] { Shape({1, 2, 3, 4, 5}); }) == "ShapeMismatch");
  CHECK(error_kind([] { Shape({-1}); }) == "ShapeMismatch");
  CHECK(Shape{0}.numel() == 0);  // zero extents are legal
}

TEST_CASE("tensor construction and equality") {
  const Tensor t = make_f32({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
  CHECK(t.dtype() == DType::kF32);
  CHECK(t.numel() == 4);
  CHECK(t.f32_data()[3] == 4.0f);

  CHECK(error_kind([] { Tensor::f32(Shape{3}, {1.0f}); }) == "ShapeMismatch");
  CHECK(error_kind([&] { (void)t.i8_data(); }) == "DtypeMismatch");
  CHECK(error_kind([&] { (void)t.qparams(); }) == "InvalidQuantParams");
  CHECK(error_kind([] { Tensor::i8(Shape{1}, {5}, {0.0, 0}); }) == "InvalidQuantParams");
  CHECK(error_kind([] { Tensor::i8(Shape{1}, {5}, {1.0, 200}); }) == "InvalidQuantParams");

  CHECK(t.bitwise_equal(make_f32({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f})));
  CHECK_FALSE(t.bitwise_equal(make_f32({2, 2}, {1.0f, 2.0f, 3.0f, 5.0f})));
  CHECK_FALSE(t.bitwise_equal(make_f32({4}, {1.0f, 2.0f, 3.0f, 4.0f})));  // shape differs
  const Tensor q1 = Tensor::i8(Shape{1}, {3}, {0.5, 1});
  const Tensor q2 = Tensor::i8(Shape{1}, {3}, {0.5, 2});
  CHECK_FALSE(q1.bitwise_equal(q2));  // qparams are part of identity

  // -0.0f and 0.0f compare equal as floats but differ bitwise.
  CHECK_FALSE(make_f32({1}, {-0.0f}).bitwise_equal(make_f32({1}, {0.0f})));
}

TEST_CASE("format_real is shortest-round-trip and never integer-shaped") {
  CHECK(format_real(1.0) == "1.0");
  CHECK(format_real(-3.0) == "-3.0");
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(3.141592653589793) == "3.141592653589793");

  SplitMix64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const double v = rng.uniform(-1e6, 1e6);
    const std::string text = format_real(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
    CHECK(text.find_first_of(".e") != std::string::npos);
  }
}

TEST_CASE("elementwise kernels against plain loops") {
  const Tensor a = make_f32({4}, {1.0f, -2.0f, 0.0f, 3.5f});
  const Tensor b = make_f32({4}, {0.5f, 4.0f, -1.0f, 2.0f});

  const Tensor sum = ops::add(a, b);
  const Tensor prod = ops::mul(a, b);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(sum.f32_data()[i] == a.f32_data()[i] + b.f32_data()[i]);
    CHECK(prod.f32_data()[i] == a.f32_data()[i] * b.f32_data()[i]);
  }

  const Tensor neg = ops::neg(a);
  const Tensor relu = ops::relu(a);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(neg.f32_data()[i] == -a.f32_data()[i]);
    CHECK(relu.f32_data()[i] == (a.f32_data()[i] > 0.0f ? a.f32_data()[i] : 0.0f));
  }

  CHECK(error_kind([&] { ops::add(a, make_f32({2}, {1.0f, 2.0f})); }) == "ShapeMismatch");
  CHECK(error_kind([&] { ops::relu(ops::shape_of(a)); }) == "DtypeMismatch");

  const Tensor shifted = ops::add_scalar(a, 3.141592653589793);
  CHECK(shifted.f32_data()[0] ==
        static_cast<float>(static_cast<double>(a.f32_data()[0]) + 3.141592653589793));
  const Tensor scaled = ops::mul_scalar(a, -2.0);
  CHECK(scaled.f32_data()[1] == 4.0f);
}

TEST_CASE("gelu matches the erf form evaluated in double") {
  const std::vector<float> xs = {-3.0f, -1.0f, -0.25f, 0.0f, 0.5f, 1.0f, 2.0f, 10.0f};
  const Tensor out = ops::gelu(make_f32({8}, std::vector<float>(xs)));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = static_cast<double>(xs[i]);
    const float expected = static_cast<float>(0.5 * d * (1.0 + std::erf(d / std::sqrt(2.0))));
    CHECK(out.f32_data()[i] == expected);
  }
  CHECK(out.f32_data()[3] == 0.0f);              // gelu(0) = 0
  CHECK(out.f32_data()[5] == doctest::Approx(0.84134474606854293).epsilon(1e-7));
}

TEST_CASE("linear agrees with an independent triple loop, bitwise") {
  SplitMix64 rng(5);
  const std::int64_t n = 3, k = 7, m = 4;
  std::vector<float> xv(n * k), wv(m * k), bv(m);
  for (float& v : xv) v = static_cast<float>(rng.uniform(-1, 1));
  for (float& v : wv) v = static_cast<float>(rng.uniform(-1, 1));
  for (float& v : bv) v = static_cast<float>(rng.uniform(-1, 1));
  const Tensor x = Tensor::f32(Shape{n, k}, xv);
  const Tensor w = Tensor::f32(Shape{m, k}, wv);
  const Tensor bias = Tensor::f32(Shape{m}, bv);

  const Tensor out = ops::linear(x, w, bias);
  REQUIRE(out.shape() == Shape{n, m});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < m; ++j) {
      float acc = 0.0f;
      for (std::int64_t kk = 0; kk < k; ++kk) acc += xv[i * k + kk] * wv[j * k + kk];
      acc += bv[j];
      CHECK(out.f32_data()[static_cast<std::size_t>(i * m + j)] == acc);
    }
  }

  // hand-computed point: [1,2]·[3,4] + 10 = 21
  const Tensor tiny =
      ops::linear(make_f32({1, 2}, {1.0f, 2.0f}), make_f32({1, 2}, {3.0f, 4.0f}),
                  make_f32({1}, {10.0f}));
  CHECK(tiny.f32_data()[0] == 21.0f);

  CHECK(error_kind([&] { ops::linear(x, make_f32({2, 3}, {1, 2, 3, 4, 5, 6}), {}); }) ==
        "ShapeMismatch");
  CHECK(error_kind([&] { ops::linear(x, w, make_f32({2}, {0.0f, 0.0f})); }) == "ShapeMismatch");
}

TEST_CASE("matmul agrees with an independent triple loop") {
  const Tensor a = make_f32({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = make_f32({3, 2}, {7, 8, 9, 10, 11, 12});
  const Tensor out = ops::matmul(a, b);
  REQUIRE(out.shape() == Shape{2, 2});
  CHECK(out.f32_data()[0] == 58.0f);   // 1*7 + 2*9 + 3*11
  CHECK(out.f32_data()[1] == 64.0f);
  CHECK(out.f32_data()[2] == 139.0f);
  CHECK(out.f32_data()[3] == 154.0f);
  CHECK(error_kind([&] { ops::matmul(a, a); }) == "ShapeMismatch");
}

namespace {

/// Direct convolution written independently of the library kernel: same
/// zero-padding semantics, same (cin, kh, kw) float accumulation order.
Tensor conv_reference(const Tensor& x, const Tensor& w, const Tensor* bias, std::int64_t sh,
                      std::int64_t sw, std::int64_t ph, std::int64_t pw) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const std::int64_t hout = (xs.dim(2) + 2 * ph - ws.dim(2)) / sh + 1;
  const std::int64_t wout = (xs.dim(3) + 2 * pw - ws.dim(3)) / sw + 1;
  std::vector<float> out;
  for (std::int64_t b = 0; b < xs.dim(0); ++b)
    for (std::int64_t oc = 0; oc < ws.dim(0); ++oc)
      for (std::int64_t oy = 0; oy < hout; ++oy)
        for (std::int64_t ox = 0; ox < wout; ++ox) {
          float acc = 0.0f;
          for (std::int64_t ic = 0; ic < xs.dim(1); ++ic)
            for (std::int64_t ky = 0; ky < ws.dim(2); ++ky)
              for (std::int64_t kx = 0; kx < ws.dim(3); ++kx) {
                const std::int64_t iy = oy * sh - ph + ky;
                const std::int64_t ix = ox * sw - pw + kx;
                if (iy < 0 || iy >= xs.dim(2) || ix < 0 || ix >= xs.dim(3)) continue;
                acc += x.f32_data()[static_cast<std::size_t>(
                           ((b * xs.dim(1) + ic) * xs.dim(2) + iy) * xs.dim(3) + ix)] *
                       w.f32_data()[static_cast<std::size_t>(
                           ((oc * ws.dim(1) + ic) * ws.dim(2) + ky) * ws.dim(3) + kx)];
              }
          if (bias != nullptr) acc += bias->f32_data()[static_cast<std::size_t>(oc)];
          out.push_back(acc);
        }
  return Tensor::f32(Shape{xs.dim(0), ws.dim(0), hout, wout}, std::move(out));
}

}  // namespace

TEST_CASE("conv2d agrees with an independent direct convolution, bitwise") {
  SplitMix64 rng(9);
  std::vector<float> xv(1 * 3 * 8 * 8), wv(4 * 3 * 3 * 3), bv(4);
  for (float& v : xv) v = static_cast<float>(rng.uniform(-1, 1));
  for (float& v : wv) v = static_cast<float>(rng.uniform(-1, 1));
  for (float& v : bv) v = static_cast<float>(rng.uniform(-1, 1));
  const Tensor x = Tensor::f32(Shape{1, 3, 8, 8}, xv);
  const Tensor w = Tensor::f32(Shape{4, 3, 3, 3}, wv);
  const Tensor bias = Tensor::f32(Shape{4}, bv);

  const Tensor got = ops::conv2d(x, w, bias, {2, 2}, {1, 1});
  const Tensor want = conv_reference(x, w, &bias, 2, 2, 1, 1);
  REQUIRE(got.shape() == Shape{1, 4, 4, 4});  // floor((8 + 2 - 3) / 2) + 1 = 4
  CHECK(got.bitwise_equal(want));

  // identity kernel: 1x1 conv with unit weight copies the input
  const Tensor eye = ops::conv2d(x, Tensor::f32(Shape{1, 3, 1, 1}, {1.0f, 0.0f, 0.0f}), {},
                                 {1, 1}, {0, 0});
  for (std::size_t i = 0; i < 64; ++i) CHECK(eye.f32_data()[i] == xv[i]);

  CHECK(error_kind([&] { ops::conv2d(x, w, bias, {0, 1}, {0, 0}); }) == "ShapeMismatch");
  CHECK(error_kind([&] {
          ops::conv2d(Tensor::zeros(Shape{1, 1, 2, 2}), Tensor::zeros(Shape{1, 1, 3, 3}), {},
                      {1, 1}, {0, 0});
        }) == "EmptyOutput");
}

TEST_CASE("batch_norm2d normalizes per channel in double precision") {
  // gamma=2, beta=0.5, mean=1, var=3, eps=1 -> (x - 1) / 2 * 2 + 0.5
  const Tensor x = make_f32({1, 1, 2, 2}, {1.0f, 3.0f, 5.0f, -1.0f});
  const Tensor out = ops::batch_norm2d(x, make_f32({1}, {2.0f}), make_f32({1}, {0.5f}),
                                       make_f32({1}, {1.0f}), make_f32({1}, {3.0f}), 1.0);
  CHECK(out.f32_data()[0] == 0.5f);
  CHECK(out.f32_data()[1] == 2.5f);
  CHECK(out.f32_data()[2] == 4.5f);
  CHECK(out.f32_data()[3] == -1.5f);

  // gamma=1, beta=0, mean=0, var=1, eps=0 is the identity
  const Tensor id = ops::batch_norm2d(x, make_f32({1}, {1.0f}), make_f32({1}, {0.0f}),
                                      make_f32({1}, {0.0f}), make_f32({1}, {1.0f}), 0.0);
  CHECK(id.bitwise_equal(x));

  CHECK(error_kind([&] {
          ops::batch_norm2d(x, make_f32({2}, {1.0f, 1.0f}), make_f32({1}, {0.0f}),
                            make_f32({1}, {0.0f}), make_f32({1}, {1.0f}), 0.0);
        }) == "ShapeMismatch");
}

TEST_CASE("quantize rounds half away from zero and clamps to int8") {
  const Tensor x = make_f32({7}, {0.5f, -0.5f, 1.49f, -1.5f, 300.0f, -300.0f, 0.0f});
  const Tensor q = ops::quantize_affine(x, {1.0, 0});
  CHECK(q.dtype() == DType::kI8);
  CHECK(q.i8_data()[0] == 1);     // round(0.5) away from zero
  CHECK(q.i8_data()[1] == -1);
  CHECK(q.i8_data()[2] == 1);
  CHECK(q.i8_data()[3] == -2);
  CHECK(q.i8_data()[4] == 127);   // clamped
  CHECK(q.i8_data()[5] == -128);
  CHECK(q.i8_data()[6] == 0);
  CHECK(q.qparams() == QuantParams{1.0, 0});

  const Tensor q2 = ops::quantize_affine(make_f32({2}, {0.25f, -1.0f}), {0.5, 3});
  CHECK(q2.i8_data()[0] == 4);    // round(0.5) + 3
  CHECK(q2.i8_data()[1] == 1);    // -2 + 3

  const Tensor back = ops::dequantize_affine(q2);
  CHECK(back.dtype() == DType::kF32);
  CHECK(back.f32_data()[0] == 0.5f);
  CHECK(back.f32_data()[1] == -1.0f);

  CHECK(error_kind([&] { ops::quantize_affine(x, {0.0, 0}); }) == "InvalidQuantParams");
}

TEST_CASE("quantize-dequantize error stays within half a step") {
  SplitMix64 rng(3);
  const double lo = -2.0, hi = 2.0;
  const double scale = (hi - lo) / 255.0;
  const std::int32_t zp = static_cast<std::int32_t>(std::round(-128.0 - lo / scale));
  std::vector<float> xs(1000);
  for (float& v : xs) v = static_cast<float>(rng.uniform(lo, hi));
  const Tensor x = Tensor::f32(Shape{1000}, xs);
  const Tensor round_trip = ops::dequantize_affine(ops::quantize_affine(x, {scale, zp}));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(std::abs(static_cast<double>(round_trip.f32_data()[i]) - xs[i]) <=
          scale / 2.0 + 1e-7);
  }
}

TEST_CASE("quantized kernels are the dequantize-compute-requantize composition") {
  const QuantParams in{0.05, -3}, wp{0.02, 0}, outp{0.1, 5};
  const Tensor xq = Tensor::i8(Shape{2, 3}, {1, -5, 30, 7, 0, -128}, in);
  const Tensor wq = Tensor::i8(Shape{2, 3}, {10, 20, -30, 5, 5, 5}, wp);
  const Tensor bias = make_f32({2}, {0.5f, -0.5f});

  const Tensor got = ops::quantized_linear(xq, wq, bias, outp);
  const Tensor want = ops::quantize_affine(
      ops::linear(ops::dequantize_affine(xq), ops::dequantize_affine(wq), bias), outp);
  CHECK(got.bitwise_equal(want));
}

TEST_CASE("cat concatenates along the requested dim") {
  const Tensor a = make_f32({2, 2}, {1, 2, 3, 4});
  const Tensor b = make_f32({1, 2}, {5, 6});
  const Tensor rows = ops::cat({a, b}, 0);
  REQUIRE(rows.shape() == Shape{3, 2});
  CHECK(rows.f32_data()[4] == 5.0f);
  CHECK(rows.f32_data()[5] == 6.0f);

  const Tensor c = make_f32({2, 1}, {7, 8});
  const Tensor cols = ops::cat({a, c}, 1);
  REQUIRE(cols.shape() == Shape{2, 3});
  const std::vector<float> expected = {1, 2, 7, 3, 4, 8};
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(cols.f32_data()[i] == expected[i]);

  CHECK(error_kind([&] { ops::cat({a, b}, 1); }) == "ShapeMismatch");  // rows disagree
  CHECK(error_kind([&] { ops::cat({}, 0); }) == "ShapeMismatch");
  CHECK(error_kind([&] { ops::cat({a}, 2); }) == "ShapeMismatch");
}

TEST_CASE("reshape, shape and ndim") {
  const Tensor x = make_f32({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor flat = ops::reshape(x, {6});
  REQUIRE(flat.shape() == Shape{6});
  for (std::size_t i = 0; i < 6; ++i) CHECK(flat.f32_data()[i] == x.f32_data()[i]);
  CHECK(error_kind([&] { ops::reshape(x, {4}); }) == "ShapeMismatch");

  const Tensor s = ops::shape_of(x);
  CHECK(s.dtype() == DType::kI32);
  REQUIRE(s.shape() == Shape{2});
  CHECK(s.i32_data()[0] == 2);
  CHECK(s.i32_data()[1] == 3);

  const Tensor nd = ops::ndim_of(x);
  CHECK(nd.shape() == Shape{});
  CHECK(nd.i32_data()[0] == 2);
}
