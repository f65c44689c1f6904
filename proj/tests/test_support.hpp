// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fxir/errors.hpp"
#include "fxir/tensor.hpp"

namespace fxir::test {

/// Runs `fn` and reports the kind of the Error it throws ("" when it
/// returns normally), so checks can assert on stable kind strings.
inline std::string error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return "";
}

inline Tensor make_f32(std::initializer_list<std::int64_t> dims, std::vector<float> data) {
  return Tensor::f32(Shape(std::vector<std::int64_t>(dims)), std::move(data));
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a.f32_data()[std::size_t(i)]) -
                                     static_cast<double>(b.f32_data()[std::size_t(i)])));
  }
  return worst;
}

}  // namespace fxir::test
