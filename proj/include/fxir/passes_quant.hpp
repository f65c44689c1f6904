// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fxir/module.hpp"
#include "fxir/tensor.hpp"

namespace fxir {

/// Post-training quantization knobs.  Activations use affine int8 over
/// [-128, 127]; weights use symmetric int8 (zero_point fixed at 0); the
/// quantizable module kinds are Linear and Conv2d.
struct QuantConfig {
  double scale_floor = 1e-8;  ///< lower bound keeping degenerate ranges usable
};

/// Returns an instrumented copy of `gm`: every value entering or leaving a
/// quantizable call_module node is routed through a MinMax observer, one
/// observer per distinct graph value.  Observers are ordinary child modules
/// ("obs_<i>") called via call_module nodes, so the instrumented model stays
/// a plain graph module.  Running prepare on an already-prepared model adds
/// nothing.
ModulePtr prepare(const ModulePtr& gm, const QuantConfig& cfg = {});

/// Interprets every batch, letting the observers absorb elementwise
/// extremes.  Outputs are bitwise identical to the uninstrumented model's;
/// at least one batch is required.
void calibrate(const ModulePtr& gm_prepared, const std::vector<std::vector<Tensor>>& batches);

/// Rewrites the calibrated model to quantized form:
///   - activation qparams: scale = max(floor, (max-min)/255),
///     zero_point = clamp(round(-128 - min/scale), -128, 127)
///   - weight qparams: scale = max(floor, max|w|/127), zero_point = 0
/// Weights are down-cast to int8 inside fresh "quant_<i>" children; each
/// quantizable node becomes quantize_affine -> quantized op -> dequantize_
/// affine; dequantize->quantize pairs carrying identical qparams between two
/// quantized ops are elided; observers disappear.  Throws
/// UncalibratedObserver (naming the watched value) if any observer never saw
/// data.
ModulePtr convert(const ModulePtr& gm_prepared, const QuantConfig& cfg = {});

/// One line per observer: "<value-name> min=<r> max=<r> n=<int>".
std::string observer_table(const ModulePtr& gm_prepared);

}  // namespace fxir
