// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fxir/module.hpp"
#include "fxir/tensor.hpp"

namespace fxir {

/// Built-in demonstration models, each reconstructible bit-for-bit from a
/// seed:
///   demo_fig1   user module computing relu(x).neg(); input [4]
///   mlp3        three Linear layers with ReLU between; input [1, 8]
///   convbn_net  two Conv2d->BatchNorm2d->ReLU blocks; input [1, 3, 8, 8]
///   autoenc     16->8->4->8->16 Linear autoencoder, GELU between; [1, 16]
///   demo_loop   user module looping until a traced rank — untraceable by
///               design, kept to demonstrate the control-flow rejection
std::vector<std::string> zoo_names();

bool is_zoo_model(std::string_view name);

/// Constructs the named model with parameters drawn from `seed` in child
/// order.  Throws UnknownModel for names outside the zoo.
ModulePtr make_zoo_model(std::string_view name, std::uint64_t seed);

/// The input shape each model's documentation examples use.
Shape zoo_default_input_shape(std::string_view name);

/// Deterministic synthetic input: elements uniform in [-1, 1) drawn from
/// the (seed, index) stream, so batch i and batch j never overlap.
Tensor seeded_input(const Shape& shape, std::uint64_t seed, std::uint64_t index);

}  // namespace fxir
