// SPDX-License-Identifier: Apache-2.0
#include "fxir/zoo.hpp"

#include <utility>

#include "fxir/errors.hpp"
#include "fxir/proxy.hpp"
#include "fxir/rng.hpp"
#include "fxir/tracer.hpp"

namespace fxir {
namespace {

ModulePtr make_demo_fig1() {
  return Module::user({"x"}, [](TraceContext&, std::vector<Proxy> inputs) {
    return fn::relu(inputs[0]).neg();
  });
}

ModulePtr make_demo_loop() {
  return Module::user({"x"}, [](TraceContext&, std::vector<Proxy> inputs) {
    Proxy x = inputs[0];
    for (std::int64_t i = 0; x.ndim() > i; ++i) x = fn::relu(x);
    return x;
  });
}

ModulePtr make_mlp3(SplitMix64& rng) {
  return Module::sequential({
      {"lin1", Module::linear(8, 16, true, rng)},
      {"act1", Module::relu()},
      {"lin2", Module::linear(16, 16, true, rng)},
      {"act2", Module::relu()},
      {"lin3", Module::linear(16, 4, true, rng)},
  });
}

ModulePtr make_convbn_net(SplitMix64& rng) {
  return Module::sequential({
      {"conv1", Module::conv2d(3, 4, {3, 3}, {2, 2}, {1, 1}, true, rng)},
      {"bn1", Module::batch_norm2d(4, 1e-5, rng)},
      {"act1", Module::relu()},
      {"conv2", Module::conv2d(4, 4, {3, 3}, {1, 1}, {1, 1}, true, rng)},
      {"bn2", Module::batch_norm2d(4, 1e-5, rng)},
      {"act2", Module::relu()},
  });
}

ModulePtr make_autoenc(SplitMix64& rng) {
  return Module::sequential({
      {"enc1", Module::linear(16, 8, true, rng)},
      {"act1", Module::gelu()},
      {"enc2", Module::linear(8, 4, true, rng)},
      {"act2", Module::gelu()},
      {"dec1", Module::linear(4, 8, true, rng)},
      {"act3", Module::gelu()},
      {"dec2", Module::linear(8, 16, true, rng)},
  });
}

}  // namespace

std::vector<std::string> zoo_names() {
  return {"demo_fig1", "mlp3", "convbn_net", "autoenc", "demo_loop"};
}

bool is_zoo_model(std::string_view name) {
  for (const std::string& known : zoo_names())
    if (known == name) return true;
  return false;
}

ModulePtr make_zoo_model(std::string_view name, std::uint64_t seed) {
  SplitMix64 rng(seed);
  if (name == "demo_fig1") return make_demo_fig1();
  if (name == "demo_loop") return make_demo_loop();
  if (name == "mlp3") return make_mlp3(rng);
  if (name == "convbn_net") return make_convbn_net(rng);
  if (name == "autoenc") return make_autoenc(rng);
  throw Error("UnknownModel", "no zoo model named '" + std::string(name) + "'");
}

Shape zoo_default_input_shape(std::string_view name) {
  if (name == "demo_fig1" || name == "demo_loop") return Shape{4};
  if (name == "mlp3") return Shape{1, 8};
  if (name == "convbn_net") return Shape{1, 3, 8, 8};
  if (name == "autoenc") return Shape{1, 16};
  throw Error("UnknownModel", "no zoo model named '" + std::string(name) + "'");
}

Tensor seeded_input(const Shape& shape, std::uint64_t seed, std::uint64_t index) {
  SplitMix64 rng = SplitMix64::stream(seed, index);
  std::vector<float> data(static_cast<std::size_t>(shape.numel()));
  for (float& v : data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return Tensor::f32(shape, std::move(data));
}

}  // namespace fxir
