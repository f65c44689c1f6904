// SPDX-License-Identifier: Apache-2.0
#include "fxir/module.hpp"

#include <cmath>

#include "fxir/graph_module.hpp"
#include "fxir/kernels.hpp"

namespace fxir {
namespace {

Tensor uniform_tensor(Shape shape, double lo, double hi, SplitMix64& rng) {
  std::vector<float> data(static_cast<std::size_t>(shape.numel()));
  for (float& v : data) v = static_cast<float>(rng.uniform(lo, hi));
  return Tensor::f32(std::move(shape), std::move(data));
}

const Tensor& require_param(const Module& m, std::string_view name) {
  const Tensor* t = m.params().find(name);
  if (t == nullptr) {
    throw Error("PathNotFound", "module has no parameter '" + std::string(name) + "'");
  }
  return *t;
}

const Tensor& require_buffer(const Module& m, std::string_view name) {
  const Tensor* t = m.buffers().find(name);
  if (t == nullptr) {
    throw Error("PathNotFound", "module has no buffer '" + std::string(name) + "'");
  }
  return *t;
}

const Tensor& single_input(const std::vector<Tensor>& inputs, ModuleKind kind) {
  if (inputs.size() != 1) {
    throw Error("ArityMismatch", std::string(module_kind_name(kind)) + " takes 1 input, got " +
                                     std::to_string(inputs.size()));
  }
  return inputs.front();
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = path.find('.', start);
    if (dot == std::string_view::npos) {
      parts.push_back(path.substr(start));
      return parts;
    }
    parts.push_back(path.substr(start, dot - start));
    start = dot + 1;
  }
}

}  // namespace

std::string_view module_kind_name(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::kLinear: return "Linear";
    case ModuleKind::kConv2d: return "Conv2d";
    case ModuleKind::kBatchNorm2d: return "BatchNorm2d";
    case ModuleKind::kReLU: return "ReLU";
    case ModuleKind::kGELU: return "GELU";
    case ModuleKind::kSequential: return "Sequential";
    case ModuleKind::kUser: return "User";
    case ModuleKind::kGraphModule: return "GraphModule";
    case ModuleKind::kObserver: return "Observer";
  }
  return "?";
}

bool is_builtin_leaf(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::kLinear:
    case ModuleKind::kConv2d:
    case ModuleKind::kBatchNorm2d:
    case ModuleKind::kReLU:
    case ModuleKind::kGELU:
    case ModuleKind::kObserver:
      return true;
    default:
      return false;
  }
}

ModulePtr Module::linear(std::int64_t in_features, std::int64_t out_features, bool bias,
                         SplitMix64& rng) {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kLinear;
  m->config_.in_features = in_features;
  m->config_.out_features = out_features;
  m->config_.bias = bias;
  m->params_.set("weight", uniform_tensor(Shape{out_features, in_features}, -0.1, 0.1, rng));
  if (bias) m->params_.set("bias", uniform_tensor(Shape{out_features}, -0.1, 0.1, rng));
  return m;
}

ModulePtr Module::conv2d(std::int64_t in_channels, std::int64_t out_channels,
                         std::pair<std::int64_t, std::int64_t> kernel,
                         std::pair<std::int64_t, std::int64_t> stride,
                         std::pair<std::int64_t, std::int64_t> padding, bool bias,
                         SplitMix64& rng) {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kConv2d;
  m->config_.in_channels = in_channels;
  m->config_.out_channels = out_channels;
  m->config_.kernel = kernel;
  m->config_.stride = stride;
  m->config_.padding = padding;
  m->config_.bias = bias;
  m->params_.set("weight", uniform_tensor(Shape{out_channels, in_channels, kernel.first,
                                                kernel.second},
                                          -0.1, 0.1, rng));
  if (bias) m->params_.set("bias", uniform_tensor(Shape{out_channels}, -0.1, 0.1, rng));
  return m;
}

ModulePtr Module::batch_norm2d(std::int64_t channels, double eps, SplitMix64& rng) {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kBatchNorm2d;
  m->config_.in_channels = channels;
  m->config_.out_channels = channels;
  m->config_.eps = eps;
  m->params_.set("weight", uniform_tensor(Shape{channels}, -0.1, 0.1, rng));
  m->params_.set("bias", uniform_tensor(Shape{channels}, -0.1, 0.1, rng));
  m->buffers_.set("running_mean", uniform_tensor(Shape{channels}, -0.5, 0.5, rng));
  m->buffers_.set("running_var", uniform_tensor(Shape{channels}, 0.5, 1.5, rng));
  return m;
}

ModulePtr Module::relu() {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kReLU;
  return m;
}

ModulePtr Module::gelu() {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kGELU;
  return m;
}

ModulePtr Module::sequential(std::vector<std::pair<std::string, ModulePtr>> children) {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kSequential;
  for (auto& [name, child] : children) {
    if (!is_identifier(name)) {
      throw Error("BadTarget", "child name '" + name + "' is not an identifier");
    }
    m->children_.set(name, std::move(child));
  }
  return m;
}

ModulePtr Module::user(std::vector<std::string> input_names, UserForward forward) {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kUser;
  m->input_names_ = std::move(input_names);
  m->user_forward_ = std::move(forward);
  return m;
}

ModulePtr Module::observer() {
  ModulePtr m(new Module());
  m->kind_ = ModuleKind::kObserver;
  m->observer_state_ = std::make_shared<ObserverState>();
  return m;
}

void Module::set_param(std::string_view name, Tensor value) {
  if (!is_identifier(name)) {
    throw Error("BadTarget", "parameter name '" + std::string(name) + "' is not an identifier");
  }
  params_.set(name, std::move(value));
}

void Module::set_buffer(std::string_view name, Tensor value) {
  if (!is_identifier(name)) {
    throw Error("BadTarget", "buffer name '" + std::string(name) + "' is not an identifier");
  }
  buffers_.set(name, std::move(value));
}

void Module::set_child(std::string_view name, ModulePtr child) {
  if (!is_identifier(name)) {
    throw Error("BadTarget", "child name '" + std::string(name) + "' is not an identifier");
  }
  children_.set(name, std::move(child));
}

void Module::remove_child(std::string_view name) { children_.erase(name); }

Graph& Module::graph() {
  if (graph_ == nullptr) {
    throw Error("UnsupportedKind",
                std::string(module_kind_name(kind_)) + " module carries no graph");
  }
  return *graph_;
}

const Graph& Module::graph() const {
  if (graph_ == nullptr) {
    throw Error("UnsupportedKind",
                std::string(module_kind_name(kind_)) + " module carries no graph");
  }
  return *graph_;
}

PathTarget resolve_path(const ModulePtr& root, std::string_view path) {
  if (root == nullptr) throw Error("PathNotFound", "no root module");
  std::vector<std::string_view> parts = split_path(path);
  ModulePtr current = root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const ModulePtr* child = current->children().find(parts[i]);
    if (child == nullptr) {
      throw Error("PathNotFound", "segment '" + std::string(parts[i]) + "' of path '" +
                                      std::string(path) + "' does not resolve");
    }
    current = *child;
  }
  std::string_view leaf = parts.back();
  if (const Tensor* param = current->params().find(leaf)) return *param;
  if (const Tensor* buffer = current->buffers().find(leaf)) return *buffer;
  if (const ModulePtr* child = current->children().find(leaf)) return *child;
  throw Error("PathNotFound", "segment '" + std::string(leaf) + "' of path '" +
                                  std::string(path) + "' does not resolve");
}

ModulePtr resolve_module(const ModulePtr& root, std::string_view path) {
  PathTarget target = resolve_path(root, path);
  if (auto* m = std::get_if<ModulePtr>(&target)) return *m;
  throw Error("PathNotFound", "path '" + std::string(path) + "' names a tensor, not a module");
}

Tensor resolve_tensor(const ModulePtr& root, std::string_view path) {
  PathTarget target = resolve_path(root, path);
  if (auto* t = std::get_if<Tensor>(&target)) return *t;
  throw Error("PathNotFound", "path '" + std::string(path) + "' names a module, not a tensor");
}

void set_at_path(const ModulePtr& root, std::string_view path, PathTarget value) {
  if (root == nullptr) throw Error("PathNotFound", "no root module");
  std::vector<std::string_view> parts = split_path(path);
  ModulePtr current = root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    const ModulePtr* child = current->children().find(parts[i]);
    if (child == nullptr) {
      throw Error("PathNotFound", "segment '" + std::string(parts[i]) + "' of path '" +
                                      std::string(path) + "' does not resolve");
    }
    current = *child;
  }
  std::string_view leaf = parts.back();
  if (auto* m = std::get_if<ModulePtr>(&value)) {
    if (current->params().contains(leaf) || current->buffers().contains(leaf)) {
      throw Error("BadTarget",
                  "path '" + std::string(path) + "' names a tensor; cannot install a module");
    }
    current->set_child(leaf, std::move(*m));
    return;
  }
  Tensor tensor = std::get<Tensor>(std::move(value));
  if (current->children().contains(leaf)) {
    throw Error("BadTarget",
                "path '" + std::string(path) + "' names a module; cannot install a tensor");
  }
  if (current->buffers().contains(leaf)) {
    current->set_buffer(leaf, std::move(tensor));
  } else {
    current->set_param(leaf, std::move(tensor));  // replaces or creates; shapes are not checked
  }
}

Tensor forward_eval(const ModulePtr& m, const std::vector<Tensor>& inputs) {
  if (m == nullptr) throw Error("PathNotFound", "no module to evaluate");
  switch (m->kind()) {
    case ModuleKind::kReLU:
      return ops::relu(single_input(inputs, m->kind()));
    case ModuleKind::kGELU:
      return ops::gelu(single_input(inputs, m->kind()));
    case ModuleKind::kLinear: {
      const Tensor& x = single_input(inputs, m->kind());
      std::optional<Tensor> bias;
      if (const Tensor* b = m->params().find("bias")) bias = *b;
      return ops::linear(x, require_param(*m, "weight"), bias);
    }
    case ModuleKind::kConv2d: {
      const Tensor& x = single_input(inputs, m->kind());
      std::optional<Tensor> bias;
      if (const Tensor* b = m->params().find("bias")) bias = *b;
      return ops::conv2d(x, require_param(*m, "weight"), bias, m->config().stride,
                         m->config().padding);
    }
    case ModuleKind::kBatchNorm2d: {
      const Tensor& x = single_input(inputs, m->kind());
      return ops::batch_norm2d(x, require_param(*m, "weight"), require_param(*m, "bias"),
                               require_buffer(*m, "running_mean"),
                               require_buffer(*m, "running_var"), m->config().eps);
    }
    case ModuleKind::kSequential: {
      if (m->children().empty()) {
        throw Error("UnsupportedKind", "empty Sequential has no forward");
      }
      std::vector<Tensor> current = inputs;
      for (const auto& [name, child] : m->children()) {
        current = {forward_eval(child, current)};
      }
      return current.front();
    }
    case ModuleKind::kGraphModule: {
      Value result = interpret(m, inputs);
      if (const Tensor* t = result.if_tensor()) return *t;
      throw Error("UnsupportedKind", "graph output is not a tensor");
    }
    case ModuleKind::kObserver: {
      const Tensor& x = single_input(inputs, m->kind());
      ObserverState& state = *m->observer_state();
      if (x.dtype() == DType::kF32) {
        for (float v : x.f32_data()) {
          const double d = static_cast<double>(v);
          if (d < state.running_min) state.running_min = d;
          if (d > state.running_max) state.running_max = d;
        }
      }
      state.samples_seen += 1;
      return x;  // pass-through: instrumentation never changes the value
    }
    case ModuleKind::kUser:
      throw Error("UnsupportedKind",
                  "User modules execute only via trace-then-interpret");
  }
  throw Error("UnsupportedKind", "unknown module kind");
}

}  // namespace fxir
