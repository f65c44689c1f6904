// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fxir/graph.hpp"
#include "fxir/ordered_dict.hpp"
#include "fxir/proxy.hpp"
#include "fxir/rng.hpp"
#include "fxir/tensor.hpp"

namespace fxir {

class Module;
using ModulePtr = std::shared_ptr<Module>;
class TraceContext;

/// Body of a user-defined composite: receives the module's trace context
/// (for calling children and fetching attributes) and one proxy per
/// declared input.  User modules only ever execute by being traced first.
using UserForward = std::function<Proxy(TraceContext&, std::vector<Proxy>)>;

enum class ModuleKind {
  kLinear,
  kConv2d,
  kBatchNorm2d,
  kReLU,
  kGELU,
  kSequential,
  kUser,
  kGraphModule,
  kObserver,  // min/max recorder attached by the quantization pipeline
};

std::string_view module_kind_name(ModuleKind kind);

/// True for the computation leaves Linear/Conv2d/BatchNorm2d/ReLU/GELU
/// (and observers, which must stay opaque while tracing).
bool is_builtin_leaf(ModuleKind kind);

/// Kind-specific hyperparameters; unused fields keep their defaults.
struct ModuleConfig {
  std::int64_t in_features = 0;
  std::int64_t out_features = 0;
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::pair<std::int64_t, std::int64_t> kernel{0, 0};
  std::pair<std::int64_t, std::int64_t> stride{1, 1};
  std::pair<std::int64_t, std::int64_t> padding{0, 0};
  double eps = 1e-5;
  bool bias = true;
};

/// Running extremes recorded by an observer module during calibration.
struct ObserverState {
  double running_min = std::numeric_limits<double>::infinity();
  double running_max = -std::numeric_limits<double>::infinity();
  std::int64_t samples_seen = 0;
  std::string observed_value;  // graph value this observer watches
};

/// A named tree of parameters, buffers and child modules.
///
/// Parameters and buffers are immutable tensors held in insertion-ordered
/// maps; transformations replace map entries rather than mutating tensors.
/// A module of kind GraphModule additionally owns a captured Graph plus the
/// generated text form, and acts as the state root its graph's
/// call_module/get_attr targets resolve against.
class Module : public std::enable_shared_from_this<Module> {
 public:
  /// Fresh parameters are drawn from `rng`, uniform in [-0.1, 0.1]; batch
  /// norm statistics use mean ~ U[-0.5, 0.5] and var ~ U[0.5, 1.5].  The
  /// constants are fixed so a (builder, seed) pair is fully reproducible.
  static ModulePtr linear(std::int64_t in_features, std::int64_t out_features, bool bias,
                          SplitMix64& rng);
  static ModulePtr conv2d(std::int64_t in_channels, std::int64_t out_channels,
                          std::pair<std::int64_t, std::int64_t> kernel,
                          std::pair<std::int64_t, std::int64_t> stride,
                          std::pair<std::int64_t, std::int64_t> padding, bool bias,
                          SplitMix64& rng);
  static ModulePtr batch_norm2d(std::int64_t channels, double eps, SplitMix64& rng);
  static ModulePtr relu();
  static ModulePtr gelu();
  static ModulePtr sequential(std::vector<std::pair<std::string, ModulePtr>> children);
  static ModulePtr user(std::vector<std::string> input_names, UserForward forward);
  static ModulePtr observer();

  ModuleKind kind() const { return kind_; }
  const ModuleConfig& config() const { return config_; }
  ModuleConfig& config() { return config_; }

  const OrderedDict<Tensor>& params() const { return params_; }
  const OrderedDict<Tensor>& buffers() const { return buffers_; }
  const OrderedDict<ModulePtr>& children() const { return children_; }

  void set_param(std::string_view name, Tensor value);
  void set_buffer(std::string_view name, Tensor value);
  void set_child(std::string_view name, ModulePtr child);
  void remove_child(std::string_view name);  ///< no-op when absent

  /// Declared input names; placeholders take these names when traced.
  const std::vector<std::string>& input_names() const { return input_names_; }

  const UserForward& user_forward() const { return user_forward_; }

  /// GraphModule surface.  graph() throws UnsupportedKind elsewhere.
  bool has_graph() const { return graph_ != nullptr; }
  Graph& graph();
  const Graph& graph() const;
  const std::string& code() const { return code_; }
  void set_code(std::string code) { code_ = std::move(code); }

  /// Observer surface (shared so copied module tables keep one state).
  const std::shared_ptr<ObserverState>& observer_state() const { return observer_state_; }

 private:
  Module() = default;
  friend ModulePtr make_graph_module(const ModulePtr& state_source, Graph graph);

  ModuleKind kind_ = ModuleKind::kUser;
  ModuleConfig config_;
  OrderedDict<Tensor> params_;
  OrderedDict<Tensor> buffers_;
  OrderedDict<ModulePtr> children_;
  std::vector<std::string> input_names_{"x"};
  UserForward user_forward_;
  std::shared_ptr<Graph> graph_;
  std::string code_;
  std::shared_ptr<ObserverState> observer_state_;
};

/// What a dotted path can name inside a module tree.
using PathTarget = std::variant<ModulePtr, Tensor>;

/// Walks `path` ("block.lin1.weight") from `root` through children, then
/// parameters/buffers at the final segment.  Throws PathNotFound naming the
/// segment that failed to resolve.
PathTarget resolve_path(const ModulePtr& root, std::string_view path);

/// Convenience: resolve and require a module / tensor.
ModulePtr resolve_module(const ModulePtr& root, std::string_view path);
Tensor resolve_tensor(const ModulePtr& root, std::string_view path);

/// Installs `value` at `path`, replacing whatever the final segment names
/// (or creating a fresh entry: modules become children, tensors become
/// parameters).  All segments but the last must already resolve.
void set_at_path(const ModulePtr& root, std::string_view path, PathTarget value);

/// Runs `m` concretely on `inputs`.  Builtin leaves apply their kernel,
/// Sequential composes its children, a GraphModule is interpreted, and an
/// observer records extremes and passes its input through.  User modules
/// raise UnsupportedKind: they execute only via trace-then-interpret.
Tensor forward_eval(const ModulePtr& m, const std::vector<Tensor>& inputs);

}  // namespace fxir
