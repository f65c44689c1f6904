// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fxir/graph.hpp"
#include "fxir/module.hpp"
#include "fxir/proxy.hpp"

namespace fxir {

/// Everything a hook can see about a node that is about to be recorded.
struct NodeCreation {
  OpCode op;
  std::string target;
  ArgList args;
  KwargDict kwargs;
};

/// Hook reply.  The default records the node unchanged; `annotate` records
/// it and copies `meta` onto it; `substitute` vetoes the node entirely and
/// the given value flows onward in its place.
struct HookResult {
  static HookResult keep() { return HookResult{}; }
  static HookResult annotate(std::map<std::string, std::string> meta) {
    HookResult r;
    r.meta = std::move(meta);
    return r;
  }
  static HookResult substitute(Argument value) {
    HookResult r;
    r.record_node = false;
    r.value = std::move(value);
    return r;
  }

  bool record_node = true;
  Argument value;
  std::map<std::string, std::string> meta;
};

using ProxyHook = std::function<HookResult(const NodeCreation&)>;

/// Decides whether the child at `path` is recorded as one opaque
/// call_module node (true) or traced through (false).
using LeafPredicate = std::function<bool(const ModulePtr&, const std::string& path)>;

struct TracerConfig {
  LeafPredicate leaf_predicate;  ///< default: builtin leaf kinds only
  ProxyHook proxy_hook;          ///< optional; runs on every node creation
};

/// One in-progress capture: owns the graph under construction and routes
/// every node creation through the configured hook.  Sessions are used from
/// a single thread and discarded after the trace completes.
class TraceSession {
 public:
  explicit TraceSession(TracerConfig config = {}, ModulePtr root = nullptr);

  /// Records one node (subject to the hook) and returns its proxy.
  Proxy create_proxy(OpCode op, std::string target, ArgList args = {}, KwargDict kwargs = {});

  Proxy placeholder(const std::string& name, std::optional<Argument> default_value = {});

  /// Appends the output node and releases the finished graph.
  Graph finish(const Proxy& result);

  Graph& graph() { return graph_; }
  const TracerConfig& config() const { return config_; }
  const ModulePtr& root() const { return root_; }

 private:
  TracerConfig config_;
  ModulePtr root_;
  Graph graph_;
};

/// Handle given to a user-defined forward body: lets it invoke children and
/// fetch parameters of the module being traced, by path relative to it.
class TraceContext {
 public:
  TraceContext(TraceSession& session, ModulePtr module, std::string path);

  /// Traces the child at `child_path` on `args`: leaves record a single
  /// call_module node, composites are traced through.
  Proxy call(std::string_view child_path, std::vector<Proxy> args);

  /// Records a get_attr of the parameter or buffer at `attr_path`.
  Proxy attr(std::string_view attr_path);

  TraceSession& session() { return *session_; }
  const ModulePtr& module() const { return module_; }
  const std::string& path() const { return path_; }

 private:
  TraceSession* session_;
  ModulePtr module_;
  std::string path_;  // dotted path of module_ from the trace root ("" there)
};

/// A free function traced directly, without a module tree.
using TraceableFunction = std::function<Proxy(TraceSession&, std::vector<Proxy>)>;

/// Captures `root` into a graph module: placeholders take the root's input
/// names, non-leaf children are traced through, leaves become call_module
/// nodes, parameter reads become get_attr nodes, and a child graph module
/// is inlined node-by-node.  Throws TraceError on data-dependent control
/// flow, concrete coercion, or unsupported operations.
ModulePtr symbolic_trace(const ModulePtr& root, TracerConfig config = {});

/// Captures a free function of `input_names.size()` abstract values.  The
/// result carries no state, so the graph may not use call_module/get_attr.
ModulePtr symbolic_trace_function(const std::vector<std::string>& input_names,
                                  const TraceableFunction& fn, TracerConfig config = {});

}  // namespace fxir
