// SPDX-License-Identifier: Apache-2.0
#include "fxir/tracer.hpp"

#include <unordered_map>
#include <utility>

#include "fxir/graph_module.hpp"
#include "fxir/registry.hpp"
#include "fxir/tensor.hpp"

namespace fxir {
namespace {

std::string join_path(const std::string& prefix, std::string_view rest) {
  if (prefix.empty()) return std::string(rest);
  return prefix + "." + std::string(rest);
}

const Proxy& single_proxy(const std::vector<Proxy>& inputs, const ModulePtr& m,
                          const std::string& path) {
  if (inputs.size() != 1) {
    throw Error("ArityMismatch", std::string(module_kind_name(m->kind())) + " at '" +
                                     (path.empty() ? std::string("<root>") : path) +
                                     "' takes 1 input, got " + std::to_string(inputs.size()));
  }
  return inputs.front();
}

Proxy trace_module_body(TraceSession& s, const ModulePtr& m, const std::string& path,
                        std::vector<Proxy> inputs);

/// Leaf children collapse to one opaque call; composites are traced through.
Proxy trace_child(TraceSession& s, const ModulePtr& child, const std::string& full_path,
                  std::vector<Proxy> inputs) {
  bool leaf = is_builtin_leaf(child->kind());
  if (s.config().leaf_predicate) leaf = s.config().leaf_predicate(child, full_path);
  if (child->kind() == ModuleKind::kObserver) leaf = true;  // observers stay atomic
  if (leaf) {
    ArgList args;
    args.reserve(inputs.size());
    for (const Proxy& p : inputs) args.push_back(p.arg());
    return s.create_proxy(OpCode::kCallModule, full_path, std::move(args));
  }
  return trace_module_body(s, child, full_path, std::move(inputs));
}

/// Replays a captured child graph into the current session: placeholders
/// bind to the call-site values, interior nodes are re-recorded one by one
/// (with call_module/get_attr targets re-rooted under `path`), and the
/// value the child returned becomes the call's result.
Proxy inline_graph(TraceSession& s, const ModulePtr& gm, const std::string& path,
                   const std::vector<Proxy>& inputs) {
  const Graph& g = gm->graph();
  std::unordered_map<const Node*, Argument> env;

  const std::vector<const Node*> placeholders = g.placeholder_nodes();
  if (inputs.size() > placeholders.size()) {
    throw Error("ArityMismatch", "graph at '" + (path.empty() ? std::string("<root>") : path) +
                                     "' declares " + std::to_string(placeholders.size()) +
                                     " input(s), got " + std::to_string(inputs.size()));
  }
  for (std::size_t i = 0; i < placeholders.size(); ++i) {
    if (i < inputs.size()) {
      env.emplace(placeholders[i], inputs[i].arg());
    } else if (!placeholders[i]->args().empty()) {
      env.emplace(placeholders[i], placeholders[i]->args().front());
    } else {
      throw Error("ArityMismatch", "no value bound to input '" + placeholders[i]->name() +
                                       "' of the graph at '" + path + "'");
    }
  }

  const std::function<Argument(const Argument&)> remap = [&](const Argument& arg) -> Argument {
    if (arg.is_node()) return env.at(arg.as_node());
    if (arg.is_list()) {
      Argument::List items;
      items.reserve(arg.as_list().size());
      for (const Argument& item : arg.as_list()) items.push_back(remap(item));
      return Argument::list(std::move(items));
    }
    if (arg.is_dict()) {
      Argument::Dict items;
      items.reserve(arg.as_dict().size());
      for (const auto& [key, value] : arg.as_dict()) items.emplace_back(key, remap(value));
      return Argument::dict(std::move(items));
    }
    return arg;
  };

  for (const Node* n : g.nodes()) {
    if (n->op() == OpCode::kPlaceholder) continue;
    if (n->op() == OpCode::kOutput) {
      return Proxy(&s, remap(n->args().front()));
    }
    ArgList args;
    args.reserve(n->args().size());
    for (const Argument& arg : n->args()) args.push_back(remap(arg));
    KwargDict kwargs;
    kwargs.reserve(n->kwargs().size());
    for (const auto& [key, arg] : n->kwargs()) kwargs.emplace_back(key, remap(arg));
    std::string target = n->target();
    if (n->op() == OpCode::kCallModule || n->op() == OpCode::kGetAttr) {
      target = join_path(path, target);
    }
    Proxy replayed = s.create_proxy(n->op(), std::move(target), std::move(args),
                                    std::move(kwargs));
    env.emplace(n, replayed.arg());
  }
  throw Error("UnsupportedKind", "graph at '" + path + "' has no output node");
}

Proxy trace_module_body(TraceSession& s, const ModulePtr& m, const std::string& path,
                        std::vector<Proxy> inputs) {
  switch (m->kind()) {
    case ModuleKind::kReLU:
      return s.create_proxy(OpCode::kCallFunction, "relu",
                            {single_proxy(inputs, m, path).arg()});
    case ModuleKind::kGELU:
      return s.create_proxy(OpCode::kCallFunction, "gelu",
                            {single_proxy(inputs, m, path).arg()});
    case ModuleKind::kLinear: {
      const Proxy& x = single_proxy(inputs, m, path);
      Proxy w = s.create_proxy(OpCode::kGetAttr, join_path(path, "weight"));
      Argument bias = Argument::none();
      if (m->params().contains("bias")) {
        bias = s.create_proxy(OpCode::kGetAttr, join_path(path, "bias")).arg();
      }
      return s.create_proxy(OpCode::kCallFunction, "linear", {x.arg(), w.arg(), bias});
    }
    case ModuleKind::kConv2d: {
      const Proxy& x = single_proxy(inputs, m, path);
      Proxy w = s.create_proxy(OpCode::kGetAttr, join_path(path, "weight"));
      Argument bias = Argument::none();
      if (m->params().contains("bias")) {
        bias = s.create_proxy(OpCode::kGetAttr, join_path(path, "bias")).arg();
      }
      const ModuleConfig& cfg = m->config();
      Argument stride = Argument::list(
          {Argument::of(cfg.stride.first), Argument::of(cfg.stride.second)});
      Argument padding = Argument::list(
          {Argument::of(cfg.padding.first), Argument::of(cfg.padding.second)});
      return s.create_proxy(OpCode::kCallFunction, "conv2d",
                            {x.arg(), w.arg(), bias, stride, padding});
    }
    case ModuleKind::kBatchNorm2d: {
      const Proxy& x = single_proxy(inputs, m, path);
      Proxy w = s.create_proxy(OpCode::kGetAttr, join_path(path, "weight"));
      Proxy b = s.create_proxy(OpCode::kGetAttr, join_path(path, "bias"));
      Proxy mean = s.create_proxy(OpCode::kGetAttr, join_path(path, "running_mean"));
      Proxy var = s.create_proxy(OpCode::kGetAttr, join_path(path, "running_var"));
      return s.create_proxy(
          OpCode::kCallFunction, "batch_norm2d",
          {x.arg(), w.arg(), b.arg(), mean.arg(), var.arg(), Argument::of(m->config().eps)});
    }
    case ModuleKind::kObserver:
      // Only reachable as the trace root; as a child, trace_child always
      // records observers as opaque calls.
      throw Error("UnsupportedKind", "an observer cannot be the trace root");
    case ModuleKind::kSequential: {
      if (m->children().empty()) {
        throw Error("UnsupportedKind", "empty Sequential has no forward");
      }
      std::vector<Proxy> current = std::move(inputs);
      for (const auto& [name, child] : m->children()) {
        current = {trace_child(s, child, join_path(path, name), std::move(current))};
      }
      return current.front();
    }
    case ModuleKind::kUser: {
      if (!m->user_forward()) {
        throw Error("UnsupportedKind", "user module at '" + path + "' has no forward body");
      }
      TraceContext ctx(s, m, path);
      return m->user_forward()(ctx, std::move(inputs));
    }
    case ModuleKind::kGraphModule:
      return inline_graph(s, m, path, inputs);
  }
  throw Error("UnsupportedKind", "unknown module kind");
}

}  // namespace

// ---------------------------------------------------------------------------
// Proxy

Proxy::Proxy(TraceSession* session, Argument value)
    : session_(session), value_(std::move(value)) {}

std::string Proxy::describe() const {
  return value_.is_node() ? value_.as_node()->name() : value_.to_string();
}

Proxy Proxy::binop(const std::string& op, const Proxy& rhs) const {
  return binop(op, rhs.value_);
}

Proxy Proxy::binop(const std::string& op, const Argument& rhs) const {
  if (op != "add" && op != "mul" && op != "matmul") {
    throw TraceError(TraceFault::kUnsupportedOperation, describe(),
                     "operator '" + op + "' is not recordable");
  }
  return session_->create_proxy(OpCode::kCallFunction, op, {value_, rhs});
}

Proxy Proxy::method(const std::string& name, ArgList extra_args, KwargDict kwargs) const {
  if (!has_method(name)) {
    std::string whitelist;
    for (const std::string& m : registered_methods()) {
      if (!whitelist.empty()) whitelist += ", ";
      whitelist += m;
    }
    throw TraceError(TraceFault::kUnsupportedOperation, describe(),
                     "method '" + name + "' is not recordable (known methods: " + whitelist +
                         ")");
  }
  ArgList args;
  args.reserve(extra_args.size() + 1);
  args.push_back(value_);  // args[0] is self
  for (Argument& a : extra_args) args.push_back(std::move(a));
  return session_->create_proxy(OpCode::kCallMethod, name, std::move(args), std::move(kwargs));
}

Proxy Proxy::reshape(const std::vector<std::int64_t>& dims) const {
  Argument::List items;
  items.reserve(dims.size());
  for (std::int64_t d : dims) items.push_back(Argument::of(d));
  return method("reshape", {Argument::list(std::move(items))});
}

std::int64_t Proxy::as_int() const {
  throw TraceError(TraceFault::kConcreteCoercion, describe(),
                   "cannot coerce a traced value to a concrete integer");
}

double Proxy::as_real() const {
  throw TraceError(TraceFault::kConcreteCoercion, describe(),
                   "cannot coerce a traced value to a concrete real");
}

void Proxy::raise_control_flow(const char* what) const {
  throw TraceError(TraceFault::kControlFlowOnProxy, describe(), what);
}

Proxy::operator bool() const {
  raise_control_flow("truth of a traced value would decide control flow at capture time");
}

Proxy operator+(const Proxy& a, const Proxy& b) { return a.binop("add", b); }
Proxy operator+(const Proxy& a, double b) { return a.binop("add", Argument::of(b)); }
Proxy operator+(double a, const Proxy& b) {
  return b.session()->create_proxy(OpCode::kCallFunction, "add", {Argument::of(a), b.arg()});
}
Proxy operator+(const Proxy& a, std::int64_t b) { return a.binop("add", Argument::of(b)); }
Proxy operator+(std::int64_t a, const Proxy& b) {
  return b.session()->create_proxy(OpCode::kCallFunction, "add", {Argument::of(a), b.arg()});
}
Proxy operator*(const Proxy& a, const Proxy& b) { return a.binop("mul", b); }
Proxy operator*(const Proxy& a, double b) { return a.binop("mul", Argument::of(b)); }
Proxy operator*(double a, const Proxy& b) {
  return b.session()->create_proxy(OpCode::kCallFunction, "mul", {Argument::of(a), b.arg()});
}
Proxy operator-(const Proxy& a) {
  return a.session()->create_proxy(OpCode::kCallFunction, "neg", {a.arg()});
}
Proxy matmul(const Proxy& a, const Proxy& b) { return a.binop("matmul", b); }

namespace {
[[noreturn]] void comparison_rejected(const Proxy& p) {
  throw TraceError(TraceFault::kControlFlowOnProxy, p.describe(),
                   "comparing a traced value forces a data-dependent decision");
}
}  // namespace

bool operator<(const Proxy& a, const Proxy&) { comparison_rejected(a); }
bool operator<(const Proxy& a, std::int64_t) { comparison_rejected(a); }
bool operator<(std::int64_t, const Proxy& b) { comparison_rejected(b); }
bool operator>(const Proxy& a, std::int64_t) { comparison_rejected(a); }
bool operator==(const Proxy& a, std::int64_t) { comparison_rejected(a); }

namespace fn {

Proxy relu(const Proxy& x) {
  return x.session()->create_proxy(OpCode::kCallFunction, "relu", {x.arg()});
}

Proxy gelu(const Proxy& x) {
  return x.session()->create_proxy(OpCode::kCallFunction, "gelu", {x.arg()});
}

Proxy neg(const Proxy& x) {
  return x.session()->create_proxy(OpCode::kCallFunction, "neg", {x.arg()});
}

Proxy add(const Proxy& a, const Proxy& b) { return a.binop("add", b); }

Proxy mul(const Proxy& a, const Proxy& b) { return a.binop("mul", b); }

Proxy cat(const std::vector<Proxy>& parts, std::int64_t dim) {
  if (parts.empty()) {
    throw TraceError(TraceFault::kUnsupportedOperation, "[]",
                     "cat needs at least one traced operand");
  }
  Argument::List items;
  items.reserve(parts.size());
  for (const Proxy& p : parts) items.push_back(p.arg());
  return parts.front().session()->create_proxy(
      OpCode::kCallFunction, "cat", {Argument::list(std::move(items)), Argument::of(dim)});
}

}  // namespace fn

// ---------------------------------------------------------------------------
// TraceSession / TraceContext

TraceSession::TraceSession(TracerConfig config, ModulePtr root)
    : config_(std::move(config)), root_(std::move(root)) {}

Proxy TraceSession::create_proxy(OpCode op, std::string target, ArgList args, KwargDict kwargs) {
  std::map<std::string, std::string> meta;
  if (config_.proxy_hook) {
    HookResult result = config_.proxy_hook(NodeCreation{op, target, args, kwargs});
    if (!result.record_node) return Proxy(this, std::move(result.value));
    meta = std::move(result.meta);
  }
  Node* n;
  if (op == OpCode::kPlaceholder) {
    n = graph_.placeholder(target, args.empty() ? std::nullopt
                                                : std::optional<Argument>(args.front()));
  } else {
    n = graph_.create_node(op, std::move(target), std::move(args), std::move(kwargs));
  }
  for (auto& [key, value] : meta) n->meta[key] = std::move(value);
  return Proxy(this, Argument::node(n));
}

Proxy TraceSession::placeholder(const std::string& name, std::optional<Argument> default_value) {
  ArgList args;
  if (default_value) args.push_back(std::move(*default_value));
  return create_proxy(OpCode::kPlaceholder, name, std::move(args));
}

Graph TraceSession::finish(const Proxy& result) {
  create_proxy(OpCode::kOutput, "output", {result.arg()});
  return std::move(graph_);
}

TraceContext::TraceContext(TraceSession& session, ModulePtr module, std::string path)
    : session_(&session), module_(std::move(module)), path_(std::move(path)) {}

Proxy TraceContext::call(std::string_view child_path, std::vector<Proxy> args) {
  ModulePtr child = resolve_module(module_, child_path);  // PathNotFound when absent
  return trace_child(*session_, child, join_path(path_, child_path), std::move(args));
}

Proxy TraceContext::attr(std::string_view attr_path) {
  resolve_tensor(module_, attr_path);  // validate eagerly; PathNotFound when absent
  return session_->create_proxy(OpCode::kGetAttr, join_path(path_, attr_path));
}

// ---------------------------------------------------------------------------
// Entry points

ModulePtr symbolic_trace(const ModulePtr& root, TracerConfig config) {
  if (root == nullptr) throw Error("PathNotFound", "no module to trace");
  TraceSession session(std::move(config), root);

  std::vector<Proxy> inputs;
  if (root->has_graph()) {
    // Re-trace: replay the existing placeholders so names and declared
    // defaults survive the round trip.
    for (const Node* p : root->graph().placeholder_nodes()) {
      inputs.push_back(session.placeholder(
          p->name(), p->args().empty() ? std::nullopt
                                       : std::optional<Argument>(p->args().front())));
    }
  } else {
    for (const std::string& name : root->input_names()) {
      inputs.push_back(session.placeholder(name));
    }
  }

  Proxy result = trace_module_body(session, root, "", std::move(inputs));
  return make_graph_module(root, session.finish(result));
}

ModulePtr symbolic_trace_function(const std::vector<std::string>& input_names,
                                  const TraceableFunction& fn, TracerConfig config) {
  TraceSession session(std::move(config), nullptr);
  std::vector<Proxy> inputs;
  inputs.reserve(input_names.size());
  for (const std::string& name : input_names) inputs.push_back(session.placeholder(name));
  Proxy result = fn(session, std::move(inputs));
  return make_graph_module(nullptr, session.finish(result));
}

}  // namespace fxir
