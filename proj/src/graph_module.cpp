// SPDX-License-Identifier: Apache-2.0
#include "fxir/graph_module.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <utility>

#include "fxir/serialize.hpp"

namespace fxir {
namespace {

/// Immediates become Values directly; node references read the environment.
Value resolve_argument(const Argument& arg, const std::map<std::string, Value>& env) {
  if (arg.is_none()) return Value();
  if (arg.is_bool()) return Value(arg.as_bool());
  if (arg.is_int()) return Value(arg.as_int());
  if (arg.is_real()) return Value(arg.as_real());
  if (arg.is_text()) return Value(arg.as_text());
  if (arg.is_node()) {
    auto it = env.find(arg.as_node()->name());
    if (it == env.end()) {
      throw Error("UseBeforeDef", "value '" + arg.as_node()->name() + "' is not live");
    }
    return it->second;
  }
  if (arg.is_list()) {
    Value::List items;
    items.reserve(arg.as_list().size());
    for (const Argument& item : arg.as_list()) items.push_back(resolve_argument(item, env));
    return Value(std::move(items));
  }
  throw Error("TypeMismatch", "mapping arguments are only supported as a kwargs block");
}

CallInputs resolve_inputs(const Node& n, const std::map<std::string, Value>& env) {
  CallInputs inputs;
  inputs.args.reserve(n.args().size());
  for (const Argument& arg : n.args()) inputs.args.push_back(resolve_argument(arg, env));
  for (const auto& [key, arg] : n.kwargs()) inputs.kwargs.emplace(key, resolve_argument(arg, env));
  return inputs;
}

std::vector<Tensor> tensor_inputs(const Node& n, CallInputs inputs) {
  if (!inputs.kwargs.empty()) {
    throw Error("TypeMismatch", "call_module nodes take positional tensor arguments only");
  }
  std::vector<Tensor> tensors;
  tensors.reserve(inputs.args.size());
  for (const Value& v : inputs.args) {
    if (!v.is_tensor()) {
      throw Error("TypeMismatch", "call_module '" + n.target() + "' argument is " +
                                      std::string(v.kind_name()) + ", expected tensor");
    }
    tensors.push_back(v.as_tensor());
  }
  return tensors;
}

[[noreturn]] void rethrow_at_node(const Error& e, const Node& n) {
  throw Error(e.kind(), "at node '" + n.name() + "': " + e.message());
}

}  // namespace

ModulePtr make_graph_module(const ModulePtr& state_source, Graph graph) {
  std::vector<std::string> codes = graph.lint_codes();
  if (!codes.empty()) throw LintError(std::move(codes));

  ModulePtr gm(new Module());
  gm->kind_ = ModuleKind::kGraphModule;
  if (state_source != nullptr) {
    gm->params_ = state_source->params();
    gm->buffers_ = state_source->buffers();
    gm->children_ = state_source->children();  // child modules shared, tables fresh
  }
  gm->input_names_.clear();
  for (const Node* p : graph.placeholder_nodes()) gm->input_names_.push_back(p->name());
  gm->graph_ = std::make_shared<Graph>(std::move(graph));
  gm->code_ = to_linear_form(*gm->graph_);
  return gm;
}

const std::string& recompile(const ModulePtr& gm) {
  if (gm == nullptr || !gm->has_graph()) {
    throw Error("UnsupportedKind", "recompile needs a module holding a graph");
  }
  std::vector<std::string> codes = gm->graph().lint_codes();
  if (!codes.empty()) throw LintError(std::move(codes));
  gm->set_code(to_linear_form(gm->graph()));
  return gm->code();
}

std::vector<std::size_t> last_use_schedule(const Graph& g) {
  std::vector<const Node*> order = g.nodes();
  std::unordered_map<const Node*, std::size_t> index;
  index.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) index.emplace(order[i], i);

  std::vector<std::size_t> last(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    last[i] = i;
    for (const Node* user : order[i]->users()) {
      last[i] = std::max(last[i], index.at(user));
    }
  }
  return last;
}

Value interpret(const ModulePtr& gm, const std::vector<Tensor>& inputs) {
  if (gm == nullptr || !gm->has_graph()) {
    throw Error("UnsupportedKind", "interpret needs a module holding a graph");
  }
  const Graph& g = gm->graph();
  std::vector<std::string> codes = g.lint_codes();
  if (!codes.empty()) throw LintError(std::move(codes));

  std::vector<const Node*> order = g.nodes();
  const std::vector<std::size_t> last_use = last_use_schedule(g);
  std::unordered_map<const Node*, std::size_t> index;
  index.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) index.emplace(order[i], i);

  std::size_t placeholder_count = 0;
  for (const Node* n : order) {
    if (n->op() == OpCode::kPlaceholder) ++placeholder_count;
  }
  if (inputs.size() > placeholder_count) {
    throw Error("ArityMismatch", "graph declares " + std::to_string(placeholder_count) +
                                     " input(s), got " + std::to_string(inputs.size()));
  }

  std::map<std::string, Value> env;
  Value result;
  std::size_t next_input = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Node& n = *order[i];
    Value value;
    try {
      switch (n.op()) {
        case OpCode::kPlaceholder: {
          if (next_input < inputs.size()) {
            value = Value(inputs[next_input++]);
          } else if (!n.args().empty()) {
            value = resolve_argument(n.args().front(), env);  // declared default
          } else {
            throw Error("ArityMismatch",
                        "no input bound to placeholder '" + n.name() + "' and no default");
          }
          break;
        }
        case OpCode::kCallFunction:
          value = lookup_function(n.target())(resolve_inputs(n, env));
          break;
        case OpCode::kCallMethod:
          value = lookup_method(n.target())(resolve_inputs(n, env));
          break;
        case OpCode::kCallModule: {
          ModulePtr callee = resolve_module(gm, n.target());
          value = Value(forward_eval(callee, tensor_inputs(n, resolve_inputs(n, env))));
          break;
        }
        case OpCode::kGetAttr: {
          PathTarget attr = resolve_path(gm, n.target());
          if (auto* t = std::get_if<Tensor>(&attr)) {
            value = Value(*t);
          } else {
            throw Error("BadTarget",
                        "get_attr '" + n.target() + "' names a module, not a tensor");
          }
          break;
        }
        case OpCode::kOutput:
          result = resolve_argument(n.args().front(), env);
          break;
      }
    } catch (const Error& e) {
      rethrow_at_node(e, n);
    }

    if (n.op() == OpCode::kOutput) break;  // nothing after it by invariant
    env.emplace(n.name(), std::move(value));

    // Drop every operand whose final consumer just ran, and this node's own
    // value when nothing will ever read it.
    const auto drop_if_dead = [&](const Node* d) {
      if (last_use[index.at(d)] == i) env.erase(d->name());
    };
    for (const Argument& arg : n.args()) arg.for_each_node(drop_if_dead);
    for (const auto& [key, arg] : n.kwargs()) arg.for_each_node(drop_if_dead);
    if (last_use[i] == i) env.erase(n.name());
  }
  return result;
}

}  // namespace fxir
