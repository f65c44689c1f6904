// SPDX-License-Identifier: Apache-2.0
#include "fxir/passes_quant.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include "fxir/graph_module.hpp"
#include "fxir/kernels.hpp"

namespace fxir {
namespace {

bool is_quantizable_kind(ModuleKind kind) {
  return kind == ModuleKind::kLinear || kind == ModuleKind::kConv2d;
}

ModulePtr module_at(const ModulePtr& root, const Node& n) {
  if (n.op() != OpCode::kCallModule) return nullptr;
  try {
    return resolve_module(root, n.target());
  } catch (const Error&) {
    return nullptr;
  }
}

bool is_observer_node(const ModulePtr& root, const Node& n) {
  ModulePtr m = module_at(root, n);
  return m != nullptr && m->kind() == ModuleKind::kObserver;
}

/// True when `v`'s value already flows through an observer: it is one
/// itself, or one of its users is one.
bool already_observed(const ModulePtr& root, const Node& v) {
  if (is_observer_node(root, v)) return true;
  for (const Node* user : v.users()) {
    if (is_observer_node(root, *user)) return true;
  }
  return false;
}

int round_away_to_int(double x) {
  return static_cast<int>(std::round(x));
}

QuantParams activation_qparams(const ObserverState& state, const QuantConfig& cfg) {
  QuantParams qp;
  qp.scale = std::max(cfg.scale_floor, (state.running_max - state.running_min) / 255.0);
  const double zp = -128.0 - state.running_min / qp.scale;
  qp.zero_point = std::clamp(round_away_to_int(zp), -128, 127);
  return qp;
}

QuantParams weight_qparams(const Tensor& w, const QuantConfig& cfg) {
  double max_abs = 0.0;
  for (float v : w.f32_data()) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
  return QuantParams{std::max(cfg.scale_floor, max_abs / 127.0), 0};
}

/// The (scale, zero_point) argument slots of a node that emits int8, if any.
bool quantized_output_args(const Node& n, Argument* scale, Argument* zp) {
  if (n.op() != OpCode::kCallFunction) return false;
  std::size_t scale_index = 0;
  if (n.target() == "quantize_affine") {
    scale_index = 1;
  } else if (n.target() == "quantized_linear") {
    scale_index = 3;
  } else if (n.target() == "quantized_conv2d") {
    scale_index = 5;
  } else {
    return false;
  }
  if (n.args().size() <= scale_index + 1) return false;
  *scale = n.args()[scale_index];
  *zp = n.args()[scale_index + 1];
  return true;
}

}  // namespace

ModulePtr prepare(const ModulePtr& gm, const QuantConfig& cfg) {
  (void)cfg;
  if (gm == nullptr || !gm->has_graph()) {
    throw Error("UnsupportedKind", "prepare needs a module holding a graph");
  }
  Graph g = gm->graph().copy();

  // Collect the values worth observing, in graph order, one entry each.
  std::vector<Node*> to_observe;
  const auto want = [&](Node* v) {
    if (v->op() == OpCode::kOutput) return;
    if (already_observed(gm, *v)) return;
    if (std::find(to_observe.begin(), to_observe.end(), v) == to_observe.end()) {
      to_observe.push_back(v);
    }
  };
  for (Node* n : g.nodes()) {
    ModulePtr m = module_at(gm, *n);
    if (m == nullptr || !is_quantizable_kind(m->kind())) continue;
    if (!n->args().empty() && n->args().front().is_node()) want(n->args().front().as_node());
    want(n);
  }
  std::sort(to_observe.begin(), to_observe.end(),
            [&](Node* a, Node* b) { return g.index_of(*a) < g.index_of(*b); });

  // Route each chosen value through a fresh observer node.
  std::vector<std::pair<std::string, ModulePtr>> observers;
  std::size_t next_index = 0;
  Node* last_placeholder = nullptr;
  for (Node* n : g.nodes()) {
    if (n->op() == OpCode::kPlaceholder) last_placeholder = n;
  }
  for (Node* v : to_observe) {
    std::string name;
    do {
      name = "obs_" + std::to_string(next_index++);
    } while (gm->children().contains(name));
    ModulePtr obs = Module::observer();
    obs->observer_state()->observed_value = v->name();
    observers.emplace_back(name, std::move(obs));

    Node* anchor = (v->op() == OpCode::kPlaceholder) ? last_placeholder : v;
    Node* obs_node = nullptr;
    {
      Graph::InsertionGuard guard = g.inserting_after(*anchor);
      obs_node = g.call_module(name, {Argument::node(v)});
    }
    g.replace_all_uses_with(*v, *obs_node);
  }

  ModulePtr prepared = make_graph_module(gm, std::move(g));
  for (auto& [name, obs] : observers) prepared->set_child(name, std::move(obs));
  return prepared;
}

void calibrate(const ModulePtr& gm_prepared, const std::vector<std::vector<Tensor>>& batches) {
  if (batches.empty()) {
    throw Error("BadArgument", "calibrate needs at least one batch");
  }
  for (const std::vector<Tensor>& batch : batches) {
    interpret(gm_prepared, batch);
  }
}

ModulePtr convert(const ModulePtr& gm_prepared, const QuantConfig& cfg) {
  if (gm_prepared == nullptr || !gm_prepared->has_graph()) {
    throw Error("UnsupportedKind", "convert needs a module holding a graph");
  }
  for (const auto& [name, child] : gm_prepared->children()) {
    if (child->kind() != ModuleKind::kObserver) continue;
    if (child->observer_state()->samples_seen < 1) {
      throw Error("UncalibratedObserver", "observer of value '" +
                                              child->observer_state()->observed_value +
                                              "' never saw data");
    }
  }

  Graph g = gm_prepared->graph().copy();

  // Peel the observer indirection off, remembering each watched value's
  // statistics keyed by the node that produces it.
  std::map<const Node*, ObserverState> stats;
  for (Node* n : g.nodes()) {
    ModulePtr m = module_at(gm_prepared, *n);
    if (m == nullptr || m->kind() != ModuleKind::kObserver) continue;
    Node* watched = n->args().front().as_node();
    stats[watched] = *m->observer_state();
    g.replace_all_uses_with(*n, *watched);
    g.erase_node(*n);
  }

  // Rewrite each quantizable call into quantize -> quantized op -> dequantize.
  std::vector<std::pair<std::string, ModulePtr>> fresh_children;
  for (Node* n : g.nodes()) {
    ModulePtr m = module_at(gm_prepared, *n);
    if (m == nullptr || !is_quantizable_kind(m->kind())) continue;
    if (n->args().empty() || !n->args().front().is_node()) continue;
    Node* input = n->args().front().as_node();
    const auto in_stats = stats.find(input);
    const auto out_stats = stats.find(n);
    if (in_stats == stats.end() || out_stats == stats.end()) {
      throw Error("UncalibratedObserver",
                  "value '" + (in_stats == stats.end() ? input->name() : n->name()) +
                      "' was never observed; run prepare and calibrate first");
    }
    const QuantParams in_qp = activation_qparams(in_stats->second, cfg);
    const QuantParams out_qp = activation_qparams(out_stats->second, cfg);

    const Tensor& w = *m->params().find("weight");
    const Tensor* b = m->params().find("bias");
    const QuantParams w_qp = weight_qparams(w, cfg);

    // A bare user module with no forward serves as the parameter holder.
    ModulePtr qmod = Module::user({}, nullptr);
    qmod->set_param("weight", ops::quantize_affine(w, w_qp));
    if (b != nullptr) qmod->set_param("bias", *b);
    std::string qname;
    std::size_t qi = 0;
    do {
      qname = "quant_" + std::to_string(qi++);
    } while (gm_prepared->children().contains(qname) ||
             std::any_of(fresh_children.begin(), fresh_children.end(),
                         [&](const auto& kv) { return kv.first == qname; }));
    fresh_children.emplace_back(qname, qmod);

    Node* replacement = nullptr;
    {
      Graph::InsertionGuard guard = g.inserting_before(*n);
      Node* q_in = g.call_function(
          "quantize_affine",
          {Argument::node(input), Argument::of(in_qp.scale), Argument::of(in_qp.zero_point)});
      Node* w_attr = g.get_attr(qname + ".weight");
      Argument bias = Argument::none();
      if (b != nullptr) bias = Argument::node(g.get_attr(qname + ".bias"));
      if (m->kind() == ModuleKind::kLinear) {
        replacement = g.call_function(
            "quantized_linear", {Argument::node(q_in), Argument::node(w_attr), bias,
                                 Argument::of(out_qp.scale), Argument::of(out_qp.zero_point)});
      } else {
        const ModuleConfig& mc = m->config();
        Argument stride = Argument::list(
            {Argument::of(mc.stride.first), Argument::of(mc.stride.second)});
        Argument padding = Argument::list(
            {Argument::of(mc.padding.first), Argument::of(mc.padding.second)});
        replacement = g.call_function(
            "quantized_conv2d",
            {Argument::node(q_in), Argument::node(w_attr), bias, stride, padding,
             Argument::of(out_qp.scale), Argument::of(out_qp.zero_point)});
      }
      replacement = g.call_function("dequantize_affine", {Argument::node(replacement)});
    }
    g.replace_all_uses_with(*n, *replacement);
    g.erase_node(*n);
    // The dequantized result stands for the value the observer watched, so
    // downstream quantizable nodes can still find its statistics.
    stats[replacement] = out_stats->second;
    stats.erase(n);
  }

  // Elide dequantize -> quantize chains whose qparams agree: the value was
  // observed once, so both sides carry the same scale/zero_point.
  std::vector<Node*> snapshot = g.nodes();
  for (Node* q : snapshot) {
    if (q->op() != OpCode::kCallFunction || q->target() != "quantize_affine") continue;
    if (q->args().empty() || !q->args().front().is_node()) continue;
    Node* dq = q->args().front().as_node();
    if (dq->op() != OpCode::kCallFunction || dq->target() != "dequantize_affine") continue;
    if (dq->args().empty() || !dq->args().front().is_node()) continue;
    Node* producer = dq->args().front().as_node();
    Argument p_scale, p_zp;
    if (!quantized_output_args(*producer, &p_scale, &p_zp)) continue;
    if (!(p_scale == q->args()[1]) || !(p_zp == q->args()[2])) continue;
    g.replace_all_uses_with(*q, *producer);
    g.erase_node(*q);
    if (dq->users().empty()) g.erase_node(*dq);
  }

  ModulePtr converted = make_graph_module(gm_prepared, std::move(g));
  for (auto& [name, child] : fresh_children) converted->set_child(name, std::move(child));
  std::vector<std::string> observer_names;
  for (const auto& [name, child] : converted->children()) {
    if (child->kind() == ModuleKind::kObserver) observer_names.push_back(name);
  }
  for (const std::string& name : observer_names) converted->remove_child(name);
  return converted;
}

std::string observer_table(const ModulePtr& gm_prepared) {
  std::ostringstream out;
  for (const auto& [name, child] : gm_prepared->children()) {
    if (child->kind() != ModuleKind::kObserver) continue;
    const ObserverState& s = *child->observer_state();
    out << s.observed_value << " min=" << format_real(s.running_min)
        << " max=" << format_real(s.running_max) << " n=" << s.samples_seen << "\n";
  }
  return out.str();
}

}  // namespace fxir
