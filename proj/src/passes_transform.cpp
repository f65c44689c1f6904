// SPDX-License-Identifier: Apache-2.0
#include "fxir/passes_transform.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "fxir/registry.hpp"
#include "fxir/rng.hpp"

namespace fxir {
namespace {

bool is_pure_node(const Node& n) {
  switch (n.op()) {
    case OpCode::kCallFunction: return is_pure_function(n.target());
    case OpCode::kCallMethod: return is_pure_method(n.target());
    case OpCode::kGetAttr: return true;  // reading stored state has no effect
    default: return false;
  }
}

/// Resolves a call_module target, returning null instead of throwing so
/// passes can skip nodes that do not concern them.
ModulePtr module_at(const ModulePtr& root, const Node& n) {
  if (n.op() != OpCode::kCallModule) return nullptr;
  try {
    return resolve_module(root, n.target());
  } catch (const Error&) {
    return nullptr;
  }
}

std::string fresh_child_name(const ModulePtr& root, const std::string& stem) {
  std::size_t i = 0;
  while (root->children().contains(stem + "_" + std::to_string(i))) ++i;
  return stem + "_" + std::to_string(i);
}

}  // namespace

std::string PassReport::to_string() const {
  std::ostringstream out;
  out << "pass: " << pass_name << "\n";
  out << "nodes: " << nodes_before << " -> " << nodes_after << "\n";
  out << "rewrites: " << rewrites << "\n";
  for (const std::string& note : notes) out << "note: " << note << "\n";
  return out.str();
}

PassReport replace_activation(Graph& g, std::string_view old_target,
                              std::string_view new_target) {
  PassReport report;
  report.pass_name = "replace_activation";
  report.nodes_before = g.size();

  std::vector<Node*> matches;
  for (Node* n : g.nodes()) {
    if (n->op() == OpCode::kCallFunction && n->target() == old_target) matches.push_back(n);
  }
  for (Node* n : matches) {
    Node* replacement = nullptr;
    {
      Graph::InsertionGuard guard = g.inserting_after(*n);
      replacement = g.call_function(std::string(new_target), n->args(), n->kwargs());
    }
    g.replace_all_uses_with(*n, *replacement);
    g.erase_node(*n);
    ++report.rewrites;
  }

  report.nodes_after = g.size();
  return report;
}

PassReport fuse_conv_bn(const ModulePtr& gm) {
  PassReport report;
  report.pass_name = "fuse_conv_bn";
  Graph& g = gm->graph();
  report.nodes_before = g.size();

  struct Candidate {
    Node* conv;
    Node* bn;
    ModulePtr conv_mod;
    ModulePtr bn_mod;
  };
  std::vector<Candidate> candidates;
  for (Node* n : g.nodes()) {
    ModulePtr bn_mod = module_at(gm, *n);
    if (bn_mod == nullptr || bn_mod->kind() != ModuleKind::kBatchNorm2d) continue;
    if (n->args().size() != 1 || !n->args().front().is_node()) continue;
    Node* conv = n->args().front().as_node();
    ModulePtr conv_mod = module_at(gm, *conv);
    if (conv_mod == nullptr || conv_mod->kind() != ModuleKind::kConv2d) continue;
    if (conv->users().size() != 1) {
      report.notes.push_back("skipped " + conv->name() + ": " +
                             std::to_string(conv->users().size()) +
                             " users (fusion needs a single use)");
      continue;
    }
    candidates.push_back(Candidate{conv, n, std::move(conv_mod), std::move(bn_mod)});
  }

  for (Candidate& c : candidates) {
    const Tensor& w = *c.conv_mod->params().find("weight");
    const Tensor* b = c.conv_mod->params().find("bias");
    const Tensor& gamma = *c.bn_mod->params().find("weight");
    const Tensor& beta = *c.bn_mod->params().find("bias");
    const Tensor& mean = *c.bn_mod->buffers().find("running_mean");
    const Tensor& var = *c.bn_mod->buffers().find("running_var");
    const double eps = c.bn_mod->config().eps;

    const std::int64_t cout = w.shape().dim(0);
    const std::int64_t per_channel = w.numel() / cout;
    std::vector<float> folded_w(static_cast<std::size_t>(w.numel()));
    std::vector<float> folded_b(static_cast<std::size_t>(cout));
    for (std::int64_t c_out = 0; c_out < cout; ++c_out) {
      const double f = static_cast<double>(gamma.f32_data()[c_out]) /
                       std::sqrt(static_cast<double>(var.f32_data()[c_out]) + eps);
      for (std::int64_t k = 0; k < per_channel; ++k) {
        const std::size_t i = static_cast<std::size_t>(c_out * per_channel + k);
        folded_w[i] = static_cast<float>(static_cast<double>(w.f32_data()[i]) * f);
      }
      const double b_c = b ? static_cast<double>(b->f32_data()[c_out]) : 0.0;
      folded_b[static_cast<std::size_t>(c_out)] = static_cast<float>(
          (b_c - static_cast<double>(mean.f32_data()[c_out])) * f +
          static_cast<double>(beta.f32_data()[c_out]));
    }

    const ModuleConfig& cfg = c.conv_mod->config();
    SplitMix64 scratch{0};  // the drawn values are replaced immediately below
    ModulePtr fused = Module::conv2d(cfg.in_channels, cfg.out_channels, cfg.kernel, cfg.stride,
                                     cfg.padding, /*bias=*/true, scratch);
    fused->set_param("weight", Tensor::f32(w.shape(), std::move(folded_w)));
    fused->set_param("bias", Tensor::f32(Shape{cout}, std::move(folded_b)));

    const std::string fused_name = fresh_child_name(gm, "fused");
    set_at_path(gm, fused_name, fused);
    g.set_node_target(*c.conv, fused_name);
    g.replace_all_uses_with(*c.bn, *c.conv);
    g.erase_node(*c.bn);
    ++report.rewrites;
  }

  report.nodes_after = g.size();
  return report;
}

PassReport eliminate_common_subexpressions(Graph& g) {
  PassReport report;
  report.pass_name = "eliminate_common_subexpressions";
  report.nodes_before = g.size();

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Node*> kept;
    for (Node* n : g.nodes()) {
      if (!is_pure_node(*n)) continue;
      Node* twin = nullptr;
      for (Node* earlier : kept) {
        if (earlier->op() == n->op() && earlier->target() == n->target() &&
            earlier->args() == n->args() && earlier->kwargs() == n->kwargs()) {
          twin = earlier;
          break;
        }
      }
      if (twin == nullptr) {
        kept.push_back(n);
        continue;
      }
      g.replace_all_uses_with(*n, *twin);
      g.erase_node(*n);
      ++report.rewrites;
      changed = true;  // merged operands may have made other nodes identical
      break;           // the node list changed; rescan from a fresh snapshot
    }
  }

  report.nodes_after = g.size();
  return report;
}

PassReport eliminate_dead_code(Graph& g) {
  PassReport report;
  report.pass_name = "eliminate_dead_code";
  report.nodes_before = g.size();

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Node*> order = g.nodes();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->op() == OpCode::kPlaceholder || n->op() == OpCode::kOutput) continue;
      if (!n->users().empty() || !is_pure_node(*n)) continue;
      g.erase_node(*n);
      ++report.rewrites;
      changed = true;
    }
  }

  report.nodes_after = g.size();
  return report;
}

}  // namespace fxir
