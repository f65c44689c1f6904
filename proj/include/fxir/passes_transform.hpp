// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fxir/graph.hpp"
#include "fxir/module.hpp"

namespace fxir {

/// What a pass did, as data.  nodes_after always equals the graph's node
/// count when the pass returns.
struct PassReport {
  std::string pass_name;
  std::size_t nodes_before = 0;
  std::size_t nodes_after = 0;
  std::int64_t rewrites = 0;
  std::vector<std::string> notes;

  /// Multi-line rendering used by the command-line front end.
  std::string to_string() const;
};

/// Replaces every call_function node targeting `old_target` with a fresh
/// node targeting `new_target` (same args/kwargs), via the insert-after /
/// replace-uses / erase sequence, so replaced nodes get names derived from
/// the new target.
PassReport replace_activation(Graph& g, std::string_view old_target,
                              std::string_view new_target);

/// Folds BatchNorm2d statistics into the weights of the preceding Conv2d
/// wherever the convolution's only user is the batch norm:
///   f_c = gamma_c / sqrt(var_c + eps)
///   w'[c, ...] = w[c, ...] * f_c
///   b'_c       = (b_c - mean_c) * f_c + beta_c     (b = 0 when absent)
/// The folded parameters live in a fresh child installed at "fused_<n>";
/// the convolution node is retargeted there, the batch-norm node erased.
/// Convolutions with extra users are skipped with a note.
PassReport fuse_conv_bn(const ModulePtr& gm);

/// Merges nodes with identical (op, target, args, kwargs) into the earliest
/// occurrence, for pure call_function/call_method/get_attr targets only;
/// call_module nodes are never merged.  Runs to a fixpoint so chains of
/// duplicates collapse fully.
PassReport eliminate_common_subexpressions(Graph& g);

/// Erases unused non-placeholder, non-output nodes with pure targets, to a
/// fixpoint.  Unknown targets count as impure and are kept.
PassReport eliminate_dead_code(Graph& g);

}  // namespace fxir
