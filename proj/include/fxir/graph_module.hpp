// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fxir/graph.hpp"
#include "fxir/module.hpp"
#include "fxir/registry.hpp"

namespace fxir {

/// Packs a graph and the state it references into a runnable module.
///
/// The result is a Module of kind GraphModule whose parameter/buffer/child
/// tables are fresh copies of `state_source`'s (the child modules themselves
/// are shared — they are read-only at execution time).  The graph's
/// call_module and get_attr targets resolve against this new root.  The
/// generated text form is produced eagerly, so the invariant "code reflects
/// graph" holds from birth; pass `state_source = nullptr` for a stateless
/// graph (pure function trace).
ModulePtr make_graph_module(const ModulePtr& state_source, Graph graph);

/// Regenerates the linear-form text from the graph and stores it on the
/// module.  Throws LintFailed (with the violation codes) when the graph
/// fails validation, and UnsupportedKind when `gm` carries no graph.
const std::string& recompile(const ModulePtr& gm);

/// Executes the graph over `inputs`, binding placeholders in declaration
/// order.  Missing trailing inputs fall back to a placeholder's default
/// immediate when one exists; extra or unmatched inputs raise ArityMismatch.
/// Kernel failures are rethrown with the offending node's name attached
/// (the kind is preserved).  The environment drops each value right after
/// its last consumer runs, and that schedule is the same one the memory
/// analysis uses for peak-liveness.
Value interpret(const ModulePtr& gm, const std::vector<Tensor>& inputs);

/// For node index i, the index of the last node that consumes its value
/// (i itself when nothing does).  Placeholder defaults and immediates do
/// not appear; only node-to-node edges matter.
std::vector<std::size_t> last_use_schedule(const Graph& g);

}  // namespace fxir
