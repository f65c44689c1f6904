// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fxir/graph.hpp"
#include "fxir/module.hpp"

namespace fxir {

/// Renders `g` in the canonical text form:
///
///   graph <name> (<p1>, <p2>=<default>, ...) {
///     <name> = <opcode> <target> (<arg>, ...) {<k>=<arg>, ...}
///     return <arg>
///   }
///
/// LF newlines, two-space indent, node-refs spelled %<name>, kwargs block
/// omitted when empty.  Emission is deterministic, so equal graphs produce
/// byte-identical text.  Mapping-valued positional arguments have no spelling
/// in the grammar and raise Unserializable.
std::string to_linear_form(const Graph& g);

/// A parsed text form: the reconstructed graph plus the manifest of state it
/// expects a root module to provide.  `model_header` carries the value of a
/// leading "# model: <name>" comment when present (empty otherwise).
struct ParsedGraph {
  Graph graph;
  std::vector<std::string> module_paths;  ///< call_module targets, first-use order
  std::vector<std::string> attr_paths;    ///< get_attr targets, first-use order
  std::string model_header;
};

/// Parses the canonical text form.  Structural problems (bad token, unknown
/// value reference, duplicate node name, misplaced line) raise ParseError
/// carrying 1-based line/column.
ParsedGraph parse_graph(std::string_view text);

/// Re-attaches parsed structure to concrete state: verifies every manifest
/// path resolves in `state_root` (module paths to modules, attribute paths
/// to tensors) and packs the result into a runnable graph module.  A missing
/// path raises UnresolvedState naming it.
ModulePtr attach_state(ParsedGraph parsed, const ModulePtr& state_root);

}  // namespace fxir
