// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fxir/module.hpp"
#include "fxir/tensor.hpp"

namespace fxir {

/// Statically inferred value type: extents plus element kind.
struct ShapeInfo {
  Shape shape;
  DType dtype = DType::kF32;
};

/// One forward sweep assigning every named value a shape via per-target
/// transfer functions (no fixpoint needed on a basic block).  Placeholder
/// shapes come from `input_shapes`, in declaration order; a placeholder
/// beyond that list is an ArityMismatch.  Unknown targets raise
/// UnknownTransfer; inconsistent operand shapes raise ShapeConflict.
std::map<std::string, ShapeInfo> propagate_shapes(const ModulePtr& gm,
                                                  const std::vector<Shape>& input_shapes);

/// Per-node floating-point operation counts plus their total, counting a
/// multiply-add as 2:
///   linear-like   2*N*M*K        conv-like  2*N*Cout*Hout*Wout*Cin*kH*kW
///   batch norm    2*numel        elementwise  numel
///   cat/get_attr/placeholder/output  0
struct FlopsReport {
  std::map<std::string, std::int64_t> per_node;
  std::int64_t total = 0;
};
FlopsReport estimate_flops(const ModulePtr& gm, const std::vector<Shape>& input_shapes);

/// Byte traffic per node (reads = operand values + module parameters,
/// writes = the produced value) and the peak number of bytes simultaneously
/// live under the interpreter's drop-after-last-use schedule.
struct MemoryReport {
  std::map<std::string, std::int64_t> bytes_read;
  std::map<std::string, std::int64_t> bytes_written;
  std::int64_t peak_live_bytes = 0;
};
MemoryReport estimate_memory(const ModulePtr& gm, const std::vector<Shape>& input_shapes);

/// Graphviz rendering: one box per node labeled "<name>\n<opcode> <target>",
/// one edge per node-reference use, emitted in graph order then argument
/// order so output is deterministic.
std::string emit_dot(const ModulePtr& gm);

/// Aligned text table "<node> <shape> <flops> <bytes>"; bytes is the
/// written-bytes column.  Ends with a total-flops line.
std::string analysis_table(const ModulePtr& gm, const std::vector<Shape>& input_shapes);

/// Aligned two-column "<node> <shape>" table (dtype-annotated).
std::string shape_table(const ModulePtr& gm, const std::vector<Shape>& input_shapes);

}  // namespace fxir
