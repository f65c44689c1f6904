// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fxir/graph_module.hpp"
#include "fxir/module.hpp"
#include "fxir/passes_analysis.hpp"
#include "fxir/serialize.hpp"
#include "fxir/tracer.hpp"
#include "fxir/zoo.hpp"
#include "test_support.hpp"

using namespace fxir;
using fxir::test::error_kind;
using fxir::test::make_f32;

namespace {

/// Checks the static shapes against reality: for every interior node, clone
/// the graph, point the output at that node, run the clone, and compare the
/// concrete result with the inference.
void check_shape_soundness(const ModulePtr& gm, const std::vector<Shape>& shapes,
                           const std::vector<Tensor>& inputs) {
  const std::map<std::string, ShapeInfo> inferred = propagate_shapes(gm, shapes);
  for (const Node* n : std::as_const(*gm).graph().nodes()) {
    if (n->op() == OpCode::kOutput) continue;
    std::map<const Node*, Node*> mapping;
    Graph clone = std::as_const(*gm).graph().copy(&mapping);
    clone.set_node_args(*clone.output_node(), {Argument::node(mapping.at(n))});
    ModulePtr probe = make_graph_module(gm, std::move(clone));
    Value v = interpret(probe, inputs);
    REQUIRE(v.is_tensor());
    const ShapeInfo& info = inferred.at(n->name());
    CHECK(v.as_tensor().shape() == info.shape);
    CHECK(v.as_tensor().dtype() == info.dtype);
  }
}

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("shapes propagate through the relu-negate program unchanged") {
  ModulePtr gm = symbolic_trace(make_zoo_model("demo_fig1", 0));
  const auto shapes = propagate_shapes(gm, {Shape{4}});
  REQUIRE(shapes.size() == 4);
  for (const char* name : {"x", "relu", "neg", "output"}) {
    CHECK(shapes.at(name).shape == Shape{4});
    CHECK(shapes.at(name).dtype == DType::kF32);
  }
}

TEST_CASE("convolution arithmetic: 8x8 input, k=3, p=1, s=2 gives 4x4") {
  ModulePtr gm = symbolic_trace(make_zoo_model("convbn_net", 7));
  const auto shapes = propagate_shapes(gm, {Shape{1, 3, 8, 8}});
  CHECK(shapes.at("conv1").shape == Shape{1, 4, 4, 4});
  CHECK(shapes.at("bn1").shape == Shape{1, 4, 4, 4});
  CHECK(shapes.at("conv2").shape == Shape{1, 4, 4, 4});  // k=3, p=1, s=1
  CHECK(shapes.at("output").shape == Shape{1, 4, 4, 4});
}

TEST_CASE("inferred shapes match what the interpreter actually produces") {
  for (const char* name : {"demo_fig1", "mlp3", "convbn_net", "autoenc"}) {
    ModulePtr gm = symbolic_trace(make_zoo_model(name, 17));
    const Shape in = zoo_default_input_shape(name);
    check_shape_soundness(gm, {in}, {seeded_input(in, 17, 0)});
  }
}

TEST_CASE("method and function transfers cover the full value vocabulary") {
  ModulePtr gm = symbolic_trace_function({"x"}, [](TraceSession&, std::vector<Proxy> in) {
    Proxy r = in[0].reshape({2, 2});
    Proxy s = in[0].shape();
    Proxy n = in[0].ndim();
    (void)r;
    (void)s;
    (void)n;
    Proxy c = fn::cat({in[0], in[0]}, 0);
    Proxy g = fn::gelu(in[0]) + 1.5;
    return fn::cat({c, fn::mul(g, g)}, 0);
  });
  const auto shapes = propagate_shapes(gm, {Shape{4}});
  CHECK(shapes.at("reshape").shape == Shape{2, 2});
  CHECK(shapes.at("shape").shape == Shape{1});   // rank-1 report of 1 extent
  CHECK(shapes.at("shape").dtype == DType::kI32);
  CHECK(shapes.at("ndim").shape == Shape{});     // scalar
  CHECK(shapes.at("ndim").dtype == DType::kI32);
  CHECK(shapes.at("cat").shape == Shape{8});
  CHECK(shapes.at("add").shape == Shape{4});     // scalar operand passes through

  check_shape_soundness(gm, {Shape{4}}, {seeded_input(Shape{4}, 1, 0)});
}

TEST_CASE("quantize/dequantize transfers switch the element type") {
  Graph g;
  Node* x = g.placeholder("x");
  Node* q = g.call_function(
      "quantize_affine", {Argument::node(x), Argument::of(0.1), Argument::of(0)});
  Node* d = g.call_function("dequantize_affine", {Argument::node(q)});
  g.output(Argument::node(d));
  ModulePtr gm = make_graph_module(nullptr, std::move(g));

  const auto shapes = propagate_shapes(gm, {Shape{4}});
  CHECK(shapes.at("quantize_affine").dtype == DType::kI8);
  CHECK(shapes.at("quantize_affine").shape == Shape{4});
  CHECK(shapes.at("dequantize_affine").dtype == DType::kF32);

  check_shape_soundness(gm, {Shape{4}}, {seeded_input(Shape{4}, 2, 0)});
}

TEST_CASE("free-function convolutions read stride and padding operands") {
  ModulePtr holder = Module::user({}, nullptr);
  holder->set_param("w", Tensor::f32(Shape{4, 3, 3, 3},
                                     std::vector<float>(4 * 3 * 3 * 3, 0.5f)));

  Graph g;
  Node* x = g.placeholder("x");
  Node* w = g.get_attr("w");
  Node* c = g.call_function("conv2d", {Argument::node(x), Argument::node(w), Argument::none()},
                            {{"stride", Argument::list({Argument::of(2), Argument::of(2)})},
                             {"padding", Argument::of(1)}});
  g.output(Argument::node(c));
  ModulePtr gm = make_graph_module(holder, std::move(g));

  const auto shapes = propagate_shapes(gm, {Shape{1, 3, 8, 8}});
  CHECK(shapes.at("w").shape == Shape{4, 3, 3, 3});
  CHECK(shapes.at("conv2d").shape == Shape{1, 4, 4, 4});
  check_shape_soundness(gm, {Shape{1, 3, 8, 8}}, {seeded_input(Shape{1, 3, 8, 8}, 3, 0)});
}

TEST_CASE("shape inference rejects inconsistent or unknown programs") {
  const auto propagate_text = [](const std::string& body, std::vector<Shape> shapes) {
    ModulePtr gm = make_graph_module(nullptr, parse_graph(body).graph);
    return error_kind([&] { propagate_shapes(gm, shapes); });
  };

  CHECK(propagate_text("graph g (a, b) {\n  s = call_function add (%a, %b)\n  return %s\n}\n",
                       {Shape{2}, Shape{3}}) == "ShapeConflict");
  CHECK(propagate_text("graph g (a, b) {\n  m = call_function matmul (%a, %b)\n  return %m\n}\n",
                       {Shape{2, 3}, Shape{4, 2}}) == "ShapeConflict");
  CHECK(propagate_text(
            "graph g (a, b) {\n  c = call_function cat ([%a, %b]) {dim=0}\n  return %c\n}\n",
            {Shape{2, 2}, Shape{2}}) == "ShapeConflict");
  CHECK(propagate_text(
            "graph g (x) {\n  r = call_method reshape (%x, [3, 3])\n  return %r\n}\n",
            {Shape{4}}) == "ShapeConflict");
  CHECK(propagate_text("graph g (x) {\n  y = call_function banana (%x)\n  return %y\n}\n",
                       {Shape{4}}) == "UnknownTransfer");
  CHECK(propagate_text("graph g (x) {\n  y = call_method banana (%x)\n  return %y\n}\n",
                       {Shape{4}}) == "UnknownTransfer");
  CHECK(propagate_text("graph g (x) {\n  return %x\n}\n", {}) == "ArityMismatch");
  CHECK(propagate_text("graph g (x) {\n  return %x\n}\n", {Shape{4}, Shape{4}}) ==
        "ArityMismatch");

  // Module-backed checks: feature count and rank must line up.
  ModulePtr mlp = symbolic_trace(make_zoo_model("mlp3", 0));
  CHECK(error_kind([&] { propagate_shapes(mlp, {Shape{1, 9}}); }) == "ShapeConflict");
  CHECK(error_kind([&] { propagate_shapes(mlp, {Shape{8}}); }) == "ShapeConflict");
  ModulePtr conv = symbolic_trace(make_zoo_model("convbn_net", 0));
  CHECK(error_kind([&] { propagate_shapes(conv, {Shape{1, 4, 8, 8}}); }) == "ShapeConflict");
  CHECK(error_kind([&] { propagate_shapes(conv, {Shape{3, 8, 8}}); }) == "ShapeConflict");
}

TEST_CASE("flop estimates follow the multiply-add-counts-two convention") {
  ModulePtr mlp = symbolic_trace(make_zoo_model("mlp3", 0));
  FlopsReport r = estimate_flops(mlp, {Shape{1, 8}});
  CHECK(r.per_node.at("x") == 0);
  CHECK(r.per_node.at("lin1") == 256);   // 2 * 1 * 16 * 8
  CHECK(r.per_node.at("act1") == 16);    // elementwise
  CHECK(r.per_node.at("lin2") == 512);   // 2 * 1 * 16 * 16
  CHECK(r.per_node.at("lin3") == 128);   // 2 * 1 * 4 * 16
  CHECK(r.per_node.at("output") == 0);
  CHECK(r.total == 928);
  CHECK(r.per_node.size() == std::as_const(*mlp).graph().size());  // every node, exactly once

  ModulePtr conv = symbolic_trace(make_zoo_model("convbn_net", 0));
  FlopsReport c = estimate_flops(conv, {Shape{1, 3, 8, 8}});
  CHECK(c.per_node.at("conv1") == 3456);  // 2 * 1 * 4 * 4 * 4 * 3 * 3 * 3
  CHECK(c.per_node.at("bn1") == 128);     // 2 * numel
  CHECK(c.per_node.at("act1") == 64);
  CHECK(c.per_node.at("conv2") == 4608);  // 2 * 1 * 4 * 4 * 4 * 4 * 3 * 3
  CHECK(c.total == 3456 + 128 + 64 + 4608 + 128 + 64);

  ModulePtr mm = symbolic_trace_function({"a", "b"}, [](TraceSession&, std::vector<Proxy> in) {
    return fn::cat({matmul(in[0], in[1])}, 0);
  });
  FlopsReport m = estimate_flops(mm, {Shape{2, 3}, Shape{3, 4}});
  CHECK(m.per_node.at("matmul") == 48);  // 2 * 2 * 3 * 4
  CHECK(m.per_node.at("cat") == 0);      // pure data movement
}

TEST_CASE("flop and traffic estimates depend on shapes, not parameter values") {
  ModulePtr a = symbolic_trace(make_zoo_model("mlp3", 0));
  ModulePtr b = symbolic_trace(make_zoo_model("mlp3", 12345));
  FlopsReport fa = estimate_flops(a, {Shape{1, 8}});
  FlopsReport fb = estimate_flops(b, {Shape{1, 8}});
  CHECK(fa.per_node == fb.per_node);
  CHECK(fa.total == fb.total);

  MemoryReport ma = estimate_memory(a, {Shape{1, 8}});
  MemoryReport mb = estimate_memory(b, {Shape{1, 8}});
  CHECK(ma.bytes_read == mb.bytes_read);
  CHECK(ma.bytes_written == mb.bytes_written);
  CHECK(ma.peak_live_bytes == mb.peak_live_bytes);
}

TEST_CASE("byte traffic: four floats in, four floats out") {
  ModulePtr gm = symbolic_trace(make_zoo_model("demo_fig1", 0));
  MemoryReport m = estimate_memory(gm, {Shape{4}});
  CHECK(m.bytes_read.at("x") == 0);
  CHECK(m.bytes_written.at("x") == 16);
  CHECK(m.bytes_read.at("relu") == 16);
  CHECK(m.bytes_written.at("relu") == 16);
  CHECK(m.bytes_read.at("output") == 16);
  CHECK(m.bytes_written.at("output") == 0);
  CHECK(m.peak_live_bytes == 32);  // input and activation overlap once
}

TEST_CASE("byte traffic: parameters count toward a module call's reads") {
  ModulePtr mlp = symbolic_trace(make_zoo_model("mlp3", 0));
  MemoryReport m = estimate_memory(mlp, {Shape{1, 8}});
  // lin1 reads its input (32B) plus weight 16x8 (512B) plus bias 16 (64B).
  CHECK(m.bytes_read.at("lin1") == 32 + 512 + 64);
  CHECK(m.bytes_written.at("lin1") == 64);

  // get_attr moves the whole parameter: reads == writes == its bytes.
  ModulePtr holder = Module::user({}, nullptr);
  holder->set_param("w", make_f32({2, 2}, {1.f, 2.f, 3.f, 4.f}));
  Graph g;
  Node* x = g.placeholder("x");
  Node* w = g.get_attr("w");
  g.output(Argument::node(g.call_function("add", {Argument::node(x), Argument::node(w)})));
  MemoryReport gr = estimate_memory(make_graph_module(holder, std::move(g)), {Shape{2, 2}});
  CHECK(gr.bytes_read.at("w") == 16);
  CHECK(gr.bytes_written.at("w") == 16);
}

TEST_CASE("peak liveness follows the drop-after-last-use schedule") {
  // Diamond: both branches of x are alive at once, 48 bytes at the widest.
  Graph g;
  Node* x = g.placeholder("x");
  Node* a = g.call_function("relu", {Argument::node(x)});
  Node* b = g.call_function("neg", {Argument::node(x)});
  Node* c = g.call_function("add", {Argument::node(a), Argument::node(b)});
  g.output(Argument::node(c));
  ModulePtr gm = make_graph_module(nullptr, std::move(g));
  CHECK(estimate_memory(gm, {Shape{4}}).peak_live_bytes == 48);

  // An int8 value weighs one byte per element.
  Graph q;
  Node* qx = q.placeholder("x");
  Node* qq = q.call_function(
      "quantize_affine", {Argument::node(qx), Argument::of(0.1), Argument::of(0)});
  q.output(Argument::node(qq));
  ModulePtr qgm = make_graph_module(nullptr, std::move(q));
  MemoryReport qm = estimate_memory(qgm, {Shape{4}});
  CHECK(qm.bytes_written.at("quantize_affine") == 4);
  CHECK(qm.peak_live_bytes == 20);  // 16B input + 4B quantized copy
}

TEST_CASE("dot output is deterministic and complete for the sample program") {
  ModulePtr gm = symbolic_trace(make_zoo_model("demo_fig1", 0));
  const std::string expected =
      "digraph \"forward\" {\n"
      "  node [shape=box];\n"
      "  \"x\" [label=\"x\\nplaceholder x\"];\n"
      "  \"relu\" [label=\"relu\\ncall_function relu\"];\n"
      "  \"neg\" [label=\"neg\\ncall_method neg\"];\n"
      "  \"output\" [label=\"output\\noutput output\"];\n"
      "  \"x\" -> \"relu\";\n"
      "  \"relu\" -> \"neg\";\n"
      "  \"neg\" -> \"output\";\n"
      "}\n";
  CHECK(emit_dot(gm) == expected);
  CHECK(emit_dot(gm) == emit_dot(gm));
}

TEST_CASE("dot keeps one edge per use, including duplicates") {
  ModulePtr gm = symbolic_trace_function({"x"}, [](TraceSession&, std::vector<Proxy> in) {
    return fn::cat({in[0], in[0]}, 0);
  });
  const std::string dot = emit_dot(gm);
  CHECK(count_occurrences(dot, "  \"x\" -> \"cat\";\n") == 2);
}

TEST_CASE("dot refuses structurally broken graphs") {
  ModulePtr gm = symbolic_trace(make_zoo_model("demo_fig1", 0));
  Graph& g = gm->graph();
  Node* relu = g.find("relu");
  g.set_node_args(*g.output_node(), {Argument::node(relu), Argument::node(relu)});
  CHECK(error_kind([&] { (void)emit_dot(gm); }) == "LintFailed");
}

TEST_CASE("the analysis tables render aligned columns and a flop total") {
  ModulePtr gm = symbolic_trace(make_zoo_model("demo_fig1", 0));
  CHECK(shape_table(gm, {Shape{4}}) ==
        "node    shape  dtype\n"
        "x       [4]    f32\n"
        "relu    [4]    f32\n"
        "neg     [4]    f32\n"
        "output  [4]    f32\n");
  CHECK(analysis_table(gm, {Shape{4}}) ==
        "node    shape  flops  bytes\n"
        "x       [4]        0     16\n"
        "relu    [4]        4     16\n"
        "neg     [4]        4     16\n"
        "output  [4]        0      0\n"
        "total flops: 8\n");

  ModulePtr mlp = symbolic_trace(make_zoo_model("mlp3", 0));
  const std::string table = analysis_table(mlp, {Shape{1, 8}});
  CHECK(table.find("total flops: 928\n") != std::string::npos);
}
