// SPDX-License-Identifier: Apache-2.0
//
// fxir — batch front end over the capture/transform/interpret pipeline.
//
// Exit codes: 0 success, 1 usage or state errors, 2 trace rejection,
// 3 parse or lint failures.  All diagnostics go to stderr; standard output
// is byte-deterministic for a fixed (subcommand, model, flags) invocation.
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fxir/errors.hpp"
#include "fxir/graph.hpp"
#include "fxir/graph_module.hpp"
#include "fxir/module.hpp"
#include "fxir/passes_analysis.hpp"
#include "fxir/passes_quant.hpp"
#include "fxir/passes_transform.hpp"
#include "fxir/registry.hpp"
#include "fxir/serialize.hpp"
#include "fxir/tensor.hpp"
#include "fxir/tracer.hpp"
#include "fxir/zoo.hpp"

using namespace fxir;

namespace {

struct Options {
  std::string model;
  std::uint64_t seed = 0;
  std::string input_shape;  // comma-separated extents; empty = model default
  std::string out_path;
  std::int64_t calib_batches = 8;
  std::vector<std::string> leaves;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << content;
}

TracerConfig tracer_config(const std::vector<std::string>& leaves) {
  TracerConfig config;
  if (!leaves.empty()) {
    config.leaf_predicate = [leaves](const ModulePtr& m, const std::string& path) {
      if (is_builtin_leaf(m->kind())) return true;
      for (const std::string& leaf : leaves)
        if (leaf == path) return true;
      return false;
    };
  }
  return config;
}

/// A model ready to work on: zoo names are constructed and traced; file
/// paths are parsed, and when state is needed the root module named by the
/// required "# model:" header is rebuilt from --seed and re-attached.
struct Loaded {
  ModulePtr gm;
  std::string model_name;  // zoo constructor the graph belongs to
};

Loaded load_model(const Options& opt, bool with_state) {
  if (is_zoo_model(opt.model)) {
    return {symbolic_trace(make_zoo_model(opt.model, opt.seed), tracer_config(opt.leaves)),
            opt.model};
  }
  ParsedGraph parsed = parse_graph(read_file(opt.model));
  if (parsed.model_header.empty())
    throw ParseError(1, 1, "file '" + opt.model + "' is missing its '# model: <name>' header");
  if (!is_zoo_model(parsed.model_header))
    throw Error("UnknownModel",
                "header of '" + opt.model + "' names unknown model '" + parsed.model_header + "'");
  const std::string name = parsed.model_header;
  if (with_state) return {attach_state(std::move(parsed), make_zoo_model(name, opt.seed)), name};
  return {make_graph_module(nullptr, std::move(parsed.graph)), name};
}

Shape effective_input_shape(const Options& opt, const std::string& model_name) {
  if (opt.input_shape.empty()) return zoo_default_input_shape(model_name);
  std::vector<std::int64_t> dims;
  std::size_t start = 0;
  const std::string& text = opt.input_shape;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string piece = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                            : comma - start);
    try {
      std::size_t used = 0;
      const std::int64_t dim = std::stoll(piece, &used);
      if (used != piece.size() || dim < 1) throw std::invalid_argument(piece);
      dims.push_back(dim);
    } catch (const std::exception&) {
      throw Error("BadArgument", "--input-shape expects comma-separated positive integers, got '" +
                                     text + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return Shape(dims);
}

std::vector<Tensor> seeded_batch(const Shape& shape, std::uint64_t seed, std::uint64_t batch,
                                 std::size_t placeholder_count) {
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < placeholder_count; ++i)
    inputs.push_back(seeded_input(shape, seed, batch * placeholder_count + i));
  return inputs;
}

std::string with_model_header(const std::string& model_name, const std::string& body) {
  return "# model: " + model_name + "\n" + body;
}

/// Fig. 1-style four-column listing; args render as a Python-style tuple.
std::string node_listing(const Graph& g) {
  std::string out;
  for (const Node* n : g.nodes()) {
    std::string args = "(";
    for (std::size_t i = 0; i < n->args().size(); ++i) {
      if (i != 0) args += ", ";
      args += n->args()[i].to_string();
    }
    if (n->args().size() == 1) args += ",";
    args += ")";
    out += n->name() + " = " + std::string(opcode_name(n->op())) + " target=" + n->target() +
           " args=" + args + "\n";
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape()))
    throw Error("ShapeMismatch",
                "outputs disagree: " + a.shape().to_string() + " vs " + b.shape().to_string());
  double worst = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = std::abs(static_cast<double>(a.f32_data()[static_cast<std::size_t>(i)]) -
                              static_cast<double>(b.f32_data()[static_cast<std::size_t>(i)]));
    worst = std::max(worst, d);
  }
  return worst;
}

Tensor run_once(const ModulePtr& gm, const std::vector<Tensor>& inputs) {
  const Value result = interpret(gm, inputs);
  if (!result.is_tensor())
    throw Error("TypeMismatch", "graph produced " + std::string(result.kind_name()) +
                                    ", expected a tensor");
  return result.as_tensor();
}

int cmd_trace(const Options& opt) {
  const Loaded loaded = load_model(opt, true);
  std::cout << node_listing(loaded.gm->graph()) << "\n" << loaded.gm->code();
  return 0;
}

int cmd_run(const Options& opt) {
  const Loaded loaded = load_model(opt, true);
  const Shape shape = effective_input_shape(opt, loaded.model_name);
  const auto placeholders = loaded.gm->graph().placeholder_nodes();
  const Value result = interpret(loaded.gm, seeded_batch(shape, opt.seed, 0, placeholders.size()));
  std::cout << result.to_string() << "\n";
  return 0;
}

int cmd_codegen(const Options& opt) {
  std::cout << load_model(opt, false).gm->code();
  return 0;
}

int cmd_dot(const Options& opt) {
  const std::string dot = emit_dot(load_model(opt, false).gm);
  if (opt.out_path.empty())
    std::cout << dot;
  else
    write_file(opt.out_path, dot);
  return 0;
}

int cmd_shapes(const Options& opt) {
  const Loaded loaded = load_model(opt, true);
  const Shape shape = effective_input_shape(opt, loaded.model_name);
  const std::vector<Shape> shapes(loaded.gm->graph().placeholder_nodes().size(), shape);
  std::cout << shape_table(loaded.gm, shapes);
  return 0;
}

int cmd_flops(const Options& opt) {
  const Loaded loaded = load_model(opt, true);
  const Shape shape = effective_input_shape(opt, loaded.model_name);
  const std::vector<Shape> shapes(loaded.gm->graph().placeholder_nodes().size(), shape);
  std::cout << analysis_table(loaded.gm, shapes);
  return 0;
}

int cmd_fuse(const Options& opt) {
  const Loaded base = load_model(opt, true);
  const Loaded fused = load_model(opt, true);
  const PassReport report = fuse_conv_bn(fused.gm);
  recompile(fused.gm);

  const Shape shape = effective_input_shape(opt, fused.model_name);
  const std::size_t placeholder_count = fused.gm->graph().placeholder_nodes().size();
  double worst = 0.0;
  for (std::uint64_t batch = 0; batch < 16; ++batch) {
    const auto inputs = seeded_batch(shape, opt.seed, batch, placeholder_count);
    worst = std::max(worst, max_abs_diff(run_once(base.gm, inputs), run_once(fused.gm, inputs)));
  }

  std::cout << report.to_string();
  std::cout << "max-abs-diff: " << format_real(worst) << "\n";
  if (!opt.out_path.empty())
    write_file(opt.out_path, with_model_header(fused.model_name, fused.gm->code()));
  return 0;
}

int cmd_quantize(const Options& opt) {
  const Loaded base = load_model(opt, true);
  const Shape shape = effective_input_shape(opt, base.model_name);
  const std::size_t placeholder_count = base.gm->graph().placeholder_nodes().size();

  const ModulePtr prepared = prepare(base.gm);
  std::vector<std::vector<Tensor>> batches;
  for (std::int64_t batch = 0; batch < opt.calib_batches; ++batch)
    batches.push_back(
        seeded_batch(shape, opt.seed, static_cast<std::uint64_t>(batch), placeholder_count));
  calibrate(prepared, batches);
  std::cout << observer_table(prepared);

  const ModulePtr quantized = convert(prepared);
  double worst = 0.0;
  double signal = 0.0;
  double noise = 0.0;
  for (const auto& inputs : batches) {
    const Tensor expected = run_once(base.gm, inputs);
    const Tensor actual = run_once(quantized, inputs);
    worst = std::max(worst, max_abs_diff(expected, actual));
    for (std::int64_t i = 0; i < expected.numel(); ++i) {
      const double f = expected.f32_data()[static_cast<std::size_t>(i)];
      const double d = f - actual.f32_data()[static_cast<std::size_t>(i)];
      signal += f * f;
      noise += d * d;
    }
  }
  const double sqnr = 10.0 * std::log10(signal / noise);
  std::cout << "max-abs-error: " << format_real(worst) << "\n";
  std::cout << "sqnr: " << format_real(sqnr) << " dB\n";
  if (!opt.out_path.empty())
    write_file(opt.out_path, with_model_header(base.model_name, quantized->code()));
  return 0;
}

int cmd_cse(const Options& opt) {
  const Loaded loaded = load_model(opt, false);
  const PassReport report = eliminate_common_subexpressions(loaded.gm->graph());
  recompile(loaded.gm);
  std::cout << report.to_string();
  if (!opt.out_path.empty())
    write_file(opt.out_path, with_model_header(loaded.model_name, loaded.gm->code()));
  return 0;
}

int cmd_dce(const Options& opt) {
  const Loaded loaded = load_model(opt, false);
  const PassReport report = eliminate_dead_code(loaded.gm->graph());
  recompile(loaded.gm);
  std::cout << report.to_string();
  if (!opt.out_path.empty())
    write_file(opt.out_path, with_model_header(loaded.model_name, loaded.gm->code()));
  return 0;
}

int cmd_roundtrip(const Options& opt) {
  const Loaded loaded = load_model(opt, false);
  const std::string first = to_linear_form(loaded.gm->graph());
  ParsedGraph reparsed = parse_graph(first);
  const std::string second = to_linear_form(reparsed.graph);
  if (first != second) {
    std::cerr << "error: round-trip is not byte-identical\n";
    return 3;
  }
  std::cout << "identical\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fxir — capture, transform, analyze and run small tensor programs"};
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"trace", "Capture the model and print its node listing and text form"},
      {"run", "Interpret the captured graph on a seeded input"},
      {"codegen", "Print the graph's generated text form"},
      {"dot", "Emit a Graphviz drawing of the graph"},
      {"shapes", "Propagate and print per-node shapes"},
      {"flops", "Print per-node shape, FLOP and byte estimates"},
      {"fuse", "Fold batch norms into their preceding convolutions"},
      {"quantize", "Observe, calibrate and convert to int8"},
      {"cse", "Merge duplicate pure subexpressions"},
      {"dce", "Erase unused pure nodes"},
      {"roundtrip", "Serialize, reparse, reserialize and compare"},
  };
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("model", opt.model, "zoo model name or graph file path")->required();
    sub->add_option("--seed", opt.seed, "seed for parameters and synthetic inputs");
    sub->add_option("--input-shape", opt.input_shape, "comma-separated input extents");
    sub->add_option("--out", opt.out_path, "write the transformed graph (or drawing) here");
    sub->add_option("--calib-batches", opt.calib_batches, "calibration batch count");
    sub->add_option("--leaf", opt.leaves, "module path kept opaque while tracing (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "trace") return cmd_trace(opt);
    if (command == "run") return cmd_run(opt);
    if (command == "codegen") return cmd_codegen(opt);
    if (command == "dot") return cmd_dot(opt);
    if (command == "shapes") return cmd_shapes(opt);
    if (command == "flops") return cmd_flops(opt);
    if (command == "fuse") return cmd_fuse(opt);
    if (command == "quantize") return cmd_quantize(opt);
    if (command == "cse") return cmd_cse(opt);
    if (command == "dce") return cmd_dce(opt);
    if (command == "roundtrip") return cmd_roundtrip(opt);
  } catch (const TraceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const LintError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: unknown subcommand '" << command << "'\n";
  return 1;
}
