// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <span>
#include <vector>

#include "fxir/graph_module.hpp"
#include "fxir/kernels.hpp"
#include "fxir/module.hpp"
#include "fxir/rng.hpp"
#include "test_support.hpp"

using namespace fxir;
using fxir::test::error_kind;
using fxir::test::make_f32;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) { return a.bitwise_equal(b); }

std::vector<float> as_vec(std::span<const float> s) { return {s.begin(), s.end()}; }

std::vector<float> draws(SplitMix64& rng, std::size_t n, double lo, double hi) {
  std::vector<float> out(n);
  for (float& v : out) v = static_cast<float>(rng.uniform(lo, hi));
  return out;
}

bool all_in(const Tensor& t, double lo, double hi) {
  for (float v : t.f32_data()) {
    if (v < lo || v >= hi) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("factories record hyperparameters and allocate the right tensors") {
  SplitMix64 rng(7);
  ModulePtr lin = Module::linear(5, 3, true, rng);
  CHECK(lin->kind() == ModuleKind::kLinear);
  CHECK(lin->config().in_features == 5);
  CHECK(lin->config().out_features == 3);
  CHECK(lin->params().find("weight")->shape() == Shape{3, 5});
  CHECK(lin->params().find("bias")->shape() == Shape{3});
  CHECK(lin->buffers().empty());
  CHECK(lin->children().empty());

  ModulePtr lin_nb = Module::linear(5, 3, false, rng);
  CHECK(lin_nb->params().find("bias") == nullptr);

  ModulePtr conv = Module::conv2d(3, 4, {3, 3}, {2, 2}, {1, 1}, true, rng);
  CHECK(conv->kind() == ModuleKind::kConv2d);
  CHECK(conv->params().find("weight")->shape() == Shape{4, 3, 3, 3});
  CHECK(conv->params().find("bias")->shape() == Shape{4});
  CHECK(conv->config().kernel == std::pair<std::int64_t, std::int64_t>{3, 3});
  CHECK(conv->config().stride == std::pair<std::int64_t, std::int64_t>{2, 2});
  CHECK(conv->config().padding == std::pair<std::int64_t, std::int64_t>{1, 1});

  ModulePtr bn = Module::batch_norm2d(4, 1e-5, rng);
  CHECK(bn->kind() == ModuleKind::kBatchNorm2d);
  CHECK(bn->config().in_channels == 4);
  CHECK(bn->config().eps == doctest::Approx(1e-5));
  CHECK(bn->params().find("weight")->shape() == Shape{4});
  CHECK(bn->params().find("bias")->shape() == Shape{4});
  CHECK(bn->buffers().find("running_mean")->shape() == Shape{4});
  CHECK(bn->buffers().find("running_var")->shape() == Shape{4});

  CHECK(Module::relu()->kind() == ModuleKind::kReLU);
  CHECK(Module::gelu()->kind() == ModuleKind::kGELU);
  CHECK(Module::relu()->params().empty());
  CHECK(Module::observer()->kind() == ModuleKind::kObserver);
  CHECK(Module::observer()->observer_state() != nullptr);
  CHECK(Module::relu()->observer_state() == nullptr);
}

TEST_CASE("parameter initialisation is seed-deterministic, in declaration order") {
  SplitMix64 a(42);
  SplitMix64 b(42);
  ModulePtr m1 = Module::linear(2, 3, true, a);
  ModulePtr m2 = Module::linear(2, 3, true, b);
  CHECK(bitwise_equal(*m1->params().find("weight"), *m2->params().find("weight")));
  CHECK(bitwise_equal(*m1->params().find("bias"), *m2->params().find("bias")));

  // The weight consumes the first 6 draws, the bias the next 3.
  SplitMix64 oracle(42);
  CHECK(as_vec(m1->params().find("weight")->f32_data()) == draws(oracle, 6, -0.1, 0.1));
  CHECK(as_vec(m1->params().find("bias")->f32_data()) == draws(oracle, 3, -0.1, 0.1));

  SplitMix64 c(9001);
  ModulePtr bn = Module::batch_norm2d(16, 1e-5, c);
  CHECK(all_in(*bn->params().find("weight"), -0.1, 0.1));
  CHECK(all_in(*bn->buffers().find("running_mean"), -0.5, 0.5));
  CHECK(all_in(*bn->buffers().find("running_var"), 0.5, 1.5));
}

TEST_CASE("setters validate names; remove_child tolerates absence") {
  SplitMix64 rng(1);
  ModulePtr m = Module::linear(2, 2, true, rng);
  CHECK(error_kind([&] { m->set_param("my weight", make_f32({1}, {0.f})); }) == "BadTarget");
  CHECK(error_kind([&] { m->set_buffer("1b", make_f32({1}, {0.f})); }) == "BadTarget");
  CHECK(error_kind([&] { m->set_child("a.b", Module::relu()); }) == "BadTarget");

  m->set_param("weight", make_f32({2, 2}, {1.f, 2.f, 3.f, 4.f}));
  CHECK(as_vec(m->params().find("weight")->f32_data()) == std::vector<float>{1.f, 2.f, 3.f, 4.f});
  CHECK(m->params().size() == 2);  // replaced in place, no new entry

  ModulePtr seq = Module::sequential({{"a", Module::relu()}, {"b", Module::gelu()}});
  CHECK(seq->children().size() == 2);
  seq->remove_child("b");
  CHECK(seq->children().size() == 1);
  seq->remove_child("nope");  // silently ignored
  CHECK(seq->children().size() == 1);
}

TEST_CASE("resolve_path walks children then params/buffers") {
  SplitMix64 rng(3);
  ModulePtr lin = Module::linear(4, 2, true, rng);
  ModulePtr bn = Module::batch_norm2d(2, 1e-5, rng);
  ModulePtr block = Module::sequential({{"lin1", lin}, {"bn1", bn}});
  ModulePtr root = Module::sequential({{"block", block}});

  CHECK(resolve_module(root, "block.lin1") == lin);
  CHECK(bitwise_equal(resolve_tensor(root, "block.lin1.weight"), *lin->params().find("weight")));
  CHECK(bitwise_equal(resolve_tensor(root, "block.bn1.running_var"),
                      *bn->buffers().find("running_var")));

  try {
    resolve_path(root, "block.nope.weight");
    FAIL("expected PathNotFound");
  } catch (const Error& e) {
    CHECK(e.kind() == "PathNotFound");
    CHECK(std::string(e.what()).find("'nope'") != std::string::npos);
  }
  CHECK(error_kind([&] { resolve_module(root, "block.lin1.weight"); }) == "PathNotFound");
  CHECK(error_kind([&] { resolve_tensor(root, "block.lin1"); }) == "PathNotFound");
  CHECK(error_kind([&] { resolve_path(nullptr, "x"); }) == "PathNotFound");
  // Params are not modules, so paths may not traverse through them.
  CHECK(error_kind([&] { resolve_path(root, "block.lin1.weight.sub"); }) == "PathNotFound");
}

TEST_CASE("set_at_path replaces in category and refuses cross-category writes") {
  SplitMix64 rng(5);
  ModulePtr bn = Module::batch_norm2d(2, 1e-5, rng);
  ModulePtr root = Module::sequential({{"bn1", bn}});

  // Replacing a buffer keeps it a buffer.
  Tensor zeros = make_f32({2}, {0.f, 0.f});
  set_at_path(root, "bn1.running_mean", zeros);
  CHECK(bitwise_equal(*bn->buffers().find("running_mean"), zeros));
  CHECK(bn->params().find("running_mean") == nullptr);

  // A fresh tensor name lands among the parameters.
  set_at_path(root, "bn1.extra", zeros);
  CHECK(bn->params().find("extra") != nullptr);

  // A fresh module name becomes a child.
  set_at_path(root, "bn1.helper", Module::relu());
  CHECK(bn->children().find("helper") != nullptr);

  CHECK(error_kind([&] { set_at_path(root, "bn1.running_mean", Module::relu()); }) ==
        "BadTarget");
  CHECK(error_kind([&] { set_at_path(root, "bn1.helper", zeros); }) == "BadTarget");
  CHECK(error_kind([&] { set_at_path(root, "missing.x", zeros); }) == "PathNotFound");
}

TEST_CASE("forward_eval matches the kernels it wraps, bit for bit") {
  SplitMix64 rng(11);
  Tensor x = make_f32({2, 4}, {0.5f, -1.f, 2.f, -0.25f, 1.5f, 0.f, -3.f, 0.75f});

  ModulePtr lin = Module::linear(4, 3, true, rng);
  CHECK(bitwise_equal(forward_eval(lin, {x}),
                      ops::linear(x, *lin->params().find("weight"), *lin->params().find("bias"))));

  ModulePtr lin_nb = Module::linear(4, 3, false, rng);
  CHECK(bitwise_equal(forward_eval(lin_nb, {x}),
                      ops::linear(x, *lin_nb->params().find("weight"), std::nullopt)));

  CHECK(bitwise_equal(forward_eval(Module::relu(), {x}), ops::relu(x)));
  CHECK(bitwise_equal(forward_eval(Module::gelu(), {x}), ops::gelu(x)));

  SplitMix64 rng2(12);
  ModulePtr conv = Module::conv2d(1, 2, {3, 3}, {2, 2}, {1, 1}, true, rng2);
  std::vector<float> img(36);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i) * 0.1f - 1.7f;
  Tensor im = make_f32({1, 1, 6, 6}, img);
  CHECK(bitwise_equal(forward_eval(conv, {im}),
                      ops::conv2d(im, *conv->params().find("weight"), *conv->params().find("bias"),
                                  {2, 2}, {1, 1})));

  ModulePtr bn = Module::batch_norm2d(2, 1e-3, rng2);
  Tensor nchw = make_f32({1, 2, 2, 2}, {1.f, 2.f, 3.f, 4.f, -1.f, -2.f, -3.f, -4.f});
  CHECK(bitwise_equal(
      forward_eval(bn, {nchw}),
      ops::batch_norm2d(nchw, *bn->params().find("weight"), *bn->params().find("bias"),
                        *bn->buffers().find("running_mean"), *bn->buffers().find("running_var"),
                        1e-3)));
}

TEST_CASE("forward_eval composes Sequential children in declaration order") {
  SplitMix64 rng(21);
  ModulePtr lin1 = Module::linear(4, 4, true, rng);
  ModulePtr lin2 = Module::linear(4, 2, true, rng);
  ModulePtr seq = Module::sequential({{"l1", lin1}, {"act", Module::relu()}, {"l2", lin2}});

  Tensor x = make_f32({1, 4}, {0.3f, -0.6f, 0.9f, -1.2f});
  Tensor expected = ops::linear(ops::relu(ops::linear(x, *lin1->params().find("weight"),
                                                      *lin1->params().find("bias"))),
                                *lin2->params().find("weight"), *lin2->params().find("bias"));
  CHECK(bitwise_equal(forward_eval(seq, {x}), expected));

  ModulePtr empty = Module::sequential({});
  CHECK(error_kind([&] { forward_eval(empty, {x}); }) == "UnsupportedKind");
}

TEST_CASE("forward_eval interprets GraphModules through their captured graph") {
  Graph g;
  Node* x = g.placeholder("x");
  Node* r = g.call_function("relu", {Argument::node(x)});
  Node* n = g.call_function("neg", {Argument::node(r)});
  g.output(Argument::node(n));
  ModulePtr gm = make_graph_module(nullptr, std::move(g));

  Tensor in = make_f32({4}, {-1.f, 2.f, -3.f, 4.f});
  CHECK(bitwise_equal(forward_eval(gm, {in}), ops::neg(ops::relu(in))));
}

TEST_CASE("forward_eval checks arity and refuses untraced user modules") {
  Tensor x = make_f32({2}, {1.f, 2.f});
  CHECK(error_kind([&] { forward_eval(Module::relu(), {x, x}); }) == "ArityMismatch");
  CHECK(error_kind([&] { forward_eval(Module::relu(), {}); }) == "ArityMismatch");
  CHECK(error_kind([&] { forward_eval(nullptr, {x}); }) == "PathNotFound");

  ModulePtr user = Module::user({"a"}, [](TraceContext&, std::vector<Proxy> inputs) {
    return inputs.front();
  });
  CHECK(user->kind() == ModuleKind::kUser);
  CHECK(user->input_names() == std::vector<std::string>{"a"});
  CHECK(error_kind([&] { forward_eval(user, {x}); }) == "UnsupportedKind");
}

TEST_CASE("observers record extremes per element and count batches") {
  ModulePtr obs = Module::observer();
  const ObserverState& state = *obs->observer_state();
  CHECK(state.samples_seen == 0);
  CHECK(state.running_min == std::numeric_limits<double>::infinity());

  Tensor b1 = make_f32({3}, {0.25f, -0.5f, 1.f});
  Tensor out = forward_eval(obs, {b1});
  CHECK(bitwise_equal(out, b1));  // instrumentation is value-transparent
  CHECK(state.samples_seen == 1);
  CHECK(state.running_min == doctest::Approx(-0.5));
  CHECK(state.running_max == doctest::Approx(1.0));

  Tensor b2 = make_f32({2}, {-2.f, 0.f});
  forward_eval(obs, {b2});
  CHECK(state.samples_seen == 2);
  CHECK(state.running_min == doctest::Approx(-2.0));
  CHECK(state.running_max == doctest::Approx(1.0));  // max unchanged
}

TEST_CASE("kind names and leaf classification are stable") {
  CHECK(module_kind_name(ModuleKind::kLinear) == "Linear");
  CHECK(module_kind_name(ModuleKind::kBatchNorm2d) == "BatchNorm2d");
  CHECK(module_kind_name(ModuleKind::kGraphModule) == "GraphModule");
  CHECK(is_builtin_leaf(ModuleKind::kLinear));
  CHECK(is_builtin_leaf(ModuleKind::kObserver));
  CHECK(!is_builtin_leaf(ModuleKind::kSequential));
  CHECK(!is_builtin_leaf(ModuleKind::kUser));
  CHECK(!is_builtin_leaf(ModuleKind::kGraphModule));

  SplitMix64 rng(2);
  ModulePtr m = Module::linear(1, 1, true, rng);
  CHECK(error_kind([&] { (void)m->graph(); }) == "UnsupportedKind");
  CHECK(!m->has_graph());
}
