// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fxir/errors.hpp"

namespace fxir {

class Node;
class Graph;

/// The six operation kinds a node can carry.  Placeholders bind inputs,
/// output returns the result, the middle four apply computation or fetch
/// state; nothing else exists.
enum class OpCode {
  kPlaceholder,
  kCallFunction,
  kCallMethod,
  kCallModule,
  kGetAttr,
  kOutput,
};

std::string_view opcode_name(OpCode op);
std::optional<OpCode> opcode_from_name(std::string_view name);

/// A node operand: either an immediate (int, real, bool, text, none), a
/// reference to another node in the same graph, or a sequence/mapping of
/// arguments.  Mapping keys are identifiers.  Nesting depth is capped at 8.
class Argument {
 public:
  using List = std::vector<Argument>;
  using Dict = std::vector<std::pair<std::string, Argument>>;

  Argument() : value_(std::monostate{}) {}  // none

  static Argument none() { return Argument(); }
  static Argument of(bool v) { return Argument(Value(v)); }
  static Argument of(std::int64_t v) { return Argument(Value(v)); }
  static Argument of(int v) { return Argument(Value(static_cast<std::int64_t>(v))); }
  static Argument of(double v) { return Argument(Value(v)); }
  static Argument of(std::string v) { return Argument(Value(std::move(v))); }
  static Argument of(const char* v) { return Argument(Value(std::string(v))); }
  static Argument node(Node* n);
  static Argument list(List items) { return Argument(Value(std::move(items))); }
  static Argument dict(Dict items) { return Argument(Value(std::move(items))); }

  bool is_none() const { return std::holds_alternative<std::monostate>(value_); }
  bool is_bool() const { return std::holds_alternative<bool>(value_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(value_); }
  bool is_real() const { return std::holds_alternative<double>(value_); }
  bool is_text() const { return std::holds_alternative<std::string>(value_); }
  bool is_node() const { return std::holds_alternative<Node*>(value_); }
  bool is_list() const { return std::holds_alternative<List>(value_); }
  bool is_dict() const { return std::holds_alternative<Dict>(value_); }

  bool as_bool() const { return std::get<bool>(value_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(value_); }
  double as_real() const { return std::get<double>(value_); }
  const std::string& as_text() const { return std::get<std::string>(value_); }
  Node* as_node() const { return std::get<Node*>(value_); }
  const List& as_list() const { return std::get<List>(value_); }
  const Dict& as_dict() const { return std::get<Dict>(value_); }

  /// Deep equality; node references compare by identity.
  bool operator==(const Argument& other) const { return value_ == other.value_; }

  /// 1 for leaves, 1 + max(children) for sequences and mappings.
  int depth() const;

  /// Calls `fn` on every node reference reachable through sequences and
  /// mappings, in argument order.
  void for_each_node(const std::function<void(Node*)>& fn) const;

  /// Returns a copy with every reference to `from` rewritten to `to`;
  /// `replaced` is incremented per occurrence.
  Argument replaced(Node* from, Node* to, std::int64_t* replaced) const;

  /// Rendering used by diagnostics and the trace listing (node refs appear
  /// as bare names, immediates in serialized form).
  std::string to_string() const;

 private:
  using Value = std::variant<std::monostate, bool, std::int64_t, double, std::string, Node*, List,
                             Dict>;
  explicit Argument(Value v) : value_(std::move(v)) {}

  Value value_;
};

using ArgList = std::vector<Argument>;
using KwargDict = Argument::Dict;

/// One structural-validation finding: a stable kebab-case code plus the
/// name of the offending node (empty for graph-level findings).
struct LintViolation {
  std::string code;
  std::string node;

  std::string to_string() const { return node.empty() ? code : code + " (" + node + ")"; }
};

/// A single operation in a graph.  Nodes are created, rewired and erased
/// exclusively through Graph so that name uniqueness, ordering and user
/// bookkeeping can never drift; fields are read-only from outside.
class Node {
 public:
  const std::string& name() const { return name_; }
  OpCode op() const { return op_; }
  const std::string& target() const { return target_; }
  const ArgList& args() const { return args_; }
  const KwargDict& kwargs() const { return kwargs_; }

  /// The set of nodes whose args/kwargs reference this node, in first-use
  /// order.  Maintained by Graph; always consistent with a full re-scan.
  const std::vector<Node*>& users() const { return users_; }

  /// Free-form annotations (e.g. attached by a tracer hook).  Never
  /// serialized and never part of equality.
  std::map<std::string, std::string> meta;

  Node() = default;  // inert until a Graph adopts it; fields are Graph-owned

 private:
  friend class Graph;

  std::string name_;
  OpCode op_ = OpCode::kPlaceholder;
  std::string target_;
  ArgList args_;
  KwargDict kwargs_;
  std::vector<Node*> users_;
};

/// Doubly linked sequence of nodes with a movable insertion point.
///
/// Structural invariants, enforced at every mutation (a call that throws
/// leaves the graph untouched):
///   - node names are unique identifiers;
///   - placeholders precede all other nodes;
///   - exactly one output node, and it is last;
///   - every node reference points backwards (def-before-use) and into
///     this graph;
///   - user sets match a full re-scan of args/kwargs.
class Graph {
 public:
  Graph() = default;
  Graph(Graph&&) noexcept;
  Graph& operator=(Graph&&) noexcept;
  Graph(const Graph&) = delete;  // use copy(): node refs must be remapped
  Graph& operator=(const Graph&) = delete;

  const std::string& name() const { return name_; }
  void set_name(std::string name);

  std::size_t size() const { return nodes_.size(); }
  std::vector<Node*> nodes();
  std::vector<const Node*> nodes() const;
  Node* find(std::string_view name);
  const Node* find(std::string_view name) const;
  Node* output_node();
  const Node* output_node() const;
  std::vector<Node*> placeholder_nodes();
  std::vector<const Node*> placeholder_nodes() const;
  bool contains(const Node* n) const;

  /// Position of `n` in the node order; NodeNotInGraph if absent.
  std::size_t index_of(const Node& n) const;

  /// Creates a node at the insertion point.  The name is derived from the
  /// target (dots become underscores) and suffixed _1, _2, ... on collision.
  /// Throws UseBeforeDef / DuplicateOutput / BadTarget / BadArgument /
  /// BadPlacement without modifying the graph.
  Node* create_node(OpCode op, std::string target, ArgList args = {}, KwargDict kwargs = {});

  Node* placeholder(const std::string& param_name, std::optional<Argument> default_value = {});
  Node* call_function(std::string target, ArgList args, KwargDict kwargs = {});
  Node* call_method(std::string target, ArgList args, KwargDict kwargs = {});
  Node* call_module(std::string target, ArgList args, KwargDict kwargs = {});
  Node* get_attr(std::string target);
  Node* output(Argument value);

  /// Scoped insertion point: while the returned guard lives, created nodes
  /// are placed directly after `n` (or before it), in creation order; the
  /// previous insertion point is restored when the guard is destroyed.
  class InsertionGuard {
   public:
    ~InsertionGuard();
    InsertionGuard(InsertionGuard&& other) noexcept;
    InsertionGuard(const InsertionGuard&) = delete;
    InsertionGuard& operator=(const InsertionGuard&) = delete;
    InsertionGuard& operator=(InsertionGuard&&) = delete;

   private:
    friend class Graph;
    InsertionGuard(Graph* g, bool prev_custom, std::list<Node>::iterator prev_it)
        : graph_(g), prev_custom_(prev_custom), prev_it_(prev_it) {}
    Graph* graph_;
    bool prev_custom_;
    std::list<Node>::iterator prev_it_;
  };

  [[nodiscard]] InsertionGuard inserting_after(Node& n);
  [[nodiscard]] InsertionGuard inserting_before(Node& n);

  /// Rewrites every occurrence of `old_node` in any other node's args and
  /// kwargs (recursively through sequences and mappings) to `new_node` and
  /// returns the number of occurrences rewritten.  Occurrences inside
  /// `new_node` itself are left alone so a replacement may consume the
  /// value it replaces.  Throws UseBeforeDef if a rewritten user would end
  /// up ahead of `new_node`.
  std::int64_t replace_all_uses_with(Node& old_node, Node& new_node);

  /// Removes `n`.  Requires an empty user set (HasUsers lists the blocking
  /// users) and rejects the output node (CannotEraseOutput).
  void erase_node(Node& n);

  /// Replaces a node's operands, keeping user sets exact.  Same validation
  /// as create_node.
  void set_node_args(Node& n, ArgList args, KwargDict kwargs = {});

  /// Retargets a node in place (the name is kept).
  void set_node_target(Node& n, std::string target);

  /// Structural validation as data: empty means every invariant holds.
  std::vector<LintViolation> lint() const;
  std::vector<std::string> lint_codes() const;

  /// Deep copy with fresh node identities; names, order, targets, operands
  /// and annotations are preserved, references are remapped.
  Graph copy() const;
  Graph copy(std::map<const Node*, Node*>* mapping) const;

 private:
  using NodeIt = std::list<Node>::iterator;

  NodeIt insert_position();
  NodeIt iterator_of(const Node& n);
  std::string derive_name(OpCode op, const std::string& target) const;
  bool name_taken(std::string_view name) const;
  void check_placement(OpCode op, std::size_t position) const;
  void check_operands(const ArgList& args, const KwargDict& kwargs, std::size_t position,
                      const Node* self) const;
  void add_user_edges(Node* n);
  void remove_user_edges(Node* n);
  void reorder_users(Node* producer);
  Node* insert_with_name(OpCode op, std::string name, std::string target, ArgList args,
                         KwargDict kwargs);

  friend struct GraphParser;  // the text parser installs explicit names

  std::string name_ = "forward";
  std::list<Node> nodes_;
  bool use_custom_insert_ = false;
  NodeIt custom_insert_{};
};

/// True if `text` is a plain identifier: [A-Za-z_][A-Za-z0-9_]*.
bool is_identifier(std::string_view text);

/// True for dotted paths of identifiers ("block.conv1.weight").
bool is_dotted_path(std::string_view text);

/// Double-quotes `s`, escaping ", \, newline and tab.  The text form and
/// diagnostics share this rendering.
std::string quote_text(std::string_view s);

/// Words the text form claims for itself; no node may take them as a name
/// ("output" is reserved *for* the output node).
bool is_reserved_word(std::string_view s);

}  // namespace fxir
