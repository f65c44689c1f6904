// SPDX-License-Identifier: Apache-2.0
#include "fxir/graph.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

#include "fxir/tensor.hpp"  // format_real for Argument::to_string

namespace fxir {
namespace {

constexpr int kMaxArgDepth = 8;

void dict_for_each_node(const KwargDict& dict, const std::function<void(Node*)>& fn) {
  for (const auto& [key, value] : dict) value.for_each_node(fn);
}

KwargDict dict_replaced(const KwargDict& dict, Node* from, Node* to, std::int64_t* replaced) {
  KwargDict out;
  out.reserve(dict.size());
  for (const auto& [key, value] : dict) {
    out.emplace_back(key, value.replaced(from, to, replaced));
  }
  return out;
}

}  // namespace

bool is_reserved_word(std::string_view s) {
  return s == "graph" || s == "return" || s == "true" || s == "false" || s == "none" ||
         s == "output";
}

std::string quote_text(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += "\"";
  return out;
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(text[0])) || text[0] == '_')) return false;
  for (char c : text) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

bool is_dotted_path(std::string_view text) {
  std::size_t start = 0;
  while (true) {
    std::size_t dot = text.find('.', start);
    std::string_view part =
        dot == std::string_view::npos ? text.substr(start) : text.substr(start, dot - start);
    if (!is_identifier(part)) return false;
    if (dot == std::string_view::npos) return true;
    start = dot + 1;
  }
}

std::string_view opcode_name(OpCode op) {
  switch (op) {
    case OpCode::kPlaceholder: return "placeholder";
    case OpCode::kCallFunction: return "call_function";
    case OpCode::kCallMethod: return "call_method";
    case OpCode::kCallModule: return "call_module";
    case OpCode::kGetAttr: return "get_attr";
    case OpCode::kOutput: return "output";
  }
  return "?";
}

std::optional<OpCode> opcode_from_name(std::string_view name) {
  for (OpCode op : {OpCode::kPlaceholder, OpCode::kCallFunction, OpCode::kCallMethod,
                    OpCode::kCallModule, OpCode::kGetAttr, OpCode::kOutput}) {
    if (opcode_name(op) == name) return op;
  }
  return std::nullopt;
}

Argument Argument::node(Node* n) {
  if (n == nullptr) throw Error("BadArgument", "node reference may not be null");
  return Argument(Value(n));
}

int Argument::depth() const {
  if (is_list()) {
    int max_child = 0;
    for (const Argument& item : as_list()) max_child = std::max(max_child, item.depth());
    return 1 + max_child;
  }
  if (is_dict()) {
    int max_child = 0;
    for (const auto& [key, value] : as_dict()) max_child = std::max(max_child, value.depth());
    return 1 + max_child;
  }
  return 1;
}

void Argument::for_each_node(const std::function<void(Node*)>& fn) const {
  if (is_node()) {
    fn(as_node());
  } else if (is_list()) {
    for (const Argument& item : as_list()) item.for_each_node(fn);
  } else if (is_dict()) {
    dict_for_each_node(as_dict(), fn);
  }
}

Argument Argument::replaced(Node* from, Node* to, std::int64_t* replaced) const {
  if (is_node()) {
    if (as_node() == from) {
      if (replaced != nullptr) ++*replaced;
      return Argument::node(to);
    }
    return *this;
  }
  if (is_list()) {
    List out;
    out.reserve(as_list().size());
    for (const Argument& item : as_list()) out.push_back(item.replaced(from, to, replaced));
    return Argument::list(std::move(out));
  }
  if (is_dict()) {
    return Argument::dict(dict_replaced(as_dict(), from, to, replaced));
  }
  return *this;
}

std::string Argument::to_string() const {
  if (is_none()) return "none";
  if (is_bool()) return as_bool() ? "true" : "false";
  if (is_int()) return std::to_string(as_int());
  if (is_real()) return format_real(as_real());
  if (is_text()) return quote_text(as_text());
  if (is_node()) return as_node()->name();
  if (is_list()) {
    std::string out = "[";
    const List& items = as_list();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i != 0) out += ", ";
      out += items[i].to_string();
    }
    return out + "]";
  }
  std::string out = "{";
  const Dict& items = as_dict();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i != 0) out += ", ";
    out += items[i].first + "=" + items[i].second.to_string();
  }
  return out + "}";
}

Graph::Graph(Graph&& other) noexcept
    : name_(std::move(other.name_)), nodes_(std::move(other.nodes_)) {
  // A custom insertion point does not survive a move; guards must not
  // outlive the graph they were taken from.
}

Graph& Graph::operator=(Graph&& other) noexcept {
  name_ = std::move(other.name_);
  nodes_ = std::move(other.nodes_);
  use_custom_insert_ = false;
  return *this;
}

void Graph::set_name(std::string name) {
  if (!is_identifier(name)) {
    throw Error("BadTarget", "graph name '" + name + "' is not an identifier");
  }
  name_ = std::move(name);
}

std::vector<Node*> Graph::nodes() {
  std::vector<Node*> out;
  out.reserve(nodes_.size());
  for (Node& n : nodes_) out.push_back(&n);
  return out;
}

std::vector<const Node*> Graph::nodes() const {
  std::vector<const Node*> out;
  out.reserve(nodes_.size());
  for (const Node& n : nodes_) out.push_back(&n);
  return out;
}

Node* Graph::find(std::string_view name) {
  for (Node& n : nodes_) {
    if (n.name_ == name) return &n;
  }
  return nullptr;
}

const Node* Graph::find(std::string_view name) const {
  for (const Node& n : nodes_) {
    if (n.name_ == name) return &n;
  }
  return nullptr;
}

Node* Graph::output_node() {
  for (Node& n : nodes_) {
    if (n.op_ == OpCode::kOutput) return &n;
  }
  return nullptr;
}

const Node* Graph::output_node() const {
  for (const Node& n : nodes_) {
    if (n.op_ == OpCode::kOutput) return &n;
  }
  return nullptr;
}

std::vector<Node*> Graph::placeholder_nodes() {
  std::vector<Node*> out;
  for (Node& n : nodes_) {
    if (n.op_ == OpCode::kPlaceholder) out.push_back(&n);
  }
  return out;
}

std::vector<const Node*> Graph::placeholder_nodes() const {
  std::vector<const Node*> out;
  for (const Node& n : nodes_) {
    if (n.op_ == OpCode::kPlaceholder) out.push_back(&n);
  }
  return out;
}

bool Graph::contains(const Node* n) const {
  for (const Node& candidate : nodes_) {
    if (&candidate == n) return true;
  }
  return false;
}

std::size_t Graph::index_of(const Node& n) const {
  std::size_t i = 0;
  for (const Node& candidate : nodes_) {
    if (&candidate == &n) return i;
    ++i;
  }
  throw Error("NodeNotInGraph", "node '" + n.name_ + "' does not belong to this graph");
}

Graph::NodeIt Graph::insert_position() {
  return use_custom_insert_ ? custom_insert_ : nodes_.end();
}

Graph::NodeIt Graph::iterator_of(const Node& n) {
  for (auto it = nodes_.begin(); it != nodes_.end(); ++it) {
    if (&*it == &n) return it;
  }
  throw Error("NodeNotInGraph", "node '" + n.name_ + "' does not belong to this graph");
}

bool Graph::name_taken(std::string_view name) const { return find(name) != nullptr; }

std::string Graph::derive_name(OpCode op, const std::string& target) const {
  if (op == OpCode::kOutput) return "output";
  std::string base;
  base.reserve(target.size());
  for (char c : target) {
    base += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  }
  if (base.empty()) base = "_";
  if (std::isdigit(static_cast<unsigned char>(base[0]))) base.insert(base.begin(), '_');
  if (is_reserved_word(base)) base += '_';
  if (!name_taken(base)) return base;
  for (int suffix = 1;; ++suffix) {
    std::string candidate = base + "_" + std::to_string(suffix);
    if (!name_taken(candidate)) return candidate;
  }
}

void Graph::check_placement(OpCode op, std::size_t position) const {
  std::size_t placeholder_prefix = 0;
  for (const Node& n : nodes_) {
    if (n.op_ != OpCode::kPlaceholder) break;
    ++placeholder_prefix;
  }
  bool has_output = false;
  for (const Node& n : nodes_) {
    if (n.op_ == OpCode::kOutput) {
      has_output = true;
      break;
    }
  }

  if (op == OpCode::kOutput) {
    if (has_output) throw Error("DuplicateOutput", "graph already has an output node");
    if (position != nodes_.size()) {
      throw Error("BadPlacement", "the output node must be created at the end of the graph");
    }
    return;
  }
  if (op == OpCode::kPlaceholder) {
    if (position > placeholder_prefix) {
      throw Error("BadPlacement", "placeholders must precede every other node");
    }
    return;
  }
  if (position < placeholder_prefix) {
    throw Error("BadPlacement", "cannot insert ahead of the placeholder prefix");
  }
  if (has_output && position >= nodes_.size()) {
    throw Error("BadPlacement", "cannot insert after the output node");
  }
}

void Graph::check_operands(const ArgList& args, const KwargDict& kwargs, std::size_t position,
                           const Node* self) const {
  // Node refs must point into this graph and strictly backwards.
  std::unordered_set<const Node*> visible;
  std::size_t i = 0;
  for (const Node& n : nodes_) {
    if (i >= position) break;
    if (self == nullptr || &n != self) visible.insert(&n);
    ++i;
  }
  auto check_ref = [&](Node* ref) {
    if (!contains(ref)) {
      throw Error("NodeNotInGraph",
                  "operand '" + ref->name() + "' does not belong to this graph");
    }
    if (visible.find(ref) == visible.end()) {
      throw Error("UseBeforeDef", "operand '" + ref->name() + "' is not defined earlier");
    }
  };
  for (const Argument& arg : args) {
    if (arg.depth() > kMaxArgDepth) {
      throw Error("BadArgument", "argument nests deeper than 8 levels");
    }
    arg.for_each_node(check_ref);
  }
  for (const auto& [key, value] : kwargs) {
    if (!is_identifier(key)) {
      throw Error("BadArgument", "kwarg key '" + key + "' is not an identifier");
    }
    if (value.depth() > kMaxArgDepth) {
      throw Error("BadArgument", "argument nests deeper than 8 levels");
    }
    value.for_each_node(check_ref);
  }
}

void Graph::add_user_edges(Node* n) {
  std::vector<Node*> gained;
  auto add = [&](Node* ref) {
    auto& users = ref->users_;
    if (std::find(users.begin(), users.end(), n) == users.end()) {
      users.push_back(n);
      if (users.size() > 1) gained.push_back(ref);
    }
  };
  for (const Argument& arg : n->args_) arg.for_each_node(add);
  dict_for_each_node(n->kwargs_, add);
  // `n` may sit anywhere in the order (insertion guards), so a plain append
  // can break the users-follow-graph-order invariant; restore it.
  for (Node* producer : gained) reorder_users(producer);
}

void Graph::remove_user_edges(Node* n) {
  auto remove = [n](Node* ref) {
    auto& users = ref->users_;
    users.erase(std::remove(users.begin(), users.end(), n), users.end());
  };
  for (const Argument& arg : n->args_) arg.for_each_node(remove);
  dict_for_each_node(n->kwargs_, remove);
}

void Graph::reorder_users(Node* producer) {
  if (producer->users_.size() < 2) return;
  std::vector<Node*> ordered;
  ordered.reserve(producer->users_.size());
  for (Node& candidate : nodes_) {
    bool references = false;
    const auto note = [&](Node* ref) { references = references || ref == producer; };
    for (const Argument& arg : candidate.args_) arg.for_each_node(note);
    dict_for_each_node(candidate.kwargs_, note);
    if (references) ordered.push_back(&candidate);
  }
  producer->users_ = std::move(ordered);
}

Node* Graph::insert_with_name(OpCode op, std::string name, std::string target, ArgList args,
                              KwargDict kwargs) {
  NodeIt pos = insert_position();
  const std::size_t position = static_cast<std::size_t>(std::distance(nodes_.begin(), pos));
  check_placement(op, position);
  check_operands(args, kwargs, position, nullptr);

  NodeIt it = nodes_.emplace(pos);
  Node& n = *it;
  n.name_ = std::move(name);
  n.op_ = op;
  n.target_ = std::move(target);
  n.args_ = std::move(args);
  n.kwargs_ = std::move(kwargs);
  add_user_edges(&n);
  return &n;
}

Node* Graph::create_node(OpCode op, std::string target, ArgList args, KwargDict kwargs) {
  switch (op) {
    case OpCode::kPlaceholder:
      if (!is_identifier(target) || is_reserved_word(target)) {
        throw Error("BadTarget", "placeholder target '" + target + "' is not a usable identifier");
      }
      if (name_taken(target)) {
        throw Error("BadTarget", "duplicate placeholder '" + target + "'");
      }
      break;
    case OpCode::kCallFunction:
    case OpCode::kCallMethod:
      if (!is_identifier(target)) {
        throw Error("BadTarget", std::string(opcode_name(op)) + " target '" + target +
                                     "' is not an identifier");
      }
      break;
    case OpCode::kCallModule:
    case OpCode::kGetAttr:
      if (!is_dotted_path(target)) {
        throw Error("BadTarget", std::string(opcode_name(op)) + " target '" + target +
                                     "' is not a dotted path");
      }
      break;
    case OpCode::kOutput:
      target = "output";
      break;
  }
  std::string name = op == OpCode::kPlaceholder ? target : derive_name(op, target);
  return insert_with_name(op, std::move(name), std::move(target), std::move(args),
                          std::move(kwargs));
}

Node* Graph::placeholder(const std::string& param_name, std::optional<Argument> default_value) {
  ArgList args;
  if (default_value) {
    bool has_ref = false;
    default_value->for_each_node([&](Node*) { has_ref = true; });
    if (has_ref) {
      throw Error("BadArgument", "placeholder default for '" + param_name +
                                     "' must be an immediate, not a node reference");
    }
    args.push_back(std::move(*default_value));
  }
  return create_node(OpCode::kPlaceholder, param_name, std::move(args));
}

Node* Graph::call_function(std::string target, ArgList args, KwargDict kwargs) {
  return create_node(OpCode::kCallFunction, std::move(target), std::move(args), std::move(kwargs));
}

Node* Graph::call_method(std::string target, ArgList args, KwargDict kwargs) {
  return create_node(OpCode::kCallMethod, std::move(target), std::move(args), std::move(kwargs));
}

Node* Graph::call_module(std::string target, ArgList args, KwargDict kwargs) {
  return create_node(OpCode::kCallModule, std::move(target), std::move(args), std::move(kwargs));
}

Node* Graph::get_attr(std::string target) {
  return create_node(OpCode::kGetAttr, std::move(target));
}

Node* Graph::output(Argument value) {
  return create_node(OpCode::kOutput, "output", {std::move(value)});
}

Graph::InsertionGuard::~InsertionGuard() {
  if (graph_ == nullptr) return;
  graph_->use_custom_insert_ = prev_custom_;
  graph_->custom_insert_ = prev_it_;
}

Graph::InsertionGuard::InsertionGuard(InsertionGuard&& other) noexcept
    : graph_(other.graph_), prev_custom_(other.prev_custom_), prev_it_(other.prev_it_) {
  other.graph_ = nullptr;
}

Graph::InsertionGuard Graph::inserting_after(Node& n) {
  NodeIt it = iterator_of(n);
  InsertionGuard guard(this, use_custom_insert_, custom_insert_);
  use_custom_insert_ = true;
  custom_insert_ = std::next(it);
  return guard;
}

Graph::InsertionGuard Graph::inserting_before(Node& n) {
  NodeIt it = iterator_of(n);
  InsertionGuard guard(this, use_custom_insert_, custom_insert_);
  use_custom_insert_ = true;
  custom_insert_ = it;
  return guard;
}

std::int64_t Graph::replace_all_uses_with(Node& old_node, Node& new_node) {
  if (!contains(&old_node) || !contains(&new_node)) {
    throw Error("NodeNotInGraph", "replace_all_uses_with requires both nodes in this graph");
  }
  if (&old_node == &new_node) return 0;

  const std::size_t new_index = index_of(new_node);
  std::vector<Node*> users_snapshot = old_node.users_;
  for (Node* user : users_snapshot) {
    if (user == &new_node) continue;  // the replacement may consume the old value
    if (index_of(*user) <= new_index) {
      throw Error("UseBeforeDef", "user '" + user->name_ + "' of '" + old_node.name_ +
                                      "' would run before replacement '" + new_node.name_ + "'");
    }
  }

  std::int64_t occurrences = 0;
  for (Node* user : users_snapshot) {
    if (user == &new_node) continue;
    ArgList new_args;
    new_args.reserve(user->args_.size());
    for (const Argument& arg : user->args_) {
      new_args.push_back(arg.replaced(&old_node, &new_node, &occurrences));
    }
    user->args_ = std::move(new_args);
    user->kwargs_ = dict_replaced(user->kwargs_, &old_node, &new_node, &occurrences);

    auto& old_users = old_node.users_;
    old_users.erase(std::remove(old_users.begin(), old_users.end(), user), old_users.end());
    auto& new_users = new_node.users_;
    if (std::find(new_users.begin(), new_users.end(), user) == new_users.end()) {
      new_users.push_back(user);
    }
  }
  reorder_users(&new_node);  // transferred users interleave with existing ones
  return occurrences;
}

void Graph::erase_node(Node& n) {
  NodeIt it = iterator_of(n);
  if (n.op_ == OpCode::kOutput) {
    throw Error("CannotEraseOutput", "the output node cannot be erased");
  }
  if (!n.users_.empty()) {
    std::string names;
    for (const Node* user : n.users_) {
      if (!names.empty()) names += ", ";
      names += user->name_;
    }
    throw Error("HasUsers", "node '" + n.name_ + "' still has users: " + names);
  }
  remove_user_edges(&n);
  if (use_custom_insert_ && custom_insert_ == it) custom_insert_ = std::next(it);
  nodes_.erase(it);
}

void Graph::set_node_args(Node& n, ArgList args, KwargDict kwargs) {
  const std::size_t position = index_of(n);
  check_operands(args, kwargs, position, &n);
  remove_user_edges(&n);
  n.args_ = std::move(args);
  n.kwargs_ = std::move(kwargs);
  add_user_edges(&n);
}

void Graph::set_node_target(Node& n, std::string target) {
  if (!contains(&n)) {
    throw Error("NodeNotInGraph", "node '" + n.name_ + "' does not belong to this graph");
  }
  switch (n.op_) {
    case OpCode::kCallFunction:
    case OpCode::kCallMethod:
      if (!is_identifier(target)) {
        throw Error("BadTarget", "target '" + target + "' is not an identifier");
      }
      break;
    case OpCode::kCallModule:
    case OpCode::kGetAttr:
      if (!is_dotted_path(target)) {
        throw Error("BadTarget", "target '" + target + "' is not a dotted path");
      }
      break;
    default:
      throw Error("BadTarget",
                  std::string("cannot retarget a ") + std::string(opcode_name(n.op_)) + " node");
  }
  n.target_ = std::move(target);
}

std::vector<LintViolation> Graph::lint() const {
  std::vector<LintViolation> out;
  auto flag = [&out](std::string code, std::string node = "") {
    out.push_back(LintViolation{std::move(code), std::move(node)});
  };

  // Name hygiene.
  std::unordered_set<std::string_view> seen;
  for (const Node& n : nodes_) {
    if (!is_identifier(n.name_) || (n.op_ != OpCode::kOutput && is_reserved_word(n.name_))) {
      flag("name-not-identifier", n.name_);
    }
    if (!seen.insert(n.name_).second) flag("duplicate-name", n.name_);
  }

  // Placeholder prefix.
  bool seen_non_placeholder = false;
  for (const Node& n : nodes_) {
    if (n.op_ == OpCode::kPlaceholder) {
      if (seen_non_placeholder) flag("placeholder-after-nonplaceholder", n.name_);
    } else {
      seen_non_placeholder = true;
    }
  }

  // Exactly one output, last.
  std::size_t output_count = 0;
  for (const Node& n : nodes_) {
    if (n.op_ == OpCode::kOutput) {
      ++output_count;
      if (output_count > 1) flag("multiple-output", n.name_);
    }
  }
  if (output_count == 0) {
    flag("missing-output");
  } else if (nodes_.back().op_ != OpCode::kOutput) {
    flag("output-not-last");
  }

  // References: in-graph and strictly backwards.
  std::unordered_set<const Node*> defined;
  for (const Node& n : nodes_) {
    auto check_ref = [&](Node* ref) {
      if (!contains(ref)) {
        flag("unknown-node-ref", n.name_);
      } else if (defined.find(ref) == defined.end()) {
        flag("use-before-def", n.name_);
      }
    };
    for (const Argument& arg : n.args_) {
      if (arg.depth() > kMaxArgDepth) flag("arg-nesting-depth", n.name_);
      arg.for_each_node(check_ref);
    }
    for (const auto& [key, value] : n.kwargs_) {
      if (!is_identifier(key)) flag("kwarg-key-invalid", n.name_);
      if (value.depth() > kMaxArgDepth) flag("arg-nesting-depth", n.name_);
      value.for_each_node(check_ref);
    }
    defined.insert(&n);
  }

  // User bookkeeping must match a full re-scan, including first-use order.
  std::map<const Node*, std::vector<const Node*>> rescan;
  for (const Node& n : nodes_) rescan[&n];  // ensure entries for user-less nodes
  for (const Node& n : nodes_) {
    auto note = [&](Node* ref) {
      if (!contains(ref)) return;
      auto& vec = rescan[ref];
      if (std::find(vec.begin(), vec.end(), &n) == vec.end()) vec.push_back(&n);
    };
    for (const Argument& arg : n.args_) arg.for_each_node(note);
    dict_for_each_node(n.kwargs_, note);
  }
  for (const Node& n : nodes_) {
    const std::vector<const Node*> recorded(n.users_.begin(), n.users_.end());
    if (recorded != rescan[&n]) flag("users-mismatch", n.name_);
  }

  // Per-opcode conventions.
  for (const Node& n : nodes_) {
    switch (n.op_) {
      case OpCode::kPlaceholder: {
        bool bad = n.args_.size() > 1 || !n.kwargs_.empty() || n.target_ != n.name_;
        if (!bad && n.args_.size() == 1) {
          n.args_[0].for_each_node([&](Node*) { bad = true; });
        }
        if (bad) flag("placeholder-args-invalid", n.name_);
        if (!is_identifier(n.target_)) flag("bad-target", n.name_);
        break;
      }
      case OpCode::kGetAttr:
        if (!n.args_.empty()) flag("get_attr-args-nonempty", n.name_);
        if (!n.kwargs_.empty()) flag("get_attr-kwargs-nonempty", n.name_);
        if (!is_dotted_path(n.target_)) flag("bad-target", n.name_);
        break;
      case OpCode::kOutput:
        if (n.args_.size() != 1 || !n.kwargs_.empty()) flag("output-arity", n.name_);
        break;
      case OpCode::kCallMethod:
        if (n.args_.empty()) flag("call_method-missing-self", n.name_);
        if (!is_identifier(n.target_)) flag("bad-target", n.name_);
        break;
      case OpCode::kCallFunction:
        if (!is_identifier(n.target_)) flag("bad-target", n.name_);
        break;
      case OpCode::kCallModule:
        if (!is_dotted_path(n.target_)) flag("bad-target", n.name_);
        break;
    }
  }
  return out;
}

std::vector<std::string> Graph::lint_codes() const {
  std::vector<std::string> out;
  for (const LintViolation& v : lint()) out.push_back(v.code);
  return out;
}

Graph Graph::copy() const { return copy(nullptr); }

namespace {

Argument remap_argument(const Argument& arg, const std::map<const Node*, Node*>& remap) {
  if (arg.is_node()) {
    auto it = remap.find(arg.as_node());
    if (it == remap.end()) {
      throw Error("UseBeforeDef", "dangling reference to '" + arg.as_node()->name() + "'");
    }
    return Argument::node(it->second);
  }
  if (arg.is_list()) {
    Argument::List items;
    items.reserve(arg.as_list().size());
    for (const Argument& item : arg.as_list()) items.push_back(remap_argument(item, remap));
    return Argument::list(std::move(items));
  }
  if (arg.is_dict()) {
    Argument::Dict items;
    items.reserve(arg.as_dict().size());
    for (const auto& [key, value] : arg.as_dict()) {
      items.emplace_back(key, remap_argument(value, remap));
    }
    return Argument::dict(std::move(items));
  }
  return arg;
}

}  // namespace

Graph Graph::copy(std::map<const Node*, Node*>* mapping) const {
  Graph out;
  out.name_ = name_;
  std::map<const Node*, Node*> local;
  std::map<const Node*, Node*>& remap = mapping != nullptr ? *mapping : local;
  for (const Node& n : nodes_) {
    ArgList args;
    args.reserve(n.args_.size());
    for (const Argument& arg : n.args_) args.push_back(remap_argument(arg, remap));
    KwargDict kwargs;
    kwargs.reserve(n.kwargs_.size());
    for (const auto& [key, value] : n.kwargs_) {
      kwargs.emplace_back(key, remap_argument(value, remap));
    }
    Node* created = out.insert_with_name(n.op_, n.name_, n.target_, std::move(args),
                                         std::move(kwargs));
    created->meta = n.meta;
    remap[&n] = created;
  }
  return out;
}

}  // namespace fxir
