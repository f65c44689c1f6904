// SPDX-License-Identifier: Apache-2.0
#include "fxir/serialize.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <map>
#include <sstream>
#include <utility>

#include "fxir/graph_module.hpp"
#include "fxir/tensor.hpp"

namespace fxir {

/// Installs nodes with explicit, already-validated names; placement and
/// operand rules still run.  Lives here so only the parser can do this.
struct GraphParser {
  static Node* insert(Graph& g, OpCode op, std::string name, std::string target, ArgList args,
                      KwargDict kwargs) {
    if (!is_identifier(name)) {
      throw Error("BadTarget", "node name '" + name + "' is not an identifier");
    }
    if (op == OpCode::kOutput) {
      if (name != "output") throw Error("BadTarget", "the output node must be named 'output'");
    } else if (is_reserved_word(name)) {
      throw Error("BadTarget", "node name '" + name + "' is a reserved word");
    }
    return g.insert_with_name(op, std::move(name), std::move(target), std::move(args),
                              std::move(kwargs));
  }
};

namespace {

std::string render_argument(const Argument& arg) {
  if (arg.is_node()) return "%" + arg.as_node()->name();
  if (arg.is_list()) {
    std::string out = "[";
    const Argument::List& items = arg.as_list();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i != 0) out += ", ";
      out += render_argument(items[i]);
    }
    return out + "]";
  }
  if (arg.is_dict()) {
    throw Error("Unserializable", "mapping arguments have no text form outside a kwargs block");
  }
  return arg.to_string();  // immediates already render in grammar spelling
}

/// One line of input plus a cursor; all ParseErrors carry line/column from
/// here.  Columns are 1-based byte offsets.
struct LineScanner {
  std::string_view text;
  int line_no;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(line_no, static_cast<int>(pos) + 1, message);
  }
  bool at_end() const { return pos >= text.size(); }
  char peek() const { return at_end() ? '\0' : text[pos]; }
  void skip_spaces() {
    while (!at_end() && text[pos] == ' ') ++pos;
  }
  void expect(char c, const char* what) {
    if (peek() != c) fail(std::string("expected ") + what);
    ++pos;
  }
  bool consume(char c) {
    if (peek() != c) return false;
    ++pos;
    return true;
  }
  bool consume_word(std::string_view word) {
    if (text.substr(pos, word.size()) != word) return false;
    const std::size_t after = pos + word.size();
    if (after < text.size()) {
      const char c = text[after];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') return false;
    }
    pos = after;
    return true;
  }
  std::string identifier(const char* what) {
    skip_spaces();
    const std::size_t start = pos;
    if (!at_end() &&
        (std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
      ++pos;
      while (!at_end() &&
             (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
        ++pos;
      }
    }
    if (pos == start) fail(std::string("expected ") + what);
    return std::string(text.substr(start, pos - start));
  }
  std::string dotted_path(const char* what) {
    std::string path = identifier(what);
    while (consume('.')) path += "." + identifier("path segment");
    return path;
  }
};

struct Parser {
  Graph graph;
  std::map<std::string, Node*, std::less<>> by_name;
  std::vector<std::string> module_paths;
  std::vector<std::string> attr_paths;
  std::string model_header;
  bool saw_header = false;
  bool saw_return = false;
  bool closed = false;

  void note_path(std::vector<std::string>& list, const std::string& path) {
    for (const std::string& existing : list) {
      if (existing == path) return;
    }
    list.push_back(path);
  }

  std::string parse_text_literal(LineScanner& s) {
    s.expect('"', "'\"'");
    std::string out;
    while (true) {
      if (s.at_end()) s.fail("unterminated text literal");
      char c = s.text[s.pos++];
      if (c == '"') return out;
      if (c == '\\') {
        if (s.at_end()) s.fail("dangling escape");
        char e = s.text[s.pos++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: --s.pos; s.fail("unknown escape sequence");
        }
      } else {
        out += c;
      }
    }
  }

  Argument parse_number(LineScanner& s) {
    const std::size_t start = s.pos;
    if (s.peek() == '+' || s.peek() == '-') ++s.pos;
    bool is_real = false;
    if (s.consume_word("inf") || s.consume_word("nan")) {
      is_real = true;
    } else {
      bool any_digit = false;
      while (!s.at_end()) {
        const char c = s.peek();
        if (std::isdigit(static_cast<unsigned char>(c))) {
          any_digit = true;
          ++s.pos;
        } else if (c == '.' || c == 'e' || c == 'E') {
          is_real = true;
          ++s.pos;
          if ((c == 'e' || c == 'E') && (s.peek() == '+' || s.peek() == '-')) ++s.pos;
        } else {
          break;
        }
      }
      if (!any_digit) {
        s.pos = start;
        s.fail("expected a number");
      }
    }
    const std::string token(s.text.substr(start, s.pos - start));
    if (is_real) {
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size()) {
        s.pos = start;
        s.fail("malformed real literal '" + token + "'");
      }
      return Argument::of(v);
    }
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
      s.pos = start;
      s.fail("malformed integer literal '" + token + "'");
    }
    return Argument::of(v);
  }

  Argument parse_argument(LineScanner& s, bool allow_refs) {
    s.skip_spaces();
    const char c = s.peek();
    if (c == '%') {
      if (!allow_refs) s.fail("value references are not allowed here");
      ++s.pos;
      const std::size_t at = s.pos;
      std::string name = s.identifier("value name after '%'");
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        s.pos = at;
        s.fail("reference to undefined value '" + name + "'");
      }
      return Argument::node(it->second);
    }
    if (c == '"') return Argument::of(parse_text_literal(s));
    if (c == '[') {
      ++s.pos;
      Argument::List items;
      s.skip_spaces();
      if (!s.consume(']')) {
        while (true) {
          items.push_back(parse_argument(s, allow_refs));
          s.skip_spaces();
          if (s.consume(']')) break;
          s.expect(',', "',' or ']' in sequence");
        }
      }
      return Argument::list(std::move(items));
    }
    if (s.consume_word("true")) return Argument::of(true);
    if (s.consume_word("false")) return Argument::of(false);
    if (s.consume_word("none")) return Argument::none();
    if (c == '+' || c == '-' || c == '.' || std::isdigit(static_cast<unsigned char>(c)) ||
        c == 'i' || c == 'n') {
      return parse_number(s);
    }
    s.fail("expected an argument");
  }

  ArgList parse_arg_list(LineScanner& s) {
    s.skip_spaces();
    s.expect('(', "'('");
    ArgList args;
    s.skip_spaces();
    if (s.consume(')')) return args;
    while (true) {
      args.push_back(parse_argument(s, /*allow_refs=*/true));
      s.skip_spaces();
      if (s.consume(')')) return args;
      s.expect(',', "',' or ')' in argument list");
    }
  }

  KwargDict parse_kwargs(LineScanner& s) {
    KwargDict kwargs;
    s.skip_spaces();
    if (!s.consume('{')) return kwargs;
    s.skip_spaces();
    if (s.consume('}')) return kwargs;
    while (true) {
      std::string key = s.identifier("keyword name");
      s.skip_spaces();
      s.expect('=', "'=' after keyword name");
      kwargs.emplace_back(std::move(key), parse_argument(s, /*allow_refs=*/true));
      s.skip_spaces();
      if (s.consume('}')) return kwargs;
      s.expect(',', "',' or '}' in keyword block");
    }
  }

  void require_line_end(LineScanner& s) {
    s.skip_spaces();
    if (!s.at_end()) s.fail("trailing characters");
  }

  void check_fresh_name(LineScanner& s, std::size_t at, const std::string& name) {
    if (by_name.count(name) != 0) {
      throw ParseError(s.line_no, static_cast<int>(at) + 1,
                       "duplicate node name '" + name + "'");
    }
  }

  Node* insert(LineScanner& s, OpCode op, std::string name, std::string target, ArgList args,
               KwargDict kwargs) {
    try {
      Node* n = GraphParser::insert(graph, op, name, std::move(target), std::move(args),
                                    std::move(kwargs));
      by_name.emplace(n->name(), n);
      return n;
    } catch (const Error& e) {
      throw ParseError(s.line_no, 1, e.message());
    }
  }

  void parse_header(LineScanner& s) {
    if (!s.consume_word("graph")) s.fail("expected 'graph'");
    std::string graph_name = s.identifier("graph name");
    graph.set_name(graph_name);
    s.skip_spaces();
    s.expect('(', "'(' after graph name");
    s.skip_spaces();
    if (!s.consume(')')) {
      while (true) {
        s.skip_spaces();
        const std::size_t at = s.pos;
        std::string pname = s.identifier("placeholder name");
        check_fresh_name(s, at, pname);
        ArgList args;
        s.skip_spaces();
        if (s.consume('=')) {
          args.push_back(parse_argument(s, /*allow_refs=*/false));
        }
        insert(s, OpCode::kPlaceholder, pname, pname, std::move(args), {});
        s.skip_spaces();
        if (s.consume(')')) break;
        s.expect(',', "',' or ')' in placeholder list");
      }
    }
    s.skip_spaces();
    s.expect('{', "'{' after placeholder list");
    require_line_end(s);
    saw_header = true;
  }

  void parse_body_line(LineScanner& s) {
    if (s.text.substr(0, 2) != "  ") s.fail("body lines start with two-space indent");
    s.pos = 2;
    if (s.consume_word("return")) {
      if (saw_return) s.fail("second return line");
      Argument value = parse_argument(s, /*allow_refs=*/true);
      require_line_end(s);
      insert(s, OpCode::kOutput, "output", "output", {std::move(value)}, {});
      saw_return = true;
      return;
    }
    const std::size_t name_at = s.pos;
    std::string name = s.identifier("node name");
    check_fresh_name(s, name_at, name);
    s.skip_spaces();
    s.expect('=', "'=' after node name");
    s.skip_spaces();
    const std::size_t op_at = s.pos;
    std::string op_word = s.identifier("opcode");
    std::optional<OpCode> op = opcode_from_name(op_word);
    if (!op || *op == OpCode::kPlaceholder || *op == OpCode::kOutput) {
      s.pos = op_at;
      s.fail("opcode '" + op_word + "' cannot appear in the body");
    }
    s.skip_spaces();
    const std::size_t target_at = s.pos;
    std::string target = s.dotted_path("target");
    const bool needs_path = (*op == OpCode::kCallModule || *op == OpCode::kGetAttr);
    if (!needs_path && !is_identifier(target)) {
      s.pos = target_at;
      s.fail("target '" + target + "' is not an identifier");
    }
    ArgList args = parse_arg_list(s);
    KwargDict kwargs = parse_kwargs(s);
    require_line_end(s);
    insert(s, *op, std::move(name), target, std::move(args), std::move(kwargs));
    if (*op == OpCode::kCallModule) note_path(module_paths, target);
    if (*op == OpCode::kGetAttr) note_path(attr_paths, target);
  }

  void feed(LineScanner s) {
    s.skip_spaces();
    if (s.at_end()) return;  // blank line
    if (s.peek() == '#') {
      static constexpr std::string_view kModelTag = "# model:";
      if (model_header.empty() && s.text.substr(0, kModelTag.size()) == kModelTag) {
        std::string value(s.text.substr(kModelTag.size()));
        const std::size_t first = value.find_first_not_of(' ');
        const std::size_t last = value.find_last_not_of(' ');
        if (first != std::string::npos) model_header = value.substr(first, last - first + 1);
      }
      return;
    }
    if (closed) s.fail("content after closing '}'");
    if (!saw_header) {
      s.pos = 0;
      parse_header(s);
      return;
    }
    if (s.peek() == '}') {
      s.pos = s.text.find('}');
      ++s.pos;
      require_line_end(s);
      if (!saw_return) s.fail("graph closed without a return line");
      closed = true;
      return;
    }
    s.pos = 0;
    parse_body_line(s);
  }
};

}  // namespace

std::string to_linear_form(const Graph& g) {
  std::ostringstream out;
  out << "graph " << g.name() << " (";
  bool first = true;
  for (const Node* p : g.placeholder_nodes()) {
    if (!first) out << ", ";
    first = false;
    out << p->name();
    if (!p->args().empty()) out << "=" << render_argument(p->args().front());
  }
  out << ") {\n";
  for (const Node* n : g.nodes()) {
    if (n->op() == OpCode::kPlaceholder) continue;
    if (n->op() == OpCode::kOutput) {
      out << "  return " << render_argument(n->args().front()) << "\n";
      continue;
    }
    out << "  " << n->name() << " = " << opcode_name(n->op()) << " " << n->target() << " (";
    for (std::size_t i = 0; i < n->args().size(); ++i) {
      if (i != 0) out << ", ";
      out << render_argument(n->args()[i]);
    }
    out << ")";
    if (!n->kwargs().empty()) {
      out << " {";
      for (std::size_t i = 0; i < n->kwargs().size(); ++i) {
        if (i != 0) out << ", ";
        out << n->kwargs()[i].first << "=" << render_argument(n->kwargs()[i].second);
      }
      out << "}";
    }
    out << "\n";
  }
  out << "}\n";
  return out.str();
}

ParsedGraph parse_graph(std::string_view text) {
  Parser parser;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::size_t end = (nl == std::string_view::npos) ? text.size() : nl;
    ++line_no;
    parser.feed(LineScanner{text.substr(start, end - start), line_no});
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!parser.saw_header) throw ParseError(line_no, 1, "no graph header found");
  if (!parser.closed) throw ParseError(line_no, 1, "missing closing '}'");
  return ParsedGraph{std::move(parser.graph), std::move(parser.module_paths),
                     std::move(parser.attr_paths), std::move(parser.model_header)};
}

ModulePtr attach_state(ParsedGraph parsed, const ModulePtr& state_root) {
  for (const std::string& path : parsed.module_paths) {
    try {
      resolve_module(state_root, path);
    } catch (const Error&) {
      throw Error("UnresolvedState", "graph requires module '" + path + "'");
    }
  }
  for (const std::string& path : parsed.attr_paths) {
    try {
      resolve_tensor(state_root, path);
    } catch (const Error&) {
      throw Error("UnresolvedState", "graph requires attribute '" + path + "'");
    }
  }
  return make_graph_module(state_root, std::move(parsed.graph));
}

}  // namespace fxir
