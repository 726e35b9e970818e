#pragma once

// A small XML subset for graph databases. Each element is a node (element
// name = tag, attributes = label) and each child element an edge. Two
// attribute names are reserved: id="..." names an element, and an empty
// element <t ref="#i"/> adds an edge to the element with id i instead of a
// new node. Nodes are numbered o0, o1, ... in breadth-first document order;
// XML ids are kept as aliases.
//
// Supported: prolog, comments, text (ignored), CDATA (ignored), the five
// predefined entities and numeric character references. Not supported:
// DOCTYPE, namespaces.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaq/error.hpp"
#include "metaq/graphdb.hpp"

namespace metaq::io {

struct GraphDocument {
  GraphDatabase graph;
  /// description="true" on the document element; informational only.
  bool description = false;
};

namespace detail {

struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlElement> children;
  std::size_t line = 1, column = 1;
};

class XmlReader {
 public:
  explicit XmlReader(std::string_view text) : text_(text) {}

  XmlElement document() {
    skip_misc();
    if (at_end() || peek() != '<') fail("expected the document element");
    XmlElement root = element();
    skip_misc();
    if (!at_end()) fail("content after the document element");
    return root;
  }

 private:
  bool at_end() const { return i_ >= text_.size(); }
  char peek(std::size_t k = 0) const { return i_ + k < text_.size() ? text_[i_ + k] : '\0'; }
  bool starts(std::string_view s) const { return text_.substr(i_, s.size()) == s; }

  void advance(std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i_ < text_.size(); ++k, ++i_) {
      if (text_[i_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, col_); }

  void skip_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\n' || peek() == '\r')) advance();
  }

  void skip_until(std::string_view end, const char* what) {
    while (!at_end() && !starts(end)) advance();
    if (at_end()) fail(std::string("unterminated ") + what);
    advance(end.size());
  }

  // whitespace, comments and processing instructions
  void skip_misc() {
    while (true) {
      skip_space();
      if (starts("<!--")) skip_until("-->", "comment");
      else if (starts("<?")) skip_until("?>", "processing instruction");
      else if (starts("<!DOCTYPE")) fail("DOCTYPE is not supported");
      else return;
    }
  }

  static bool name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':' || static_cast<unsigned char>(c) >= 0x80;
  }
  static bool name_char(char c) {
    return name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
  }

  std::string name() {
    if (!name_start(peek())) fail("expected a name");
    std::size_t b = i_;
    while (!at_end() && name_char(peek())) advance();
    return std::string(text_.substr(b, i_ - b));
  }

  static void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  void entity(std::string& out) {
    advance();  // &
    std::size_t b = i_;
    while (!at_end() && peek() != ';' && i_ - b < 12) advance();
    if (peek() != ';') fail("unterminated entity reference");
    std::string_view ent = text_.substr(b, i_ - b);
    advance();
    if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "amp") out += '&';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (ent.size() > 1 && ent[0] == '#') {
      std::string digits(ent.substr(1));
      int base = 10;
      if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
        base = 16;
        digits.erase(0, 1);
      }
      std::size_t used = 0;
      unsigned long cp = 0;
      try {
        cp = std::stoul(digits, &used, base);
      } catch (const std::exception&) {
        used = 0;
      }
      if (digits.empty() || used != digits.size() || cp == 0 || cp > 0x10FFFF) fail("bad character reference");
      append_utf8(out, static_cast<std::uint32_t>(cp));
    } else {
      fail("unknown entity '&" + std::string(ent) + ";'");
    }
  }

  std::string attribute_value() {
    char q = peek();
    if (q != '"' && q != '\'') fail("attribute values must be quoted");
    advance();
    std::string out;
    while (!at_end() && peek() != q) {
      if (peek() == '<') fail("'<' in attribute value");
      if (peek() == '&') entity(out);
      else {
        out += peek();
        advance();
      }
    }
    if (at_end()) fail("unterminated attribute value");
    advance();
    return out;
  }

  XmlElement element() {
    XmlElement e;
    e.line = line_;
    e.column = col_;
    advance();  // <
    e.name = name();
    std::set<std::string> seen;
    while (true) {
      skip_space();
      if (starts("/>")) {
        advance(2);
        return e;
      }
      if (peek() == '>') {
        advance();
        break;
      }
      std::size_t l = line_, c = col_;
      std::string a = name();
      skip_space();
      if (peek() != '=') fail("expected '=' after attribute " + a);
      advance();
      skip_space();
      std::string v = attribute_value();
      if (!seen.insert(a).second) throw ParseError("duplicate attribute '" + a + "'", l, c);
      e.attrs.emplace_back(std::move(a), std::move(v));
    }
    while (true) {
      if (at_end()) throw ParseError("element <" + e.name + "> is not closed", e.line, e.column);
      if (starts("<!--")) skip_until("-->", "comment");
      else if (starts("<![CDATA[")) skip_until("]]>", "CDATA section");
      else if (starts("<?")) skip_until("?>", "processing instruction");
      else if (starts("</")) {
        std::size_t l = line_, c = col_;
        advance(2);
        std::string closing = name();
        if (closing != e.name) throw ParseError("</" + closing + "> closes <" + e.name + ">", l, c);
        skip_space();
        if (peek() != '>') fail("expected '>'");
        advance();
        return e;
      } else if (peek() == '<') {
        e.children.push_back(element());
      } else if (peek() == '&') {
        std::string ignored;
        entity(ignored);
      } else {
        advance();
      }
    }
  }

  std::string_view text_;
  std::size_t i_ = 0, line_ = 1, col_ = 1;
};

inline const std::string* xml_attribute(const XmlElement& e, std::string_view a) {
  for (const auto& [k, v] : e.attrs)
    if (k == a) return &v;
  return nullptr;
}

inline std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '\n': out += "&#10;"; break;
      case '\t': out += "&#9;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline GraphDocument load_graph_document(std::string_view text) {
  using detail::XmlElement;
  XmlElement root = detail::XmlReader(text).document();

  GraphDocument doc;
  GraphDatabase& g = doc.graph;
  std::map<std::string, std::string> ids;  // xml id -> node
  struct Pending {
    const XmlElement* ref;
    std::string from;
  };
  std::vector<Pending> refs;
  std::deque<std::pair<const XmlElement*, std::string>> queue;  // element, parent node
  std::size_t counter = 0;
  queue.push_back({&root, {}});
  while (!queue.empty()) {
    auto [e, parent] = queue.front();
    queue.pop_front();
    if (detail::xml_attribute(*e, "ref")) {
      if (parent.empty()) throw ParseError("the document element cannot be a reference", e->line, e->column);
      if (e->attrs.size() != 1 || !e->children.empty())
        throw ParseError("a ref element takes no other attributes and no children", e->line, e->column);
      refs.push_back({e, parent});
      continue;
    }
    std::string node = "o" + std::to_string(counter++);
    NodeLabel label{e->name, {}};
    for (const auto& [a, v] : e->attrs) {
      if (a == "id") continue;
      if (parent.empty() && a == "description") {
        doc.description = v == "true";
        continue;
      }
      label.attrs.insert({a, v});
    }
    g.add_node(node, std::move(label));
    if (const std::string* id = detail::xml_attribute(*e, "id")) {
      if (!ids.emplace(*id, node).second) throw ParseError("duplicate id '" + *id + "'", e->line, e->column);
      g.set_alias(*id, node);
    }
    if (!parent.empty()) g.add_edge(parent, node);
    for (const auto& c : e->children) queue.push_back({&c, node});
  }
  for (const auto& [e, from] : refs) {
    std::string target = *detail::xml_attribute(*e, "ref");
    if (!target.empty() && target[0] == '#') target.erase(0, 1);
    auto it = ids.find(target);
    if (it == ids.end()) throw ParseError("dangling ref '" + target + "'", e->line, e->column);
    if (g.tag(it->second) != e->name)
      throw ParseError("ref to '" + target + "' has tag <" + e->name + "> but the target is <" + g.tag(it->second) + ">",
                       e->line, e->column);
    g.add_edge(from, it->second);
  }
  return doc;
}

inline GraphDatabase load_graph_xml(std::string_view text) { return load_graph_document(text).graph; }

/// Writes g as a spanning tree of nested elements plus ref elements for the
/// remaining edges. Each element carries its node's name (the smallest alias,
/// else the node id) as id. Every node must be reachable from the root.
inline std::string write_graph_xml(const GraphDatabase& g, bool description = false) {
  if (g.node_count() == 0) throw Error("cannot write an empty graph");
  std::map<std::string, std::string> names;
  for (const auto& [alias, node] : g.aliases()) names.emplace(node, alias);  // aliases are sorted, first wins
  auto name_of = [&](const std::string& n) {
    auto it = names.find(n);
    return it == names.end() ? n : it->second;
  };
  auto sorted_successors = [&](const std::string& n) {
    std::vector<std::string> out(g.successors(n).begin(), g.successors(n).end());
    std::sort(out.begin(), out.end(),
              [&](const std::string& a, const std::string& b) { return std::pair(name_of(a), a) < std::pair(name_of(b), b); });
    return out;
  };
  for (const auto& [n, l] : g.labels())
    for (const auto& [a, v] : l.attrs)
      if (a == "id" || a == "ref" || (description && n == g.root() && a == "description"))
        throw Error("node " + n + " uses the reserved attribute '" + a + "'");

  std::map<std::string, std::vector<std::string>> tree;
  std::set<std::string> placed{g.root()};
  std::deque<std::string> queue{g.root()};
  while (!queue.empty()) {
    std::string n = queue.front();
    queue.pop_front();
    for (const auto& s : sorted_successors(n))
      if (placed.insert(s).second) {
        tree[n].push_back(s);
        queue.push_back(s);
      }
  }
  if (placed.size() != g.node_count()) throw Error("some nodes are unreachable from the root");

  std::ostringstream os;
  auto write = [&](auto&& self, const std::string& n, int depth) -> void {
    const NodeLabel& l = g.label(n);
    std::string indent(2 * depth, ' ');
    os << indent << "<" << l.tag << " id=\"" << detail::escape_xml(name_of(n)) << "\"";
    if (depth == 0 && description) os << " description=\"true\"";
    for (const auto& [a, v] : l.attrs) os << " " << a << "=\"" << detail::escape_xml(v) << "\"";
    std::vector<std::string> kids = tree[n];
    std::vector<std::string> refs;
    for (const auto& s : sorted_successors(n))
      if (std::find(kids.begin(), kids.end(), s) == kids.end()) refs.push_back(s);
    if (kids.empty() && refs.empty()) {
      os << "/>\n";
      return;
    }
    os << ">\n";
    for (const auto& k : kids) self(self, k, depth + 1);
    for (const auto& r : refs)
      os << indent << "  <" << g.tag(r) << " ref=\"#" << detail::escape_xml(name_of(r)) << "\"/>\n";
    os << indent << "</" << l.tag << ">\n";
  };
  write(write, g.root(), 0);
  return os.str();
}

/// Binding file: one "instance-node -> meta-node" pair per line, '#'
/// comments. Either side may be a node id or an XML id of its graph.
inline DescriptionBinding parse_binding(std::string_view text, const GraphDatabase& instance,
                                        const GraphDatabase& meta) {
  DescriptionBinding mu;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const char* ws = " \t\r";
      s.erase(0, s.find_first_not_of(ws));
      s.erase(s.find_last_not_of(ws) + 1);
      return s;
    };
    line = trim(line);
    if (line.empty()) continue;
    std::size_t arrow = line.find("->");
    if (arrow == std::string::npos) throw ParseError("expected 'node -> meta-node'", line_no, 1);
    std::string from = trim(line.substr(0, arrow));
    std::string to = trim(line.substr(arrow + 2));
    if (from.empty() || to.empty()) throw ParseError("expected 'node -> meta-node'", line_no, 1);
    auto v = instance.resolve(from);
    if (!v) throw ParseError("unknown instance node '" + from + "'", line_no, 1);
    auto m = meta.resolve(to);
    if (!m) throw ParseError("unknown meta node '" + to + "'", line_no, arrow + 3);
    auto [it, fresh] = mu.emplace(*v, *m);
    if (!fresh && it->second != *m) throw ParseError("node '" + from + "' bound twice", line_no, 1);
  }
  return mu;
}

inline std::string write_binding(const DescriptionBinding& mu) {
  std::string out;
  for (const auto& [v, m] : mu) out += v + " -> " + m + "\n";
  return out;
}

}  // namespace metaq::io
