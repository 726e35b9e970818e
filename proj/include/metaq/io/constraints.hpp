#pragma once

// Implication constraints, one per statement:
//   [label:] (X.attr = "s") :- Part'(X), prop'(X, Y), (Y.name = "color") .
// Body atoms are P(X), v(X, Y), (X.a.b = "s") and (mu(X).a = "s").
// Unlabelled constraints are numbered c1, c2, ... in file order.

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "metaq/chase.hpp"
#include "metaq/io/lexer.hpp"

namespace metaq::io {

namespace detail {

inline std::string dotted_attribute(TokenStream& ts) {
  std::string out = ts.identifier("an attribute name");
  while (ts.accept(".")) out += "." + ts.identifier("an attribute name");
  return out;
}

// after the opening '('
inline Atom parse_equality_atom(TokenStream& ts) {
  Atom a;
  if (ts.peek().is_word("mu") && ts.peek(1).is("(")) {
    ts.next();
    ts.expect("(");
    std::string x = ts.identifier("a variable");
    ts.expect(")");
    ts.expect(".");
    std::string attr = dotted_attribute(ts);
    ts.expect("=");
    a = Atom::meta_equals(std::move(x), std::move(attr), ts.string_literal());
  } else {
    std::string x = ts.identifier("a variable");
    ts.expect(".");
    std::string attr = dotted_attribute(ts);
    ts.expect("=");
    a = Atom::equals(std::move(x), std::move(attr), ts.string_literal());
  }
  ts.expect(")");
  return a;
}

inline Atom parse_body_atom(TokenStream& ts) {
  if (ts.accept("(")) return parse_equality_atom(ts);
  const Token& at = ts.peek();
  std::string pred = ts.identifier("an atom");
  ts.expect("(");
  std::string x = ts.identifier("a variable");
  if (ts.accept(")")) return Atom::cls(std::move(pred), std::move(x));
  ts.expect(",");
  std::string y = ts.identifier("a variable");
  ts.expect(")");
  if (pred == "mu") TokenStream::fail_at(at, "mu atoms are not allowed in constraints");
  return Atom::rel(std::move(pred), std::move(x), std::move(y));
}

}  // namespace detail

/// Parses a constraint file; throws ParseError on syntax errors, duplicate
/// labels and head variables that do not occur in the body.
inline std::vector<ImplicationConstraint> load_constraints(std::string_view text) {
  TokenStream ts(tokenize(text, false));
  std::vector<ImplicationConstraint> out;
  std::set<std::string> labels;
  while (!ts.at_end()) {
    const Token& start = ts.peek();
    ImplicationConstraint c;
    if (ts.peek().kind == Token::Kind::identifier && ts.peek(1).is(":")) {
      c.id = ts.next().text;
      ts.next();
    } else {
      c.id = "c" + std::to_string(out.size() + 1);
    }
    if (!labels.insert(c.id).second) TokenStream::fail_at(start, "duplicate constraint label '" + c.id + "'");
    const Token& head = ts.peek();
    ts.expect("(");
    c.head = detail::parse_equality_atom(ts);
    ts.expect(":-");
    do c.body.push_back(detail::parse_body_atom(ts));
    while (ts.accept(","));
    ts.expect(".");
    try {
      check_constraint(c);
    } catch (const Error& e) {
      TokenStream::fail_at(head, e.what());
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline std::string write_constraints(const std::vector<ImplicationConstraint>& cs) {
  std::string out;
  for (const auto& c : cs) out += c.id + ": " + to_string(c) + "\n";
  return out;
}

}  // namespace metaq::io
