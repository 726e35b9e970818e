#pragma once

// Text syntax for algebra queries:
//   class P
//   join(Q, rel($i, $j), Q)        sjoin(rel($i, $j), Q)
//   select(COND, Q)                selectm(COND, Q)
//   project($i, ...; Q)
//   union(Q, Q)  intersect(Q, Q)  diff(Q, Q)
//   semijoin(Q, Q [; "source", {("o1", ...), ...}])
//   empty(P, ... [; "scope", "detail"])
// COND atoms are $i.a.b = "s", combined with not, and, or (tightest first)
// and parentheses.

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "metaq/algebra.hpp"
#include "metaq/io/lexer.hpp"

namespace metaq::io {

namespace detail {

inline Condition parse_condition_or(TokenStream& ts);

inline Condition parse_condition_unary(TokenStream& ts) {
  if (ts.accept_word("not")) return Condition::negation(parse_condition_unary(ts));
  if (ts.accept("(")) {
    Condition c = parse_condition_or(ts);
    ts.expect(")");
    return c;
  }
  int col = ts.column_ref();
  std::vector<std::string> path;
  ts.expect(".");
  do path.push_back(ts.identifier("an attribute name"));
  while (ts.accept("."));
  ts.expect("=");
  return Condition::equals(col, std::move(path), ts.string_literal());
}

inline Condition parse_condition_and(TokenStream& ts) {
  std::vector<Condition> ops{parse_condition_unary(ts)};
  while (ts.accept_word("and")) ops.push_back(parse_condition_unary(ts));
  return ops.size() == 1 ? std::move(ops.front()) : Condition::conj(std::move(ops));
}

inline Condition parse_condition_or(TokenStream& ts) {
  std::vector<Condition> ops{parse_condition_and(ts)};
  while (ts.accept_word("or")) ops.push_back(parse_condition_and(ts));
  return ops.size() == 1 ? std::move(ops.front()) : Condition::disj(std::move(ops));
}

inline QueryPtr parse_query_expr(TokenStream& ts) {
  const Token& kw = ts.peek();
  std::string op = ts.identifier("a query");
  if (op == "class") return q::scan(ts.identifier("a class name"));
  ts.expect("(");
  QueryPtr out;
  if (op == "join") {
    QueryPtr left = parse_query_expr(ts);
    ts.expect(",");
    std::string rel = ts.identifier("a relationship name");
    ts.expect("(");
    int i = ts.column_ref();
    ts.expect(",");
    int j = ts.column_ref();
    ts.expect(")");
    ts.expect(",");
    out = q::join(std::move(left), std::move(rel), i, j, parse_query_expr(ts));
  } else if (op == "sjoin") {
    std::string rel = ts.identifier("a relationship name");
    ts.expect("(");
    int i = ts.column_ref();
    ts.expect(",");
    int j = ts.column_ref();
    ts.expect(")");
    ts.expect(",");
    out = q::self_join(std::move(rel), i, j, parse_query_expr(ts));
  } else if (op == "select" || op == "selectm") {
    Condition c = parse_condition_or(ts);
    ts.expect(",");
    QueryPtr inner = parse_query_expr(ts);
    out = op == "select" ? q::select(std::move(c), std::move(inner)) : q::select_meta(std::move(c), std::move(inner));
  } else if (op == "project") {
    std::vector<int> cols;
    do cols.push_back(ts.column_ref());
    while (ts.accept(","));
    ts.expect(";");
    out = q::project(std::move(cols), parse_query_expr(ts));
  } else if (op == "union" || op == "intersect" || op == "diff") {
    QueryPtr a = parse_query_expr(ts);
    ts.expect(",");
    QueryPtr b = parse_query_expr(ts);
    Query::Kind k = op == "union" ? Query::Kind::unite : op == "intersect" ? Query::Kind::intersect : Query::Kind::difference;
    out = q::binary(k, std::move(a), std::move(b));
  } else if (op == "semijoin") {
    QueryPtr a = parse_query_expr(ts);
    ts.expect(",");
    QueryPtr b = parse_query_expr(ts);
    std::optional<MaterializedMeta> mat;
    if (ts.accept(";")) {
      mat.emplace();
      mat->source = ts.string_literal();
      ts.expect(",");
      ts.expect("{");
      if (!ts.accept("}")) {
        do {
          Row row;
          ts.expect("(");
          do row.push_back(ts.string_literal());
          while (ts.accept(","));
          ts.expect(")");
          mat->rows.insert(std::move(row));
        } while (ts.accept(","));
        ts.expect("}");
      }
    }
    out = q::semijoin_mu(std::move(a), std::move(b), std::move(mat));
  } else if (op == "empty") {
    std::vector<std::string> row_type;
    do row_type.push_back(ts.identifier("a class name"));
    while (ts.accept(","));
    Query n;
    n.kind = Query::Kind::empty;
    n.row_type = std::move(row_type);
    if (ts.accept(";")) {
      n.materialized = MaterializedMeta{ts.string_literal(), {}};
      ts.expect(",");
      n.name = ts.string_literal();
    }
    out = q::make(std::move(n));
  } else {
    TokenStream::fail_at(kw, "unknown operator '" + op + "'");
  }
  ts.expect(")");
  return out;
}

inline void print_condition_to(std::ostream& os, const Condition& c, int context) {
  // context: 0 = or, 1 = and, 2 = under not
  switch (c.kind) {
    case Condition::Kind::equals:
      os << "$" << c.column;
      for (const auto& a : c.path) os << "." << a;
      os << " = " << quote(c.value);
      return;
    case Condition::Kind::negation:
      os << "not ";
      print_condition_to(os, c.operands[0], 2);
      return;
    case Condition::Kind::conj:
    case Condition::Kind::disj: {
      int level = c.kind == Condition::Kind::disj ? 0 : 1;
      bool parens = context > level;
      if (parens) os << "(";
      for (std::size_t i = 0; i < c.operands.size(); ++i) {
        if (i) os << (level == 0 ? " or " : " and ");
        print_condition_to(os, c.operands[i], level + 1);
      }
      if (parens) os << ")";
      return;
    }
  }
}

inline void print_query_to(std::ostream& os, const Query& q) {
  auto child = [&](std::size_t i) { print_query_to(os, q.child(i)); };
  switch (q.kind) {
    case Query::Kind::scan: os << "class " << q.name; return;
    case Query::Kind::join:
      os << "join(";
      child(0);
      os << ", " << q.name << "($" << q.left_column << ", $" << q.right_column << "), ";
      child(1);
      os << ")";
      return;
    case Query::Kind::self_join:
      os << "sjoin(" << q.name << "($" << q.left_column << ", $" << q.right_column << "), ";
      child(0);
      os << ")";
      return;
    case Query::Kind::select:
    case Query::Kind::select_meta:
      os << (q.kind == Query::Kind::select ? "select(" : "selectm(");
      print_condition_to(os, q.condition, 0);
      os << ", ";
      child(0);
      os << ")";
      return;
    case Query::Kind::project:
      os << "project(";
      for (std::size_t i = 0; i < q.columns.size(); ++i) os << (i ? ", $" : "$") << q.columns[i];
      os << "; ";
      child(0);
      os << ")";
      return;
    case Query::Kind::unite:
    case Query::Kind::intersect:
    case Query::Kind::difference:
      os << (q.kind == Query::Kind::unite ? "union(" : q.kind == Query::Kind::intersect ? "intersect(" : "diff(");
      child(0);
      os << ", ";
      child(1);
      os << ")";
      return;
    case Query::Kind::semijoin_mu:
      os << "semijoin(";
      child(0);
      os << ", ";
      child(1);
      if (q.materialized) {
        os << "; " << quote(q.materialized->source) << ", {";
        bool first = true;
        for (const auto& row : q.materialized->rows) {
          os << (first ? "(" : ", (");
          first = false;
          for (std::size_t i = 0; i < row.size(); ++i) os << (i ? ", " : "") << quote(row[i]);
          os << ")";
        }
        os << "}";
      }
      os << ")";
      return;
    case Query::Kind::empty:
      os << "empty(";
      for (std::size_t i = 0; i < q.row_type.size(); ++i) os << (i ? ", " : "") << q.row_type[i];
      if (q.materialized) os << "; " << quote(q.materialized->source) << ", " << quote(q.name);
      os << ")";
      return;
  }
}

}  // namespace detail

/// Parses one query; the whole text must be consumed.
inline QueryPtr parse_algebra_query(std::string_view text) {
  TokenStream ts(tokenize(text, false));
  QueryPtr q = detail::parse_query_expr(ts);
  if (!ts.at_end()) ts.fail("unexpected input after the query" + ts.found());
  return q;
}

inline Condition parse_algebra_condition(std::string_view text) {
  TokenStream ts(tokenize(text, false));
  Condition c = detail::parse_condition_or(ts);
  if (!ts.at_end()) ts.fail("unexpected input after the condition" + ts.found());
  return c;
}

inline std::string print_condition(const Condition& c) {
  std::ostringstream os;
  detail::print_condition_to(os, c, 0);
  return os.str();
}

inline std::string print_algebra_query(const Query& q) {
  std::ostringstream os;
  detail::print_query_to(os, q);
  return os.str();
}

inline std::string print_algebra_query(const QueryPtr& q) { return print_algebra_query(*q); }

}  // namespace metaq::io
