#pragma once

// Regular path queries with nested conditions: AST, surface syntax,
// canonical form and a direct evaluator over graph databases.
//
// Surface syntax, tightest first:
//   postfix   p*   p[c1 and c2 ...]
//   concat    p.q
//   alt       p|q
// A condition is either attr="string" or a nested query. Two extensions
// appear only in pruned output: #self (the empty path) and #none (the
// query with no result).

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaq/error.hpp"
#include "metaq/graphdb.hpp"

namespace metaq {

struct PathQuery;
using PathQueryPtr = std::shared_ptr<const PathQuery>;

struct PathCondition {
  PathQueryPtr query;  // set for a nested query
  std::string attr;    // otherwise attr = value
  std::string value;

  bool is_nested() const noexcept { return query != nullptr; }

  static PathCondition attribute(std::string a, std::string v) { return {nullptr, std::move(a), std::move(v)}; }
  static PathCondition nested(PathQueryPtr q) { return {std::move(q), {}, {}}; }
};

struct PathQuery {
  enum class Kind { tag, concat, alt, star, cond, self, none };

  Kind kind = Kind::tag;
  std::string tag;
  std::vector<PathQueryPtr> parts;          // concat, alt (>= 2); star, cond (1)
  std::vector<PathCondition> conditions;    // cond (>= 1)

  const PathQuery& inner() const { return *parts.at(0); }
};

int compare(const PathQuery& a, const PathQuery& b);

inline int compare(const PathCondition& a, const PathCondition& b) {
  if (a.is_nested() != b.is_nested()) return a.is_nested() ? 1 : -1;
  if (a.is_nested()) return compare(*a.query, *b.query);
  if (int c = a.attr.compare(b.attr)) return c < 0 ? -1 : 1;
  if (int c = a.value.compare(b.value)) return c < 0 ? -1 : 1;
  return 0;
}

inline int compare(const PathQuery& a, const PathQuery& b) {
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  if (int c = a.tag.compare(b.tag)) return c < 0 ? -1 : 1;
  const std::size_t n = std::min(a.parts.size(), b.parts.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(*a.parts[i], *b.parts[i])) return c;
  if (a.parts.size() != b.parts.size()) return a.parts.size() < b.parts.size() ? -1 : 1;
  const std::size_t m = std::min(a.conditions.size(), b.conditions.size());
  for (std::size_t i = 0; i < m; ++i)
    if (int c = compare(a.conditions[i], b.conditions[i])) return c;
  if (a.conditions.size() != b.conditions.size()) return a.conditions.size() < b.conditions.size() ? -1 : 1;
  return 0;
}

inline bool operator==(const PathQuery& a, const PathQuery& b) { return compare(a, b) == 0; }
inline bool operator==(const PathCondition& a, const PathCondition& b) { return compare(a, b) == 0; }
inline bool operator<(const PathCondition& a, const PathCondition& b) { return compare(a, b) < 0; }

inline bool same_query(const PathQueryPtr& a, const PathQueryPtr& b) {
  if (!a || !b) return a == b;
  return compare(*a, *b) == 0;
}

/// Orders query pointers by structure.
struct PathQueryLess {
  bool operator()(const PathQueryPtr& a, const PathQueryPtr& b) const { return compare(*a, *b) < 0; }
};

namespace pq {

inline PathQueryPtr make(PathQuery n) { return std::make_shared<const PathQuery>(std::move(n)); }

inline PathQueryPtr tag(std::string t) {
  PathQuery n;
  n.kind = PathQuery::Kind::tag;
  n.tag = std::move(t);
  return make(std::move(n));
}

inline PathQueryPtr self() {
  PathQuery n;
  n.kind = PathQuery::Kind::self;
  return make(std::move(n));
}

inline PathQueryPtr none() {
  PathQuery n;
  n.kind = PathQuery::Kind::none;
  return make(std::move(n));
}

/// n-ary, flattening nested nodes of the same kind; one part is returned as is.
inline PathQueryPtr nary(PathQuery::Kind k, const std::vector<PathQueryPtr>& parts) {
  if (parts.empty()) throw Error("empty path query sequence");
  if (parts.size() == 1) return parts.front();
  PathQuery n;
  n.kind = k;
  for (const auto& p : parts) {
    if (p->kind == k) n.parts.insert(n.parts.end(), p->parts.begin(), p->parts.end());
    else n.parts.push_back(p);
  }
  return make(std::move(n));
}

inline PathQueryPtr concat(const std::vector<PathQueryPtr>& parts) { return nary(PathQuery::Kind::concat, parts); }
inline PathQueryPtr alt(const std::vector<PathQueryPtr>& parts) { return nary(PathQuery::Kind::alt, parts); }

inline PathQueryPtr star(PathQueryPtr p) {
  PathQuery n;
  n.kind = PathQuery::Kind::star;
  n.parts = {std::move(p)};
  return make(std::move(n));
}

inline PathQueryPtr cond(PathQueryPtr p, std::vector<PathCondition> cs) {
  if (cs.empty()) throw Error("condition list must not be empty");
  PathQuery n;
  n.kind = PathQuery::Kind::cond;
  n.parts = {std::move(p)};
  n.conditions = std::move(cs);
  return make(std::move(n));
}

}  // namespace pq

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

inline std::string quote_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string print_path_query(const PathQuery& q);

namespace detail {

// 0 = alt, 1 = concat, 2 = postfix/atom
inline int path_precedence(const PathQuery& q) {
  switch (q.kind) {
    case PathQuery::Kind::alt: return 0;
    case PathQuery::Kind::concat: return 1;
    default: return 2;
  }
}

inline void print_path(const PathQuery& q, int min_prec, std::string& out);

inline void print_condition(const PathCondition& c, std::string& out) {
  if (c.is_nested()) print_path(*c.query, 0, out);
  else out += c.attr + "=" + quote_string(c.value);
}

inline void print_path(const PathQuery& q, int min_prec, std::string& out) {
  const bool parens = path_precedence(q) < min_prec;
  if (parens) out += '(';
  switch (q.kind) {
    case PathQuery::Kind::tag: out += q.tag; break;
    case PathQuery::Kind::self: out += "#self"; break;
    case PathQuery::Kind::none: out += "#none"; break;
    case PathQuery::Kind::concat:
    case PathQuery::Kind::alt:
      for (std::size_t i = 0; i < q.parts.size(); ++i) {
        if (i) out += q.kind == PathQuery::Kind::concat ? "." : "|";
        // Parts of an n-ary node never have its own kind, so one level up
        // suffices for either associativity.
        print_path(*q.parts[i], path_precedence(q) + 1, out);
      }
      break;
    case PathQuery::Kind::star:
      print_path(q.inner(), 2, out);
      out += '*';
      break;
    case PathQuery::Kind::cond:
      print_path(q.inner(), 2, out);
      out += '[';
      for (std::size_t i = 0; i < q.conditions.size(); ++i) {
        if (i) out += " and ";
        print_condition(q.conditions[i], out);
      }
      out += ']';
      break;
  }
  if (parens) out += ')';
}

}  // namespace detail

inline std::string print_path_query(const PathQuery& q) {
  std::string out;
  detail::print_path(q, 0, out);
  return out;
}

inline std::string print_path_query(const PathQueryPtr& q) { return print_path_query(*q); }
inline std::string print_condition(const PathCondition& c) {
  std::string out;
  detail::print_condition(c, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

class PathQueryParser {
 public:
  explicit PathQueryParser(std::string_view text) : text_(text) {}

  PathQueryPtr parse() {
    PathQueryPtr q = alternation();
    skip_space();
    if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return q;
  }

 private:
  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' || c == '\'';
  }

  [[noreturn]] void fail(const std::string& what) const {
    // single-line input: column is the 1-based offset
    throw ParseError(what, 1, pos_ + 1);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_space();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string identifier() {
    skip_space();
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail("expected a tag or attribute name");
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string string_literal() {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected a string literal");
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) fail("unterminated string literal");
      char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= text_.size()) fail("unterminated string literal");
        c = text_[pos_++];
      }
      out += c;
    }
    return out;
  }

  PathQueryPtr alternation() {
    std::vector<PathQueryPtr> parts{concatenation()};
    while (accept('|')) parts.push_back(concatenation());
    return pq::alt(parts);
  }

  PathQueryPtr concatenation() {
    std::vector<PathQueryPtr> parts{postfix()};
    while (accept('.')) parts.push_back(postfix());
    return pq::concat(parts);
  }

  PathQueryPtr postfix() {
    PathQueryPtr q = primary();
    while (true) {
      if (accept('*')) {
        q = pq::star(q);
      } else if (accept('[')) {
        std::vector<PathCondition> cs{condition()};
        while (accept_keyword("and")) cs.push_back(condition());
        expect(']');
        q = pq::cond(q, std::move(cs));
      } else {
        return q;
      }
    }
  }

  bool accept_keyword(std::string_view kw) {
    skip_space();
    if (text_.substr(pos_, kw.size()) != kw) return false;
    std::size_t end = pos_ + kw.size();
    if (end < text_.size() && ident_char(text_[end])) return false;
    pos_ = end;
    return true;
  }

  PathCondition condition() {
    skip_space();
    std::size_t save = pos_;
    if (pos_ < text_.size() && ident_start(text_[pos_])) {
      std::string name = identifier();
      if (accept('=')) return PathCondition::attribute(std::move(name), string_literal());
      pos_ = save;
    }
    return PathCondition::nested(alternation());
  }

  PathQueryPtr primary() {
    skip_space();
    if (accept('(')) {
      PathQueryPtr q = alternation();
      expect(')');
      return q;
    }
    if (pos_ < text_.size() && text_[pos_] == '#') {
      ++pos_;
      std::string kw = identifier();
      if (kw == "self") return pq::self();
      if (kw == "none") return pq::none();
      fail("unknown keyword '#" + kw + "'");
    }
    return pq::tag(identifier());
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline PathQueryPtr parse_path_query(std::string_view text) { return detail::PathQueryParser(text).parse(); }

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

inline PathQueryPtr canonical(const PathQueryPtr& q);

namespace detail {

inline std::vector<PathCondition> canonical_conditions(const std::vector<PathCondition>& cs) {
  std::vector<PathCondition> out;
  for (const auto& c : cs) out.push_back(c.is_nested() ? PathCondition::nested(canonical(c.query)) : c);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline PathQueryPtr attach_conditions(const PathQueryPtr& base, std::vector<PathCondition> cs) {
  // [#self] always holds, [#none] never does
  std::vector<PathCondition> kept;
  for (auto& c : cs) {
    if (!c.is_nested()) {
      kept.push_back(std::move(c));
      continue;
    }
    PathQueryPtr q = canonical(c.query);
    if (q->kind == PathQuery::Kind::none) return pq::none();
    if (q->kind != PathQuery::Kind::self) kept.push_back(PathCondition::nested(q));
  }
  cs = std::move(kept);
  if (cs.empty()) return base;
  switch (base->kind) {
    case PathQuery::Kind::none: return base;
    case PathQuery::Kind::cond: {
      std::vector<PathCondition> merged = base->conditions;
      merged.insert(merged.end(), cs.begin(), cs.end());
      return pq::cond(base->parts[0], canonical_conditions(merged));
    }
    case PathQuery::Kind::concat: {
      std::vector<PathQueryPtr> parts = base->parts;
      parts.back() = attach_conditions(parts.back(), std::move(cs));
      return pq::concat(parts);
    }
    default: return pq::cond(base, canonical_conditions(cs));
  }
}

}  // namespace detail

/// Normal form used for comparing and printing queries: sorted,
/// deduplicated conditions and alternatives, conditions attached to the
/// innermost last factor, #self and #none eliminated where possible.
inline PathQueryPtr canonical(const PathQueryPtr& q) {
  using K = PathQuery::Kind;
  switch (q->kind) {
    case K::tag:
    case K::self:
    case K::none: return q;
    case K::star: {
      PathQueryPtr in = canonical(q->parts[0]);
      if (in->kind == K::self || in->kind == K::none) return pq::self();
      if (in->kind == K::star) return in;
      return pq::star(in);
    }
    case K::cond: return detail::attach_conditions(canonical(q->parts[0]), q->conditions);
    case K::alt: {
      std::vector<PathQueryPtr> parts;
      for (const auto& p : q->parts) {
        PathQueryPtr c = canonical(p);
        if (c->kind == K::none) continue;
        if (c->kind == K::alt) parts.insert(parts.end(), c->parts.begin(), c->parts.end());
        else parts.push_back(c);
      }
      std::sort(parts.begin(), parts.end(), PathQueryLess{});
      parts.erase(std::unique(parts.begin(), parts.end(), [](const PathQueryPtr& a, const PathQueryPtr& b) { return same_query(a, b); }), parts.end());
      if (parts.empty()) return pq::none();
      return pq::alt(parts);
    }
    case K::concat: {
      std::vector<PathQueryPtr> parts;
      for (const auto& p : q->parts) {
        PathQueryPtr c = canonical(p);
        if (c->kind == K::none) return c;
        if (c->kind == K::self) continue;
        std::vector<PathQueryPtr> pieces = c->kind == K::concat ? c->parts : std::vector<PathQueryPtr>{c};
        for (auto& piece : pieces) {
          // #self[C] after a factor is a condition on that factor
          if (!parts.empty() && piece->kind == K::cond && piece->parts[0]->kind == K::self)
            parts.back() = detail::attach_conditions(parts.back(), piece->conditions);
          else
            parts.push_back(piece);
        }
      }
      if (parts.empty()) return pq::self();
      return pq::concat(parts);
    }
  }
  return q;
}

/// True iff q (and every nested condition) avoids #self and #none.
inline bool is_standard(const PathQuery& q) {
  if (q.kind == PathQuery::Kind::self || q.kind == PathQuery::Kind::none) return false;
  for (const auto& p : q.parts)
    if (!is_standard(*p)) return false;
  for (const auto& c : q.conditions)
    if (c.is_nested() && !is_standard(*c.query)) return false;
  return true;
}

inline bool contains_star(const PathQuery& q) {
  if (q.kind == PathQuery::Kind::star) return true;
  for (const auto& p : q.parts)
    if (contains_star(*p)) return true;
  for (const auto& c : q.conditions)
    if (c.is_nested() && contains_star(*c.query)) return true;
  return false;
}

/// Nesting depth of conditions that are queries.
inline int nesting_depth(const PathQuery& q) {
  int d = 0;
  for (const auto& p : q.parts) d = std::max(d, nesting_depth(*p));
  for (const auto& c : q.conditions)
    if (c.is_nested()) d = std::max(d, 1 + nesting_depth(*c.query));
  return d;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

// Word semantics: a tag consumes one edge into a node carrying that tag; a
// condition is checked at the current node without moving.
class PathEvaluator {
 public:
  explicit PathEvaluator(const GraphDatabase& g) : g_(g) {}

  const std::set<std::string>& reach(const PathQuery& q, const std::string& n) {
    auto key = std::make_pair(&q, n);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    std::set<std::string> out = compute(q, n);
    return memo_.emplace(key, std::move(out)).first->second;
  }

  bool holds(const PathCondition& c, const std::string& n) {
    if (c.is_nested()) return !reach(*c.query, n).empty();
    return g_.label(n).has(c.attr, c.value);
  }

 private:
  std::set<std::string> compute(const PathQuery& q, const std::string& n) {
    std::set<std::string> out;
    switch (q.kind) {
      case PathQuery::Kind::tag:
        for (const auto& m : g_.successors(n))
          if (g_.tag(m) == q.tag) out.insert(m);
        return out;
      case PathQuery::Kind::self: return {n};
      case PathQuery::Kind::none: return out;
      case PathQuery::Kind::concat: {
        std::set<std::string> cur{n};
        for (const auto& p : q.parts) {
          std::set<std::string> next;
          for (const auto& m : cur) {
            const auto& r = reach(*p, m);
            next.insert(r.begin(), r.end());
          }
          cur = std::move(next);
          if (cur.empty()) break;
        }
        return cur;
      }
      case PathQuery::Kind::alt:
        for (const auto& p : q.parts) {
          const auto& r = reach(*p, n);
          out.insert(r.begin(), r.end());
        }
        return out;
      case PathQuery::Kind::star: {
        out.insert(n);
        std::vector<std::string> frontier{n};
        while (!frontier.empty()) {
          std::string m = frontier.back();
          frontier.pop_back();
          // copy: reach() may rehash the memo
          std::set<std::string> step = reach(q.inner(), m);
          for (const auto& x : step)
            if (out.insert(x).second) frontier.push_back(x);
        }
        return out;
      }
      case PathQuery::Kind::cond: {
        std::set<std::string> base = reach(q.inner(), n);
        for (const auto& m : base) {
          bool ok = true;
          for (const auto& c : q.conditions)
            if (!holds(c, m)) {
              ok = false;
              break;
            }
          if (ok) out.insert(m);
        }
        return out;
      }
    }
    return out;
  }

  const GraphDatabase& g_;
  std::map<std::pair<const PathQuery*, std::string>, std::set<std::string>> memo_;
};

}  // namespace detail

/// Nodes reached from context (default: the root).
inline std::set<std::string> eval_path_query(const PathQuery& q, const GraphDatabase& g, const std::string& context) {
  detail::PathEvaluator ev(g);
  return ev.reach(q, context);
}

inline std::set<std::string> eval_path_query(const PathQuery& q, const GraphDatabase& g) {
  if (g.node_count() == 0) return {};
  return eval_path_query(q, g, g.root());
}

inline std::set<std::string> eval_path_query(const PathQueryPtr& q, const GraphDatabase& g) {
  return eval_path_query(*q, g);
}

inline bool path_condition_holds(const PathCondition& c, const GraphDatabase& g, const std::string& node) {
  detail::PathEvaluator ev(g);
  return ev.holds(c, node);
}

}  // namespace metaq
