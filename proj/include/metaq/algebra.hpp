#pragma once

// Described queries: a positive relational algebra over classes and binary
// relationships, the meta-selection operator, the description-query rewrite
// M and its inverse, and the mu-semijoin.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "metaq/model.hpp"

namespace metaq {

/// Boolean combination of `$i.a.b = "s"` atoms.
struct Condition {
  enum class Kind { equals, conj, disj, negation };

  Kind kind = Kind::equals;
  int column = 1;                       // 1-based
  std::vector<std::string> path;        // attribute path, reaches a D-typed attribute
  std::string value;
  std::vector<Condition> operands;

  static Condition equals(int column, std::vector<std::string> path, std::string value) {
    Condition c;
    c.column = column;
    c.path = std::move(path);
    c.value = std::move(value);
    return c;
  }
  static Condition conj(std::vector<Condition> ops) { return combine(Kind::conj, std::move(ops)); }
  static Condition disj(std::vector<Condition> ops) { return combine(Kind::disj, std::move(ops)); }
  static Condition negation(Condition op) {
    Condition c;
    c.kind = Kind::negation;
    c.operands.push_back(std::move(op));
    return c;
  }

  friend bool operator==(const Condition&, const Condition&) = default;

  /// Columns referenced by the atoms.
  void collect_columns(std::set<int>& out) const {
    if (kind == Kind::equals) out.insert(column);
    for (const auto& op : operands) op.collect_columns(out);
  }

  /// True iff the condition is a conjunction of equality atoms.
  bool is_conjunctive() const {
    if (kind == Kind::equals) return true;
    if (kind != Kind::conj) return false;
    for (const auto& op : operands)
      if (!op.is_conjunctive()) return false;
    return true;
  }

  void collect_atoms(std::vector<const Condition*>& out) const {
    if (kind == Kind::equals) out.push_back(this);
    for (const auto& op : operands) op.collect_atoms(out);
  }

 private:
  static Condition combine(Kind k, std::vector<Condition> ops) {
    if (ops.size() == 1) return std::move(ops.front());
    Condition c;
    c.kind = k;
    for (auto& op : ops) {
      if (op.kind == k) {
        for (auto& inner : op.operands) c.operands.push_back(std::move(inner));
      } else {
        c.operands.push_back(std::move(op));
      }
    }
    return c;
  }
};

using Row = std::vector<std::string>;

/// Result of a query: a typed set of oid tuples.
struct TupleSet {
  std::vector<std::string> row_type;
  std::set<Row> rows;

  bool empty() const noexcept { return rows.empty(); }
  std::size_t size() const noexcept { return rows.size(); }
  bool contains(const Row& r) const { return rows.count(r) > 0; }

  friend bool operator==(const TupleSet&, const TupleSet&) = default;
};

/// Meta-level tuples computed ahead of time for a mu-semijoin, tagged with
/// the identity of the meta instance they came from.
struct MaterializedMeta {
  std::string source;
  std::set<Row> rows;

  friend bool operator==(const MaterializedMeta&, const MaterializedMeta&) = default;
};

struct Query;
using QueryPtr = std::shared_ptr<const Query>;

struct Query {
  enum class Kind {
    scan,          // class P
    join,          // Q1 ⋈_R($i,$j) Q2
    self_join,     // ⋈_R($i,$j) Q
    select_meta,   // σ'
    select,        // σ
    project,
    unite,
    intersect,
    difference,
    semijoin_mu,   // Q ⋉_μ Qmeta
    empty,
  };

  Kind kind = Kind::scan;
  std::string name;                       // class (scan) or relationship (joins)
  int left_column = 1;
  int right_column = 1;
  std::vector<int> columns;               // project
  Condition condition;                    // select, select_meta
  std::vector<QueryPtr> children;
  std::vector<std::string> row_type;      // empty
  std::optional<MaterializedMeta> materialized;  // semijoin_mu

  const Query& child(std::size_t i = 0) const { return *children.at(i); }
};

bool operator==(const Query& a, const Query& b);

inline bool same_query(const QueryPtr& a, const QueryPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

inline bool operator==(const Query& a, const Query& b) {
  if (a.kind != b.kind || a.name != b.name || a.left_column != b.left_column ||
      a.right_column != b.right_column || a.columns != b.columns || !(a.condition == b.condition) ||
      a.row_type != b.row_type || a.materialized != b.materialized || a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_query(a.children[i], b.children[i])) return false;
  return true;
}

namespace q {

inline QueryPtr make(Query node) { return std::make_shared<const Query>(std::move(node)); }

inline QueryPtr scan(std::string cls) {
  Query n;
  n.kind = Query::Kind::scan;
  n.name = std::move(cls);
  return make(std::move(n));
}

inline QueryPtr join(QueryPtr left, std::string rel, int i, int j, QueryPtr right) {
  Query n;
  n.kind = Query::Kind::join;
  n.name = std::move(rel);
  n.left_column = i;
  n.right_column = j;
  n.children = {std::move(left), std::move(right)};
  return make(std::move(n));
}

inline QueryPtr self_join(std::string rel, int i, int j, QueryPtr inner) {
  Query n;
  n.kind = Query::Kind::self_join;
  n.name = std::move(rel);
  n.left_column = i;
  n.right_column = j;
  n.children = {std::move(inner)};
  return make(std::move(n));
}

inline QueryPtr select_meta(Condition c, QueryPtr inner) {
  Query n;
  n.kind = Query::Kind::select_meta;
  n.condition = std::move(c);
  n.children = {std::move(inner)};
  return make(std::move(n));
}

inline QueryPtr select(Condition c, QueryPtr inner) {
  Query n;
  n.kind = Query::Kind::select;
  n.condition = std::move(c);
  n.children = {std::move(inner)};
  return make(std::move(n));
}

inline QueryPtr project(std::vector<int> cols, QueryPtr inner) {
  Query n;
  n.kind = Query::Kind::project;
  n.columns = std::move(cols);
  n.children = {std::move(inner)};
  return make(std::move(n));
}

inline QueryPtr binary(Query::Kind k, QueryPtr a, QueryPtr b) {
  Query n;
  n.kind = k;
  n.children = {std::move(a), std::move(b)};
  return make(std::move(n));
}

inline QueryPtr unite(QueryPtr a, QueryPtr b) { return binary(Query::Kind::unite, std::move(a), std::move(b)); }
inline QueryPtr intersect(QueryPtr a, QueryPtr b) { return binary(Query::Kind::intersect, std::move(a), std::move(b)); }
inline QueryPtr difference(QueryPtr a, QueryPtr b) { return binary(Query::Kind::difference, std::move(a), std::move(b)); }

inline QueryPtr semijoin_mu(QueryPtr inner, QueryPtr meta, std::optional<MaterializedMeta> materialized = {}) {
  Query n;
  n.kind = Query::Kind::semijoin_mu;
  n.children = {std::move(inner), std::move(meta)};
  n.materialized = std::move(materialized);
  return make(std::move(n));
}

inline QueryPtr empty(std::vector<std::string> row_type) {
  Query n;
  n.kind = Query::Kind::empty;
  n.row_type = std::move(row_type);
  return make(std::move(n));
}

/// Copy of n with its children replaced.
inline QueryPtr with_children(const Query& n, std::vector<QueryPtr> children) {
  Query copy = n;
  copy.children = std::move(children);
  return make(std::move(copy));
}

}  // namespace q

/// Number of operator nodes.
inline std::size_t query_size(const Query& query) {
  std::size_t n = 1;
  for (const auto& c : query.children) n += query_size(*c);
  return n;
}

// ---------------------------------------------------------------------------
// Typing
// ---------------------------------------------------------------------------

struct QueryType {
  std::vector<std::string> row_type;
  bool described = false;   // inside the described-query fragment
  std::string reason;       // why not, when described is false
};

class TypeError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

namespace detail {

/// Walk an attribute path starting at class cls; returns the final type.
inline TypeExpr attribute_path_type(const std::string& cls, const std::vector<std::string>& path, const Schema& s) {
  TypeExpr cur = TypeExpr::class_ref(cls);
  for (const auto& a : path) {
    const TypeExpr& shape = cur.is_class() ? s.hierarchy.type_of(cur.class_name()) : cur;
    const TypeExpr* f = shape.field(a);
    if (!f) throw TypeError("attribute '" + a + "' not declared in " + to_string(shape));
    cur = *f;
  }
  return cur;
}

inline std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

inline void check_condition_paths(const Condition& c, const std::vector<std::string>& row_type, const Schema& s,
                                  const DescriptionLayer* layer) {
  std::vector<const Condition*> atoms;
  c.collect_atoms(atoms);
  for (const Condition* a : atoms) {
    if (a->column < 1 || static_cast<std::size_t>(a->column) > row_type.size())
      throw TypeError("condition references column $" + std::to_string(a->column) + " of a " +
                      std::to_string(row_type.size()) + "-column query");
    std::string cls = row_type[static_cast<std::size_t>(a->column - 1)];
    if (layer) {
      auto meta = meta_class_of(cls, *layer, s.hierarchy);
      if (!meta) throw TypeError("meta-selection on column $" + std::to_string(a->column) + " of undescribed class " + cls);
      cls = *meta;
    }
    if (a->path.empty()) throw TypeError("condition atom without attribute");
    if (!attribute_path_type(cls, a->path, s).is_domain())
      throw TypeError("attribute path " + join_path(a->path) + " of " + cls + " does not reach a D-typed attribute");
  }
}

}  // namespace detail

inline QueryType typecheck_query(const Query& query, const Schema& s, const DescriptionLayer& layer) {
  const auto& h = s.hierarchy;
  auto column = [](const std::vector<std::string>& row, int i, const char* what) -> const std::string& {
    if (i < 1 || static_cast<std::size_t>(i) > row.size())
      throw TypeError(std::string(what) + " column $" + std::to_string(i) + " out of range");
    return row[static_cast<std::size_t>(i - 1)];
  };
  QueryType out;
  switch (query.kind) {
    case Query::Kind::scan: {
      if (!h.has_class(query.name)) throw TypeError("unknown class '" + query.name + "'");
      out.row_type = {query.name};
      out.described = meta_class_of(query.name, layer, h).has_value();
      if (!out.described) out.reason = "class " + query.name + " is not described";
      return out;
    }
    case Query::Kind::join:
    case Query::Kind::self_join: {
      const bool self = query.kind == Query::Kind::self_join;
      QueryType left = typecheck_query(query.child(0), s, layer);
      QueryType right = self ? left : typecheck_query(query.child(1), s, layer);
      if (!s.relationships.count(query.name)) throw TypeError("unknown relationship '" + query.name + "'");
      auto [p1, p2] = relationship_endpoints(query.name, s);
      const auto& a = column(left.row_type, query.left_column, "join");
      const auto& b = column(right.row_type, query.right_column, "join");
      if (!h.comparable(a, p1) || !h.comparable(b, p2))
        throw TypeError("ill-typed join on " + query.name + ": columns are " + a + ", " + b +
                        " but the relationship connects " + p1 + ", " + p2);
      out.row_type = left.row_type;
      if (!self) out.row_type.insert(out.row_type.end(), right.row_type.begin(), right.row_type.end());
      out.described = left.described && right.described;
      out.reason = !left.described ? left.reason : right.reason;
      if (out.described && !meta_relationship_of(query.name, layer)) {
        out.described = false;
        out.reason = "relationship " + query.name + " has no hom image";
      }
      return out;
    }
    case Query::Kind::select_meta: {
      QueryType inner = typecheck_query(query.child(), s, layer);
      std::set<int> cols;
      query.condition.collect_columns(cols);
      if (cols.size() != 1) throw TypeError("a meta-selection must reference exactly one column");
      detail::check_condition_paths(query.condition, inner.row_type, s, &layer);
      return inner;
    }
    case Query::Kind::select: {
      QueryType inner = typecheck_query(query.child(), s, layer);
      detail::check_condition_paths(query.condition, inner.row_type, s, nullptr);
      inner.described = false;
      inner.reason = "plain selection";
      return inner;
    }
    case Query::Kind::project: {
      QueryType inner = typecheck_query(query.child(), s, layer);
      if (query.columns.empty()) throw TypeError("projection on no columns");
      out.described = inner.described;
      out.reason = inner.reason;
      for (int c : query.columns) out.row_type.push_back(column(inner.row_type, c, "projection"));
      return out;
    }
    case Query::Kind::unite:
    case Query::Kind::intersect:
    case Query::Kind::difference: {
      QueryType a = typecheck_query(query.child(0), s, layer);
      QueryType b = typecheck_query(query.child(1), s, layer);
      if (a.row_type != b.row_type) throw TypeError("set operation on differently typed queries");
      out.row_type = a.row_type;
      out.described = a.described && b.described;
      out.reason = !a.described ? a.reason : b.reason;
      if (query.kind == Query::Kind::difference) {
        out.described = false;
        out.reason = "difference";
      }
      return out;
    }
    case Query::Kind::semijoin_mu: {
      QueryType inner = typecheck_query(query.child(0), s, layer);
      QueryType meta = typecheck_query(query.child(1), s, layer);
      std::vector<std::string> image;
      for (const auto& c : inner.row_type) {
        auto m = meta_class_of(c, layer, h);
        if (!m) throw TypeError("mu-semijoin over undescribed column class " + c);
        image.push_back(*m);
      }
      if (image != meta.row_type) throw TypeError("mu-semijoin: meta operand row type does not match the mu-image");
      inner.described = false;
      inner.reason = "mu-semijoin";
      return inner;
    }
    case Query::Kind::empty:
      for (const auto& c : query.row_type) h.require(c);
      out.row_type = query.row_type;
      out.reason = "empty query";
      return out;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

/// Follow an attribute path from an oid through nu; the end must be a constant.
inline const std::string& attribute_value(const std::string& oid, const std::vector<std::string>& path,
                                          const Instance& inst) {
  const OValue* cur = &inst.value_of(oid);
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (cur->is_oid()) cur = &inst.value_of(cur->text());
    const OValue* f = cur->field(path[i]);
    if (!f) throw EvalError("object " + oid + " has no attribute path " + join_path(path));
    cur = f;
  }
  if (!cur->is_constant()) throw EvalError("attribute path " + join_path(path) + " of " + oid + " is not D-typed");
  return cur->text();
}

inline const std::string& mu_of(const std::string& o, const DescriptionLayer& layer) {
  auto it = layer.mu.find(o);
  if (it == layer.mu.end()) throw EvalError("mu is undefined on " + o);
  return it->second;
}

inline bool holds(const Condition& c, const Row& row, const Instance& inst, const DescriptionLayer* meta_via) {
  switch (c.kind) {
    case Condition::Kind::equals: {
      const std::string& o = row.at(static_cast<std::size_t>(c.column - 1));
      const std::string& target = meta_via ? mu_of(o, *meta_via) : o;
      return attribute_value(target, c.path, inst) == c.value;
    }
    case Condition::Kind::conj:
      for (const auto& op : c.operands)
        if (!holds(op, row, inst, meta_via)) return false;
      return true;
    case Condition::Kind::disj:
      for (const auto& op : c.operands)
        if (holds(op, row, inst, meta_via)) return true;
      return false;
    case Condition::Kind::negation: return !holds(c.operands.at(0), row, inst, meta_via);
  }
  return false;
}

class AlgebraEvaluator {
 public:
  AlgebraEvaluator(const Schema& s, const Instance& inst, const DescriptionLayer& layer)
      : s_(s), inst_(inst), layer_(layer) {}

  TupleSet eval(const Query& query) {
    TupleSet out;
    out.row_type = typecheck_query(query, s_, layer_).row_type;
    out.rows = rows(query);
    return out;
  }

 private:
  const OidRelation& relationship(const std::string& name) {
    auto it = cache_.find(name);
    if (it == cache_.end()) it = cache_.emplace(name, eval_relationship(name, s_, inst_)).first;
    return it->second;
  }

  std::set<Row> rows(const Query& query) {
    std::set<Row> out;
    switch (query.kind) {
      case Query::Kind::scan:
        for (const auto& o : class_extension(query.name, inst_, s_.hierarchy)) out.insert(Row{o});
        return out;
      case Query::Kind::join: {
        auto left = rows(query.child(0));
        auto right = rows(query.child(1));
        const auto& rel = relationship(query.name);
        const auto li = static_cast<std::size_t>(query.left_column - 1);
        const auto rj = static_cast<std::size_t>(query.right_column - 1);
        std::map<std::string, std::vector<const Row*>> by_key;
        for (const auto& r : right) by_key[r.at(rj)].push_back(&r);
        for (const auto& l : left) {
          for (auto it = rel.lower_bound({l.at(li), std::string()}); it != rel.end() && it->first == l.at(li); ++it) {
            auto match = by_key.find(it->second);
            if (match == by_key.end()) continue;
            for (const Row* r : match->second) {
              Row joined = l;
              joined.insert(joined.end(), r->begin(), r->end());
              out.insert(std::move(joined));
            }
          }
        }
        return out;
      }
      case Query::Kind::self_join: {
        const auto& rel = relationship(query.name);
        const auto i = static_cast<std::size_t>(query.left_column - 1);
        const auto j = static_cast<std::size_t>(query.right_column - 1);
        for (auto& r : rows(query.child()))
          if (rel.count({r.at(i), r.at(j)})) out.insert(r);
        return out;
      }
      case Query::Kind::select_meta:
        for (auto& r : rows(query.child()))
          if (holds(query.condition, r, inst_, &layer_)) out.insert(r);
        return out;
      case Query::Kind::select:
        for (auto& r : rows(query.child()))
          if (holds(query.condition, r, inst_, nullptr)) out.insert(r);
        return out;
      case Query::Kind::project:
        for (const auto& r : rows(query.child())) {
          Row p;
          for (int c : query.columns) p.push_back(r.at(static_cast<std::size_t>(c - 1)));
          out.insert(std::move(p));
        }
        return out;
      case Query::Kind::unite: {
        out = rows(query.child(0));
        auto b = rows(query.child(1));
        out.insert(b.begin(), b.end());
        return out;
      }
      case Query::Kind::intersect: {
        auto a = rows(query.child(0));
        auto b = rows(query.child(1));
        for (auto& r : a)
          if (b.count(r)) out.insert(r);
        return out;
      }
      case Query::Kind::difference: {
        auto a = rows(query.child(0));
        auto b = rows(query.child(1));
        for (auto& r : a)
          if (!b.count(r)) out.insert(r);
        return out;
      }
      case Query::Kind::semijoin_mu: {
        std::set<Row> meta = query.materialized ? query.materialized->rows : rows(query.child(1));
        for (auto& r : rows(query.child(0))) {
          Row image;
          for (const auto& o : r) image.push_back(mu_of(o, layer_));
          if (meta.count(image)) out.insert(r);
        }
        return out;
      }
      case Query::Kind::empty: return out;
    }
    return out;
  }

  const Schema& s_;
  const Instance& inst_;
  const DescriptionLayer& layer_;
  std::map<std::string, OidRelation> cache_;
};

}  // namespace detail

/// Set-semantics evaluation of any typechecking query.
inline TupleSet eval_algebra(const Query& query, const Schema& s, const Instance& inst, const DescriptionLayer& layer) {
  return detail::AlgebraEvaluator(s, inst, layer).eval(query);
}

// ---------------------------------------------------------------------------
// The M rewrite
// ---------------------------------------------------------------------------

struct RewriteOptions {
  /// Map Q1 \ Q2 to M(Q1) \ M(Q2). Outside the fragment; the containment
  /// M(Q) ⊇ mu(Q) no longer holds once this is enabled.
  bool admit_difference = false;
};

namespace detail {

inline QueryPtr m_rewrite_impl(const Query& query, const Schema& s, const DescriptionLayer& layer,
                               const RewriteOptions& opts) {
  const auto& h = s.hierarchy;
  std::vector<QueryPtr> kids;
  for (const auto& c : query.children) kids.push_back(m_rewrite_impl(*c, s, layer, opts));
  switch (query.kind) {
    case Query::Kind::scan: {
      auto meta = meta_class_of(query.name, layer, h);
      if (!meta) throw FragmentError("class " + query.name + " is not described");
      return q::scan(*meta);
    }
    case Query::Kind::join:
    case Query::Kind::self_join: {
      auto meta = meta_relationship_of(query.name, layer);
      if (!meta) throw FragmentError("relationship " + query.name + " has no hom image");
      Query n = query;
      n.name = *meta;
      n.children = std::move(kids);
      return q::make(std::move(n));
    }
    case Query::Kind::select_meta:
      return q::select(query.condition, kids.at(0));
    case Query::Kind::project:
    case Query::Kind::unite:
    case Query::Kind::intersect:
      return q::with_children(query, std::move(kids));
    case Query::Kind::difference:
      if (opts.admit_difference) return q::with_children(query, std::move(kids));
      throw FragmentError("difference is outside the described-query fragment");
    case Query::Kind::select:
      throw FragmentError("plain selection is outside the described-query fragment");
    case Query::Kind::semijoin_mu:
      throw FragmentError("mu-semijoin is outside the described-query fragment");
    case Query::Kind::empty:
      throw FragmentError("the empty query is outside the described-query fragment");
  }
  throw FragmentError("unsupported operator");
}

inline QueryPtr m_inverse_impl(const Query& query, const Schema& s, const DescriptionLayer& layer) {
  const auto& h = s.hierarchy;
  std::vector<QueryPtr> kids;
  for (const auto& c : query.children) kids.push_back(m_inverse_impl(*c, s, layer));
  switch (query.kind) {
    case Query::Kind::scan: {
      auto described = described_class_of(query.name, layer, h);
      if (!described) throw FragmentError("class " + query.name + " has no unique described class");
      return q::scan(*described);
    }
    case Query::Kind::join:
    case Query::Kind::self_join: {
      auto described = described_relationship_of(query.name, layer);
      if (!described) throw FragmentError("relationship " + query.name + " is not the hom image of any relationship");
      Query n = query;
      n.name = *described;
      n.children = std::move(kids);
      return q::make(std::move(n));
    }
    case Query::Kind::select:
      return q::select_meta(query.condition, kids.at(0));
    case Query::Kind::project:
    case Query::Kind::unite:
    case Query::Kind::intersect:
    case Query::Kind::difference:
      return q::with_children(query, std::move(kids));
    case Query::Kind::select_meta:
      throw FragmentError("meta-selection cannot be moved down a meta-level");
    case Query::Kind::semijoin_mu:
    case Query::Kind::empty:
      throw FragmentError("operator has no counterpart one meta-level down");
  }
  throw FragmentError("unsupported operator");
}

}  // namespace detail

/// The description query M(Q) of a described query Q.
inline QueryPtr m_rewrite(const Query& query, const Schema& s, const DescriptionLayer& layer,
                          const RewriteOptions& opts = {}) {
  if (!opts.admit_difference) {
    QueryType t = typecheck_query(query, s, layer);
    if (!t.described) throw FragmentError("not a described query: " + t.reason);
  }
  return detail::m_rewrite_impl(query, s, layer, opts);
}

/// M⁻¹: translate a description query one meta-level down.
inline QueryPtr m_inverse(const Query& query, const Schema& s, const DescriptionLayer& layer) {
  return detail::m_inverse_impl(query, s, layer);
}

/// Meta row type of a row type; throws on an undescribed column class.
inline std::vector<std::string> meta_row_type(const std::vector<std::string>& row_type, const Schema& s,
                                              const DescriptionLayer& layer) {
  std::vector<std::string> out;
  for (const auto& c : row_type) {
    auto m = meta_class_of(c, layer, s.hierarchy);
    if (!m) throw FragmentError("column class " + c + " is not described");
    out.push_back(*m);
  }
  return out;
}

inline Row mu_image(const Row& row, const DescriptionLayer& layer) {
  Row out;
  out.reserve(row.size());
  for (const auto& o : row) out.push_back(detail::mu_of(o, layer));
  return out;
}

/// Element-wise application of mu.
inline TupleSet mu_lift(const TupleSet& t, const Schema& s, const DescriptionLayer& layer) {
  TupleSet out;
  out.row_type = meta_row_type(t.row_type, s, layer);
  for (const auto& r : t.rows) out.rows.insert(mu_image(r, layer));
  return out;
}

/// {t ∈ q | mu.t ∈ meta}.
inline TupleSet semijoin_mu(const TupleSet& query, const TupleSet& meta, const Schema& s,
                            const DescriptionLayer& layer) {
  if (meta_row_type(query.row_type, s, layer) != meta.row_type)
    throw TypeError("mu-semijoin: meta row type does not match the mu-image of the query row type");
  TupleSet out;
  out.row_type = query.row_type;
  for (const auto& r : query.rows)
    if (meta.contains(mu_image(r, layer))) out.rows.insert(r);
  return out;
}

/// Maximal subexpressions inside the described-query fragment, left to right.
inline std::vector<const Query*> maximal_described_subqueries(const Query& query, const Schema& s,
                                                              const DescriptionLayer& layer) {
  std::vector<const Query*> out;
  if (query.kind != Query::Kind::empty && typecheck_query(query, s, layer).described) {
    out.push_back(&query);
    return out;
  }
  for (const auto& c : query.children) {
    auto sub = maximal_described_subqueries(*c, s, layer);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

}  // namespace metaq
