#pragma once

// Conjunctive described queries in logical notation, the merged form
// Q ⋉μ M(Q), the chase with equality-headed implication constraints,
// redundancy elimination, and lowering constraints one meta-level down.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "metaq/algebra.hpp"

namespace metaq {

struct Atom {
  enum class Kind {
    class_atom,             // P(X)
    relationship,           // v(X, Y)
    mu,                     // mu(X, X')
    attribute_equals,       // (X.a = "s")
    meta_attribute_equals,  // (mu(X).a = "s")
  };

  Kind kind = Kind::class_atom;
  std::string predicate;            // class or relationship
  std::vector<std::string> vars;
  std::string attribute;            // dotted attribute path
  std::string value;

  static Atom cls(std::string p, std::string x) { return {Kind::class_atom, std::move(p), {std::move(x)}, {}, {}}; }
  static Atom rel(std::string v, std::string x, std::string y) {
    return {Kind::relationship, std::move(v), {std::move(x), std::move(y)}, {}, {}};
  }
  static Atom mu(std::string x, std::string xm) { return {Kind::mu, "mu", {std::move(x), std::move(xm)}, {}, {}}; }
  static Atom equals(std::string x, std::string a, std::string s) {
    return {Kind::attribute_equals, {}, {std::move(x)}, std::move(a), std::move(s)};
  }
  static Atom meta_equals(std::string x, std::string a, std::string s) {
    return {Kind::meta_attribute_equals, {}, {std::move(x)}, std::move(a), std::move(s)};
  }

  bool is_equality() const noexcept {
    return kind == Kind::attribute_equals || kind == Kind::meta_attribute_equals;
  }

  friend auto operator<=>(const Atom&, const Atom&) = default;
  friend bool operator==(const Atom&, const Atom&) = default;
};

inline std::string to_string(const Atom& a) {
  switch (a.kind) {
    case Atom::Kind::class_atom: return a.predicate + "(" + a.vars[0] + ")";
    case Atom::Kind::relationship: return a.predicate + "(" + a.vars[0] + "," + a.vars[1] + ")";
    case Atom::Kind::mu: return "mu(" + a.vars[0] + "," + a.vars[1] + ")";
    case Atom::Kind::attribute_equals: return "(" + a.vars[0] + "." + a.attribute + " = " + quote(a.value) + ")";
    case Atom::Kind::meta_attribute_equals:
      return "(mu(" + a.vars[0] + ")." + a.attribute + " = " + quote(a.value) + ")";
  }
  return {};
}

/// Q(head) <- body. The body keeps insertion order and has no duplicates.
struct ConjunctiveQuery {
  std::vector<std::string> head;
  std::vector<Atom> body;

  bool contains(const Atom& a) const { return std::find(body.begin(), body.end(), a) != body.end(); }
  bool add(Atom a) {
    if (contains(a)) return false;
    body.push_back(std::move(a));
    return true;
  }

  std::set<std::string> variables() const {
    std::set<std::string> out;
    for (const auto& a : body) out.insert(a.vars.begin(), a.vars.end());
    return out;
  }

  friend bool operator==(const ConjunctiveQuery&, const ConjunctiveQuery&) = default;
};

inline std::string to_string(const ConjunctiveQuery& q) {
  std::string out = "Q(";
  for (std::size_t i = 0; i < q.head.size(); ++i) out += (i ? "," : "") + q.head[i];
  out += ") :- ";
  for (std::size_t i = 0; i < q.body.size(); ++i) out += (i ? ", " : "") + to_string(q.body[i]);
  return out + " .";
}

/// head <- body, with an equality head over a body variable.
struct ImplicationConstraint {
  std::string id;
  Atom head;
  std::vector<Atom> body;

  friend bool operator==(const ImplicationConstraint&, const ImplicationConstraint&) = default;
};

inline std::string to_string(const ImplicationConstraint& c) {
  std::string out = to_string(c.head) + " :- ";
  for (std::size_t i = 0; i < c.body.size(); ++i) out += (i ? ", " : "") + to_string(c.body[i]);
  return out + " .";
}

/// Throws if the head is not an equality over a variable bound in the body.
inline void check_constraint(const ImplicationConstraint& c) {
  if (!c.head.is_equality()) throw Error("constraint " + c.id + ": head must be an attribute equality");
  for (const auto& a : c.body)
    for (const auto& v : a.vars)
      if (v == c.head.vars[0]) return;
  throw Error("constraint " + c.id + ": head variable " + c.head.vars[0] + " does not occur in the body");
}

struct DerivedFact {
  std::string variable;
  std::string attribute;
  std::string value;
  std::string constraint_id;
  std::vector<Atom> matched;  // body atoms of the query the constraint matched

  Atom atom() const { return Atom::equals(variable, attribute, value); }
};

// ---------------------------------------------------------------------------
// From algebra to conjunctive form
// ---------------------------------------------------------------------------

struct ConjunctiveOptions {
  /// Emit Q ⋉μ M(Q): meta atoms, mu atoms, and σ' as equalities on the
  /// meta variables. Otherwise only the instance atoms are emitted and σ'
  /// becomes (mu(X).a = "s").
  bool merge_meta = true;
};

namespace detail {

inline std::string meta_var(const std::string& x) { return x + "'"; }

struct ConjunctiveBuilder {
  const Schema& s;
  const DescriptionLayer& layer;
  ConjunctiveOptions opts;
  int leaves = 0;
  std::vector<Atom> instance_atoms, meta_atoms, mu_atoms, equalities;

  std::vector<std::string> walk(const Query& q) {
    switch (q.kind) {
      case Query::Kind::scan: {
        std::string x = "X" + std::to_string(++leaves);
        instance_atoms.push_back(Atom::cls(q.name, x));
        if (opts.merge_meta) {
          auto meta = meta_class_of(q.name, layer, s.hierarchy);
          if (!meta) throw FragmentError("class " + q.name + " is not described");
          meta_atoms.push_back(Atom::cls(*meta, meta_var(x)));
          mu_atoms.push_back(Atom::mu(x, meta_var(x)));
        }
        return {x};
      }
      case Query::Kind::join:
      case Query::Kind::self_join: {
        const bool self = q.kind == Query::Kind::self_join;
        std::vector<std::string> row = walk(q.child(0));
        const std::string a = row.at(static_cast<std::size_t>(q.left_column - 1));
        // infix order: left operand, relationship, right operand
        std::size_t inst_mark = instance_atoms.size(), meta_mark = meta_atoms.size();
        std::vector<std::string> right = self ? row : walk(q.child(1));
        const std::string b = right.at(static_cast<std::size_t>(q.right_column - 1));
        instance_atoms.insert(instance_atoms.begin() + static_cast<std::ptrdiff_t>(inst_mark), Atom::rel(q.name, a, b));
        if (opts.merge_meta) {
          auto meta = meta_relationship_of(q.name, layer);
          if (!meta) throw FragmentError("relationship " + q.name + " has no hom image");
          meta_atoms.insert(meta_atoms.begin() + static_cast<std::ptrdiff_t>(meta_mark),
                            Atom::rel(*meta, meta_var(a), meta_var(b)));
        }
        if (!self) row.insert(row.end(), right.begin(), right.end());
        return row;
      }
      case Query::Kind::select_meta:
      case Query::Kind::select: {
        std::vector<std::string> row = walk(q.child());
        if (!q.condition.is_conjunctive()) throw FragmentError("selection condition uses 'or' or 'not'");
        std::vector<const Condition*> atoms;
        q.condition.collect_atoms(atoms);
        for (const Condition* c : atoms) {
          const std::string& x = row.at(static_cast<std::size_t>(c->column - 1));
          std::string path = join_path(c->path);
          if (q.kind == Query::Kind::select) equalities.push_back(Atom::equals(x, path, c->value));
          else if (opts.merge_meta) equalities.push_back(Atom::equals(meta_var(x), path, c->value));
          else equalities.push_back(Atom::meta_equals(x, path, c->value));
        }
        return row;
      }
      case Query::Kind::project: {
        std::vector<std::string> row = walk(q.child());
        std::vector<std::string> out;
        for (int c : q.columns) out.push_back(row.at(static_cast<std::size_t>(c - 1)));
        return out;
      }
      case Query::Kind::unite: throw FragmentError("union is not conjunctive");
      case Query::Kind::intersect: throw FragmentError("intersection is not supported in conjunctive form");
      case Query::Kind::difference: throw FragmentError("difference is not conjunctive");
      case Query::Kind::semijoin_mu: throw FragmentError("mu-semijoin has no conjunctive form");
      case Query::Kind::empty: throw FragmentError("the empty query has no conjunctive form");
    }
    throw FragmentError("unsupported operator");
  }
};

}  // namespace detail

/// Conjunctive form of q. With merge_meta (the default) q must be a
/// described query and the result is Q ⋉μ M(Q): instance atoms, meta atoms,
/// mu atoms, then equalities; variables X1..Xn follow the class scans from
/// left to right and Xk' is the meta variable of Xk.
inline ConjunctiveQuery to_conjunctive(const Query& q, const Schema& s, const DescriptionLayer& layer,
                                       ConjunctiveOptions opts = {}) {
  QueryType t = typecheck_query(q, s, layer);
  if (opts.merge_meta && !t.described) throw FragmentError("not a described query: " + t.reason);
  detail::ConjunctiveBuilder b{s, layer, opts, 0, {}, {}, {}, {}};
  ConjunctiveQuery cq;
  cq.head = b.walk(q);
  for (auto* part : {&b.instance_atoms, &b.meta_atoms, &b.mu_atoms, &b.equalities})
    for (auto& a : *part) cq.add(std::move(a));
  return cq;
}

// ---------------------------------------------------------------------------
// Matching constraint bodies against a frozen query body
// ---------------------------------------------------------------------------

namespace detail {

using VarMap = std::map<std::string, std::string>;

inline bool unify_atom(const Atom& pattern, const Atom& fact, VarMap& m, std::vector<std::string>& bound) {
  if (pattern.kind != fact.kind || pattern.predicate != fact.predicate || pattern.attribute != fact.attribute ||
      pattern.value != fact.value || pattern.vars.size() != fact.vars.size())
    return false;
  for (std::size_t i = 0; i < pattern.vars.size(); ++i) {
    auto it = m.find(pattern.vars[i]);
    if (it == m.end()) {
      m.emplace(pattern.vars[i], fact.vars[i]);
      bound.push_back(pattern.vars[i]);
    } else if (it->second != fact.vars[i]) {
      return false;
    }
  }
  return true;
}

inline void match_body(const std::vector<Atom>& pattern, std::size_t i, const std::vector<Atom>& facts, VarMap& m,
                       std::vector<VarMap>& out) {
  if (i == pattern.size()) {
    out.push_back(m);
    return;
  }
  for (const auto& f : facts) {
    std::vector<std::string> bound;
    if (unify_atom(pattern[i], f, m, bound)) match_body(pattern, i + 1, facts, m, out);
    for (const auto& v : bound) m.erase(v);
  }
}

/// All homomorphisms of pattern into facts, ordered by their bindings.
inline std::vector<VarMap> matches(const std::vector<Atom>& pattern, const std::vector<Atom>& facts) {
  std::vector<VarMap> out;
  VarMap m;
  match_body(pattern, 0, facts, m, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline Atom substitute(const Atom& a, const VarMap& m) {
  Atom out = a;
  for (auto& v : out.vars) v = m.at(v);
  return out;
}

}  // namespace detail

struct ChaseResult {
  ConjunctiveQuery query;
  std::vector<DerivedFact> derived;  // in derivation order
};

/// Fixpoint of the constraints over the query body read as a frozen
/// database. Constraints are tried in the given order and matches in
/// lexicographic order of their bindings; only equalities over existing
/// variables are added, so the chase always terminates.
inline ChaseResult chase_apply(const ConjunctiveQuery& cq, const std::vector<ImplicationConstraint>& ics) {
  ChaseResult r{cq, {}};
  for (const auto& ic : ics) check_constraint(ic);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& ic : ics) {
      for (const auto& m : detail::matches(ic.body, r.query.body)) {
        Atom head = detail::substitute(ic.head, m);
        if (!r.query.add(head)) continue;
        changed = true;
        DerivedFact fact{head.vars[0], head.attribute, head.value, ic.id, {}};
        for (const auto& b : ic.body) fact.matched.push_back(detail::substitute(b, m));
        r.derived.push_back(std::move(fact));
      }
    }
  }
  return r;
}

struct Unsatisfiability {
  Atom first;
  Atom second;
};

/// Two equalities giving one attribute of one variable different values.
inline std::optional<Unsatisfiability> is_unsatisfiable(const ConjunctiveQuery& cq) {
  std::map<std::tuple<Atom::Kind, std::string, std::string>, const Atom*> seen;
  for (const auto& a : cq.body) {
    if (!a.is_equality()) continue;
    auto [it, fresh] = seen.emplace(std::make_tuple(a.kind, a.vars[0], a.attribute), &a);
    if (!fresh && it->second->value != a.value) return Unsatisfiability{*it->second, a};
  }
  return std::nullopt;
}

/// Removes the redundancy the merged form introduces. Phase 1 drops each
/// meta relationship atom v'(X',Y') mirroring an instance atom v(X,Y) with
/// v' hom v, mu(X,X') and mu(Y,Y'). Phase 2 drops a meta class atom P'(X')
/// together with mu(X,X') when X' is not in the head, carries no equality,
/// and occurs in no other atom.
inline ConjunctiveQuery eliminate_redundancy(const ConjunctiveQuery& cq, const DescriptionLayer& layer) {
  auto has = [&](const std::vector<Atom>& body, const Atom& a) {
    return std::find(body.begin(), body.end(), a) != body.end();
  };
  std::set<std::string> meta_vars;
  for (const auto& a : cq.body)
    if (a.kind == Atom::Kind::mu) meta_vars.insert(a.vars[1]);

  std::vector<Atom> body;
  for (const auto& a : cq.body) {
    bool redundant = false;
    if (a.kind == Atom::Kind::relationship && meta_vars.count(a.vars[0]) && meta_vars.count(a.vars[1])) {
      for (const auto& [meta, rel] : layer.hom) {
        if (meta != a.predicate) continue;
        for (const auto& b : cq.body) {
          if (b.kind != Atom::Kind::relationship || b.predicate != rel) continue;
          if (has(cq.body, Atom::mu(b.vars[0], a.vars[0])) && has(cq.body, Atom::mu(b.vars[1], a.vars[1]))) {
            redundant = true;
            break;
          }
        }
        if (redundant) break;
      }
    }
    if (!redundant) body.push_back(a);
  }

  std::set<std::string> head(cq.head.begin(), cq.head.end());
  std::set<std::string> drop;
  for (const auto& x : meta_vars) {
    if (head.count(x)) continue;
    bool needed = false;
    for (const auto& a : body) {
      if (std::find(a.vars.begin(), a.vars.end(), x) == a.vars.end()) continue;
      if (a.kind == Atom::Kind::class_atom) continue;
      if (a.kind == Atom::Kind::mu && a.vars[1] == x) continue;
      needed = true;
      break;
    }
    if (!needed) drop.insert(x);
  }
  ConjunctiveQuery out;
  out.head = cq.head;
  for (const auto& a : body) {
    bool mentions = std::any_of(a.vars.begin(), a.vars.end(), [&](const std::string& v) { return drop.count(v) > 0; });
    if (!mentions) out.add(a);
  }
  return out;
}

/// M⁻¹ on a constraint: P' -> P, v' -> v, and (X.a = "s") -> (mu(X).a = "s").
inline ImplicationConstraint lower_constraint(const ImplicationConstraint& ic, const Schema& s,
                                              const DescriptionLayer& layer) {
  auto lower = [&](const Atom& a) {
    switch (a.kind) {
      case Atom::Kind::class_atom: {
        auto p = described_class_of(a.predicate, layer, s.hierarchy);
        if (!p) throw FragmentError("class " + a.predicate + " describes no class");
        return Atom::cls(*p, a.vars[0]);
      }
      case Atom::Kind::relationship: {
        auto v = described_relationship_of(a.predicate, layer);
        if (!v) throw FragmentError("relationship " + a.predicate + " is not the hom image of any relationship");
        return Atom::rel(*v, a.vars[0], a.vars[1]);
      }
      case Atom::Kind::attribute_equals: return Atom::meta_equals(a.vars[0], a.attribute, a.value);
      case Atom::Kind::mu:
      case Atom::Kind::meta_attribute_equals: break;
    }
    throw FragmentError("atom " + to_string(a) + " cannot be lowered");
  };
  ImplicationConstraint out;
  out.id = ic.id;
  out.head = lower(ic.head);
  for (const auto& a : ic.body) out.body.push_back(lower(a));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_path(const std::string& dotted) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : dotted) {
    if (c == '.') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

/// Value of a D-typed attribute path, or nullopt when the path is missing.
inline std::optional<std::string> try_attribute_value(const std::string& oid, const std::vector<std::string>& path,
                                                      const Instance& inst) {
  auto it = inst.values.find(oid);
  if (it == inst.values.end()) return std::nullopt;
  const OValue* cur = &it->second;
  for (const auto& a : path) {
    if (cur->is_oid()) {
      auto next = inst.values.find(cur->text());
      if (next == inst.values.end()) return std::nullopt;
      cur = &next->second;
    }
    cur = cur->field(a);
    if (!cur) return std::nullopt;
  }
  if (!cur->is_constant()) return std::nullopt;
  return cur->text();
}

class ConjunctiveEvaluator {
 public:
  ConjunctiveEvaluator(const Schema& s, const Instance& inst, const DescriptionLayer& layer)
      : s_(s), inst_(inst), layer_(layer) {
    for (const auto& [cls, oids] : inst.classes) all_.insert(oids.begin(), oids.end());
    for (const auto& [o, m] : layer.mu) inverse_mu_[m].insert(o);
  }

  /// Every binding of the body variables.
  std::vector<VarMap> solve(const std::vector<Atom>& body) {
    std::set<std::string> vars;
    for (const auto& a : body) vars.insert(a.vars.begin(), a.vars.end());
    std::vector<VarMap> out;
    VarMap m;
    search(body, vars, m, out);
    return out;
  }

  bool holds(const Atom& a, const VarMap& m) {
    auto v = [&](std::size_t i) -> const std::string& { return m.at(a.vars[i]); };
    switch (a.kind) {
      case Atom::Kind::class_atom: return extension(a.predicate).count(v(0)) > 0;
      case Atom::Kind::relationship: return relation(a.predicate).count({v(0), v(1)}) > 0;
      case Atom::Kind::mu: {
        auto meta = layer_.meta_of(v(0));
        return meta && *meta == v(1);
      }
      case Atom::Kind::attribute_equals: return try_attribute_value(v(0), split_path(a.attribute), inst_) == a.value;
      case Atom::Kind::meta_attribute_equals: {
        auto meta = layer_.meta_of(v(0));
        return meta && try_attribute_value(*meta, split_path(a.attribute), inst_) == a.value;
      }
    }
    return false;
  }

 private:
  const std::set<std::string>& extension(const std::string& cls) {
    auto it = extensions_.find(cls);
    if (it == extensions_.end()) it = extensions_.emplace(cls, class_extension(cls, inst_, s_.hierarchy)).first;
    return it->second;
  }

  const OidRelation& relation(const std::string& name) {
    auto it = relations_.find(name);
    if (it == relations_.end()) {
      OidRelation forward = eval_relationship(name, s_, inst_);
      OidRelation backward;
      for (const auto& [a, b] : forward) backward.insert({b, a});
      backward_.emplace(name, std::move(backward));
      it = relations_.emplace(name, std::move(forward)).first;
    }
    return it->second;
  }

  // Candidates for x given the variables bound so far; nullopt = unconstrained.
  std::optional<std::set<std::string>> candidates(const std::string& x, const std::vector<Atom>& body, const VarMap& m) {
    std::optional<std::set<std::string>> out;
    auto narrow = [&](std::set<std::string> c) {
      if (!out) {
        out = std::move(c);
        return;
      }
      std::set<std::string> both;
      for (const auto& o : *out)
        if (c.count(o)) both.insert(o);
      out = std::move(both);
    };
    for (const auto& a : body) {
      if (a.kind == Atom::Kind::class_atom && a.vars[0] == x) {
        narrow(extension(a.predicate));
      } else if (a.kind == Atom::Kind::relationship || a.kind == Atom::Kind::mu) {
        const bool first = a.vars[0] == x, second = a.vars[1] == x;
        if (first == second) continue;  // not mentioned, or a self loop
        auto other = m.find(a.vars[first ? 1 : 0]);
        if (other == m.end()) continue;
        std::set<std::string> c;
        if (a.kind == Atom::Kind::mu) {
          if (first) {
            const auto& inv = inverse_mu_[other->second];
            c = inv;
          } else if (auto meta = layer_.meta_of(other->second)) {
            c.insert(*meta);
          }
        } else {
          relation(a.predicate);
          const OidRelation& r = first ? backward_.at(a.predicate) : relations_.at(a.predicate);
          for (auto it = r.lower_bound({other->second, std::string()}); it != r.end() && it->first == other->second; ++it)
            c.insert(it->second);
        }
        narrow(std::move(c));
      }
    }
    return out;
  }

  void search(const std::vector<Atom>& body, const std::set<std::string>& vars, VarMap& m, std::vector<VarMap>& out) {
    if (m.size() == vars.size()) {
      for (const auto& a : body)
        if (!holds(a, m)) return;
      out.push_back(m);
      return;
    }
    // most constrained unbound variable first
    std::string best;
    std::optional<std::set<std::string>> best_c;
    for (const auto& x : vars) {
      if (m.count(x)) continue;
      auto c = candidates(x, body, m);
      if (best.empty() || (c && (!best_c || c->size() < best_c->size()))) {
        best = x;
        best_c = std::move(c);
      }
    }
    const std::set<std::string>& domain = best_c ? *best_c : all_;
    for (const auto& o : domain) {
      m[best] = o;
      bool ok = true;
      for (const auto& a : body) {
        bool ready = std::all_of(a.vars.begin(), a.vars.end(), [&](const std::string& v) { return m.count(v) > 0; });
        if (ready && std::find(a.vars.begin(), a.vars.end(), best) != a.vars.end() && !holds(a, m)) {
          ok = false;
          break;
        }
      }
      if (ok) search(body, vars, m, out);
      m.erase(best);
    }
  }

  const Schema& s_;
  const Instance& inst_;
  const DescriptionLayer& layer_;
  std::set<std::string> all_;
  std::map<std::string, std::set<std::string>> inverse_mu_;
  std::map<std::string, std::set<std::string>> extensions_;
  std::map<std::string, OidRelation> relations_, backward_;
};

}  // namespace detail

/// Naive evaluation; mu atoms go through the layer, equalities through nu.
/// A missing attribute makes an equality false.
inline TupleSet eval_conjunctive(const ConjunctiveQuery& cq, const Schema& s, const Instance& inst,
                                 const DescriptionLayer& layer) {
  std::set<std::string> vars = cq.variables();
  TupleSet out;
  for (const auto& h : cq.head) {
    if (!vars.count(h)) throw EvalError("head variable " + h + " does not occur in the body");
    std::string type = "?";
    for (const auto& a : cq.body)
      if (a.kind == Atom::Kind::class_atom && a.vars[0] == h) {
        type = a.predicate;
        break;
      }
    out.row_type.push_back(type);
  }
  detail::ConjunctiveEvaluator ev(s, inst, layer);
  for (const auto& m : ev.solve(cq.body)) {
    Row r;
    for (const auto& h : cq.head) r.push_back(m.at(h));
    out.rows.insert(std::move(r));
  }
  return out;
}

/// True iff every match of the body in inst satisfies the head.
inline bool constraint_holds(const ImplicationConstraint& ic, const Schema& s, const Instance& inst,
                             const DescriptionLayer& layer) {
  check_constraint(ic);
  detail::ConjunctiveEvaluator ev(s, inst, layer);
  for (const auto& m : ev.solve(ic.body))
    if (!ev.holds(ic.head, m)) return false;
  return true;
}

}  // namespace metaq
