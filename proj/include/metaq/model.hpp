#pragma once

// Object data model with a description layer: o-values, type expressions,
// class hierarchies, instances, path-expression extensions, binary
// relationships and the desc/hom/mu layer that ties classes to meta-classes.

#include <algorithm>
#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "metaq/error.hpp"
#include "metaq/report.hpp"

namespace metaq {

// ---------------------------------------------------------------------------
// O-values
// ---------------------------------------------------------------------------

class OValue {
 public:
  enum class Kind { constant, oid, tuple, set };

  OValue() = default;

  static OValue constant(std::string s) { return OValue(Kind::constant, std::move(s)); }
  static OValue oid(std::string s) { return OValue(Kind::oid, std::move(s)); }

  /// Attribute order is not significant; fields are stored sorted by name.
  static OValue tuple(std::vector<std::pair<std::string, OValue>> fields) {
    if (fields.empty()) throw Error("tuple o-value needs at least one attribute");
    std::sort(fields.begin(), fields.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    OValue v(Kind::tuple, {});
    for (auto& [name, value] : fields) {
      if (!v.names_.empty() && v.names_.back() == name)
        throw Error("duplicate attribute '" + name + "' in tuple o-value");
      v.names_.push_back(name);
      v.values_.push_back(std::move(value));
    }
    return v;
  }

  static OValue set(std::vector<OValue> elements) {
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    OValue v(Kind::set, {});
    v.values_ = std::move(elements);
    return v;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return kind_ == Kind::constant; }
  bool is_oid() const noexcept { return kind_ == Kind::oid; }
  bool is_tuple() const noexcept { return kind_ == Kind::tuple; }
  bool is_set() const noexcept { return kind_ == Kind::set; }

  /// Constant text or oid token.
  const std::string& text() const noexcept { return text_; }

  const std::vector<std::string>& field_names() const noexcept { return names_; }
  const std::vector<OValue>& field_values() const noexcept { return values_; }
  const std::vector<OValue>& elements() const noexcept { return values_; }

  const OValue* field(std::string_view name) const {
    if (kind_ != Kind::tuple) return nullptr;
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) return nullptr;
    return &values_[static_cast<std::size_t>(it - names_.begin())];
  }

  friend std::strong_ordering operator<=>(const OValue& a, const OValue& b) {
    if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
    if (auto c = a.text_.compare(b.text_); c != 0) return c <=> 0;
    if (auto c = std::lexicographical_compare_three_way(a.names_.begin(), a.names_.end(),
                                                        b.names_.begin(), b.names_.end());
        c != 0)
      return c;
    return std::lexicographical_compare_three_way(a.values_.begin(), a.values_.end(),
                                                  b.values_.begin(), b.values_.end());
  }
  friend bool operator==(const OValue& a, const OValue& b) { return (a <=> b) == 0; }

 private:
  OValue(Kind k, std::string text) : kind_(k), text_(std::move(text)) {}

  Kind kind_ = Kind::constant;
  std::string text_;
  std::vector<std::string> names_;
  std::vector<OValue> values_;  // tuple field values, or set elements
};

std::string quote(std::string_view s);

inline std::string to_string(const OValue& v) {
  switch (v.kind()) {
    case OValue::Kind::constant: return quote(v.text());
    case OValue::Kind::oid: return v.text();
    case OValue::Kind::tuple: {
      std::string out = "<";
      for (std::size_t i = 0; i < v.field_names().size(); ++i) {
        if (i) out += ", ";
        out += v.field_names()[i] + ": " + to_string(v.field_values()[i]);
      }
      return out + ">";
    }
    case OValue::Kind::set: {
      std::string out = "{";
      for (std::size_t i = 0; i < v.elements().size(); ++i) {
        if (i) out += ", ";
        out += to_string(v.elements()[i]);
      }
      return out + "}";
    }
  }
  return {};
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    if (c == '\t') {
      out += "\\t";
      continue;
    }
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

/// Every oid token occurring anywhere inside v.
inline void collect_oids(const OValue& v, std::set<std::string>& out) {
  switch (v.kind()) {
    case OValue::Kind::oid: out.insert(v.text()); break;
    case OValue::Kind::constant: break;
    case OValue::Kind::tuple:
    case OValue::Kind::set:
      for (const auto& e : v.field_values()) collect_oids(e, out);
      break;
  }
}

// ---------------------------------------------------------------------------
// Type expressions
// ---------------------------------------------------------------------------

class TypeExpr {
 public:
  enum class Kind { domain, class_ref, tuple, set };

  TypeExpr() = default;

  static TypeExpr domain() { return TypeExpr(Kind::domain); }
  static TypeExpr class_ref(std::string name) {
    TypeExpr t(Kind::class_ref);
    t.name_ = std::move(name);
    return t;
  }
  /// Declared attribute order is kept (relation atoms are positional);
  /// equality ignores it.
  static TypeExpr tuple(std::vector<std::pair<std::string, TypeExpr>> fields) {
    if (fields.empty()) throw Error("tuple type needs at least one attribute");
    TypeExpr t(Kind::tuple);
    for (auto& [name, type] : fields) {
      if (std::find(t.names_.begin(), t.names_.end(), name) != t.names_.end())
        throw Error("duplicate attribute '" + name + "' in tuple type");
      t.names_.push_back(name);
      t.members_.push_back(std::move(type));
    }
    return t;
  }
  static TypeExpr set(TypeExpr element) {
    TypeExpr t(Kind::set);
    t.members_.push_back(std::move(element));
    return t;
  }

  Kind kind() const noexcept { return kind_; }
  bool is_domain() const noexcept { return kind_ == Kind::domain; }
  bool is_class() const noexcept { return kind_ == Kind::class_ref; }
  bool is_tuple() const noexcept { return kind_ == Kind::tuple; }
  bool is_set() const noexcept { return kind_ == Kind::set; }

  const std::string& class_name() const noexcept { return name_; }
  const std::vector<std::string>& field_names() const noexcept { return names_; }
  const std::vector<TypeExpr>& field_types() const noexcept { return members_; }
  const TypeExpr& element() const { return members_.at(0); }

  const TypeExpr* field(std::string_view name) const {
    if (kind_ != Kind::tuple) return nullptr;
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return &members_[i];
    return nullptr;
  }

  friend bool operator==(const TypeExpr& a, const TypeExpr& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
      case Kind::domain: return true;
      case Kind::class_ref: return a.name_ == b.name_;
      case Kind::set: return a.element() == b.element();
      case Kind::tuple:
        if (a.names_.size() != b.names_.size()) return false;
        for (std::size_t i = 0; i < a.names_.size(); ++i) {
          const TypeExpr* other = b.field(a.names_[i]);
          if (!other || !(*other == a.members_[i])) return false;
        }
        return true;
    }
    return false;
  }

  /// Classes referenced anywhere inside the type.
  void collect_classes(std::set<std::string>& out) const {
    if (kind_ == Kind::class_ref) out.insert(name_);
    for (const auto& m : members_) m.collect_classes(out);
  }

 private:
  explicit TypeExpr(Kind k) : kind_(k) {}

  Kind kind_ = Kind::domain;
  std::string name_;
  std::vector<std::string> names_;
  std::vector<TypeExpr> members_;
};

inline std::string to_string(const TypeExpr& t) {
  switch (t.kind()) {
    case TypeExpr::Kind::domain: return "D";
    case TypeExpr::Kind::class_ref: return t.class_name();
    case TypeExpr::Kind::set: return "{" + to_string(t.element()) + "}";
    case TypeExpr::Kind::tuple: {
      std::string out = "<";
      for (std::size_t i = 0; i < t.field_names().size(); ++i) {
        if (i) out += ", ";
        out += t.field_names()[i] + ": " + to_string(t.field_types()[i]);
      }
      return out + ">";
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Class hierarchy and schema
// ---------------------------------------------------------------------------

struct ClassHierarchy {
  std::set<std::string> classes;
  std::map<std::string, TypeExpr> typing;
  /// Declared (sub, super) pairs; the order is their reflexive-transitive closure.
  std::set<std::pair<std::string, std::string>> declared_subclass;

  bool has_class(std::string_view name) const { return classes.count(std::string(name)) > 0; }

  /// sub ⪯ super.
  bool is_subclass(const std::string& sub, const std::string& super) const {
    if (sub == super) return true;
    std::set<std::string> seen{sub};
    std::vector<std::string> stack{sub};
    while (!stack.empty()) {
      std::string cur = stack.back();
      stack.pop_back();
      for (auto it = declared_subclass.lower_bound({cur, std::string()});
           it != declared_subclass.end() && it->first == cur; ++it) {
        if (it->second == super) return true;
        if (seen.insert(it->second).second) stack.push_back(it->second);
      }
    }
    return false;
  }

  bool comparable(const std::string& a, const std::string& b) const {
    return is_subclass(a, b) || is_subclass(b, a);
  }

  const TypeExpr& type_of(const std::string& cls) const {
    auto it = typing.find(cls);
    if (it == typing.end()) throw SchemaError("unknown class '" + cls + "'");
    return it->second;
  }

  void require(const std::string& cls) const {
    if (!has_class(cls)) throw SchemaError("unknown class '" + cls + "'");
  }
};

/// A path expression P0.A1...An starting at a class.
struct PathExpression {
  std::string source_class;
  std::vector<std::string> attributes;

  friend bool operator==(const PathExpression&, const PathExpression&) = default;
};

/// A relation R with binary type <A1: P1, A2: P2>, read as a relationship.
struct SimpleRelationship {
  std::string relation;

  friend bool operator==(const SimpleRelationship&, const SimpleRelationship&) = default;
};

struct ViewTerm {
  bool is_variable = true;
  std::string text;  // variable name or constant

  friend bool operator==(const ViewTerm&, const ViewTerm&) = default;
};

/// R(t1, ..., tk) over a schema relation, or v(X, Y) over a path relationship.
struct ViewAtom {
  std::string predicate;
  std::vector<ViewTerm> args;

  friend bool operator==(const ViewAtom&, const ViewAtom&) = default;
};

/// v(O1, O2) <- body.
struct ConjunctiveView {
  std::string source_var;
  std::string target_var;
  std::vector<ViewAtom> body;

  friend bool operator==(const ConjunctiveView&, const ConjunctiveView&) = default;
};

using Relationship = std::variant<SimpleRelationship, PathExpression, ConjunctiveView>;

struct Schema {
  std::map<std::string, TypeExpr> relations;
  ClassHierarchy hierarchy;
  std::map<std::string, Relationship> relationships;

  const Relationship& relationship(const std::string& name) const {
    auto it = relationships.find(name);
    if (it == relationships.end()) throw SchemaError("unknown relationship '" + name + "'");
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Instances and the description layer
// ---------------------------------------------------------------------------

struct Instance {
  std::map<std::string, std::set<OValue>> relations;       // rho
  std::map<std::string, std::set<std::string>> classes;    // pi (disjoint)
  std::map<std::string, OValue> values;                    // nu

  /// The class whose pi contains o (the first one, if pi is not disjoint).
  std::optional<std::string> class_of(const std::string& o) const {
    for (const auto& [cls, oids] : classes)
      if (oids.count(o)) return cls;
    return std::nullopt;
  }

  const OValue& value_of(const std::string& o) const {
    auto it = values.find(o);
    if (it == values.end()) throw EvalError("oid '" + o + "' has no value");
    return it->second;
  }
};

struct DescriptionLayer {
  std::set<std::pair<std::string, std::string>> desc;  // (meta-class, class)
  std::set<std::pair<std::string, std::string>> hom;   // (meta-relationship, relationship)
  std::map<std::string, std::string> mu;               // oid -> meta oid

  std::optional<std::string> meta_of(const std::string& o) const {
    auto it = mu.find(o);
    if (it == mu.end()) return std::nullopt;
    return it->second;
  }
};

using OidPair = std::pair<std::string, std::string>;
using OidRelation = std::set<OidPair>;
using ValueRelation = std::set<std::pair<OValue, OValue>>;

// ---------------------------------------------------------------------------
// Subtyping and well-formedness
// ---------------------------------------------------------------------------

namespace detail {

inline void require_classes(const TypeExpr& t, const ClassHierarchy& h) {
  std::set<std::string> used;
  t.collect_classes(used);
  for (const auto& c : used) h.require(c);
}

inline bool subtype_unchecked(const TypeExpr& t1, const TypeExpr& t2, const ClassHierarchy& h) {
  switch (t2.kind()) {
    case TypeExpr::Kind::domain: return t1.is_domain();
    case TypeExpr::Kind::class_ref:
      return t1.is_class() && h.is_subclass(t1.class_name(), t2.class_name());
    case TypeExpr::Kind::set:
      return t1.is_set() && subtype_unchecked(t1.element(), t2.element(), h);
    case TypeExpr::Kind::tuple: {
      if (!t1.is_tuple()) return false;
      // width + depth: every attribute of t2 must be present in t1 with a subtype
      for (std::size_t i = 0; i < t2.field_names().size(); ++i) {
        const TypeExpr* mine = t1.field(t2.field_names()[i]);
        if (!mine || !subtype_unchecked(*mine, t2.field_types()[i], h)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// t1 ≤ t2 under the class order of h.
inline bool subtype(const TypeExpr& t1, const TypeExpr& t2, const ClassHierarchy& h) {
  detail::require_classes(t1, h);
  detail::require_classes(t2, h);
  return detail::subtype_unchecked(t1, t2, h);
}

inline Report well_formed_hierarchy(const ClassHierarchy& h) {
  Report report;
  for (const auto& c : h.classes) {
    auto it = h.typing.find(c);
    if (it == h.typing.end()) {
      report.add("hierarchy.untyped", "class " + c + " has no type");
      continue;
    }
    std::set<std::string> used;
    it->second.collect_classes(used);
    for (const auto& u : used)
      if (!h.has_class(u)) report.add("hierarchy.unknown-class", "type of " + c + " references unknown class " + u);
  }
  for (const auto& [sub, super] : h.declared_subclass)
    for (const auto& name : {sub, super})
      if (!h.has_class(name)) report.add("hierarchy.unknown-class", "subclass declaration references unknown class " + name);
  if (!report.empty()) return report;

  for (const auto& p1 : h.classes) {
    for (const auto& p2 : h.classes) {
      if (p1 == p2 || !h.is_subclass(p1, p2)) continue;
      if (p1 < p2 && h.is_subclass(p2, p1))
        report.add("hierarchy.cycle", p1 + " and " + p2 + " are mutually subclasses");
      if (!detail::subtype_unchecked(h.typing.at(p1), h.typing.at(p2), h))
        report.add("hierarchy.not-well-formed",
                   p1 + " <= " + p2 + " but T(" + p1 + ") is not a subtype of T(" + p2 + ")");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Extensions and conformance
// ---------------------------------------------------------------------------

inline std::set<std::string> class_extension(const std::string& cls, const Instance& inst,
                                             const ClassHierarchy& h) {
  h.require(cls);
  std::set<std::string> out;
  for (const auto& [c, oids] : inst.classes)
    if (h.has_class(c) && h.is_subclass(c, cls)) out.insert(oids.begin(), oids.end());
  return out;
}

namespace detail {

inline bool conforms_impl(const OValue& v, const TypeExpr& t, const Instance& inst,
                          const ClassHierarchy& h,
                          std::map<std::string, std::set<std::string>>& extents) {
  switch (t.kind()) {
    case TypeExpr::Kind::domain: return v.is_constant();
    case TypeExpr::Kind::class_ref: {
      if (!v.is_oid()) return false;
      auto it = extents.find(t.class_name());
      if (it == extents.end())
        it = extents.emplace(t.class_name(), class_extension(t.class_name(), inst, h)).first;
      return it->second.count(v.text()) > 0;
    }
    case TypeExpr::Kind::set:
      if (!v.is_set()) return false;
      for (const auto& e : v.elements())
        if (!conforms_impl(e, t.element(), inst, h, extents)) return false;
      return true;
    case TypeExpr::Kind::tuple:
      if (!v.is_tuple()) return false;
      for (std::size_t i = 0; i < t.field_names().size(); ++i) {
        const OValue* f = v.field(t.field_names()[i]);
        if (!f || !conforms_impl(*f, t.field_types()[i], inst, h, extents)) return false;
      }
      return true;
  }
  return false;
}

}  // namespace detail

/// v ∈ ⟦t⟧π. Tuples may carry attributes beyond the declared ones.
inline bool conforms(const OValue& v, const TypeExpr& t, const Instance& inst, const ClassHierarchy& h) {
  detail::require_classes(t, h);
  std::map<std::string, std::set<std::string>> extents;
  return detail::conforms_impl(v, t, inst, h, extents);
}

inline Report validate_instance(const Schema& s, const Instance& inst) {
  Report report;
  const auto& h = s.hierarchy;

  std::map<std::string, std::vector<std::string>> owners;
  for (const auto& [cls, oids] : inst.classes) {
    if (!h.has_class(cls)) {
      report.add("instance.unknown-class", "pi assigns oids to unknown class " + cls);
      continue;
    }
    for (const auto& o : oids) owners[o].push_back(cls);
  }
  for (const auto& [o, classes] : owners) {
    if (classes.size() > 1) {
      std::string list;
      for (const auto& c : classes) list += (list.empty() ? "" : ", ") + c;
      report.add("instance.disjoint", "oid " + o + " belongs to several classes: " + list);
    }
    if (!inst.values.count(o)) report.add("instance.no-value", "oid " + o + " has no value (nu is not total)");
  }

  std::set<std::string> mentioned;
  for (const auto& [o, v] : inst.values) {
    mentioned.insert(o);
    collect_oids(v, mentioned);
  }
  for (const auto& [r, tuples] : inst.relations)
    for (const auto& t : tuples) collect_oids(t, mentioned);
  for (const auto& o : mentioned)
    if (!owners.count(o)) report.add("instance.unassigned-oid", "oid " + o + " belongs to no class");

  std::map<std::string, std::set<std::string>> extents;
  for (const auto& [cls, oids] : inst.classes) {
    if (!h.has_class(cls) || !h.typing.count(cls)) continue;
    const TypeExpr& t = h.typing.at(cls);
    for (const auto& o : oids) {
      auto it = inst.values.find(o);
      if (it == inst.values.end()) continue;
      if (!detail::conforms_impl(it->second, t, inst, h, extents))
        report.add("instance.value-type", "value of " + o + " does not conform to T(" + cls + ") = " + to_string(t));
    }
  }
  for (const auto& [r, tuples] : inst.relations) {
    auto it = s.relations.find(r);
    if (it == s.relations.end()) {
      report.add("instance.unknown-relation", "rho assigns tuples to unknown relation " + r);
      continue;
    }
    for (const auto& t : tuples)
      if (!detail::conforms_impl(t, it->second, inst, h, extents))
        report.add("instance.relation-type", "tuple " + to_string(t) + " of " + r + " does not conform to " + to_string(it->second));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Path expressions and relationships
// ---------------------------------------------------------------------------

/// One step ⟦τ.A⟧ restricted to the given source values. τ is either a
/// class (values are read through nu) or a tuple type.
inline ValueRelation path_step(const TypeExpr& source_type, const std::string& attribute,
                               const std::set<OValue>& sources, const Schema& s, const Instance& inst) {
  const auto& h = s.hierarchy;
  const TypeExpr& shape = source_type.is_class() ? h.type_of(source_type.class_name()) : source_type;
  const TypeExpr* declared = shape.field(attribute);
  if (!declared)
    throw PathError("attribute '" + attribute + "' is not declared in " + to_string(shape));
  const bool set_valued = declared->is_set();
  const TypeExpr& target_type = set_valued ? declared->element() : *declared;

  std::map<std::string, std::set<std::string>> extents;
  ValueRelation out;
  for (const auto& v1 : sources) {
    if (!detail::conforms_impl(v1, source_type, inst, h, extents)) continue;
    const OValue* holder = &v1;
    if (source_type.is_class()) {
      auto it = inst.values.find(v1.text());
      if (it == inst.values.end()) continue;
      holder = &it->second;
    }
    const OValue* f = holder->field(attribute);
    if (!f) continue;
    if (set_valued) {
      if (!f->is_set()) continue;
      for (const auto& e : f->elements())
        if (detail::conforms_impl(e, target_type, inst, h, extents)) out.emplace(v1, e);
    } else if (detail::conforms_impl(*f, target_type, inst, h, extents)) {
      out.emplace(v1, *f);
    }
  }
  return out;
}

/// Type reached after following the attributes of pe; throws PathError on an invalid step.
inline TypeExpr path_target_type(const PathExpression& pe, const Schema& s) {
  s.hierarchy.require(pe.source_class);
  TypeExpr cur = TypeExpr::class_ref(pe.source_class);
  for (const auto& a : pe.attributes) {
    const TypeExpr& shape = cur.is_class() ? s.hierarchy.type_of(cur.class_name()) : cur;
    const TypeExpr* declared = shape.field(a);
    if (!declared) throw PathError("attribute '" + a + "' is not declared in " + to_string(shape));
    cur = declared->is_set() ? declared->element() : *declared;
  }
  return cur;
}

inline ValueRelation compose(const ValueRelation& r1, const ValueRelation& r2) {
  std::map<OValue, std::vector<const OValue*>> index;
  for (const auto& [a, b] : r2) index[a].push_back(&b);
  ValueRelation out;
  for (const auto& [a, b] : r1) {
    auto it = index.find(b);
    if (it == index.end()) continue;
    for (const OValue* c : it->second) out.emplace(a, *c);
  }
  return out;
}

/// ⟦P0.A1...An⟧ as the composition of its one-step extensions.
inline ValueRelation eval_path_expression(const PathExpression& pe, const Schema& s, const Instance& inst) {
  path_target_type(pe, s);
  TypeExpr cur = TypeExpr::class_ref(pe.source_class);
  ValueRelation rel;
  for (const auto& o : class_extension(pe.source_class, inst, s.hierarchy))
    rel.emplace(OValue::oid(o), OValue::oid(o));
  for (const auto& a : pe.attributes) {
    std::set<OValue> frontier;
    for (const auto& [x, y] : rel) frontier.insert(y);
    rel = compose(rel, path_step(cur, a, frontier, s, inst));
    const TypeExpr& shape = cur.is_class() ? s.hierarchy.type_of(cur.class_name()) : cur;
    const TypeExpr& declared = *shape.field(a);
    cur = declared.is_set() ? declared.element() : declared;
  }
  return rel;
}

namespace detail {

using Binding = std::map<std::string, OValue>;

struct ViewTyping {
  std::map<std::string, TypeExpr> var_types;
};

inline std::pair<std::string, std::string> endpoints_impl(const std::string& name, const Schema& s, int depth);

inline std::vector<TypeExpr> view_atom_column_types(const ViewAtom& atom, const Schema& s, int depth) {
  if (auto it = s.relations.find(atom.predicate); it != s.relations.end()) {
    const TypeExpr& t = it->second;
    if (!t.is_tuple()) throw SchemaError("relation " + atom.predicate + " does not have a tuple type");
    if (t.field_types().size() != atom.args.size())
      throw SchemaError("atom " + atom.predicate + " has " + std::to_string(atom.args.size()) +
                        " arguments, relation has " + std::to_string(t.field_types().size()) + " columns");
    return t.field_types();
  }
  auto rel = s.relationships.find(atom.predicate);
  if (rel == s.relationships.end()) throw SchemaError("unknown predicate '" + atom.predicate + "' in view");
  if (!std::holds_alternative<PathExpression>(rel->second))
    throw SchemaError("view atom " + atom.predicate + " must name a relation or a path relationship");
  if (atom.args.size() != 2) throw SchemaError("relationship atom " + atom.predicate + " must be binary");
  auto [p1, p2] = endpoints_impl(atom.predicate, s, depth + 1);
  return {TypeExpr::class_ref(p1), TypeExpr::class_ref(p2)};
}

inline ViewTyping type_view(const ConjunctiveView& v, const Schema& s, int depth) {
  ViewTyping typing;
  const auto& h = s.hierarchy;
  // union-find over atoms for connectedness
  std::vector<std::size_t> parent(v.body.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
    return parent[i] == i ? i : parent[i] = find(parent[i]);
  };
  std::map<std::string, std::size_t> first_atom;
  for (std::size_t i = 0; i < v.body.size(); ++i) {
    const auto& atom = v.body[i];
    auto cols = view_atom_column_types(atom, s, depth);
    for (std::size_t c = 0; c < atom.args.size(); ++c) {
      const auto& term = atom.args[c];
      if (!term.is_variable) {
        if (!cols[c].is_domain())
          throw SchemaError("constant \"" + term.text + "\" used in non-D column of " + atom.predicate);
        continue;
      }
      if (!cols[c].is_domain() && !cols[c].is_class())
        throw SchemaError("view variable " + term.text + " bound to a complex column of " + atom.predicate);
      auto [it, fresh] = typing.var_types.emplace(term.text, cols[c]);
      if (!fresh) {
        const TypeExpr& prev = it->second;
        bool ok = (prev.is_domain() && cols[c].is_domain()) ||
                  (prev.is_class() && cols[c].is_class() && h.comparable(prev.class_name(), cols[c].class_name()));
        if (!ok)
          throw SchemaError("untyped join on view variable " + term.text + ": " + to_string(prev) +
                            " vs " + to_string(cols[c]));
        // keep the more specific class
        if (prev.is_class() && h.is_subclass(cols[c].class_name(), prev.class_name())) it->second = cols[c];
      }
      auto [fa, inserted] = first_atom.emplace(term.text, i);
      if (!inserted) parent[find(i)] = find(fa->second);
    }
  }
  for (const auto& head : {v.source_var, v.target_var}) {
    auto it = typing.var_types.find(head);
    if (it == typing.var_types.end()) throw SchemaError("view head variable " + head + " does not occur in the body");
    if (!it->second.is_class()) throw SchemaError("view head variable " + head + " is not an oid column");
  }
  for (std::size_t i = 1; i < v.body.size(); ++i)
    if (find(i) != find(0)) throw SchemaError("view body is not connected");
  return typing;
}

inline std::pair<std::string, std::string> endpoints_impl(const std::string& name, const Schema& s, int depth) {
  if (depth > 16) throw SchemaError("relationship definitions nest too deeply at " + name);
  const Relationship& r = s.relationship(name);
  if (const auto* simple = std::get_if<SimpleRelationship>(&r)) {
    auto it = s.relations.find(simple->relation);
    if (it == s.relations.end()) throw SchemaError("unknown relation '" + simple->relation + "'");
    const TypeExpr& t = it->second;
    if (!t.is_tuple() || t.field_types().size() != 2 || !t.field_types()[0].is_class() ||
        !t.field_types()[1].is_class())
      throw SchemaError("relation " + simple->relation + " is not a binary relation between classes");
    return {t.field_types()[0].class_name(), t.field_types()[1].class_name()};
  }
  if (const auto* path = std::get_if<PathExpression>(&r)) {
    TypeExpr target = path_target_type(*path, s);
    if (!target.is_class()) throw SchemaError("path relationship " + name + " does not end at a class");
    return {path->source_class, target.class_name()};
  }
  const auto& view = std::get<ConjunctiveView>(r);
  auto typing = type_view(view, s, depth);
  return {typing.var_types.at(view.source_var).class_name(), typing.var_types.at(view.target_var).class_name()};
}

inline OidRelation eval_relationship_impl(const Relationship& r, const Schema& s, const Instance& inst, int depth);

inline OidRelation eval_named(const std::string& name, const Schema& s, const Instance& inst, int depth) {
  if (depth > 16) throw SchemaError("relationship definitions nest too deeply at " + name);
  return eval_relationship_impl(s.relationship(name), s, inst, depth);
}

inline void join_view(const std::vector<std::vector<Binding>>& options, std::size_t i, Binding& cur,
                      std::vector<Binding>& out) {
  if (i == options.size()) {
    out.push_back(cur);
    return;
  }
  for (const auto& opt : options[i]) {
    std::vector<std::string> added;
    bool ok = true;
    for (const auto& [var, val] : opt) {
      auto it = cur.find(var);
      if (it == cur.end()) {
        cur.emplace(var, val);
        added.push_back(var);
      } else if (!(it->second == val)) {
        ok = false;
        break;
      }
    }
    if (ok) join_view(options, i + 1, cur, out);
    for (const auto& var : added) cur.erase(var);
  }
}

inline OidRelation eval_relationship_impl(const Relationship& r, const Schema& s, const Instance& inst, int depth) {
  OidRelation out;
  if (const auto* simple = std::get_if<SimpleRelationship>(&r)) {
    auto rel_type = s.relations.find(simple->relation);
    if (rel_type == s.relations.end()) throw SchemaError("unknown relation '" + simple->relation + "'");
    const auto& names = rel_type->second.field_names();
    if (names.size() != 2) throw SchemaError("relation " + simple->relation + " is not binary");
    auto it = inst.relations.find(simple->relation);
    if (it == inst.relations.end()) return out;
    for (const auto& t : it->second) {
      const OValue* a = t.field(names[0]);
      const OValue* b = t.field(names[1]);
      if (a && b && a->is_oid() && b->is_oid()) out.emplace(a->text(), b->text());
    }
    return out;
  }
  if (const auto* path = std::get_if<PathExpression>(&r)) {
    for (const auto& [a, b] : eval_path_expression(*path, s, inst))
      if (a.is_oid() && b.is_oid()) out.emplace(a.text(), b.text());
    return out;
  }
  const auto& view = std::get<ConjunctiveView>(r);
  type_view(view, s, depth);
  // naive evaluation: materialize each atom's matching bindings, then join
  std::vector<std::vector<Binding>> options;
  for (const auto& atom : view.body) {
    std::vector<Binding> matches;
    if (auto rel_type = s.relations.find(atom.predicate); rel_type != s.relations.end()) {
      const auto& names = rel_type->second.field_names();
      auto it = inst.relations.find(atom.predicate);
      if (it != inst.relations.end()) {
        for (const auto& t : it->second) {
          Binding b;
          bool ok = true;
          for (std::size_t c = 0; c < atom.args.size() && ok; ++c) {
            const OValue* f = t.field(names[c]);
            if (!f) ok = false;
            else if (!atom.args[c].is_variable) ok = f->is_constant() && f->text() == atom.args[c].text;
            else if (auto prev = b.find(atom.args[c].text); prev != b.end()) ok = prev->second == *f;
            else b.emplace(atom.args[c].text, *f);
          }
          if (ok) matches.push_back(std::move(b));
        }
      }
    } else {
      for (const auto& [a, c] : eval_named(atom.predicate, s, inst, depth + 1)) {
        Binding b;
        const auto& x = atom.args[0];
        const auto& y = atom.args[1];
        if (!x.is_variable || !y.is_variable) continue;
        b.emplace(x.text, OValue::oid(a));
        if (auto prev = b.find(y.text); prev != b.end()) {
          if (!(prev->second == OValue::oid(c))) continue;
        } else {
          b.emplace(y.text, OValue::oid(c));
        }
        matches.push_back(std::move(b));
      }
    }
    options.push_back(std::move(matches));
  }
  std::vector<Binding> results;
  Binding cur;
  join_view(options, 0, cur, results);
  for (const auto& b : results) {
    const OValue& x = b.at(view.source_var);
    const OValue& y = b.at(view.target_var);
    if (x.is_oid() && y.is_oid()) out.emplace(x.text(), y.text());
  }
  return out;
}

}  // namespace detail

/// The classes (P1, P2) a named relationship connects.
inline std::pair<std::string, std::string> relationship_endpoints(const std::string& name, const Schema& s) {
  return detail::endpoints_impl(name, s, 0);
}

inline OidRelation eval_relationship(const Relationship& r, const Schema& s, const Instance& inst) {
  return detail::eval_relationship_impl(r, s, inst, 0);
}

inline OidRelation eval_relationship(const std::string& name, const Schema& s, const Instance& inst) {
  return detail::eval_named(name, s, inst, 0);
}

// ---------------------------------------------------------------------------
// Description layer lookups
// ---------------------------------------------------------------------------

/// The most specific P' with P' desc P.
inline std::optional<std::string> meta_class_of(const std::string& cls, const DescriptionLayer& layer,
                                                const ClassHierarchy& h) {
  std::optional<std::string> best;
  for (const auto& [meta, described] : layer.desc) {
    if (described != cls) continue;
    if (!best || (h.is_subclass(meta, *best) && meta != *best)) best = meta;
  }
  return best;
}

/// The unique class whose meta-class is meta_cls; nullopt if none or ambiguous.
inline std::optional<std::string> described_class_of(const std::string& meta_cls, const DescriptionLayer& layer,
                                                     const ClassHierarchy& h) {
  std::optional<std::string> found;
  for (const auto& [meta, described] : layer.desc) {
    if (meta != meta_cls) continue;
    if (meta_class_of(described, layer, h) != meta_cls) continue;
    if (found && *found != described) return std::nullopt;
    found = described;
  }
  return found;
}

inline std::optional<std::string> meta_relationship_of(const std::string& rel, const DescriptionLayer& layer) {
  for (const auto& [meta, described] : layer.hom)
    if (described == rel) return meta;
  return std::nullopt;
}

inline std::optional<std::string> described_relationship_of(const std::string& meta_rel,
                                                            const DescriptionLayer& layer) {
  for (const auto& [meta, described] : layer.hom)
    if (meta == meta_rel) return described;
  return std::nullopt;
}

namespace detail {

/// Pairs (a, b) of a binary relation that lie on a cycle of length >= 2.
inline std::vector<std::pair<std::string, std::string>> antisymmetry_violations(
    const std::set<std::pair<std::string, std::string>>& rel) {
  auto reaches = [&](const std::string& from, const std::string& to) {
    std::set<std::string> seen{from};
    std::vector<std::string> stack{from};
    while (!stack.empty()) {
      auto cur = stack.back();
      stack.pop_back();
      for (const auto& [a, b] : rel) {
        if (a != cur) continue;
        if (b == to) return true;
        if (seen.insert(b).second) stack.push_back(b);
      }
    }
    return false;
  };
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [a, b] : rel)
    if (a != b && reaches(b, a)) out.emplace_back(a, b);
  return out;
}

}  // namespace detail

inline Report validate_description_layer(const DescriptionLayer& layer, const Schema& s, const Instance& inst) {
  Report report;
  const auto& h = s.hierarchy;

  bool desc_known = true;
  for (const auto& [meta, cls] : layer.desc)
    for (const auto& name : {meta, cls})
      if (!h.has_class(name)) {
        report.add("desc.unknown-class", "desc references unknown class " + name);
        desc_known = false;
      }
  if (desc_known) {
    for (const auto& [a, b] : detail::antisymmetry_violations(layer.desc))
      report.add("desc.cycle", "transitive closure of desc is not antisymmetric: " + a + " desc " + b + " lies on a cycle");
    for (const auto& [meta, cls] : layer.desc)
      for (const auto& p0 : h.classes) {
        if (!h.is_subclass(p0, cls)) continue;
        for (const auto& m0 : h.classes)
          if (h.is_subclass(m0, meta) && !layer.desc.count({m0, p0}))
            report.add("desc.closure", "desc is not closed under <=: " + meta + " desc " + cls + " requires " + m0 + " desc " + p0);
      }
    for (const auto& [m1, c1] : layer.desc)
      for (const auto& [m2, c2] : layer.desc) {
        if (c1 == c2 && m1 < m2 && !h.comparable(m1, m2))
          report.add("desc.one-to-one", m1 + " and " + m2 + " both describe " + c1 + " but are incomparable");
        if (m1 == m2 && c1 < c2 && !h.comparable(c1, c2))
          report.add("desc.one-to-one", m1 + " describes both " + c1 + " and " + c2 + " which are incomparable");
      }
  }

  bool hom_known = true;
  for (const auto& [meta, rel] : layer.hom)
    for (const auto& name : {meta, rel})
      if (!s.relationships.count(name)) {
        report.add("hom.unknown-relationship", "hom references unknown relationship " + name);
        hom_known = false;
      }
  if (hom_known && desc_known) {
    for (const auto& [meta, rel] : layer.hom) {
      try {
        auto [m1, m2] = relationship_endpoints(meta, s);
        auto [p1, p2] = relationship_endpoints(rel, s);
        if (!layer.desc.count({m1, p1}) || !layer.desc.count({m2, p2}))
          report.add("hom.endpoints", meta + " hom " + rel + " requires " + m1 + " desc " + p1 + " and " + m2 + " desc " + p2);
      } catch (const Error& e) {
        report.add("hom.endpoints", std::string("cannot type hom pair ") + meta + " -> " + rel + ": " + e.what());
      }
    }
    for (const auto& [a, b] : detail::antisymmetry_violations(layer.hom))
      report.add("hom.cycle", "transitive closure of hom is not antisymmetric: " + a + " hom " + b + " lies on a cycle");
    for (const auto& [m1, r1] : layer.hom)
      for (const auto& [m2, r2] : layer.hom) {
        if (m1 == m2 && r1 < r2) report.add("hom.one-to-one", m1 + " is homomorphic image of both " + r1 + " and " + r2);
        if (r1 == r2 && m1 < m2) report.add("hom.one-to-one", r1 + " has two homomorphic images " + m1 + " and " + m2);
      }
  }
  if (!desc_known) return report;

  // mu: total on described classes, typed into every describing meta-class
  std::set<std::string> described_oids, missing;
  for (const auto& [meta, cls] : layer.desc) {
    auto meta_ext = class_extension(meta, inst, h);
    for (const auto& o : class_extension(cls, inst, h)) {
      described_oids.insert(o);
      auto m = layer.meta_of(o);
      if (!m) {
        if (missing.insert(o).second)
          report.add("mu.missing", "oid " + o + " of described class " + cls + " has no meta-object");
        continue;
      }
      if (!meta_ext.count(*m))
        report.add("mu.type", "mu(" + o + ") = " + *m + " is not in the extension of " + meta);
    }
  }
  for (const auto& [o, m] : layer.mu)
    if (!described_oids.count(o)) report.add("mu.extra", "mu is defined on " + o + " which is not an object of a described class");

  if (hom_known && !report.has("hom.endpoints")) {
    for (const auto& [meta, rel] : layer.hom) {
      OidRelation meta_ext, ext;
      try {
        meta_ext = eval_relationship(meta, s, inst);
        ext = eval_relationship(rel, s, inst);
      } catch (const Error& e) {
        report.add("hom.mirror", std::string("cannot evaluate ") + meta + " / " + rel + ": " + e.what());
        continue;
      }
      for (const auto& [o1, o2] : ext) {
        auto m1 = layer.meta_of(o1);
        auto m2 = layer.meta_of(o2);
        if (!m1 || !m2) continue;  // reported as mu.missing
        if (!meta_ext.count({*m1, *m2}))
          report.add("hom.mirror", "(" + o1 + ", " + o2 + ") in " + rel + " but (" + *m1 + ", " + *m2 + ") not in " + meta);
      }
    }
  }
  return report;
}

}  // namespace metaq
