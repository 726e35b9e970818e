#pragma once

// Line-oriented text format for schemas with description and their
// instances.
//
// Schema file:
//   class NAME [<= SUPER, ...] : TYPE
//   relation NAME : TYPE
//   rel NAME := path CLASS.A1.A2...
//   rel NAME := view NAME(X, Y) :- R(X, "c", Y), v(Y, Z), ...
//   rel NAME := relation R
//   desc META -> CLASS
//   hom METAREL -> REL
// Instance file:
//   object OID : CLASS = OVALUE
//   tuple REL = OVALUE
//   mu OID -> OID
// TYPE is D, a class name, <A: TYPE, ...> or {TYPE}; OVALUE is a string,
// an oid, <A: OVALUE, ...> or {OVALUE, ...}.

#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "metaq/io/lexer.hpp"
#include "metaq/model.hpp"

namespace metaq::io {

/// A schema with description together with an instance and its mu.
struct LayeredDatabase {
  Schema schema;
  Instance instance;
  DescriptionLayer layer;
};

namespace detail {

inline TypeExpr parse_type(TokenStream& ts) {
  if (ts.accept("<")) {
    std::vector<std::pair<std::string, TypeExpr>> fields;
    do {
      std::string name = ts.identifier("an attribute name");
      ts.expect(":");
      fields.emplace_back(std::move(name), parse_type(ts));
    } while (ts.accept(","));
    const Token& close = ts.peek();
    ts.expect(">");
    try {
      return TypeExpr::tuple(std::move(fields));
    } catch (const Error& e) {
      TokenStream::fail_at(close, e.what());
    }
  }
  if (ts.accept("{")) {
    TypeExpr element = parse_type(ts);
    ts.expect("}");
    return TypeExpr::set(std::move(element));
  }
  std::string name = ts.identifier("a type");
  if (name == "D") return TypeExpr::domain();
  return TypeExpr::class_ref(std::move(name));
}

inline OValue parse_ovalue(TokenStream& ts) {
  if (ts.peek().kind == Token::Kind::string) return OValue::constant(ts.next().text);
  if (ts.accept("<")) {
    const Token& open = ts.peek();
    std::vector<std::pair<std::string, OValue>> fields;
    do {
      std::string name = ts.identifier("an attribute name");
      ts.expect(":");
      fields.emplace_back(std::move(name), parse_ovalue(ts));
    } while (ts.accept(","));
    ts.expect(">");
    try {
      return OValue::tuple(std::move(fields));
    } catch (const Error& e) {
      TokenStream::fail_at(open, e.what());
    }
  }
  if (ts.accept("{")) {
    std::vector<OValue> elements;
    if (!ts.accept("}")) {
      do elements.push_back(parse_ovalue(ts));
      while (ts.accept(","));
      ts.expect("}");
    }
    return OValue::set(std::move(elements));
  }
  return OValue::oid(ts.identifier("an o-value"));
}

inline ViewTerm parse_view_term(TokenStream& ts) {
  if (ts.peek().kind == Token::Kind::string) return {false, ts.next().text};
  return {true, ts.identifier("a variable or string")};
}

inline ViewAtom parse_view_atom(TokenStream& ts) {
  ViewAtom atom;
  atom.predicate = ts.identifier("a relation or relationship name");
  ts.expect("(");
  do atom.args.push_back(parse_view_term(ts));
  while (ts.accept(","));
  ts.expect(")");
  return atom;
}

inline Relationship parse_relationship(TokenStream& ts, const std::string& name) {
  if (ts.accept_word("path")) {
    PathExpression pe;
    pe.source_class = ts.identifier("a class name");
    ts.expect(".");
    do pe.attributes.push_back(ts.identifier("an attribute name"));
    while (ts.accept("."));
    return pe;
  }
  if (ts.accept_word("relation")) return SimpleRelationship{ts.identifier("a relation name")};
  if (ts.accept_word("view")) {
    const Token& head = ts.peek();
    std::string head_name = ts.identifier("the view head");
    if (head_name != name) TokenStream::fail_at(head, "view head '" + head_name + "' must be named '" + name + "'");
    ConjunctiveView v;
    ts.expect("(");
    v.source_var = ts.identifier("a variable");
    ts.expect(",");
    v.target_var = ts.identifier("a variable");
    ts.expect(")");
    ts.expect(":-");
    do v.body.push_back(parse_view_atom(ts));
    while (ts.accept(","));
    return v;
  }
  ts.fail("expected 'path', 'view' or 'relation'" + ts.found());
}

inline std::string relationship_text(const std::string& name, const Relationship& r) {
  if (auto* pe = std::get_if<PathExpression>(&r)) {
    std::string out = "path " + pe->source_class;
    for (const auto& a : pe->attributes) out += "." + a;
    return out;
  }
  if (auto* sr = std::get_if<SimpleRelationship>(&r)) return "relation " + sr->relation;
  const auto& v = std::get<ConjunctiveView>(r);
  std::string out = "view " + name + "(" + v.source_var + ", " + v.target_var + ") :- ";
  for (std::size_t i = 0; i < v.body.size(); ++i) {
    if (i) out += ", ";
    out += v.body[i].predicate + "(";
    for (std::size_t j = 0; j < v.body[i].args.size(); ++j) {
      const auto& t = v.body[i].args[j];
      out += (j ? ", " : "") + (t.is_variable ? t.text : quote(t.text));
    }
    out += ")";
  }
  return out;
}

}  // namespace detail

/// Parses a schema file into schema and the desc/hom part of the layer.
inline void parse_schema(std::string_view text, Schema& schema, DescriptionLayer& layer) {
  TokenStream ts(tokenize(text, true));
  auto& h = schema.hierarchy;
  ts.skip_newlines();
  while (!ts.at_end()) {
    const Token& kw = ts.peek();
    if (ts.accept_word("class")) {
      const Token& at = ts.peek();
      std::string name = ts.identifier("a class name");
      if (h.has_class(name)) TokenStream::fail_at(at, "class '" + name + "' declared twice");
      std::vector<std::string> supers;
      if (ts.accept("<=")) {
        do supers.push_back(ts.identifier("a class name"));
        while (ts.accept(","));
      }
      ts.expect(":");
      h.classes.insert(name);
      h.typing.emplace(name, detail::parse_type(ts));
      for (auto& sup : supers) h.declared_subclass.insert({name, std::move(sup)});
    } else if (ts.accept_word("relation")) {
      const Token& at = ts.peek();
      std::string name = ts.identifier("a relation name");
      ts.expect(":");
      if (!schema.relations.emplace(name, detail::parse_type(ts)).second)
        TokenStream::fail_at(at, "relation '" + name + "' declared twice");
    } else if (ts.accept_word("rel")) {
      const Token& at = ts.peek();
      std::string name = ts.identifier("a relationship name");
      ts.expect(":=");
      if (!schema.relationships.emplace(name, detail::parse_relationship(ts, name)).second)
        TokenStream::fail_at(at, "relationship '" + name + "' declared twice");
    } else if (ts.accept_word("desc")) {
      std::string meta = ts.identifier("a class name");
      ts.expect("->");
      layer.desc.insert({meta, ts.identifier("a class name")});
    } else if (ts.accept_word("hom")) {
      std::string meta = ts.identifier("a relationship name");
      ts.expect("->");
      layer.hom.insert({meta, ts.identifier("a relationship name")});
    } else {
      TokenStream::fail_at(kw, "expected class, relation, rel, desc or hom" + ts.found());
    }
    ts.end_of_statement();
    ts.skip_newlines();
  }
}

/// Parses an instance file into the instance and mu.
inline void parse_instance(std::string_view text, Instance& inst, DescriptionLayer& layer) {
  TokenStream ts(tokenize(text, true));
  ts.skip_newlines();
  while (!ts.at_end()) {
    const Token& kw = ts.peek();
    if (ts.accept_word("object")) {
      const Token& at = ts.peek();
      std::string oid = ts.identifier("an oid");
      ts.expect(":");
      std::string cls = ts.identifier("a class name");
      ts.expect("=");
      if (inst.values.count(oid)) TokenStream::fail_at(at, "object '" + oid + "' declared twice");
      inst.values.emplace(oid, detail::parse_ovalue(ts));
      inst.classes[cls].insert(oid);
    } else if (ts.accept_word("tuple")) {
      std::string rel = ts.identifier("a relation name");
      ts.expect("=");
      inst.relations[rel].insert(detail::parse_ovalue(ts));
    } else if (ts.accept_word("mu")) {
      const Token& at = ts.peek();
      std::string o = ts.identifier("an oid");
      ts.expect("->");
      std::string m = ts.identifier("an oid");
      auto [it, fresh] = layer.mu.emplace(o, m);
      if (!fresh && it->second != m) TokenStream::fail_at(at, "mu(" + o + ") assigned twice");
    } else {
      TokenStream::fail_at(kw, "expected object, tuple or mu" + ts.found());
    }
    ts.end_of_statement();
    ts.skip_newlines();
  }
}

/// Schema and relationship checks that the model validators do not cover.
inline Report validate_schema(const Schema& s) {
  Report report = well_formed_hierarchy(s.hierarchy);
  for (const auto& [sub, sup] : s.hierarchy.declared_subclass)
    if (!s.hierarchy.has_class(sup)) report.add("schema.unknown-class", "class " + sub + " extends unknown class " + sup);
  for (const auto& [name, type] : s.relations) {
    bool atomic = type.is_tuple();
    if (atomic)
      for (const auto& t : type.field_types()) atomic = atomic && (t.is_domain() || t.is_class());
    if (!atomic) report.add("schema.relation-type", "relation " + name + " must have a tuple type over classes and D");
    std::set<std::string> used;
    type.collect_classes(used);
    for (const auto& c : used)
      if (!s.hierarchy.has_class(c)) report.add("schema.unknown-class", "relation " + name + " uses unknown class " + c);
  }
  for (const auto& [name, r] : s.relationships) {
    try {
      relationship_endpoints(name, s);
    } catch (const Error& e) {
      report.add("schema.relationship", "relationship " + name + ": " + e.what());
    }
  }
  return report;
}

/// Everything the loader checks after parsing; empty iff the database is valid.
inline Report validate_database(const LayeredDatabase& db) {
  Report report = validate_schema(db.schema);
  if (!report.empty()) return report;
  report.merge(validate_instance(db.schema, db.instance));
  report.merge(validate_description_layer(db.layer, db.schema, db.instance));
  return report;
}

struct LoadResult {
  LayeredDatabase db;
  Report report;
};

/// Parses both files and validates the result. Syntax errors throw
/// ParseError; semantic problems end up in the report.
inline LoadResult load_schema_instance(std::string_view schema_text, std::string_view instance_text) {
  LoadResult r;
  parse_schema(schema_text, r.db.schema, r.db.layer);
  parse_instance(instance_text, r.db.instance, r.db.layer);
  r.report = validate_database(r.db);
  return r;
}

inline std::string write_schema(const Schema& s, const DescriptionLayer& layer) {
  std::ostringstream os;
  for (const auto& cls : s.hierarchy.classes) {
    os << "class " << cls;
    bool first = true;
    for (const auto& [sub, sup] : s.hierarchy.declared_subclass)
      if (sub == cls) {
        os << (first ? " <= " : ", ") << sup;
        first = false;
      }
    os << " : " << to_string(s.hierarchy.type_of(cls)) << "\n";
  }
  for (const auto& [name, type] : s.relations) os << "relation " << name << " : " << to_string(type) << "\n";
  for (const auto& [name, r] : s.relationships) os << "rel " << name << " := " << detail::relationship_text(name, r) << "\n";
  for (const auto& [meta, cls] : layer.desc) os << "desc " << meta << " -> " << cls << "\n";
  for (const auto& [meta, rel] : layer.hom) os << "hom " << meta << " -> " << rel << "\n";
  return os.str();
}

inline std::string write_instance(const Instance& inst, const DescriptionLayer& layer) {
  std::ostringstream os;
  for (const auto& [cls, oids] : inst.classes)
    for (const auto& o : oids) {
      auto it = inst.values.find(o);
      if (it == inst.values.end()) continue;
      os << "object " << o << " : " << cls << " = " << to_string(it->second) << "\n";
    }
  for (const auto& [rel, tuples] : inst.relations)
    for (const auto& t : tuples) os << "tuple " << rel << " = " << to_string(t) << "\n";
  for (const auto& [o, m] : layer.mu) os << "mu " << o << " -> " << m << "\n";
  return os.str();
}

}  // namespace metaq::io
