#pragma once

// Reference implementations used as test oracles. They share no code with
// the evaluators under test beyond the data structures, and favour
// obviousness over speed.

#include <functional>
#include <stdexcept>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "metaq/metaq.hpp"

namespace oracle {

using NodeSet = std::set<std::string>;

// ---------------------------------------------------------------------------
// Path queries, set at a time
// ---------------------------------------------------------------------------

NodeSet eval_from(const metaq::PathQuery& q, const metaq::GraphDatabase& g, const NodeSet& from);

inline bool condition_at(const metaq::PathCondition& c, const metaq::GraphDatabase& g, const std::string& n) {
  if (!c.is_nested()) return g.label(n).has(c.attr, c.value);
  return !eval_from(*c.query, g, {n}).empty();
}

/// Image of a node set under q: tags step along edges, star is the reflexive
/// transitive closure computed by iteration to a fixpoint.
inline NodeSet eval_from(const metaq::PathQuery& q, const metaq::GraphDatabase& g, const NodeSet& from) {
  using K = metaq::PathQuery::Kind;
  NodeSet out;
  switch (q.kind) {
    case K::tag:
      for (const auto& n : from)
        for (const auto& m : g.successors(n))
          if (g.tag(m) == q.tag) out.insert(m);
      return out;
    case K::self: return from;
    case K::none: return out;
    case K::concat: {
      NodeSet cur = from;
      for (const auto& p : q.parts) cur = eval_from(*p, g, cur);
      return cur;
    }
    case K::alt:
      for (const auto& p : q.parts) {
        NodeSet part = eval_from(*p, g, from);
        out.insert(part.begin(), part.end());
      }
      return out;
    case K::star: {
      out = from;
      NodeSet frontier = from;
      while (!frontier.empty()) {
        NodeSet next;
        for (const auto& n : eval_from(q.inner(), g, frontier))
          if (out.insert(n).second) next.insert(n);
        frontier = std::move(next);
      }
      return out;
    }
    case K::cond:
      for (const auto& n : eval_from(q.inner(), g, from)) {
        bool ok = true;
        for (const auto& c : q.conditions) ok = ok && condition_at(c, g, n);
        if (ok) out.insert(n);
      }
      return out;
  }
  return out;
}

inline NodeSet eval_path(const metaq::PathQuery& q, const metaq::GraphDatabase& g) {
  return eval_from(q, g, {g.root()});
}

// ---------------------------------------------------------------------------
// Path queries by walk enumeration (exact on acyclic graphs when max_len is
// at least the longest path)
// ---------------------------------------------------------------------------

NodeSet walk_eval(const metaq::PathQuery& q, const metaq::GraphDatabase& g, const std::string& ctx, int max_len);

/// Positions j such that walk[i..j] matches q with conditions checked at walk[j].
inline std::set<std::size_t> match_positions(const metaq::PathQuery& q, const metaq::GraphDatabase& g,
                                             const std::vector<std::string>& walk, std::size_t i, int max_len) {
  using K = metaq::PathQuery::Kind;
  std::set<std::size_t> out;
  switch (q.kind) {
    case K::tag:
      if (i + 1 < walk.size() && g.tag(walk[i + 1]) == q.tag) out.insert(i + 1);
      return out;
    case K::self: out.insert(i); return out;
    case K::none: return out;
    case K::concat: {
      std::set<std::size_t> cur{i};
      for (const auto& p : q.parts) {
        std::set<std::size_t> next;
        for (auto k : cur)
          for (auto j : match_positions(*p, g, walk, k, max_len)) next.insert(j);
        cur = std::move(next);
      }
      return cur;
    }
    case K::alt:
      for (const auto& p : q.parts)
        for (auto j : match_positions(*p, g, walk, i, max_len)) out.insert(j);
      return out;
    case K::star: {
      out.insert(i);
      std::set<std::size_t> frontier{i};
      while (!frontier.empty()) {
        std::set<std::size_t> next;
        for (auto k : frontier)
          for (auto j : match_positions(q.inner(), g, walk, k, max_len))
            if (out.insert(j).second) next.insert(j);
        frontier = std::move(next);
      }
      return out;
    }
    case K::cond:
      for (auto j : match_positions(q.inner(), g, walk, i, max_len)) {
        bool ok = true;
        for (const auto& c : q.conditions) {
          if (!c.is_nested()) ok = ok && g.label(walk[j]).has(c.attr, c.value);
          else ok = ok && !walk_eval(*c.query, g, walk[j], max_len).empty();
        }
        if (ok) out.insert(j);
      }
      return out;
  }
  return out;
}

inline NodeSet walk_eval(const metaq::PathQuery& q, const metaq::GraphDatabase& g, const std::string& ctx,
                         int max_len) {
  NodeSet out;
  std::vector<std::string> walk{ctx};
  std::function<void()> extend = [&] {
    for (auto j : match_positions(q, g, walk, 0, max_len)) out.insert(walk[j]);
    if (static_cast<int>(walk.size()) > max_len) return;
    for (const auto& m : g.successors(walk.back())) {
      walk.push_back(m);
      extend();
      walk.pop_back();
    }
  };
  extend();
  return out;
}

// ---------------------------------------------------------------------------
// Words and automata
// ---------------------------------------------------------------------------

using Word = std::vector<std::string>;

/// Word membership for condition-free queries (#self and #none allowed).
inline std::set<std::size_t> word_positions(const metaq::PathQuery& q, const Word& w, std::size_t i) {
  using K = metaq::PathQuery::Kind;
  std::set<std::size_t> out;
  switch (q.kind) {
    case K::tag:
      if (i < w.size() && w[i] == q.tag) out.insert(i + 1);
      return out;
    case K::self: out.insert(i); return out;
    case K::none: return out;
    case K::concat: {
      std::set<std::size_t> cur{i};
      for (const auto& p : q.parts) {
        std::set<std::size_t> next;
        for (auto k : cur)
          for (auto j : word_positions(*p, w, k)) next.insert(j);
        cur = std::move(next);
      }
      return cur;
    }
    case K::alt:
      for (const auto& p : q.parts)
        for (auto j : word_positions(*p, w, i)) out.insert(j);
      return out;
    case K::star: {
      out.insert(i);
      std::set<std::size_t> frontier{i};
      while (!frontier.empty()) {
        std::set<std::size_t> next;
        for (auto k : frontier)
          for (auto j : word_positions(q.inner(), w, k))
            if (out.insert(j).second) next.insert(j);
        frontier = std::move(next);
      }
      return out;
    }
    case K::cond: throw std::logic_error("word_positions: query has conditions");
  }
  return out;
}

inline bool query_accepts(const metaq::PathQuery& q, const Word& w) { return word_positions(q, w, 0).count(w.size()) > 0; }

/// w is the tag sequence of some walk from the root.
inline bool graph_accepts(const metaq::GraphDatabase& g, const Word& w) {
  NodeSet cur{g.root()};
  for (const auto& t : w) {
    NodeSet next;
    for (const auto& n : cur)
      for (const auto& m : g.successors(n))
        if (g.tag(m) == t) next.insert(m);
    cur = std::move(next);
  }
  return !cur.empty();
}

/// Subset simulation over tag symbols; ε-labelled transitions never match a tag.
inline bool nfa_accepts(const metaq::CondNFA& a, const Word& w) {
  NodeSet cur{a.start};
  for (const auto& t : w) {
    NodeSet next;
    for (const auto& tr : a.transitions)
      if (cur.count(tr.from) && tr.label.tag && *tr.label.tag == t && tr.label.conditions.empty()) next.insert(tr.to);
    cur = std::move(next);
  }
  for (const auto& s : cur)
    if (a.finals.count(s)) return true;
  return false;
}

inline std::vector<Word> all_words(const std::vector<std::string>& alphabet, std::size_t max_len) {
  std::vector<Word> out{{}};
  std::vector<Word> layer{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<Word> next;
    for (const auto& w : layer)
      for (const auto& t : alphabet) {
        Word x = w;
        x.push_back(t);
        next.push_back(x);
      }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conjunctive queries by backtracking over all oids
// ---------------------------------------------------------------------------

inline std::optional<std::string> attribute(const metaq::Instance& inst, const std::string& oid,
                                            const std::string& dotted) {
  auto it = inst.values.find(oid);
  if (it == inst.values.end()) return std::nullopt;
  const metaq::OValue* v = &it->second;
  std::size_t pos = 0;
  while (true) {
    std::size_t dot = dotted.find('.', pos);
    std::string a = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (v->is_oid()) {
      auto next = inst.values.find(v->text());
      if (next == inst.values.end()) return std::nullopt;
      v = &next->second;
    }
    v = v->field(a);
    if (!v) return std::nullopt;
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  if (!v->is_constant()) return std::nullopt;
  return v->text();
}

/// All head tuples over assignments of every variable to every oid.
inline std::set<metaq::Row> conjunctive(const metaq::ConjunctiveQuery& cq, const metaq::Schema& s,
                                        const metaq::Instance& inst, const metaq::DescriptionLayer& layer) {
  using K = metaq::Atom::Kind;
  std::vector<std::string> domain;
  for (const auto& [o, v] : inst.values) domain.push_back(o);
  const std::set<std::string> var_set = cq.variables();
  std::vector<std::string> vars(var_set.begin(), var_set.end());
  std::map<std::string, metaq::OidRelation> rels;
  std::map<std::string, std::set<std::string>> exts;
  for (const auto& a : cq.body) {
    if (a.kind == K::relationship && !rels.count(a.predicate)) rels[a.predicate] = metaq::eval_relationship(a.predicate, s, inst);
    if (a.kind == K::class_atom && !exts.count(a.predicate))
      exts[a.predicate] = metaq::class_extension(a.predicate, inst, s.hierarchy);
  }
  std::map<std::string, std::string> val;
  auto holds = [&](const metaq::Atom& a) {
    switch (a.kind) {
      case K::class_atom: return exts[a.predicate].count(val[a.vars[0]]) > 0;
      case K::relationship: return rels[a.predicate].count({val[a.vars[0]], val[a.vars[1]]}) > 0;
      case K::mu: {
        auto it = layer.mu.find(val[a.vars[0]]);
        return it != layer.mu.end() && it->second == val[a.vars[1]];
      }
      case K::attribute_equals: return attribute(inst, val[a.vars[0]], a.attribute) == a.value;
      case K::meta_attribute_equals: {
        auto it = layer.mu.find(val[a.vars[0]]);
        return it != layer.mu.end() && attribute(inst, it->second, a.attribute) == a.value;
      }
    }
    return false;
  };
  auto ready = [&](const metaq::Atom& a) {
    for (const auto& v : a.vars)
      if (!val.count(v)) return false;
    return true;
  };
  std::set<metaq::Row> out;
  std::function<void(std::size_t)> assign = [&](std::size_t k) {
    for (const auto& a : cq.body)
      if (ready(a) && !holds(a)) return;
    if (k == vars.size()) {
      metaq::Row r;
      for (const auto& h : cq.head) r.push_back(val.at(h));
      out.insert(r);
      return;
    }
    for (const auto& o : domain) {
      val[vars[k]] = o;
      assign(k + 1);
    }
    val.erase(vars[k]);
  };
  assign(0);
  return out;
}

}  // namespace oracle
