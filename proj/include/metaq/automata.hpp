#pragma once

// Condition-labeled automata for path queries: FSA(G) of a graph, the
// query -> regex -> NFA pipeline, the condition-aware product with a
// meta-level automaton, state elimination back to a regex, and pruning.

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "metaq/graphdb.hpp"
#include "metaq/pathquery.hpp"

namespace metaq {

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// <t, C>; tag == nullopt stands for epsilon. Conditions are kept sorted
/// and duplicate-free.
struct CondLabel {
  std::optional<std::string> tag;
  std::vector<PathCondition> conditions;

  static CondLabel symbol(std::string t) { return {std::move(t), {}}; }
  static CondLabel epsilon(std::vector<PathCondition> cs) {
    std::sort(cs.begin(), cs.end());
    cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
    return {std::nullopt, std::move(cs)};
  }

  bool is_epsilon() const noexcept { return !tag.has_value(); }
};

inline int compare(const CondLabel& a, const CondLabel& b) {
  if (a.tag != b.tag) {
    if (!a.tag) return -1;
    if (!b.tag) return 1;
    return *a.tag < *b.tag ? -1 : 1;
  }
  const std::size_t n = std::min(a.conditions.size(), b.conditions.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(a.conditions[i], b.conditions[i])) return c;
  if (a.conditions.size() != b.conditions.size()) return a.conditions.size() < b.conditions.size() ? -1 : 1;
  return 0;
}
inline bool operator==(const CondLabel& a, const CondLabel& b) { return compare(a, b) == 0; }
inline bool operator<(const CondLabel& a, const CondLabel& b) { return compare(a, b) < 0; }

/// `t` or `ε[c1, c2]`.
inline std::string to_string(const CondLabel& l) {
  if (l.tag) return *l.tag;
  std::string out = "ε[";
  for (std::size_t i = 0; i < l.conditions.size(); ++i) {
    if (i) out += ", ";
    out += print_condition(l.conditions[i]);
  }
  return out + "]";
}

// ---------------------------------------------------------------------------
// Automata
// ---------------------------------------------------------------------------

struct Transition {
  std::string from;
  CondLabel label;
  std::string to;
};

inline bool operator<(const Transition& a, const Transition& b) {
  if (a.from != b.from) return a.from < b.from;
  if (int c = compare(a.label, b.label)) return c < 0;
  return a.to < b.to;
}
inline bool operator==(const Transition& a, const Transition& b) {
  return a.from == b.from && a.to == b.to && a.label == b.label;
}

/// Nondeterministic automaton over (T ∪ {ε}) × conditions. It has no
/// construction-only (lambda) moves; ε-labels are ordinary symbols.
struct CondNFA {
  std::vector<std::string> states;  // creation order; states.front() is usually the start
  std::string start;
  std::set<Transition> transitions;
  std::set<std::string> finals;

  bool is_final(const std::string& s) const { return finals.count(s) > 0; }

  std::map<std::string, std::vector<const Transition*>> outgoing() const {
    std::map<std::string, std::vector<const Transition*>> out;
    for (const auto& s : states) out[s];
    for (const auto& t : transitions) out[t.from].push_back(&t);
    return out;
  }

  /// Same automaton, different start state.
  CondNFA rerooted(const std::string& s) const {
    CondNFA copy = *this;
    copy.start = s;
    return copy;
  }
};

/// FSA(G): states are the nodes, all final; an edge into a node with tag t
/// is labeled <t, {}>, and every node gets an ε-self-loop carrying its
/// attribute assignments.
inline CondNFA graph_to_fsa(const GraphDatabase& g) {
  CondNFA a;
  a.start = g.root();
  if (g.node_count() > 0) a.states.push_back(g.root());
  for (const auto& [id, label] : g.labels()) {
    if (id != g.root()) a.states.push_back(id);
    a.finals.insert(id);
    std::vector<PathCondition> cs;
    for (const auto& [attr, value] : label.attrs) cs.push_back(PathCondition::attribute(attr, value));
    a.transitions.insert({id, CondLabel::epsilon(std::move(cs)), id});
  }
  for (const auto& [from, to] : g.edges()) a.transitions.insert({from, CondLabel::symbol(g.tag(to)), to});
  return a;
}

inline bool is_empty_language(const CondNFA& a) {
  if (a.states.empty() && a.start.empty()) return true;
  auto out = a.outgoing();
  std::set<std::string> seen{a.start};
  std::vector<std::string> stack{a.start};
  while (!stack.empty()) {
    std::string s = stack.back();
    stack.pop_back();
    if (a.is_final(s)) return false;
    for (const Transition* t : out[s])
      if (seen.insert(t->to).second) stack.push_back(t->to);
  }
  return true;
}

/// Keeps the states that are reachable from the start and can reach a final state.
inline CondNFA trim(const CondNFA& a) {
  auto out = a.outgoing();
  std::set<std::string> forward{a.start};
  std::vector<std::string> stack{a.start};
  while (!stack.empty()) {
    std::string s = stack.back();
    stack.pop_back();
    for (const Transition* t : out[s])
      if (forward.insert(t->to).second) stack.push_back(t->to);
  }
  std::map<std::string, std::vector<std::string>> in;
  for (const auto& t : a.transitions) in[t.to].push_back(t.from);
  std::set<std::string> backward;
  for (const auto& f : a.finals)
    if (forward.count(f) && backward.insert(f).second) stack.push_back(f);
  while (!stack.empty()) {
    std::string s = stack.back();
    stack.pop_back();
    for (const auto& p : in[s])
      if (forward.count(p) && backward.insert(p).second) stack.push_back(p);
  }
  CondNFA r;
  r.start = a.start;
  r.states.push_back(a.start);
  for (const auto& s : a.states)
    if (s != a.start && backward.count(s)) r.states.push_back(s);
  for (const auto& t : a.transitions)
    if (backward.count(t.from) && backward.count(t.to)) r.transitions.insert(t);
  for (const auto& f : a.finals)
    if (backward.count(f)) r.finals.insert(f);
  return r;
}

inline std::string to_dot(const CondNFA& a) {
  auto esc = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::ostringstream os;
  os << "digraph nfa {\n  rankdir=LR;\n  __start [shape=point];\n";
  for (const auto& s : a.states)
    os << "  \"" << esc(s) << "\" [shape=" << (a.is_final(s) ? "doublecircle" : "circle") << "];\n";
  if (!a.start.empty()) os << "  __start -> \"" << esc(a.start) << "\";\n";
  for (const auto& t : a.transitions)
    os << "  \"" << esc(t.from) << "\" -> \"" << esc(t.to) << "\" [label=\"" << esc(to_string(t.label)) << "\"];\n";
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Regular expressions over labels
// ---------------------------------------------------------------------------

struct Regex;
using RegexPtr = std::shared_ptr<const Regex>;

struct Regex {
  enum class Kind { empty_set, empty_word, symbol, seq, alt, star };

  Kind kind = Kind::empty_set;
  CondLabel label;
  std::vector<RegexPtr> parts;
};

inline int compare(const Regex& a, const Regex& b) {
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  if (int c = compare(a.label, b.label)) return c;
  const std::size_t n = std::min(a.parts.size(), b.parts.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(*a.parts[i], *b.parts[i])) return c;
  if (a.parts.size() != b.parts.size()) return a.parts.size() < b.parts.size() ? -1 : 1;
  return 0;
}
inline bool operator==(const Regex& a, const Regex& b) { return compare(a, b) == 0; }

inline bool nullable(const Regex& r) {
  switch (r.kind) {
    case Regex::Kind::empty_set:
    case Regex::Kind::symbol: return false;
    case Regex::Kind::empty_word:
    case Regex::Kind::star: return true;
    case Regex::Kind::seq:
      return std::all_of(r.parts.begin(), r.parts.end(), [](const RegexPtr& p) { return nullable(*p); });
    case Regex::Kind::alt:
      return std::any_of(r.parts.begin(), r.parts.end(), [](const RegexPtr& p) { return nullable(*p); });
  }
  return false;
}

/// True iff every symbol in r is an ε-label, i.e. r never moves along an edge.
inline bool condition_only(const Regex& r) {
  if (r.kind == Regex::Kind::symbol) return r.label.is_epsilon();
  return std::all_of(r.parts.begin(), r.parts.end(), [](const RegexPtr& p) { return condition_only(*p); });
}

// Simplifying constructors. The rules are fixed so that state elimination
// output is reproducible:
//   seq: flatten, ∅ absorbs, ε-word dropped
//   alt: flatten, ∅ dropped, duplicates dropped (sorted), ε-word dropped
//        when another alternative is nullable
//   star: star(∅) = star(ε) = ε, star(star r) = star r, star(ε|r) = star r,
//        and star(r) = ε when r only checks conditions (staying on a node
//        any number of times is the same as staying there once or not at all)
namespace re {

inline RegexPtr make(Regex r) { return std::make_shared<const Regex>(std::move(r)); }

inline RegexPtr empty_set() { return make(Regex{Regex::Kind::empty_set, {}, {}}); }
inline RegexPtr empty_word() { return make(Regex{Regex::Kind::empty_word, {}, {}}); }
inline RegexPtr symbol(CondLabel l) { return make(Regex{Regex::Kind::symbol, std::move(l), {}}); }

inline RegexPtr seq(const std::vector<RegexPtr>& parts) {
  std::vector<RegexPtr> out;
  for (const auto& p : parts) {
    if (p->kind == Regex::Kind::empty_set) return p;
    if (p->kind == Regex::Kind::empty_word) continue;
    if (p->kind == Regex::Kind::seq) out.insert(out.end(), p->parts.begin(), p->parts.end());
    else out.push_back(p);
  }
  if (out.empty()) return empty_word();
  if (out.size() == 1) return out.front();
  return make(Regex{Regex::Kind::seq, {}, std::move(out)});
}

inline RegexPtr alt(const std::vector<RegexPtr>& parts) {
  std::vector<RegexPtr> out;
  for (const auto& p : parts) {
    if (p->kind == Regex::Kind::empty_set) continue;
    if (p->kind == Regex::Kind::alt) out.insert(out.end(), p->parts.begin(), p->parts.end());
    else out.push_back(p);
  }
  auto less = [](const RegexPtr& a, const RegexPtr& b) { return compare(*a, *b) < 0; };
  auto same = [](const RegexPtr& a, const RegexPtr& b) { return compare(*a, *b) == 0; };
  std::sort(out.begin(), out.end(), less);
  out.erase(std::unique(out.begin(), out.end(), same), out.end());
  const bool other_nullable = std::any_of(out.begin(), out.end(), [](const RegexPtr& p) {
    return p->kind != Regex::Kind::empty_word && nullable(*p);
  });
  if (other_nullable)
    out.erase(std::remove_if(out.begin(), out.end(), [](const RegexPtr& p) { return p->kind == Regex::Kind::empty_word; }),
              out.end());
  if (out.empty()) return empty_set();
  if (out.size() == 1) return out.front();
  return make(Regex{Regex::Kind::alt, {}, std::move(out)});
}

inline RegexPtr star(const RegexPtr& r) {
  if (r->kind == Regex::Kind::empty_set || r->kind == Regex::Kind::empty_word) return empty_word();
  if (r->kind == Regex::Kind::star) return r;
  if (condition_only(*r)) return empty_word();
  if (r->kind == Regex::Kind::alt) {
    std::vector<RegexPtr> rest;
    for (const auto& p : r->parts)
      if (p->kind != Regex::Kind::empty_word) rest.push_back(p);
    if (rest.size() != r->parts.size()) return star(alt(rest));
  }
  return make(Regex{Regex::Kind::star, {}, {r}});
}

}  // namespace re

inline std::string to_string(const Regex& r) {
  auto wrap = [](const Regex& p, bool need) { return need ? "(" + to_string(p) + ")" : to_string(p); };
  switch (r.kind) {
    case Regex::Kind::empty_set: return "∅";
    case Regex::Kind::empty_word: return "ε";
    case Regex::Kind::symbol: return to_string(r.label);
    case Regex::Kind::seq: {
      std::string out;
      for (std::size_t i = 0; i < r.parts.size(); ++i) {
        if (i) out += " · ";
        out += wrap(*r.parts[i], r.parts[i]->kind == Regex::Kind::alt);
      }
      return out;
    }
    case Regex::Kind::alt: {
      std::string out;
      for (std::size_t i = 0; i < r.parts.size(); ++i) {
        if (i) out += " | ";
        out += to_string(*r.parts[i]);
      }
      return out;
    }
    case Regex::Kind::star: {
      const auto k = r.parts[0]->kind;
      return wrap(*r.parts[0], k == Regex::Kind::seq || k == Regex::Kind::alt) + "*";
    }
  }
  return {};
}

/// Structural translation; nested queries inside conditions stay as they are.
inline RegexPtr query_to_regex(const PathQuery& q) {
  switch (q.kind) {
    case PathQuery::Kind::tag: return re::symbol(CondLabel::symbol(q.tag));
    case PathQuery::Kind::self: return re::empty_word();
    case PathQuery::Kind::none: return re::empty_set();
    case PathQuery::Kind::concat: {
      std::vector<RegexPtr> parts;
      for (const auto& p : q.parts) parts.push_back(query_to_regex(*p));
      return re::seq(parts);
    }
    case PathQuery::Kind::alt: {
      std::vector<RegexPtr> parts;
      for (const auto& p : q.parts) parts.push_back(query_to_regex(*p));
      return re::alt(parts);
    }
    case PathQuery::Kind::star: return re::star(query_to_regex(q.inner()));
    case PathQuery::Kind::cond:
      return re::seq({query_to_regex(q.inner()), re::symbol(CondLabel::epsilon(q.conditions))});
  }
  return re::empty_set();
}

// ---------------------------------------------------------------------------
// Regex -> NFA: position automaton, then a bisimulation quotient
// ---------------------------------------------------------------------------

namespace detail {

struct Glushkov {
  std::vector<CondLabel> labels;             // position i+1 has labels[i]
  std::map<int, std::set<int>> follow;

  struct Info {
    bool nullable = false;
    std::set<int> first, last;
  };

  Info build(const Regex& r) {
    Info info;
    switch (r.kind) {
      case Regex::Kind::empty_set: return info;
      case Regex::Kind::empty_word: info.nullable = true; return info;
      case Regex::Kind::symbol: {
        labels.push_back(r.label);
        int p = static_cast<int>(labels.size());
        info.first = info.last = {p};
        return info;
      }
      case Regex::Kind::seq: {
        info.nullable = true;
        for (const auto& part : r.parts) {
          Info sub = build(*part);
          for (int l : info.last) follow[l].insert(sub.first.begin(), sub.first.end());
          if (info.nullable) info.first.insert(sub.first.begin(), sub.first.end());
          if (sub.nullable) info.last.insert(sub.last.begin(), sub.last.end());
          else info.last = sub.last;
          info.nullable = info.nullable && sub.nullable;
        }
        return info;
      }
      case Regex::Kind::alt:
        for (const auto& part : r.parts) {
          Info sub = build(*part);
          info.nullable = info.nullable || sub.nullable;
          info.first.insert(sub.first.begin(), sub.first.end());
          info.last.insert(sub.last.begin(), sub.last.end());
        }
        return info;
      case Regex::Kind::star: {
        info = build(*r.parts[0]);
        for (int l : info.last) follow[l].insert(info.first.begin(), info.first.end());
        info.nullable = true;
        return info;
      }
    }
    return info;
  }
};

/// Coarsest forward bisimulation: states are merged when they agree on
/// finality and reach the same blocks under the same labels. Preserves
/// the language. States are renamed q1, q2, ... in breadth-first order.
inline CondNFA quotient(int n, int start, const std::set<int>& finals,
                        const std::vector<std::tuple<int, CondLabel, int>>& edges) {
  std::vector<int> block(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) block[static_cast<std::size_t>(s)] = finals.count(s) ? 1 : 0;
  std::vector<std::vector<std::pair<CondLabel, int>>> out(static_cast<std::size_t>(n));
  for (const auto& [a, l, b] : edges) out[static_cast<std::size_t>(a)].push_back({l, b});
  while (true) {
    using Signature = std::pair<int, std::vector<std::pair<CondLabel, int>>>;
    std::vector<Signature> sigs;
    for (int s = 0; s < n; ++s) {
      std::vector<std::pair<CondLabel, int>> moves;
      for (const auto& [l, t] : out[static_cast<std::size_t>(s)]) moves.push_back({l, block[static_cast<std::size_t>(t)]});
      std::sort(moves.begin(), moves.end());
      moves.erase(std::unique(moves.begin(), moves.end()), moves.end());
      sigs.push_back({block[static_cast<std::size_t>(s)], std::move(moves)});
    }
    std::vector<Signature> sorted = sigs;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> next(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s)
      next[static_cast<std::size_t>(s)] =
          static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), sigs[static_cast<std::size_t>(s)]) - sorted.begin());
    std::set<int> before(block.begin(), block.end()), after(next.begin(), next.end());
    block = std::move(next);
    if (after.size() == before.size()) break;
  }
  // Breadth-first renaming from the start block; successors ordered by
  // label, then by lowest member position.
  std::map<int, int> lowest;
  for (int s = n - 1; s >= 0; --s) lowest[block[static_cast<std::size_t>(s)]] = s;
  std::map<int, std::string> name;
  std::deque<int> queue{block[static_cast<std::size_t>(start)]};
  name[queue.front()] = "q1";
  std::set<std::tuple<int, CondLabel, int>> block_edges;
  for (const auto& [a, l, b] : edges)
    block_edges.insert({block[static_cast<std::size_t>(a)], l, block[static_cast<std::size_t>(b)]});
  CondNFA nfa;
  nfa.start = "q1";
  while (!queue.empty()) {
    int b = queue.front();
    queue.pop_front();
    nfa.states.push_back(name[b]);
    std::vector<std::pair<CondLabel, int>> succ;
    for (const auto& [from, l, to] : block_edges)
      if (from == b) succ.push_back({l, lowest[to]});
    std::sort(succ.begin(), succ.end());
    for (const auto& [l, low] : succ) {
      int tb = block[static_cast<std::size_t>(low)];
      if (!name.count(tb)) {
        name[tb] = "q" + std::to_string(name.size() + 1);
        queue.push_back(tb);
      }
    }
  }
  for (const auto& [a, l, b] : block_edges)
    if (name.count(a)) nfa.transitions.insert({name[a], l, name.at(b)});
  for (int f : finals)
    if (name.count(block[static_cast<std::size_t>(f)])) nfa.finals.insert(name[block[static_cast<std::size_t>(f)]]);
  return nfa;
}

}  // namespace detail

/// Lambda-free NFA for r.
inline CondNFA regex_to_nfa(const Regex& r) {
  detail::Glushkov g;
  auto info = g.build(r);
  const int n = static_cast<int>(g.labels.size()) + 1;
  std::set<int> finals(info.last.begin(), info.last.end());
  if (info.nullable) finals.insert(0);
  std::vector<std::tuple<int, CondLabel, int>> edges;
  for (int p : info.first) edges.emplace_back(0, g.labels[static_cast<std::size_t>(p - 1)], p);
  for (const auto& [p, fs] : g.follow)
    for (int q : fs) edges.emplace_back(p, g.labels[static_cast<std::size_t>(q - 1)], q);
  return detail::quotient(n, 0, finals, edges);
}

inline CondNFA query_to_fsa(const PathQuery& q) { return regex_to_nfa(*query_to_regex(q)); }

// ---------------------------------------------------------------------------
// NFA -> regex by state elimination
// ---------------------------------------------------------------------------

/// Adds a fresh source and sink, then eliminates the original states one at
/// a time, always the one with the smallest in-degree × out-degree (ties:
/// earlier in a.states).
inline RegexPtr nfa_to_regex(const CondNFA& a) {
  if (a.start.empty()) return re::empty_set();
  std::map<std::string, int> index;
  for (const auto& s : a.states) index.emplace(s, static_cast<int>(index.size()));
  if (!index.count(a.start)) index.emplace(a.start, static_cast<int>(index.size()));
  for (const auto& t : a.transitions) {
    index.emplace(t.from, static_cast<int>(index.size()));
    index.emplace(t.to, static_cast<int>(index.size()));
  }
  const int n = static_cast<int>(index.size());
  const int source = n, sink = n + 1;
  std::map<std::pair<int, int>, RegexPtr> edge;
  auto add = [&](int i, int j, const RegexPtr& r) {
    auto [it, fresh] = edge.emplace(std::make_pair(i, j), r);
    if (!fresh) it->second = re::alt({it->second, r});
  };
  add(source, index.at(a.start), re::empty_word());
  for (const auto& f : a.finals) add(index.at(f), sink, re::empty_word());
  for (const auto& t : a.transitions) add(index.at(t.from), index.at(t.to), re::symbol(t.label));

  std::set<int> remaining;
  for (int i = 0; i < n; ++i) remaining.insert(i);
  while (!remaining.empty()) {
    int best = -1;
    long best_cost = 0;
    for (int k : remaining) {
      long in = 0, out = 0;
      for (const auto& [key, r] : edge) {
        if (key.second == k && key.first != k) ++in;
        if (key.first == k && key.second != k) ++out;
      }
      if (best < 0 || in * out < best_cost) {
        best = k;
        best_cost = in * out;
      }
    }
    const int k = best;
    RegexPtr loop = edge.count({k, k}) ? re::star(edge.at({k, k})) : re::empty_word();
    std::vector<std::pair<int, RegexPtr>> preds, succs;
    for (const auto& [key, r] : edge) {
      if (key.second == k && key.first != k) preds.push_back({key.first, r});
      if (key.first == k && key.second != k) succs.push_back({key.second, r});
    }
    for (auto it = edge.begin(); it != edge.end();) {
      if (it->first.first == k || it->first.second == k) it = edge.erase(it);
      else ++it;
    }
    for (const auto& [p, rp] : preds)
      for (const auto& [s, rs] : succs) add(p, s, re::seq({rp, loop, rs}));
    remaining.erase(k);
  }
  auto it = edge.find({source, sink});
  return it == edge.end() ? re::empty_set() : it->second;
}

/// Merges ε-labels back into the query they follow. An ε-label with no
/// preceding factor becomes #self[C]; ∅ becomes #none.
inline PathQueryPtr regex_to_query(const Regex& r) {
  switch (r.kind) {
    case Regex::Kind::empty_set: return pq::none();
    case Regex::Kind::empty_word: return pq::self();
    case Regex::Kind::symbol:
      if (r.label.tag) return pq::tag(*r.label.tag);
      if (r.label.conditions.empty()) return pq::self();
      return pq::cond(pq::self(), r.label.conditions);
    case Regex::Kind::seq: {
      std::vector<PathQueryPtr> parts;
      for (const auto& p : r.parts) parts.push_back(regex_to_query(*p));
      return canonical(pq::concat(parts));
    }
    case Regex::Kind::alt: {
      std::vector<PathQueryPtr> parts;
      for (const auto& p : r.parts) parts.push_back(regex_to_query(*p));
      return canonical(pq::alt(parts));
    }
    case Regex::Kind::star: return canonical(pq::star(regex_to_query(*r.parts[0])));
  }
  return pq::none();
}

// ---------------------------------------------------------------------------
// The product and pruning
// ---------------------------------------------------------------------------

struct PruneOptions {
  /// Also copy attribute assignments of the meta node that the query label
  /// does not mention. Off by default: an instance node need not carry every
  /// attribute of its meta node, so the copied test can reject it.
  bool import_meta_restrictions = false;
};

namespace detail {

class Pruner {
 public:
  explicit Pruner(PruneOptions opts) : opts_(opts) {}

  std::optional<CondLabel> combine(const CondLabel& l1, const CondLabel& l2, const CondNFA& m,
                                   const std::string& target) {
    if (l1.tag != l2.tag) return std::nullopt;
    if (l1.tag) return l1;
    std::vector<PathCondition> out;
    std::map<std::string, std::string> meta_attrs;
    for (const auto& c : l2.conditions)
      if (!c.is_nested()) meta_attrs.emplace(c.attr, c.value);
    std::set<std::string> mentioned;
    for (const auto& c : l1.conditions) {
      if (c.is_nested()) continue;
      auto it = meta_attrs.find(c.attr);
      if (it != meta_attrs.end() && it->second != c.value) return std::nullopt;
      mentioned.insert(c.attr);
      out.push_back(c);
    }
    for (const auto& c : l1.conditions) {
      if (!c.is_nested()) continue;
      PathQueryPtr pruned = prune_nested(c.query, m, target);
      if (!pruned) return std::nullopt;
      out.push_back(PathCondition::nested(pruned));
    }
    if (opts_.import_meta_restrictions)
      for (const auto& [a, v] : meta_attrs)
        if (!mentioned.count(a)) out.push_back(PathCondition::attribute(a, v));
    return CondLabel::epsilon(std::move(out));
  }

  CondNFA product(const CondNFA& qa, const CondNFA& ma) {
    CondNFA p;
    auto qout = qa.outgoing();
    auto mout = ma.outgoing();
    auto name = [](const std::string& a, const std::string& b) { return "(" + a + "," + b + ")"; };
    std::set<std::pair<std::string, std::string>> seen{{qa.start, ma.start}};
    std::deque<std::pair<std::string, std::string>> queue{{qa.start, ma.start}};
    p.start = name(qa.start, ma.start);
    while (!queue.empty()) {
      auto [q, m] = queue.front();
      queue.pop_front();
      const std::string here = name(q, m);
      p.states.push_back(here);
      if (qa.is_final(q) && ma.is_final(m)) p.finals.insert(here);
      for (const Transition* t1 : qout[q])
        for (const Transition* t2 : mout[m]) {
          auto l = combine(t1->label, t2->label, ma, t2->to);
          if (!l) continue;
          p.transitions.insert({here, *l, name(t1->to, t2->to)});
          if (seen.insert({t1->to, t2->to}).second) queue.push_back({t1->to, t2->to});
        }
    }
    return p;
  }

  PathQueryPtr rpq(const CondNFA& a) { return regex_to_query(*nfa_to_regex(trim(a))); }

 private:
  // RPQ(FSA(q) × m rerooted at start), or nullptr for an empty language.
  PathQueryPtr prune_nested(const PathQueryPtr& q, const CondNFA& m, const std::string& start) {
    auto key = std::make_pair(print_path_query(*q), start);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    CondNFA p = product(query_to_fsa(*q), m.rerooted(start));
    PathQueryPtr result = is_empty_language(p) ? nullptr : rpq(p);
    memo_.emplace(key, result);
    return result;
  }

  PruneOptions opts_;
  std::map<std::pair<std::string, std::string>, PathQueryPtr> memo_;
};

}  // namespace detail

/// l1 ∘ l2 with l1 from the query side and l2 from the meta side;
/// target is the meta state l2 leads to. nullopt stands for ⊥.
inline std::optional<CondLabel> combine_labels(const CondLabel& l1, const CondLabel& l2, const CondNFA& m,
                                               const std::string& target, PruneOptions opts = {}) {
  return detail::Pruner(opts).combine(l1, l2, m, target);
}

/// The condition-aware product: reachable pairs only, named "(q,m)".
inline CondNFA product(const CondNFA& qa, const CondNFA& ma, PruneOptions opts = {}) {
  return detail::Pruner(opts).product(qa, ma);
}

/// RPQ: trim, state elimination, back to a canonical query.
inline PathQueryPtr nfa_to_query(const CondNFA& a) { return regex_to_query(*nfa_to_regex(trim(a))); }

/// Rewrites q into a query that is equivalent on every graph the meta graph m
/// describes (strictly, with the roots bound). The result is #none when no
/// such graph can match q.
inline PathQueryPtr prune(const PathQuery& q, const GraphDatabase& m, PruneOptions opts = {}) {
  if (m.node_count() == 0) return pq::none();
  detail::Pruner pruner(opts);
  return pruner.rpq(pruner.product(query_to_fsa(q), graph_to_fsa(m)));
}

inline PathQueryPtr prune(const PathQueryPtr& q, const GraphDatabase& m, PruneOptions opts = {}) {
  return prune(*q, m, opts);
}

}  // namespace metaq
