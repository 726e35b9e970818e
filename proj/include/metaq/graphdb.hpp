#pragma once

// Node-labeled rooted graph databases and description bindings between an
// instance graph and its meta-level graph.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "metaq/error.hpp"
#include "metaq/report.hpp"

namespace metaq {

using AttributeSet = std::set<std::pair<std::string, std::string>>;

struct NodeLabel {
  std::string tag;
  AttributeSet attrs;

  /// Value of attribute a, or nullptr.
  const std::string* attribute(const std::string& a) const {
    for (auto it = attrs.lower_bound({a, std::string()}); it != attrs.end() && it->first == a; ++it)
      return &it->second;
    return nullptr;
  }

  bool has(const std::string& a, const std::string& v) const { return attrs.count({a, v}) > 0; }

  friend bool operator==(const NodeLabel&, const NodeLabel&) = default;
};

class GraphDatabase {
 public:
  GraphDatabase() = default;

  void add_node(const std::string& id, NodeLabel label) {
    if (!labels_.emplace(id, std::move(label)).second) throw Error("duplicate node id '" + id + "'");
    succ_[id];
    pred_[id];
    if (root_.empty()) root_ = id;
  }

  void add_edge(const std::string& from, const std::string& to) {
    require(from);
    require(to);
    if (edges_.insert({from, to}).second) {
      succ_[from].insert(to);
      pred_[to].insert(from);
    }
  }

  void set_root(const std::string& id) {
    require(id);
    root_ = id;
  }

  const std::string& root() const noexcept { return root_; }
  bool has_node(const std::string& id) const { return labels_.count(id) > 0; }
  std::size_t node_count() const noexcept { return labels_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const NodeLabel& label(const std::string& id) const {
    auto it = labels_.find(id);
    if (it == labels_.end()) throw Error("unknown node '" + id + "'");
    return it->second;
  }
  const std::string& tag(const std::string& id) const { return label(id).tag; }

  const std::map<std::string, NodeLabel>& labels() const noexcept { return labels_; }
  const std::set<std::pair<std::string, std::string>>& edges() const noexcept { return edges_; }
  bool has_edge(const std::string& a, const std::string& b) const { return edges_.count({a, b}) > 0; }

  const std::set<std::string>& successors(const std::string& id) const {
    auto it = succ_.find(id);
    if (it == succ_.end()) throw Error("unknown node '" + id + "'");
    return it->second;
  }
  const std::set<std::string>& predecessors(const std::string& id) const {
    auto it = pred_.find(id);
    if (it == pred_.end()) throw Error("unknown node '" + id + "'");
    return it->second;
  }

  std::vector<std::string> node_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, l] : labels_) out.push_back(id);
    return out;
  }

  /// Optional external names (e.g. XML ids), used when reading bindings.
  void set_alias(const std::string& alias, const std::string& id) {
    require(id);
    aliases_[alias] = id;
  }
  const std::map<std::string, std::string>& aliases() const noexcept { return aliases_; }

  /// Node for an alias or node id; aliases win.
  std::optional<std::string> resolve(const std::string& name) const {
    auto it = aliases_.find(name);
    if (it != aliases_.end()) return it->second;
    if (has_node(name)) return name;
    return std::nullopt;
  }

  friend bool operator==(const GraphDatabase& a, const GraphDatabase& b) {
    return a.root_ == b.root_ && a.labels_ == b.labels_ && a.edges_ == b.edges_;
  }

 private:
  void require(const std::string& id) const {
    if (!has_node(id)) throw Error("unknown node '" + id + "'");
  }

  std::string root_;
  std::map<std::string, NodeLabel> labels_;
  std::set<std::pair<std::string, std::string>> edges_;
  std::map<std::string, std::set<std::string>> succ_, pred_;
  std::map<std::string, std::string> aliases_;
};

/// Root must be the only node of in-degree 0; every node needs a tag and
/// distinct attribute names.
inline Report validate_graph(const GraphDatabase& g) {
  Report report;
  if (g.node_count() == 0) {
    report.add("graph.empty", "graph has no nodes");
    return report;
  }
  std::vector<std::string> sources;
  for (const auto& [id, label] : g.labels()) {
    if (g.predecessors(id).empty()) sources.push_back(id);
    if (label.tag.empty()) report.add("graph.unlabeled", "node " + id + " has no tag");
    std::string prev;
    bool first = true;
    for (const auto& [a, v] : label.attrs) {
      if (!first && a == prev) report.add("graph.duplicate-attribute", "node " + id + " assigns '" + a + "' twice");
      prev = a;
      first = false;
    }
  }
  if (!g.predecessors(g.root()).empty())
    report.add("graph.root", "root " + g.root() + " has incoming edges");
  for (const auto& s : sources)
    if (s != g.root()) report.add("graph.root", "node " + s + " has in-degree 0 but is not the root");
  return report;
}

/// mu: instance node -> meta node.
using DescriptionBinding = std::map<std::string, std::string>;

/// Checks that m is a meta-level database for i under mu. Strict mode also
/// requires agreeing values for attributes both sides assign, and
/// mu(root_i) = root_m.
inline Report check_description_binding(const GraphDatabase& i, const GraphDatabase& m, const DescriptionBinding& mu,
                                        bool strict) {
  Report report;
  auto image = [&](const std::string& v) -> const std::string* {
    auto it = mu.find(v);
    return it == mu.end() || !m.has_node(it->second) ? nullptr : &it->second;
  };
  for (const auto& [v, target] : mu) {
    if (!i.has_node(v)) report.add("binding.unknown-node", "binding maps " + v + ", which is not an instance node");
    else if (!m.has_node(target)) report.add("binding.unknown-node", v + " is bound to " + target + ", which is not a meta node");
  }
  for (const auto& [v, label] : i.labels()) {
    if (!mu.count(v)) {
      report.add("binding.partial", "instance node " + v + " is unbound");
      continue;
    }
    const std::string* mv = image(v);
    if (!mv) continue;
    const NodeLabel& ml = m.label(*mv);
    if (label.tag != ml.tag)
      report.add("binding.tag", v + " <" + label.tag + "> is bound to " + *mv + " <" + ml.tag + ">");
    if (strict) {
      for (const auto& [a, s] : label.attrs) {
        const std::string* ms = ml.attribute(a);
        if (ms && *ms != s)
          report.add("binding.attribute", v + " has " + a + "=\"" + s + "\" but " + *mv + " has " + a + "=\"" + *ms + "\"");
      }
    }
  }
  for (const auto& [a, b] : i.edges()) {
    const std::string* ma = image(a);
    const std::string* mb = image(b);
    if (ma && mb && !m.has_edge(*ma, *mb))
      report.add("binding.edge", "edge " + a + "->" + b + " has no image " + *ma + "->" + *mb);
  }
  if (strict && i.node_count() > 0 && m.node_count() > 0) {
    const std::string* r = image(i.root());
    if (r && *r != m.root())
      report.add("binding.root", "instance root " + i.root() + " is bound to " + *r + ", not to the meta root " + m.root());
  }
  return report;
}

/// mu2 after mu1.
inline DescriptionBinding compose_bindings(const DescriptionBinding& mu1, const DescriptionBinding& mu2) {
  DescriptionBinding out;
  for (const auto& [v, mid] : mu1) {
    auto it = mu2.find(mid);
    if (it != mu2.end()) out[v] = it->second;
  }
  return out;
}

}  // namespace metaq
