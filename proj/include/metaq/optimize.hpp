#pragma once

// Optimizing algebra queries with meta-level data. Each maximal described
// subquery Qd is checked against its description query M(Qd):
//   - M(Qd) empty on the meta instance: Qd is replaced by the empty query;
//   - instance mode: Qd becomes Qd ⋉μ (materialized M(Qd));
//   - constraint mode: the merged form is chased, and every meta-level
//     equality the constraints imply is pushed onto its class scan as σ'.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "metaq/algebra.hpp"
#include "metaq/chase.hpp"

namespace metaq {

enum class OptimizeMode { instance, constraint };

struct OptimizeOptions {
  OptimizeMode mode = OptimizeMode::instance;
  std::vector<ImplicationConstraint> constraints;
  /// Identifies the meta instance; restrictions derived from it are only
  /// valid for instances described by it.
  std::string meta_tag = "meta";
};

struct Verdict {
  std::string position;                  // "/" or "/0/1": child indices from the root
  std::string kind;                      // unsatisfiable | semijoin | chased | skipped
  std::string scope;                     // what the verdict is sound for
  std::vector<std::string> restrictions; // meta-level facts behind the verdict
  std::string detail;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline std::string to_string(const Verdict& v) {
  std::string out = v.position + " " + v.kind + " [" + v.scope + "]";
  if (!v.detail.empty()) out += " " + v.detail;
  for (const auto& r : v.restrictions) out += "\n  " + r;
  return out;
}

struct OptimizeResult {
  QueryPtr query;
  std::vector<Verdict> verdicts;
};

inline std::string meta_instance_scope(const std::string& tag) { return "meta instance '" + tag + "'"; }
inline const char* constraint_scope() { return "all instances satisfying the constraints"; }

namespace detail {

class MetaOptimizer {
 public:
  MetaOptimizer(const Schema& s, const Instance& meta, const DescriptionLayer& layer, const OptimizeOptions& opts)
      : s_(s), meta_(meta), layer_(layer), opts_(opts) {}

  QueryPtr rewrite(const QueryPtr& node, const std::string& position) {
    const Query& q = *node;
    if (q.kind == Query::Kind::empty) {
      // left behind by an earlier pass
      if (q.materialized) verdicts.push_back({position, "unsatisfiable", q.materialized->source, {}, q.name});
      return node;
    }
    if (q.kind == Query::Kind::semijoin_mu && q.materialized &&
        q.materialized->source == meta_instance_scope(opts_.meta_tag) && opts_.mode == OptimizeMode::instance &&
        typecheck_query(q.child(0), s_, layer_).described) {
      verdicts.push_back(semijoin_verdict(position, q.materialized->rows.size()));
      return node;
    }
    if (typecheck_query(q, s_, layer_).described) return optimize_described(node, position);
    std::vector<QueryPtr> kids;
    bool changed = false;
    for (std::size_t i = 0; i < q.children.size(); ++i) {
      kids.push_back(rewrite(q.children[i], child_position(position, i)));
      changed = changed || kids.back() != q.children[i];
    }
    return changed ? q::with_children(q, std::move(kids)) : node;
  }

  std::vector<Verdict> verdicts;

 private:
  static std::string child_position(const std::string& p, std::size_t i) {
    return (p == "/" ? "" : p) + "/" + std::to_string(i);
  }

  Verdict semijoin_verdict(const std::string& position, std::size_t rows) const {
    return {position, "semijoin", meta_instance_scope(opts_.meta_tag), {},
            "M(Q) has " + std::to_string(rows) + " tuple(s)"};
  }

  QueryPtr make_empty(const Query& q, const std::string& scope, const std::string& detail) {
    Query n;
    n.kind = Query::Kind::empty;
    n.row_type = typecheck_query(q, s_, layer_).row_type;
    n.name = detail;
    n.materialized = MaterializedMeta{scope, {}};
    return q::make(std::move(n));
  }

  QueryPtr optimize_described(const QueryPtr& node, const std::string& position) {
    QueryPtr m = m_rewrite(*node, s_, layer_);
    TupleSet meta_rows = eval_algebra(*m, s_, meta_, layer_);
    if (meta_rows.empty()) {
      const std::string scope = meta_instance_scope(opts_.meta_tag);
      const std::string detail = "M(Q) is empty";
      verdicts.push_back({position, "unsatisfiable", scope, {}, detail});
      return make_empty(*node, scope, detail);
    }
    if (opts_.mode == OptimizeMode::instance) {
      verdicts.push_back(semijoin_verdict(position, meta_rows.size()));
      return q::semijoin_mu(node, m, MaterializedMeta{meta_instance_scope(opts_.meta_tag), meta_rows.rows});
    }
    return chase_described(node, position);
  }

  QueryPtr chase_described(const QueryPtr& node, const std::string& position) {
    ConjunctiveQuery cq;
    try {
      cq = to_conjunctive(*node, s_, layer_);
    } catch (const FragmentError& e) {
      verdicts.push_back({position, "skipped", constraint_scope(), {}, e.what()});
      return node;
    }
    ChaseResult chased = chase_apply(cq, opts_.constraints);
    if (auto conflict = is_unsatisfiable(chased.query)) {
      const std::string detail = "conflict " + to_string(conflict->first) + " vs " + to_string(conflict->second);
      verdicts.push_back({position, "unsatisfiable", constraint_scope(), {}, detail});
      return make_empty(*node, constraint_scope(), detail);
    }
    Verdict v{position, "chased", constraint_scope(), {}, {}};
    for (const auto& a : chased.query.body)
      if (a.kind == Atom::Kind::attribute_equals && a.vars[0].back() == '\'') v.restrictions.push_back(to_string(a));
    std::sort(v.restrictions.begin(), v.restrictions.end());
    // X1', X2', ... belong to the class scans in left-to-right order.
    std::map<int, std::vector<Condition>> pushes;
    for (const auto& f : chased.derived) {
      if (f.variable.size() < 3 || f.variable.front() != 'X' || f.variable.back() != '\'') continue;
      int leaf = std::stoi(f.variable.substr(1, f.variable.size() - 2));
      pushes[leaf].push_back(Condition::equals(1, split_path(f.attribute), f.value));
    }
    verdicts.push_back(std::move(v));
    if (pushes.empty()) return node;
    int counter = 0;
    return push_restrictions(node, pushes, counter);
  }

  static QueryPtr push_restrictions(const QueryPtr& node, const std::map<int, std::vector<Condition>>& pushes,
                                    int& counter) {
    if (node->kind == Query::Kind::scan) {
      auto it = pushes.find(++counter);
      if (it == pushes.end()) return node;
      return q::select_meta(Condition::conj(it->second), node);
    }
    std::vector<QueryPtr> kids;
    for (const auto& c : node->children) kids.push_back(push_restrictions(c, pushes, counter));
    return q::with_children(*node, std::move(kids));
  }

  const Schema& s_;
  const Instance& meta_;
  const DescriptionLayer& layer_;
  const OptimizeOptions& opts_;
};

}  // namespace detail

/// Rewrites every maximal described subquery of q using the meta instance
/// (and, in constraint mode, the constraints). Each verdict records the
/// scope it is sound for: restrictions read off the meta instance hold only
/// for instances that instance describes.
inline OptimizeResult optimize_with_meta(const QueryPtr& q, const Schema& s, const Instance& meta_instance,
                                         const DescriptionLayer& layer, const OptimizeOptions& opts = {}) {
  typecheck_query(*q, s, layer);
  detail::MetaOptimizer opt(s, meta_instance, layer, opts);
  QueryPtr out = opt.rewrite(q, "/");
  return {out, std::move(opt.verdicts)};
}

}  // namespace metaq
