#include <gtest/gtest.h>

#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace metaq;

// Same invariants as the acceptance run, with other seeds and shapes.

namespace {

bool subset(const TupleSet& a, const TupleSet& b) {
  for (const auto& r : a.rows)
    if (!b.contains(r)) return false;
  return true;
}

// Equality-headed constraints over the meta classes of the layered schema.
ImplicationConstraint random_constraint(gen::Rng& rng, int id) {
  const std::vector<std::string> names{"x", "y", "z"}, cats{"c1", "c2"};
  const std::string n = gen::pick(rng, names), c = gen::pick(rng, cats), c2 = gen::pick(rng, cats);
  std::string text = "g" + std::to_string(id) + ": ";
  switch (gen::uniform(rng, 0, 4)) {
    case 0: text += "(X.cat = \"" + c + "\") :- A'(X), r'(X, Y), B'(Y), (Y.name = \"" + n + "\") ."; break;
    case 1: text += "(X.name = \"" + n + "\") :- B'(X), t'(X, Y), (Y.cat = \"" + c + "\") ."; break;
    case 2: text += "(X.cat = \"" + c + "\") :- A'(X), s'(X, Y), (Y.cat = \"" + c2 + "\") ."; break;
    case 3: text += "(Y.name = \"" + n + "\") :- A'(X), r'(X, Y), (X.cat = \"" + c + "\") ."; break;
    default: text += "(X.cat = \"" + c + "\") :- A'(X), (X.name = \"" + n + "\") ."; break;
  }
  return io::load_constraints(text).front();
}

// A few random constraints, keeping only those the instance satisfies.
std::vector<ImplicationConstraint> holding_constraints(gen::Rng& rng, const io::LayeredDatabase& db) {
  std::vector<ImplicationConstraint> out;
  for (int i = 0, n = gen::uniform(rng, 1, 6); i < n; ++i) {
    ImplicationConstraint ic = random_constraint(rng, i);
    if (constraint_holds(ic, db.schema, db.instance, db.layer)) out.push_back(std::move(ic));
  }
  return out;
}

// Copies every meta attribute down to the instance nodes bound to it; only
// then may pruning import meta restrictions.
GraphDatabase with_meta_attributes(const gen::BoundPair& bp) {
  GraphDatabase g;
  for (const auto& n : bp.instance.node_ids()) {
    NodeLabel l = bp.instance.label(n);
    for (const auto& a : bp.meta.label(bp.mu.at(n)).attrs) l.attrs.insert(a);
    g.add_node(n, std::move(l));
  }
  for (const auto& n : bp.instance.node_ids())
    for (const auto& s : bp.instance.successors(n)) g.add_edge(n, s);
  return g;
}

gen::DqShape conjunctive_shape() {
  gen::DqShape shape;
  shape.set_operations = false;
  shape.disjunctive = false;
  return shape;
}

}  // namespace

TEST(Properties, PruningPreservesAnswersOnDescribedGraphs) {
  gen::Rng rng(9001);
  gen::GraphVocabulary voc;
  voc.tags.push_back("d");
  int nonempty = 0;
  for (int trial = 0; trial < 400; ++trial) {
    gen::BoundPair bp = gen::random_bound_pair(rng, gen::uniform(rng, 1, 8), gen::uniform(rng, 1, 30), voc,
                                               gen::chance(rng, 0.5));
    PathQueryPtr q = gen::random_path_query(rng, voc, {gen::uniform(rng, 1, 5), 2, true});
    auto want = oracle::eval_path(*q, bp.instance);
    nonempty += !want.empty();
    ASSERT_EQ(eval_path_query(prune(q, bp.meta), bp.instance), want) << print_path_query(q);
  }
  EXPECT_GT(nonempty, 100);
}

TEST(Properties, ImportedRestrictionsPreserveAnswers) {
  gen::Rng rng(9002);
  gen::GraphVocabulary voc;
  PruneOptions opts;
  opts.import_meta_restrictions = true;
  for (int trial = 0; trial < 300; ++trial) {
    gen::BoundPair bp = gen::random_bound_pair(rng, gen::uniform(rng, 1, 8), gen::uniform(rng, 1, 30), voc, true);
    GraphDatabase inst = with_meta_attributes(bp);
    ASSERT_TRUE(check_description_binding(inst, bp.meta, bp.mu, true).empty());
    PathQueryPtr q = gen::random_path_query(rng, voc, {gen::uniform(rng, 1, 4), 2, true});
    ASSERT_EQ(eval_path_query(prune(q, bp.meta, opts), inst), oracle::eval_path(*q, inst)) << print_path_query(q);
  }
}

TEST(Properties, AcyclicMetaGraphsRemoveStars) {
  gen::Rng rng(9003);
  gen::GraphVocabulary voc;
  for (int trial = 0; trial < 300; ++trial) {
    GraphDatabase meta = gen::random_graph(rng, gen::uniform(rng, 1, 12), voc, true, 0.3);
    PathQueryPtr q = gen::random_path_query(rng, voc, {gen::uniform(rng, 2, 5), 2, true});
    PathQueryPtr p = prune(q, meta);
    ASSERT_FALSE(contains_star(*p)) << print_path_query(q) << " => " << print_path_query(p);
  }
}

TEST(Properties, ProductIntersectsLanguages) {
  gen::Rng rng(9004);
  gen::GraphVocabulary voc;
  const auto words = oracle::all_words({"a", "b", "c", "z"}, 5);
  for (int trial = 0; trial < 100; ++trial) {
    GraphDatabase g = gen::random_graph(rng, gen::uniform(rng, 1, 10), voc, false, 0.25);
    PathQueryPtr q = gen::random_path_query(rng, voc, {gen::uniform(rng, 1, 5), 0, false});
    CondNFA p = product(query_to_fsa(*q), graph_to_fsa(g));
    for (const auto& w : words)
      ASSERT_EQ(oracle::nfa_accepts(p, w), oracle::query_accepts(*q, w) && oracle::graph_accepts(g, w))
          << print_path_query(q);
  }
}

TEST(Properties, MuOfQueryIsContainedInDescriptionQuery) {
  gen::Rng rng(9005);
  gen::DqShape shape;
  shape.depth = 5;
  for (int trial = 0; trial < 300; ++trial) {
    io::LayeredDatabase db = gen::random_layered_database(rng);
    QueryPtr q = gen::random_dq(rng, db.schema, db.layer, shape);
    TupleSet lifted = mu_lift(eval_algebra(*q, db.schema, db.instance, db.layer), db.schema, db.layer);
    TupleSet meta = eval_algebra(*m_rewrite(*q, db.schema, db.layer), db.schema, db.instance, db.layer);
    ASSERT_TRUE(subset(lifted, meta)) << io::print_algebra_query(q);
  }
}

TEST(Properties, SemijoinWithDescriptionQueryChangesNothing) {
  gen::Rng rng(9006);
  for (int trial = 0; trial < 200; ++trial) {
    io::LayeredDatabase db = gen::random_layered_database(rng);
    QueryPtr q = gen::random_dq(rng, db.schema, db.layer, {});
    TupleSet result = eval_algebra(*q, db.schema, db.instance, db.layer);
    TupleSet meta = eval_algebra(*m_rewrite(*q, db.schema, db.layer), db.schema, db.instance, db.layer);
    ASSERT_EQ(semijoin_mu(result, meta, db.schema, db.layer).rows, result.rows) << io::print_algebra_query(q);
  }
}

TEST(Properties, EmptyDescriptionQueryMeansEmptyQuery) {
  gen::Rng rng(9007);
  gen::LayeredShape sparse;
  sparse.meta_edge = 0.2;
  int cases = 0;
  for (int attempt = 0; attempt < 20000 && cases < 150; ++attempt) {
    io::LayeredDatabase db = gen::random_layered_database(rng, sparse);
    QueryPtr q = gen::random_dq(rng, db.schema, db.layer, {});
    if (!eval_algebra(*m_rewrite(*q, db.schema, db.layer), db.schema, db.instance, db.layer).empty()) continue;
    ++cases;
    ASSERT_TRUE(eval_algebra(*q, db.schema, db.instance, db.layer).empty()) << io::print_algebra_query(q);
  }
  EXPECT_GE(cases, 100);
}

TEST(Properties, EvaluatorsAgree) {
  gen::Rng rng(9008);
  gen::DqShape shape = conjunctive_shape();
  shape.plain_selection = true;
  gen::LayeredShape small;
  small.max_oids = 14;
  ConjunctiveOptions plain;
  plain.merge_meta = false;
  for (int trial = 0; trial < 200; ++trial) {
    io::LayeredDatabase db = gen::random_layered_database(rng, small);
    QueryPtr q = gen::random_dq(rng, db.schema, db.layer, shape);
    TupleSet a = eval_algebra(*q, db.schema, db.instance, db.layer);
    ConjunctiveQuery cq = to_conjunctive(*q, db.schema, db.layer, plain);
    ASSERT_EQ(eval_conjunctive(cq, db.schema, db.instance, db.layer).rows, a.rows) << io::print_algebra_query(q);
    if (cq.variables().size() <= 5) {
      ASSERT_EQ(oracle::conjunctive(cq, db.schema, db.instance, db.layer), a.rows) << io::print_algebra_query(q);
    }
  }
}

TEST(Properties, ChaseIsSoundWhenConstraintsHold) {
  gen::Rng rng(9009);
  int derived = 0, unsat = 0;
  for (int trial = 0; trial < 400; ++trial) {
    io::LayeredDatabase db = gen::random_layered_database(rng);
    auto ics = holding_constraints(rng, db);
    QueryPtr q = gen::random_dq(rng, db.schema, db.layer, conjunctive_shape());
    ConjunctiveQuery cq = to_conjunctive(*q, db.schema, db.layer);
    TupleSet want = eval_algebra(*q, db.schema, db.instance, db.layer);
    ChaseResult r = chase_apply(cq, ics);
    derived += !r.derived.empty();
    if (is_unsatisfiable(r.query)) {
      ++unsat;
      ASSERT_TRUE(want.empty()) << io::print_algebra_query(q);
      continue;
    }
    ASSERT_EQ(eval_conjunctive(r.query, db.schema, db.instance, db.layer).rows, want.rows) << io::print_algebra_query(q);
    ConjunctiveQuery reduced = eliminate_redundancy(r.query, db.layer);
    ASSERT_EQ(eval_conjunctive(reduced, db.schema, db.instance, db.layer).rows, want.rows) << io::print_algebra_query(q);
  }
  EXPECT_GT(derived, 15);
  EXPECT_GT(unsat, 0);
}

TEST(Properties, ConstraintModeOptimizationPreservesAnswers) {
  gen::Rng rng(9010);
  for (int trial = 0; trial < 250; ++trial) {
    io::LayeredDatabase db = gen::random_layered_database(rng);
    OptimizeOptions opts;
    opts.mode = OptimizeMode::constraint;
    opts.constraints = holding_constraints(rng, db);
    gen::DqShape shape;
    shape.plain_selection = true;
    QueryPtr q = gen::random_dq(rng, db.schema, db.layer, shape);
    OptimizeResult r = optimize_with_meta(q, db.schema, db.instance, db.layer, opts);
    ASSERT_EQ(eval_algebra(*r.query, db.schema, db.instance, db.layer).rows,
              eval_algebra(*q, db.schema, db.instance, db.layer).rows)
        << io::print_algebra_query(q) << "\n=> " << io::print_algebra_query(r.query);
  }
}

TEST(Properties, LoweredConstraintsHoldWhenTheirMetaFormHolds) {
  gen::Rng rng(9011);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    io::LayeredDatabase db = gen::random_layered_database(rng);
    for (const auto& ic : holding_constraints(rng, db)) {
      ImplicationConstraint low = lower_constraint(ic, db.schema, db.layer);
      ++checked;
      EXPECT_TRUE(constraint_holds(low, db.schema, db.instance, db.layer)) << to_string(ic) << " lowered to " << to_string(low);
    }
  }
  EXPECT_GT(checked, 100);
}
