#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace metaq;

namespace {

const char* engine = R"(part*[prop[name="engine_id"]])";

std::string pruned(const char* q, const GraphDatabase& m, PruneOptions opts = {}) {
  return print_path_query(prune(parse_path_query(q), m, opts));
}

PathCondition attr(const char* a, const char* v) { return PathCondition::attribute(a, v); }

}  // namespace

TEST(Regex, FromQueryKeepsNestedQueriesInLabels) {
  RegexPtr r = query_to_regex(*parse_path_query(engine));
  EXPECT_EQ(to_string(*r), R"(part* · ε[prop[name="engine_id"]])");
  EXPECT_FALSE(nullable(*r));
  EXPECT_TRUE(nullable(*query_to_regex(*parse_path_query("a*|b"))));
  EXPECT_EQ(to_string(*query_to_regex(*parse_path_query("(a.b|c)*"))), "(c | a · b)*");
  EXPECT_EQ(to_string(*query_to_regex(*parse_path_query("#none"))), "∅");
  EXPECT_EQ(to_string(*query_to_regex(*parse_path_query("#self"))), "ε");
}

TEST(Regex, SmartConstructorsSimplify) {
  RegexPtr a = re::symbol(CondLabel::symbol("a"));
  EXPECT_EQ(to_string(*re::seq({a, re::empty_word(), a})), "a · a");
  EXPECT_EQ(re::seq({a, re::empty_set()})->kind, Regex::Kind::empty_set);
  EXPECT_EQ(to_string(*re::alt({a, re::empty_set(), a})), "a");
  EXPECT_EQ(to_string(*re::star(re::star(a))), "a*");
  EXPECT_EQ(re::star(re::empty_set())->kind, Regex::Kind::empty_word);
}

TEST(Labels, OrderingAndPrinting) {
  CondLabel e = CondLabel::epsilon({attr("b", "2"), attr("a", "1"), attr("b", "2")});
  EXPECT_EQ(to_string(e), R"(ε[a="1", b="2"])");
  EXPECT_TRUE(e.is_epsilon());
  EXPECT_LT(e, CondLabel::symbol("a"));
  EXPECT_EQ(to_string(CondLabel::symbol("part")), "part");
}

TEST(Automaton, EngineQueryHasTwoStates) {
  CondNFA a = query_to_fsa(*parse_path_query(engine));
  ASSERT_EQ(a.states.size(), 2u);
  ASSERT_EQ(a.finals.size(), 1u);
  const std::string q1 = a.start, q2 = *a.finals.begin();
  std::set<Transition> want{
      {q1, CondLabel::symbol("part"), q1},
      {q1, CondLabel::epsilon({PathCondition::nested(parse_path_query(R"(prop[name="engine_id"])"))}), q2},
  };
  EXPECT_EQ(a.transitions, want);
}

TEST(Automaton, GraphAutomaton) {
  GraphDatabase m = fx::graph("meta_car.xml");
  CondNFA a = graph_to_fsa(m);
  EXPECT_EQ(a.start, "o0");
  EXPECT_EQ(a.states.size(), 8u);
  EXPECT_EQ(a.finals.size(), 8u);
  // 7 edges plus one ε-loop per node
  EXPECT_EQ(a.transitions.size(), 15u);
  EXPECT_TRUE(a.transitions.count({"o3", CondLabel::symbol("prop"), "o5"}));
  EXPECT_TRUE(a.transitions.count({"o4", CondLabel::epsilon({attr("category", "car_body")}), "o4"}));
}

TEST(Automaton, TrimAndEmptiness) {
  CondNFA a;
  a.start = "s";
  a.states = {"s", "dead", "f", "unreachable"};
  a.finals = {"f", "unreachable"};
  a.transitions = {{"s", CondLabel::symbol("a"), "f"}, {"s", CondLabel::symbol("b"), "dead"},
                   {"unreachable", CondLabel::symbol("c"), "f"}};
  CondNFA t = trim(a);
  EXPECT_EQ(t.states, (std::vector<std::string>{"s", "f"}));
  EXPECT_EQ(t.transitions.size(), 1u);
  EXPECT_FALSE(is_empty_language(a));
  a.finals = {"unreachable"};
  EXPECT_TRUE(is_empty_language(a));
  EXPECT_TRUE(trim(a).transitions.empty());
}

TEST(Automaton, DotOutput) {
  std::string dot = to_dot(query_to_fsa(*parse_path_query("a.b")));
  EXPECT_EQ(dot.rfind("digraph nfa {", 0), 0u);
  EXPECT_NE(dot.find("doublecircle"), std::string::npos);
  EXPECT_NE(dot.find("[label=\"a\"]"), std::string::npos);
}

TEST(Automaton, GlushkovAcceptsTheQueryLanguage) {
  gen::Rng rng(21);
  gen::GraphVocabulary voc;
  const auto words = oracle::all_words({"a", "b", "c", "z"}, 5);
  for (int trial = 0; trial < 150; ++trial) {
    PathQueryPtr q = gen::random_path_query(rng, voc, {gen::uniform(rng, 1, 5), 0, false});
    CondNFA a = query_to_fsa(*q);
    for (const auto& w : words) ASSERT_EQ(oracle::nfa_accepts(a, w), oracle::query_accepts(*q, w)) << print_path_query(q);
  }
}

TEST(Automaton, StateEliminationRoundTrip) {
  gen::Rng rng(22);
  gen::GraphVocabulary voc;
  const auto words = oracle::all_words({"a", "b", "c", "z"}, 5);
  for (int trial = 0; trial < 150; ++trial) {
    PathQueryPtr q = gen::random_path_query(rng, voc, {gen::uniform(rng, 1, 5), 0, false});
    PathQueryPtr back = nfa_to_query(query_to_fsa(*q));
    for (const auto& w : words)
      ASSERT_EQ(oracle::query_accepts(*back, w), oracle::query_accepts(*q, w))
          << print_path_query(q) << " came back as " << print_path_query(back);
  }
}

TEST(Combine, ExampleLabels) {
  GraphDatabase m = fx::graph("meta_car.xml");
  CondNFA ma = graph_to_fsa(m);
  PathCondition x = PathCondition::nested(parse_path_query(R"(prop[name="engine_id"])"));
  CondLabel ex = CondLabel::epsilon({x});
  auto loop = [&](const std::string& n) {
    std::vector<PathCondition> cs;
    for (const auto& [a, v] : m.label(n).attrs) cs.push_back(PathCondition::attribute(a, v));
    return CondLabel::epsilon(cs);
  };
  // the bottom-most transition of the product: the nested query survives at o3
  auto at_engine = combine_labels(ex, loop("o3"), ma, "o3");
  ASSERT_TRUE(at_engine.has_value());
  EXPECT_EQ(*at_engine, ex);
  EXPECT_FALSE(combine_labels(ex, loop("o4"), ma, "o4").has_value());
  EXPECT_FALSE(combine_labels(ex, loop("o0"), ma, "o0").has_value());

  // tags must match; a tag label passes through unchanged
  EXPECT_FALSE(combine_labels(CondLabel::symbol("part"), CondLabel::symbol("prop"), ma, "o5").has_value());
  EXPECT_EQ(combine_labels(CondLabel::symbol("part"), CondLabel::symbol("part"), ma, "o1"), CondLabel::symbol("part"));

  // attributes: a clash is ⊥, a missing one is kept as an instance-level test
  CondLabel car = CondLabel::epsilon({attr("category", "car")});
  EXPECT_FALSE(combine_labels(car, loop("o4"), ma, "o4").has_value());
  EXPECT_EQ(combine_labels(car, loop("o1"), ma, "o1"), car);
  EXPECT_EQ(combine_labels(car, loop("o2"), ma, "o2"), car);
}

TEST(Combine, ImportingMetaRestrictions) {
  GraphDatabase m = fx::graph("meta_car.xml");
  CondNFA ma = graph_to_fsa(m);
  PruneOptions opts;
  opts.import_meta_restrictions = true;
  auto l = combine_labels(CondLabel::epsilon({}), CondLabel::epsilon({attr("name", "color")}), ma, "o6", opts);
  ASSERT_TRUE(l.has_value());
  EXPECT_EQ(*l, CondLabel::epsilon({attr("name", "color")}));
}

TEST(Prune, CarMetaGraph) {
  GraphDatabase m = fx::graph("meta_car.xml");
  EXPECT_EQ(pruned(engine, m), R"(part.part[prop[name="engine_id"]])");
  EXPECT_EQ(pruned("part*.prop", m), "part.part.prop");
  EXPECT_EQ(pruned("part.part|part.prop", m), "part.part");
  EXPECT_EQ(pruned("part.part[prop]", m), "part.part[prop]");
  EXPECT_EQ(pruned("prop", m), "#none");
  EXPECT_EQ(pruned("part*", m), "part.(part|#self)|#self");
  // the root and the category-less parts may still carry the attribute
  EXPECT_EQ(pruned(R"(part*[category="car_body"])", m), R"(part.part[category="car_body"]|#self[category="car_body"])");
  EXPECT_EQ(pruned(R"(part[category="car_body"])", m), "#none");
}

TEST(Prune, EmptyMetaGraphGivesNone) {
  EXPECT_EQ(pruned("a", GraphDatabase{}), "#none");
}

TEST(Prune, ImportedRestrictionsStayCorrectOnTheCarInstance) {
  GraphDatabase m = fx::graph("meta_car.xml");
  GraphDatabase i = fx::graph("instance_car.xml");
  PruneOptions opts;
  opts.import_meta_restrictions = true;
  // imports land on condition positions, so give every prop one
  PathQueryPtr q = parse_path_query("part*.prop[#self]");
  PathQueryPtr p = prune(q, m, opts);
  EXPECT_EQ(print_path_query(p),
            R"(part.(part.(prop[name="color"]|prop[name="sliding_roof"])|part.prop[name="engine_id"]))");
  EXPECT_NE(print_path_query(p).find(R"(name="color")"), std::string::npos);
  EXPECT_EQ(eval_path_query(p, i), eval_path_query(q, i));
  EXPECT_EQ(eval_path_query(p, i).size(), 3u);
}

TEST(Prune, PreservesAnswersOnTheCarInstance) {
  GraphDatabase m = fx::graph("meta_car.xml");
  GraphDatabase i = fx::graph("instance_car.xml");
  for (const char* q : {engine, "part*.prop", R"(part*[prop[name="color"]])", "part.part.prop|part", "(part|prop)*",
                        R"(part.part[category="car_body"].prop)"}) {
    PathQueryPtr pq_ = parse_path_query(q);
    EXPECT_EQ(eval_path_query(prune(pq_, m), i), eval_path_query(pq_, i)) << q;
  }
}
