#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/generators.hpp"

using namespace metaq;

namespace {

// root -a-> m1 -b-> m2, m1 carries x=1
GraphDatabase small_meta() {
  GraphDatabase m;
  m.add_node("m0", {"r", {}});
  m.add_node("m1", {"a", {{"x", "1"}}});
  m.add_node("m2", {"b", {}});
  m.add_edge("m0", "m1");
  m.add_edge("m1", "m2");
  return m;
}

GraphDatabase small_instance() {
  GraphDatabase i;
  i.add_node("i0", {"r", {}});
  i.add_node("i1", {"a", {{"x", "1"}, {"y", "7"}}});
  i.add_node("i2", {"a", {}});
  i.add_node("i3", {"b", {}});
  i.add_edge("i0", "i1");
  i.add_edge("i0", "i2");
  i.add_edge("i1", "i3");
  return i;
}

DescriptionBinding small_mu() { return {{"i0", "m0"}, {"i1", "m1"}, {"i2", "m1"}, {"i3", "m2"}}; }

}  // namespace

TEST(Graph, BasicsAndRoot) {
  GraphDatabase g = small_instance();
  EXPECT_EQ(g.root(), "i0");
  EXPECT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.edge_count(), 3u);
  EXPECT_EQ(g.successors("i0"), (std::set<std::string>{"i1", "i2"}));
  EXPECT_EQ(g.predecessors("i3"), (std::set<std::string>{"i1"}));
  EXPECT_EQ(*g.label("i1").attribute("y"), "7");
  EXPECT_EQ(g.label("i2").attribute("y"), nullptr);
  g.add_edge("i0", "i1");
  EXPECT_EQ(g.edge_count(), 3u);
  EXPECT_THROW(g.add_node("i1", {"a", {}}), Error);
  EXPECT_THROW(g.add_edge("i0", "nope"), Error);
  EXPECT_TRUE(validate_graph(g).empty());
}

TEST(Graph, ResolvePrefersAliases) {
  GraphDatabase g = small_instance();
  g.set_alias("i2", "i3");
  g.set_alias("first", "i1");
  EXPECT_EQ(g.resolve("first"), "i1");
  EXPECT_EQ(g.resolve("i2"), "i3");
  EXPECT_EQ(g.resolve("i0"), "i0");
  EXPECT_FALSE(g.resolve("zzz").has_value());
}

TEST(Graph, ValidationFindings) {
  EXPECT_TRUE(validate_graph(GraphDatabase{}).has("graph.empty"));
  GraphDatabase g = small_instance();
  g.add_node("orphan", {"", {{"k", "1"}, {"k", "2"}}});
  g.add_edge("i3", "i0");
  Report r = validate_graph(g);
  EXPECT_TRUE(r.has("graph.unlabeled"));
  EXPECT_TRUE(r.has("graph.duplicate-attribute"));
  EXPECT_EQ(r.count("graph.root"), 2u);
}

TEST(Binding, StrictBindingHolds) {
  EXPECT_TRUE(check_description_binding(small_instance(), small_meta(), small_mu(), true).empty());
}

TEST(Binding, EachViolationIsReported) {
  GraphDatabase i = small_instance();
  GraphDatabase m = small_meta();
  DescriptionBinding mu = small_mu();

  mu.erase("i2");
  EXPECT_TRUE(check_description_binding(i, m, mu, false).has("binding.partial"));

  mu = small_mu();
  mu["i3"] = "m1";
  Report r = check_description_binding(i, m, mu, false);
  EXPECT_TRUE(r.has("binding.tag"));
  EXPECT_TRUE(r.has("binding.edge"));

  mu = small_mu();
  mu["ghost"] = "m0";
  EXPECT_TRUE(check_description_binding(i, m, mu, false).has("binding.unknown-node"));
}

TEST(Binding, StrictModeChecksAttributesAndRoot) {
  GraphDatabase i;
  i.add_node("i0", {"r", {}});
  i.add_node("i1", {"a", {{"x", "2"}}});
  i.add_edge("i0", "i1");
  GraphDatabase m = small_meta();
  DescriptionBinding mu{{"i0", "m0"}, {"i1", "m1"}};
  EXPECT_TRUE(check_description_binding(i, m, mu, false).empty());
  EXPECT_TRUE(check_description_binding(i, m, mu, true).has("binding.attribute"));

  // a subgraph bound below the meta root is fine loosely, not strictly
  GraphDatabase sub;
  sub.add_node("j", {"b", {}});
  DescriptionBinding below{{"j", "m2"}};
  EXPECT_TRUE(check_description_binding(sub, m, below, false).empty());
  EXPECT_TRUE(check_description_binding(sub, m, below, true).has("binding.root"));
}

TEST(Binding, Composition) {
  DescriptionBinding mu1{{"a", "b"}, {"c", "d"}};
  DescriptionBinding mu2{{"b", "x"}};
  EXPECT_EQ(compose_bindings(mu1, mu2), (DescriptionBinding{{"a", "x"}}));
}

TEST(Binding, CarFixturesAreStrictlyBound) {
  GraphDatabase meta = fx::graph("meta_car.xml");
  GraphDatabase inst = fx::graph("instance_car.xml");
  DescriptionBinding mu = io::parse_binding(fx::text("instance_car.binding"), inst, meta);
  EXPECT_EQ(mu.size(), inst.node_count());
  EXPECT_TRUE(validate_graph(meta).empty());
  EXPECT_TRUE(validate_graph(inst).empty());
  EXPECT_TRUE(check_description_binding(inst, meta, mu, true).empty());
}

TEST(Binding, GeneratedPairsAreStrict) {
  gen::Rng rng(7);
  gen::GraphVocabulary voc;
  for (int trial = 0; trial < 200; ++trial) {
    auto bp = gen::random_bound_pair(rng, gen::uniform(rng, 1, 10), gen::uniform(rng, 1, 40), voc, gen::chance(rng, 0.5));
    ASSERT_TRUE(validate_graph(bp.meta).empty());
    ASSERT_TRUE(validate_graph(bp.instance).empty());
    Report r = check_description_binding(bp.instance, bp.meta, bp.mu, true);
    ASSERT_TRUE(r.empty()) << r;
  }
}
