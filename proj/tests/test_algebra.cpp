#include <gtest/gtest.h>

#include "support/fixtures.hpp"

using namespace metaq;

namespace {

std::set<Row> rows(const std::string& query, const io::LayeredDatabase& db) {
  return eval_algebra(*io::parse_algebra_query(query), db.schema, db.instance, db.layer).rows;
}

}  // namespace

TEST(Algebra, RunningExampleQueries) {
  auto db = fx::car();
  // rows worked out by hand from the fixture
  auto q1p = eval_algebra(*fx::query("q1prime.alg"), db.schema, db.instance, db.layer);
  EXPECT_EQ(q1p.row_type, (std::vector<std::string>{"Part", "Part", "Property"}));
  EXPECT_EQ(q1p.rows, (std::set<Row>{{"car1", "body1", "color1"}}));
  EXPECT_EQ(eval_algebra(*fx::query("q1.alg"), db.schema, db.instance, db.layer).rows, (std::set<Row>{{"car1"}}));
  EXPECT_EQ(eval_algebra(*fx::query("q2.alg"), db.schema, db.instance, db.layer).rows, (std::set<Row>{{"o1"}}));
}

TEST(Algebra, ScanSelfJoinAndProjection) {
  auto db = fx::car();
  EXPECT_EQ(rows("class Property'", db).size(), 3u);
  EXPECT_EQ(rows("project($2; join(class Part, part($1, $1), class Part))", db),
            (std::set<Row>{{"platform1"}, {"engine1"}, {"body1"}}));
  // sjoin keeps rows whose columns are related
  EXPECT_EQ(rows("sjoin(part'($1, $2), join(class Part', part'($1, $1), class Part'))", db).size(), 3u);
  EXPECT_EQ(rows("project($2, $1; join(class Part', prop'($1, $1), class Property'))", db),
            (std::set<Row>{{"o5", "o3"}, {"o6", "o4"}, {"o7", "o4"}}));
}

TEST(Algebra, MetaSelectionWithBooleanConditions) {
  auto db = fx::car();
  EXPECT_EQ(rows(R"(selectm($1.name = "color" or $1.name = "engine_id", class Property))", db),
            (std::set<Row>{{"color1"}, {"engineid1"}}));
  EXPECT_EQ(rows(R"(selectm(not $1.name = "color", class Property))", db),
            (std::set<Row>{{"engineid1"}, {"roof1"}}));
  EXPECT_EQ(rows(R"(selectm($1.category = "car" and not $1.name = "x", class Part))", db), (std::set<Row>{{"car1"}}));
}

TEST(Algebra, SetOperations) {
  auto db = fx::car();
  const char* engine = R"(selectm($1.category = "engine", class Part))";
  const char* body = R"(selectm($1.category = "car_body", class Part))";
  EXPECT_EQ(rows(std::string("union(") + engine + ", " + body + ")", db), (std::set<Row>{{"engine1"}, {"body1"}}));
  EXPECT_TRUE(rows(std::string("intersect(") + engine + ", " + body + ")", db).empty());
  EXPECT_EQ(rows(std::string("diff(class Part, ") + engine + ")", db),
            (std::set<Row>{{"car1"}, {"platform1"}, {"body1"}}));
  EXPECT_THROW(rows("union(class Part, class Property)", db), TypeError);
}

TEST(Algebra, MuSemijoin) {
  auto db = fx::car();
  EXPECT_EQ(rows(R"(semijoin(class Property, select($1.name = "sliding_roof", class Property')))", db),
            (std::set<Row>{{"roof1"}}));
  // a materialized meta side is used as is
  EXPECT_EQ(rows(R"(semijoin(class Property, class Property'; "m", {("o5"), ("o6")}))", db),
            (std::set<Row>{{"engineid1"}, {"color1"}}));
  EXPECT_TRUE(rows("empty(Part)", db).empty());
}

TEST(Algebra, TypecheckDescribedFragment) {
  auto db = fx::car();
  auto check = [&](const char* text) { return typecheck_query(*io::parse_algebra_query(text), db.schema, db.layer); };
  EXPECT_TRUE(check("class Part").described);
  EXPECT_FALSE(check("class Customer").described);
  EXPECT_FALSE(check("join(class Customer, orders($1, $1), class Part)").described);
  EXPECT_TRUE(check(R"(union(class Part, selectm($1.name = "x", class Part)))").described);
  QueryType plain = check(R"(select($1.value = "red", class Property))");
  EXPECT_FALSE(plain.described);
  EXPECT_FALSE(plain.reason.empty());
  EXPECT_FALSE(check("diff(class Part, class Part)").described);
  EXPECT_THROW(check("join(class Part, prop($1, $1), class Part)"), TypeError);
  EXPECT_THROW(check("project($3; class Part)"), TypeError);
  EXPECT_THROW(check(R"(select($1.nope = "x", class Part))"), Error);
  EXPECT_THROW(check("class Nope"), SchemaError);
}

TEST(Algebra, MRewriteOfRunningExample) {
  auto db = fx::car();
  QueryPtr m = m_rewrite(*fx::query("q1prime.alg"), db.schema, db.layer);
  EXPECT_EQ(io::print_algebra_query(m),
            R"(join(join(class Part', part'($1, $1), class Part'), prop'($2, $1), select($1.name = "color", class Property')))");
  EXPECT_EQ(eval_algebra(*m, db.schema, db.instance, db.layer).rows, (std::set<Row>{{"o1", "o4", "o6"}}));
  EXPECT_TRUE(same_query(m_inverse(*m, db.schema, db.layer), fx::query("q1prime.alg")));
}

TEST(Algebra, MRewriteRejectsQueriesOutsideTheFragment) {
  auto db = fx::car();
  EXPECT_THROW(m_rewrite(*fx::query("q1.alg"), db.schema, db.layer), FragmentError);
  EXPECT_THROW(m_rewrite(*io::parse_algebra_query("diff(class Part, class Part)"), db.schema, db.layer), FragmentError);
  RewriteOptions opts;
  opts.admit_difference = true;
  EXPECT_EQ(io::print_algebra_query(m_rewrite(*io::parse_algebra_query("diff(class Part, class Part)"), db.schema,
                                              db.layer, opts)),
            "diff(class Part', class Part')");
}

TEST(Algebra, DifferenceCounterexample) {
  auto db = fx::layered("difference.schema", "difference.instance");
  QueryPtr q = fx::query("difference.alg");
  RewriteOptions opts;
  opts.admit_difference = true;
  TupleSet result = eval_algebra(*q, db.schema, db.instance, db.layer);
  EXPECT_EQ(result.rows, (std::set<Row>{{"o11"}}));
  EXPECT_EQ(mu_lift(result, db.schema, db.layer).rows, (std::set<Row>{{"o1'"}}));
  EXPECT_TRUE(eval_algebra(*m_rewrite(*q, db.schema, db.layer, opts), db.schema, db.instance, db.layer).empty());
}

TEST(Algebra, MuLiftAndSemijoinOnTupleSets) {
  auto db = fx::car();
  TupleSet t = eval_algebra(*fx::query("q1prime.alg"), db.schema, db.instance, db.layer);
  TupleSet lifted = mu_lift(t, db.schema, db.layer);
  EXPECT_EQ(lifted.row_type, (std::vector<std::string>{"Part'", "Part'", "Property'"}));
  EXPECT_EQ(lifted.rows, (std::set<Row>{{"o1", "o4", "o6"}}));
  EXPECT_EQ(semijoin_mu(t, lifted, db.schema, db.layer), t);
  TupleSet none{lifted.row_type, {}};
  EXPECT_TRUE(semijoin_mu(t, none, db.schema, db.layer).empty());
}

TEST(Algebra, MaximalDescribedSubqueries) {
  auto db = fx::car();
  QueryPtr q1 = fx::query("q1.alg");
  auto subs = maximal_described_subqueries(*q1, db.schema, db.layer);
  ASSERT_EQ(subs.size(), 1u);
  EXPECT_EQ(*subs[0], *fx::query("q1prime.alg"));
}

TEST(AlgebraText, RoundTripsAndMinimalParentheses) {
  for (const char* text : {
           "class Part",
           R"(select(not ($1.a = "x" or $1.b = "y"), class P))",
           R"(selectm($1.a = "x" and ($1.b = "y" or $1.c.d = "z"), class P))",
           R"(selectm($1.a = "x" or $1.b = "y" and $2.c = "z", class P))",
           "project($2, $1; sjoin(r($1, $2), class P))",
           R"(semijoin(class P, class P'; "meta", {("o1"), ("o2")}))",
           R"(empty(P, Q; "meta", "no car has a sunroof"))",
           "intersect(class P, diff(class P, class P))",
       }) {
    EXPECT_EQ(io::print_algebra_query(io::parse_algebra_query(text)), text);
  }
}

TEST(AlgebraText, ErrorsCarryPositions) {
  try {
    io::parse_algebra_query("join(class P, r($1 $2), class Q)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 20u);
  }
  EXPECT_THROW(io::parse_algebra_query("frobnicate(class P)"), ParseError);
  EXPECT_THROW(io::parse_algebra_query("class P class Q"), ParseError);
  EXPECT_THROW(io::parse_algebra_query("project(; class P)"), ParseError);
}
