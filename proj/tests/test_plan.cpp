#include <doctest.h>

#include "planforge/error.hpp"
#include "planforge/plan.hpp"
#include "test_support.hpp"

using namespace planforge;
using planforge::testing::tiny_config;

namespace {

struct Fixture {
    Database db = generate_movie_db(tiny_config(1));
    BoundQuery q = bind_query(
        db, parse("SELECT COUNT(*) FROM Actor "
                  "JOIN Stars ON Actor.actor_id = Stars.actor_id "
                  "JOIN Movie ON Stars.movie_id = Movie.movie_id "
                  "WHERE Movie.rating = 5 AND Actor.name = 'actor_00000003'"));

    PlanNodeRef leaf(const std::string &t, AccessPath path = AccessPath::full_scan,
                     std::string ixcol = "") const {
        return make_access(t, path, std::move(ixcol), q.filters_for(t));
    }
    JoinEdge edge_as() const { return q.edges[0]; } // Actor-Stars
    JoinEdge edge_sm() const { return q.edges[1]; } // Movie-Stars

    QueryPlan left_deep(JoinAlgo a1, JoinAlgo a2) const {
        QueryPlan p;
        p.root = make_join(a2, {edge_sm()},
                           make_join(a1, {edge_as()}, leaf("Actor"), leaf("Stars")),
                           leaf("Movie"));
        p.plan_id = 17;
        return p;
    }
};

} // namespace

TEST_CASE("a correct left-deep plan validates") {
    Fixture f;
    REQUIRE(f.q.edges.size() == 2);
    validate_plan(f.db, f.q, f.left_deep(JoinAlgo::hash, JoinAlgo::sort_merge));
}

TEST_CASE("canonical strings separate structurally different plans") {
    Fixture f;
    QueryPlan a = f.left_deep(JoinAlgo::hash, JoinAlgo::hash);
    QueryPlan b = f.left_deep(JoinAlgo::sort_merge, JoinAlgo::hash);
    QueryPlan a2 = f.left_deep(JoinAlgo::hash, JoinAlgo::hash);
    CHECK(canonical_plan_string(a) != canonical_plan_string(b));
    CHECK(canonical_plan_string(a) == canonical_plan_string(a2));
    CHECK(plan_tables(a) == std::vector<std::string>{"Actor", "Stars", "Movie"});
    CHECK(plan_join_count(a) == 2);
}

TEST_CASE("validation rejects leaves missing their filters") {
    Fixture f;
    QueryPlan p;
    p.root = make_join(
        JoinAlgo::sort_merge, {f.edge_sm()},
        make_join(JoinAlgo::hash, {f.edge_as()}, f.leaf("Actor"), f.leaf("Stars")),
        make_access("Movie", AccessPath::full_scan, "", {})); // rating filter dropped
    CHECK_THROWS_WITH_AS(validate_plan(f.db, f.q, p), doctest::Contains("filters"), Error);
}

TEST_CASE("validation rejects misplaced join conditions") {
    Fixture f;
    // Actor-Stars edge repeated at the top join
    QueryPlan p;
    p.root = make_join(JoinAlgo::hash, {f.edge_as(), f.edge_sm()},
                       make_join(JoinAlgo::hash, {f.edge_as()}, f.leaf("Actor"), f.leaf("Stars")),
                       f.leaf("Movie"));
    CHECK_THROWS_AS(validate_plan(f.db, f.q, p), Error);

    // joining Stars to Movie first but claiming no condition
    QueryPlan c;
    c.root = make_join(JoinAlgo::hash, {f.edge_as(), f.edge_sm()},
                       make_join(JoinAlgo::nested_loop, {}, f.leaf("Stars"), f.leaf("Movie")),
                       f.leaf("Actor"));
    CHECK_THROWS_AS(validate_plan(f.db, f.q, c), Error);
}

TEST_CASE("cross joins must be nested loops") {
    Database db = generate_movie_db(tiny_config(2));
    BoundQuery q = bind_query(db, parse("SELECT COUNT(*) FROM Actor, Company"));
    auto leaf = [&](const std::string &t) {
        return make_access(t, AccessPath::full_scan, "", {});
    };
    QueryPlan nl;
    nl.root = make_join(JoinAlgo::nested_loop, {}, leaf("Actor"), leaf("Company"));
    validate_plan(db, q, nl);

    QueryPlan hash;
    hash.root = make_join(JoinAlgo::hash, {}, leaf("Actor"), leaf("Company"));
    CHECK_THROWS_WITH_AS(validate_plan(db, q, hash), doctest::Contains("nested loop"), Error);
}

TEST_CASE("index lookups need a real index and an equality filter") {
    Fixture f;
    // Actor.name is indexed and has an equality filter: fine
    QueryPlan good;
    good.root = make_join(
        JoinAlgo::sort_merge, {f.edge_sm()},
        make_join(JoinAlgo::hash, {f.edge_as()},
                  f.leaf("Actor", AccessPath::index_lookup, "name"), f.leaf("Stars")),
        f.leaf("Movie"));
    validate_plan(f.db, f.q, good);

    // Stars.actor_id is indexed but the query has no equality filter on it
    QueryPlan bad;
    bad.root = make_join(
        JoinAlgo::sort_merge, {f.edge_sm()},
        make_join(JoinAlgo::hash, {f.edge_as()}, f.leaf("Actor"),
                  f.leaf("Stars", AccessPath::index_lookup, "actor_id")),
        f.leaf("Movie"));
    CHECK_THROWS_AS(validate_plan(f.db, f.q, bad), Error);
}

TEST_CASE("leaf set must match the query tables exactly") {
    Fixture f;
    QueryPlan p;
    p.root = make_join(JoinAlgo::hash, {f.edge_as()}, f.leaf("Actor"), f.leaf("Stars"));
    CHECK_THROWS_AS(validate_plan(f.db, f.q, p), Error);
}

TEST_CASE("plans round-trip through JSON") {
    Fixture f;
    QueryPlan p = f.left_deep(JoinAlgo::nested_loop, JoinAlgo::hash);
    QueryPlan back = plan_from_json(plan_to_json(p));
    CHECK(back.plan_id == p.plan_id);
    CHECK(canonical_plan_string(back) == canonical_plan_string(p));
    validate_plan(f.db, f.q, back);

    CHECK_THROWS_AS(plan_from_json("{not json"), Error);
    CHECK_THROWS_AS(plan_from_json(R"({"plan_id":1,"root":{"node":"join"}})"), Error);
}

TEST_CASE("parameter binding substitutes slots") {
    Database db = generate_movie_db(tiny_config(1));
    BoundQuery q = bind_query(db, parse("SELECT COUNT(*) FROM Actor WHERE name = $1"));
    QueryPlan p;
    p.root = make_access("Actor", AccessPath::index_lookup, "name", q.filters_for("Actor"));
    CHECK(has_unbound_params(p));

    QueryPlan bound = bind_parameters(p, {Value(std::string("actor_00000007"))});
    CHECK(!has_unbound_params(bound));
    CHECK(canonical_plan_string(bound) != canonical_plan_string(p));

    CHECK_THROWS_WITH_AS(bind_parameters(p, {}), doctest::Contains("$1"), Error);
}
