#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "planforge/error.hpp"
#include "planforge/features.hpp"
#include "test_support.hpp"

using namespace planforge;
using planforge::testing::build_int_db;
using planforge::testing::tiny_config;

namespace {

Database pair_db() {
    return build_int_db({{"T1", "id", {}, {{"id", {0, 1, 2}}, {"k", {1, 2, 3}}}},
                         {"T2", "id", {}, {{"id", {0, 1, 2, 3}}, {"k", {2, 3, 3, 4}}}}});
}

QueryPlan pair_plan(JoinAlgo algo) {
    auto l = make_access("T1", AccessPath::full_scan, "", {});
    auto r = make_access("T2", AccessPath::full_scan, "", {});
    JoinEdge e{"T1", "k", "T2", "k"};
    return QueryPlan{make_join(algo, {e}, l, r), 1};
}

} // namespace

TEST_CASE("a two-table plan encodes to the hand-computed vector") {
    Database db = pair_db();
    StatsView sv(db, 0.0);
    FeatureVector f = featurize(sv, pair_plan(JoinAlgo::hash));
    REQUIRE(f.size() == 87);
    REQUIRE(FeatureConfig{}.feature_count() == 87);

    // worked out by hand from the documented layout: tables sorted [T1, T2],
    // postorder [scan T1, scan T2, join]
    Eigen::VectorXd e = Eigen::VectorXd::Zero(87);
    e[0] = 1;  // T1 full scan
    e[2] = 1;  // T2 full scan
    e[12] = 1; // join slot 0: hash (depth 0 stays zero)
    e[32] = std::log1p(3.0);                         // T1: 3 rows
    e[33] = std::log1p(4.0);                         // T2: 4 rows
    e[34] = std::log1p(3.0 * 4.0 / 3.0);             // join: 12 / max(ndv)=3
    e[43] = 1; // leaf 0 is table index 0 (T1)
    e[49] = 1; // leaf 0 depth
    e[51] = 1; // leaf 1 is table index 1 (T2)
    e[56] = 1; // leaf 1 depth
    e[85] = 1; // left-deep fraction
    e[86] = 1; // height

    for (int i = 0; i < 87; ++i)
        CHECK(f[i] == doctest::Approx(e[i]).epsilon(1e-12));
    CHECK(f == featurize(sv, pair_plan(JoinAlgo::hash))); // deterministic
}

TEST_CASE("changing only the join algorithm moves only its one-hot slots") {
    Database db = pair_db();
    StatsView sv(db, 0.0);
    FeatureVector a = featurize(sv, pair_plan(JoinAlgo::hash));
    FeatureVector b = featurize(sv, pair_plan(JoinAlgo::sort_merge));
    std::vector<int> moved;
    for (int i = 0; i < a.size(); ++i)
        if (a[i] != b[i])
            moved.push_back(i);
    CHECK(moved == std::vector<int>{12, 13});
    CHECK(b[13] == 1.0);
}

TEST_CASE("plans with too many tables are refused") {
    std::vector<planforge::testing::TableSpec> specs;
    for (int i = 0; i < 7; ++i)
        specs.push_back({"T" + std::to_string(i), "id", {}, {{"id", {0, 1}}}});
    Database db = build_int_db(specs);
    StatsView sv(db, 0.0);
    PlanNodeRef t = make_access("T0", AccessPath::full_scan, "", {});
    for (int i = 1; i < 7; ++i)
        t = make_join(JoinAlgo::nested_loop, {},
                      make_access("T" + std::to_string(i), AccessPath::full_scan, "", {}), t);
    CHECK_THROWS_AS(featurize(sv, QueryPlan{t, 1}), Error);
    FeatureConfig wide;
    wide.max_tables = 7;
    FeatureVector f = featurize(sv, QueryPlan{t, 1}, wide);
    CHECK(f.size() == wide.feature_count());
    CHECK(f.allFinite());
}

TEST_CASE("the encoding separates every plan in an enumerated pool") {
    Database db = generate_movie_db(tiny_config(1));
    StatsView sv(db, 0.0);
    const char *queries[] = {
        // Movie and Produces have identical row counts, so mirrored join
        // orders must be told apart by the leaf-identity slots
        "SELECT COUNT(*) FROM Movie JOIN Produces ON Movie.movie_id = Produces.movie_id",
        "SELECT COUNT(*) FROM Actor JOIN Stars ON Actor.actor_id = Stars.actor_id "
        "JOIN Movie ON Stars.movie_id = Movie.movie_id WHERE rating = 4",
    };
    for (const char *sql : queries) {
        BoundQuery q = bind_query(db, parse(sql));
        auto plans = enumerate_all(db, q);
        std::set<std::vector<double>> seen;
        for (const auto &p : plans) {
            FeatureVector f = featurize(sv, p);
            seen.insert(std::vector<double>(f.data(), f.data() + f.size()));
        }
        CHECK(seen.size() == plans.size());
    }
}
