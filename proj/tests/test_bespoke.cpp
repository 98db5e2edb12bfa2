#include <doctest.h>

#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "planforge/bespoke.hpp"
#include "planforge/engine.hpp"
#include "planforge/error.hpp"
#include "planforge/optimizer.hpp"
#include "planforge/rng.hpp"
#include "planforge/sqlfront.hpp"
#include "test_support.hpp"

using namespace planforge;
using planforge::testing::tiny_config;

namespace {

std::string numbered(const char *prefix, uint64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%08llu", prefix, (unsigned long long)id);
    return buf;
}

struct Link {
    int64_t id, entity, movie;
};

// Hand-rolled five-table database for fixtures the generator cannot express.
Database movie_db_from_rows(const std::vector<std::pair<int64_t, std::string>> &actors,
                            const std::vector<std::pair<int64_t, std::string>> &companies,
                            const std::vector<std::pair<int64_t, int64_t>> &movies, // id, rating
                            const std::vector<Link> &stars, const std::vector<Link> &produces) {
    Database db;
    db.schema = movie_schema();
    db.tables.resize(db.schema.tables.size());
    for (size_t ti = 0; ti < db.tables.size(); ++ti) {
        db.tables[ti].columns.resize(db.schema.tables[ti].columns.size());
        for (size_t ci = 0; ci < db.tables[ti].columns.size(); ++ci)
            db.tables[ti].columns[ci].type = db.schema.tables[ti].columns[ci].type;
    }
    auto fill_entity = [&](const char *table, const auto &rows) {
        Table &t = db.tables[db.table_index(table)];
        t.row_count = rows.size();
        for (const auto &[id, name] : rows) {
            t.columns[0].ints.push_back(id);
            t.columns[1].append_string(name);
        }
    };
    fill_entity("Actor", actors);
    fill_entity("Company", companies);
    {
        Table &t = db.tables[db.table_index("Movie")];
        t.row_count = movies.size();
        for (const auto &[id, rating] : movies) {
            t.columns[0].ints.push_back(id);
            t.columns[1].append_string(numbered("movie_", uint64_t(id)));
            t.columns[2].ints.push_back(rating);
        }
    }
    auto fill_junction = [&](const char *table, const std::vector<Link> &rows) {
        Table &t = db.tables[db.table_index(table)];
        t.row_count = rows.size();
        for (const Link &l : rows) {
            t.columns[0].ints.push_back(l.id);
            t.columns[1].ints.push_back(l.entity);
            t.columns[2].ints.push_back(l.movie);
        }
    };
    fill_junction("Stars", stars);
    fill_junction("Produces", produces);
    db.build_indexes();
    db.validate();
    return db;
}

int64_t engine_count(const Database &db, const std::string &sql) {
    BoundQuery q = bind_query(db, parse(sql));
    StatsView stats(db, 0.0);
    return execute(db, optimize(q, stats).plan).answer;
}

std::string q1_sql(const std::string &actor, const std::string &company) {
    return "SELECT COUNT(*) FROM Actor, Stars, Produces, Company "
           "WHERE Actor.actor_id = Stars.actor_id AND Stars.movie_id = Produces.movie_id "
           "AND Produces.company_id = Company.company_id "
           "AND Actor.name = '" + actor + "' AND Company.name = '" + company + "'";
}

std::string q2_sql(const std::string &actor, const std::string &company, int r1, int r2) {
    return "SELECT COUNT(*) FROM Actor, Stars, Movie, Produces, Company "
           "WHERE Actor.actor_id = Stars.actor_id AND Stars.movie_id = Movie.movie_id "
           "AND Movie.movie_id = Produces.movie_id "
           "AND Produces.company_id = Company.company_id "
           "AND Actor.name = '" + actor + "' AND Company.name = '" + company + "' " +
           "AND Movie.rating >= " + std::to_string(r1 + 1) +
           " AND Movie.rating <= " + std::to_string(r2);
}

} // namespace

TEST_CASE("actor and company bitmaps match naive per-entity movie sets") {
    Database db = generate_movie_db(tiny_config(1));
    BespokeIndex ix = build_index(db);

    auto naive_sets = [&](const char *entity_table, const char *id_col, const char *junction) {
        std::map<std::string, std::set<int64_t>> sets;
        const Column &ids = db.column(entity_table, id_col);
        const Column &names = db.column(entity_table, "name");
        std::map<int64_t, std::string> by_id;
        for (size_t r = 0; r < ids.ints.size(); ++r)
            by_id[ids.ints[r]] = std::get<std::string>(names.value_at(r));
        const Column &ent = db.column(junction, id_col);
        const Column &mov = db.column(junction, "movie_id");
        for (size_t r = 0; r < ent.ints.size(); ++r)
            sets[by_id.at(ent.ints[r])].insert(mov.ints[r]);
        return sets;
    };

    auto actor_sets = naive_sets("Actor", "actor_id", "Stars");
    REQUIRE(ix.actor_index.size() == actor_sets.size());
    for (const auto &[name, movies] : actor_sets) {
        const CompressedBitmap &bm = ix.actor_index.at(name);
        REQUIRE(bm.cardinality() == movies.size());
        for (int64_t m : movies) REQUIRE(bm.contains(uint32_t(m)));
    }
    auto company_sets = naive_sets("Company", "company_id", "Produces");
    REQUIRE(ix.company_index.size() == company_sets.size());
    for (const auto &[name, movies] : company_sets)
        REQUIRE(ix.company_index.at(name).cardinality() == movies.size());
}

TEST_CASE("rating prefixes are cumulative and end at every movie") {
    Database db = generate_movie_db(tiny_config(3));
    BespokeIndex ix = build_index(db);

    const Column &ratings = db.column("Movie", "rating");
    for (int r = 0; r < 5; ++r) {
        uint64_t naive = 0;
        for (int64_t v : ratings.ints) naive += uint64_t(v <= r + 1);
        CHECK(ix.rating_prefix[size_t(r)].cardinality() == naive);
    }
    for (int r = 0; r < 4; ++r) {
        const CompressedBitmap &lo = ix.rating_prefix[size_t(r)];
        const CompressedBitmap &hi = ix.rating_prefix[size_t(r) + 1];
        CHECK(intersect_cardinality(lo, hi) == lo.cardinality()); // containment
    }
    CHECK(ix.rating_prefix[4].cardinality() == db.table("Movie").row_count);
}

TEST_CASE("unknown keys count zero") {
    Database db = generate_movie_db(tiny_config(1));
    BespokeIndex ix = build_index(db);
    std::string known_actor = numbered("actor_", 0);
    std::string known_company = numbered("company_", 0);
    CHECK(q1(ix, "nobody", known_company) == 0);
    CHECK(q1(ix, known_actor, "nocorp") == 0);
    CHECK(q1(ix, "nobody", "nocorp") == 0);
    CHECK(q2(ix, "nobody", known_company, 0, 5) == 0);
}

TEST_CASE("an actor covering a company's catalog counts the whole catalog") {
    Database db = movie_db_from_rows(
        {{0, "ada"}, {1, "bob"}},
        {{0, "acme"}, {1, "zen"}},
        {{0, 3}, {1, 3}, {2, 4}, {3, 1}},
        {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}, {3, 0, 3}, {4, 1, 0}}, // ada in all, bob in movie 0
        {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}, {3, 1, 3}});           // acme: 0..2, zen: 3
    BespokeIndex ix = build_index(db);
    CHECK(q1(ix, "ada", "acme") == int64_t(ix.company_index.at("acme").cardinality()));
    CHECK(q1(ix, "ada", "acme") == 3);
    CHECK(q1(ix, "bob", "acme") == 1);
    CHECK(q1(ix, "bob", "zen") == 0);
    // single-rating slices: movie 2 is the only 4-star acme production
    CHECK(q2(ix, "ada", "acme", 3, 4) == 1);
    CHECK(q2(ix, "ada", "acme", 0, 1) == 0); // movie 3 (1-star) belongs to zen
    CHECK(q2(ix, "ada", "zen", 0, 1) == 1);
}

TEST_CASE("q1 matches the generic engine on random draws") {
    GenConfig cfg = tiny_config(7);
    cfg.n_actors = 300;
    cfg.n_movies = 400;
    cfg.n_companies = 25;
    cfg.stars_per_movie = 4;
    Database db = generate_movie_db(cfg);
    BespokeIndex ix = build_index(db);

    Rng rng(mix_seed(7, fnv1a64("bespoke-oracle")));
    int64_t nonzero = 0;
    for (int i = 0; i < 100; ++i) {
        std::string actor = numbered("actor_", rng.next_below(cfg.n_actors));
        std::string company = numbered("company_", rng.next_below(cfg.n_companies));
        int64_t fast = q1(ix, actor, company);
        REQUIRE(fast == engine_count(db, q1_sql(actor, company)));
        nonzero += int64_t(fast > 0);
    }
    CHECK(nonzero > 5); // the workload actually exercises non-empty intersections
    CHECK(q1(ix, "actor_unknown", numbered("company_", 0)) ==
          engine_count(db, q1_sql("actor_unknown", numbered("company_", 0))));
}

TEST_CASE("q2 matches the generic engine and collapses to q1") {
    GenConfig cfg = tiny_config(9);
    cfg.n_actors = 120;
    cfg.n_movies = 300;
    cfg.n_companies = 10;
    cfg.stars_per_movie = 5;
    Database db = generate_movie_db(cfg);
    BespokeIndex ix = build_index(db);

    Rng rng(mix_seed(9, fnv1a64("bespoke-q2")));
    for (int i = 0; i < 100; ++i) {
        std::string actor = numbered("actor_", rng.next_below(cfg.n_actors));
        std::string company = numbered("company_", rng.next_below(cfg.n_companies));
        int r1 = int(rng.next_below(5));
        int r2 = r1 + 1 + int(rng.next_below(uint64_t(5 - r1)));
        REQUIRE(q2(ix, actor, company, r1, r2) == engine_count(db, q2_sql(actor, company, r1, r2)));
        REQUIRE(q2(ix, actor, company, 0, 5) == q1(ix, actor, company));

        int64_t slices = 0;
        for (int r = 1; r <= 5; ++r) slices += q2(ix, actor, company, r - 1, r);
        REQUIRE(slices == q1(ix, actor, company));
    }
}

TEST_CASE("rating band bounds are validated") {
    Database db = generate_movie_db(tiny_config(1));
    BespokeIndex ix = build_index(db);
    std::string a = numbered("actor_", 0), c = numbered("company_", 0);
    CHECK_THROWS_WITH_AS(q2(ix, a, c, 1, 1), doctest::Contains("rating band"), Error);
    CHECK_THROWS_WITH_AS(q2(ix, a, c, 3, 2), doctest::Contains("rating band"), Error);
    CHECK_THROWS_WITH_AS(q2(ix, a, c, -1, 3), doctest::Contains("rating band"), Error);
    CHECK_THROWS_WITH_AS(q2(ix, a, c, 0, 6), doctest::Contains("rating band"), Error);
}

TEST_CASE("empty junction tables produce empty indexes") {
    Database db = movie_db_from_rows({{0, "ada"}}, {{0, "acme"}}, {{0, 2}}, {}, {{0, 0, 0}});
    BespokeIndex ix = build_index(db);
    CHECK(ix.actor_index.empty());
    CHECK(ix.company_index.size() == 1);
    CHECK(q1(ix, "ada", "acme") == 0);
}

TEST_CASE("schema mismatch is reported by name") {
    Database db = generate_movie_db(tiny_config(1));
    Database no_stars = db;
    size_t si = no_stars.table_index("Stars");
    no_stars.schema.tables.erase(no_stars.schema.tables.begin() + ptrdiff_t(si));
    no_stars.tables.erase(no_stars.tables.begin() + ptrdiff_t(si));
    CHECK_THROWS_WITH_AS(build_index(no_stars), doctest::Contains("Stars"), Error);

    Database no_rating = db;
    size_t mi = no_rating.table_index("Movie");
    no_rating.schema.tables[mi].columns.pop_back(); // drops `rating`
    no_rating.tables[mi].columns.pop_back();
    no_rating.schema.tables[mi].indexes.clear();
    CHECK_THROWS_WITH_AS(build_index(no_rating), doctest::Contains("Movie.rating"), Error);
}

TEST_CASE("bench answers are deterministic and the speedup fields are ratios") {
    GenConfig cfg = tiny_config(5);
    cfg.n_actors = 200;
    cfg.n_movies = 250;
    cfg.n_companies = 12;
    Database db = generate_movie_db(cfg);

    BenchReport a = bench_compare(db, 100, 5);
    BenchReport b = bench_compare(db, 100, 5);
    CHECK(a.answer_checksum == b.answer_checksum);
    CHECK(a.n_queries == 100);
    CHECK(a.speedup_p50 == doctest::Approx(a.generic.p50_ns / std::max(a.bespoke.p50_ns, 1.0)));
    CHECK(a.speedup_p90 == doctest::Approx(a.generic.p90_ns / std::max(a.bespoke.p90_ns, 1.0)));

    BenchReport c = bench_compare(db, 100, 6);
    CHECK(c.answer_checksum != a.answer_checksum); // different workload draw

    CHECK_THROWS_WITH_AS(bench_compare(db, 99, 1), doctest::Contains("n_queries"), Error);

    std::string table = render_bench(a);
    CHECK(table.find("generic") != std::string::npos);
    CHECK(table.find("bespoke") != std::string::npos);
    CHECK(table.find("speedup") != std::string::npos);
}
