#include "planforge/bespoke.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <vector>

#include "planforge/engine.hpp"
#include "planforge/error.hpp"
#include "planforge/optimizer.hpp"
#include "planforge/rng.hpp"
#include "planforge/sqlfront.hpp"

namespace planforge {

namespace {

// Resolves a required column, turning absence into a named schema error.
const Column &need_column(const Database &db, const char *table, const char *col) {
    const TableDef *t = db.schema.find_table(table);
    if (!t) raise(errc::schema, std::string("bespoke index requires table ") + table);
    if (!t->find_column(col))
        raise(errc::schema,
              std::string("bespoke index requires column ") + table + "." + col);
    return db.column(table, col);
}

uint32_t narrow_movie_id(int64_t id) {
    if (id < 0 || id > int64_t(0xffffffffu))
        raise(errc::data, "movie id " + std::to_string(id) + " outside the 32-bit id domain");
    return uint32_t(id);
}

// name-per-id lookup built from an entity table
std::unordered_map<int64_t, std::string> name_by_id(const Column &ids, const Column &names) {
    std::unordered_map<int64_t, std::string> out;
    out.reserve(ids.ints.size());
    for (size_t r = 0; r < ids.ints.size(); ++r)
        out.emplace(ids.ints[r], std::get<std::string>(names.value_at(r)));
    return out;
}

} // namespace

BespokeIndex build_index(const Database &db) {
    const Column &actor_ids = need_column(db, "Actor", "actor_id");
    const Column &actor_names = need_column(db, "Actor", "name");
    const Column &company_ids = need_column(db, "Company", "company_id");
    const Column &company_names = need_column(db, "Company", "name");
    const Column &movie_ids = need_column(db, "Movie", "movie_id");
    const Column &movie_ratings = need_column(db, "Movie", "rating");
    const Column &stars_actor = need_column(db, "Stars", "actor_id");
    const Column &stars_movie = need_column(db, "Stars", "movie_id");
    const Column &prod_company = need_column(db, "Produces", "company_id");
    const Column &prod_movie = need_column(db, "Produces", "movie_id");

    BespokeIndex ix;
    auto actors = name_by_id(actor_ids, actor_names);
    auto companies = name_by_id(company_ids, company_names);

    for (size_t r = 0; r < stars_actor.ints.size(); ++r) {
        auto it = actors.find(stars_actor.ints[r]);
        if (it == actors.end()) continue; // dangling row: the join drops it too
        ix.actor_index[it->second].add(narrow_movie_id(stars_movie.ints[r]));
    }
    for (size_t r = 0; r < prod_company.ints.size(); ++r) {
        auto it = companies.find(prod_company.ints[r]);
        if (it == companies.end()) continue;
        ix.company_index[it->second].add(narrow_movie_id(prod_movie.ints[r]));
    }
    for (size_t r = 0; r < movie_ids.ints.size(); ++r) {
        int64_t rating = movie_ratings.ints[r];
        if (rating < 1 || rating > 5)
            raise(errc::data, "movie rating " + std::to_string(rating) + " outside 1..5");
        uint32_t id = narrow_movie_id(movie_ids.ints[r]);
        for (int64_t p = rating - 1; p < 5; ++p) ix.rating_prefix[size_t(p)].add(id);
    }
    return ix;
}

int64_t q1(const BespokeIndex &ix, const std::string &actor, const std::string &company) {
    auto a = ix.actor_index.find(actor);
    if (a == ix.actor_index.end()) return 0;
    auto c = ix.company_index.find(company);
    if (c == ix.company_index.end()) return 0;
    return int64_t(intersect_cardinality(a->second, c->second));
}

int64_t q2(const BespokeIndex &ix, const std::string &actor, const std::string &company,
           int r1, int r2) {
    if (r1 < 0 || r2 > 5 || r1 >= r2)
        raise(errc::argument, "rating band needs 0 <= r1 < r2 <= 5, got (" +
                                  std::to_string(r1) + ", " + std::to_string(r2) + "]");
    auto a = ix.actor_index.find(actor);
    if (a == ix.actor_index.end()) return 0;
    auto c = ix.company_index.find(company);
    if (c == ix.company_index.end()) return 0;
    int64_t hi = int64_t(intersect_cardinality(a->second, c->second, ix.rating_prefix[size_t(r2 - 1)]));
    if (r1 == 0) return hi;
    return hi - int64_t(intersect_cardinality(a->second, c->second, ix.rating_prefix[size_t(r1 - 1)]));
}

namespace {

double percentile(std::vector<double> sorted, double q) {
    if (sorted.empty()) return 0;
    size_t idx = size_t(std::max(0.0, std::ceil(q * double(sorted.size())) - 1));
    return sorted[std::min(idx, sorted.size() - 1)];
}

} // namespace

BenchReport bench_compare(const Database &db, size_t n_queries, uint64_t seed) {
    if (n_queries < 100)
        raise(errc::argument, "bench_compare needs n_queries >= 100, got " +
                                  std::to_string(n_queries));

    using clock = std::chrono::steady_clock;
    auto elapsed_ns = [](clock::time_point t0) {
        return double(std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0)
                          .count());
    };

    auto t0 = clock::now();
    BespokeIndex ix = build_index(db);
    BenchReport rep;
    rep.index_build_ms = elapsed_ns(t0) / 1e6;
    rep.n_queries = n_queries;

    // One planned parameterized query; per draw only the literals change.
    LogicalQuery lq = parse(
        "SELECT COUNT(*) FROM Actor, Stars, Produces, Company "
        "WHERE Actor.actor_id = Stars.actor_id AND Stars.movie_id = Produces.movie_id "
        "AND Produces.company_id = Company.company_id "
        "AND Actor.name = $1 AND Company.name = $2");
    BoundQuery q = bind_query(db, lq);
    StatsView stats(db, 0.0);
    QueryPlan generic_plan = optimize(q, stats).plan;

    const Column &actor_names = db.column("Actor", "name");
    const Column &company_names = db.column("Company", "name");
    if (actor_names.size() == 0 || company_names.size() == 0)
        raise(errc::data, "bench_compare needs at least one actor and one company");

    Rng rng(mix_seed(seed, fnv1a64("bespoke-bench")));
    std::vector<double> generic_ns(n_queries), bespoke_ns(n_queries);
    uint64_t checksum = 0xcbf29ce484222325ull;

    for (size_t i = 0; i < n_queries; ++i) {
        std::string actor =
            std::get<std::string>(actor_names.value_at(rng.next_below(actor_names.size())));
        std::string company =
            std::get<std::string>(company_names.value_at(rng.next_below(company_names.size())));
        QueryPlan bound = bind_parameters(generic_plan, {Value(actor), Value(company)});

        auto tg = clock::now();
        ExecutionResult r = execute(db, bound);
        generic_ns[i] = elapsed_ns(tg);

        auto tb = clock::now();
        int64_t fast = q1(ix, actor, company);
        bespoke_ns[i] = elapsed_ns(tb);

        PLANFORGE_ASSERT(fast == r.answer, "bespoke disagrees with the generic engine on (" +
                                               actor + ", " + company + "): " +
                                               std::to_string(fast) + " vs " +
                                               std::to_string(r.answer));
        checksum = fnv1a64(std::to_string(fast), checksum);
    }

    std::sort(generic_ns.begin(), generic_ns.end());
    std::sort(bespoke_ns.begin(), bespoke_ns.end());
    rep.generic = {percentile(generic_ns, 0.5), percentile(generic_ns, 0.9)};
    rep.bespoke = {percentile(bespoke_ns, 0.5), percentile(bespoke_ns, 0.9)};
    rep.speedup_p50 = rep.generic.p50_ns / std::max(rep.bespoke.p50_ns, 1.0);
    rep.speedup_p90 = rep.generic.p90_ns / std::max(rep.bespoke.p90_ns, 1.0);
    rep.answer_checksum = checksum;
    return rep;
}

std::string render_bench(const BenchReport &r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%-10s %14s %14s\n"
                  "%-10s %12.0fns %12.0fns\n"
                  "%-10s %12.0fns %12.0fns\n"
                  "%-10s %13.1fx %13.1fx\n"
                  "index build %.3f ms, %llu queries\n",
                  "", "p50", "p90", "generic", r.generic.p50_ns, r.generic.p90_ns, "bespoke",
                  r.bespoke.p50_ns, r.bespoke.p90_ns, "speedup", r.speedup_p50, r.speedup_p90,
                  r.index_build_ms, (unsigned long long)r.n_queries);
    return buf;
}

} // namespace planforge
