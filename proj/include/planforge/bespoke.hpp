#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "planforge/bitmap.hpp"
#include "planforge/catalog.hpp"

namespace planforge {

// Hand-built index answering the two star/production count queries directly:
// per-actor and per-company bitmaps over movie ids, plus cumulative rating
// bitmaps so any rating band costs two count-intersects. Immutable after
// build; concurrent reads are safe.
struct BespokeIndex {
    std::unordered_map<std::string, CompressedBitmap> actor_index;   // name -> movies
    std::unordered_map<std::string, CompressedBitmap> company_index; // name -> movies
    std::array<CompressedBitmap, 5> rating_prefix; // [r] = movies with rating <= r+1
};

// One pass over Actor, Company, Movie, Stars, Produces. Junction rows whose
// entity id has no Actor/Company row are dropped, matching what the join
// would do. Throws errc::schema naming any missing table or column and
// errc::data when a movie id leaves the 32-bit domain or a rating leaves 1..5.
BespokeIndex build_index(const Database &db);

// Movies both starring `actor` and produced by `company`; unknown names
// count zero, like the COUNT over an empty join match.
int64_t q1(const BespokeIndex &ix, const std::string &actor, const std::string &company);

// Same, restricted to ratings r1 < rating <= r2 (r1 = 0 means no lower cut).
// Requires 0 <= r1 < r2 <= 5; throws errc::argument otherwise.
int64_t q2(const BespokeIndex &ix, const std::string &actor, const std::string &company,
           int r1, int r2);

struct LatencyStats {
    double p50_ns = 0;
    double p90_ns = 0;
};

struct BenchReport {
    LatencyStats generic;
    LatencyStats bespoke;
    double speedup_p50 = 0;
    double speedup_p90 = 0;
    double index_build_ms = 0;
    uint64_t n_queries = 0;
    uint64_t answer_checksum = 0; // order-sensitive hash of all answers
};

// Runs the same seeded (actor, company) workload through the generic engine's
// chosen plan and through q1, timing each query. Every pair of answers is
// compared before any timing is reported; a mismatch is an invariant failure.
// n_queries must be >= 100.
BenchReport bench_compare(const Database &db, size_t n_queries, uint64_t seed);

// Aligned two-row p50/p90 table plus the speedup line.
std::string render_bench(const BenchReport &r);

} // namespace planforge
