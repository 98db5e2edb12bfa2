#pragma once

#include <cstdint>

#include "planforge/plan.hpp"

namespace planforge {

struct ExecutionResult {
    int64_t answer = 0;           // COUNT(*) value
    uint64_t tuples_processed = 0; // deterministic work measure
    uint64_t wall_ns = 0;
    bool sampled = false;
    double sample_fraction = 1.0;
};

// Optional work cap; execution aborts with errc::budget once
// tuples_processed would exceed max_tuples. 0 disables the cap.
struct ExecLimits {
    uint64_t max_tuples = 0;
};

// Runs a fully bound plan. tuples_processed counts, per operator, the rows it
// consumes plus the rows it emits, plus algorithm-specific charges:
//   full scan      rows visited + rows surviving filters
//   index lookup   rows matching the probe + rows surviving residual filters
//   hash join      child outputs consumed + build-side rows + matches emitted
//   sort-merge     child outputs consumed + n*ceil(log2 n) per side + matches
//   nested loop    outer rows + outer*inner probes + matches emitted
// The total is a pure function of (database, plan, sampling), independent of
// wall time.
ExecutionResult execute(const Database &db, const QueryPlan &plan,
                        const ExecLimits &limits = {});

// Same, but each leaf scans a deterministic pseudo-random subset of its table:
// row r of table t survives iff hash(seed, t, r) < fraction * 2^64. The
// subset is a function of (seed, table, row) only, so it is stable across
// plans and runs. fraction must be in (0, 1].
ExecutionResult execute_on_sample(const Database &db, const QueryPlan &plan,
                                  double fraction, uint64_t seed,
                                  const ExecLimits &limits = {});

enum class CostKind { tuples, wall };

inline double measured_cost(const ExecutionResult &r, CostKind kind) {
    return kind == CostKind::tuples ? (double)r.tuples_processed : (double)r.wall_ns;
}

} // namespace planforge
