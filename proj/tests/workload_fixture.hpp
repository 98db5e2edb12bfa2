#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "planforge/error.hpp"
#include "planforge/sqlfront.hpp"
#include "planforge/workload.hpp"

namespace planforge::testing {

// Template-stats marginals of the year-long analytics-cluster workload the
// analyzer is calibrated against: five lifespan cohorts of repeated templates
// plus a tail of one-off statements carrying the remaining 36% of time. A
// literal log with these marginals would hold ~6e8 records, so the fixture
// produces the stats aggregation would yield, with real fingerprints from
// structurally distinct statements. Total time is exactly 1e6 ms, split in
// integers, so every share lands on a whole percent.
inline std::map<std::string, TemplateStats> year_log_stats() {
    std::map<std::string, TemplateStats> stats;
    const int64_t base = 1767225600000; // 2026-01-01T00:00Z
    const int64_t day = 86400000;
    int64_t serial = 0;

    auto add_group = [&](uint64_t n, uint64_t execs, int64_t lifespan_days, int64_t group_time) {
        int64_t each = group_time / int64_t(n);
        int64_t rem = group_time % int64_t(n);
        for (uint64_t i = 0; i < n; ++i) {
            std::string sql =
                "select count(*) from t" + std::to_string(serial) + " where c = 1";
            TemplateStats st;
            st.fingerprint = templatize(sql).fingerprint;
            st.first_seen = base + serial * 60000;
            st.last_seen = st.first_seen + lifespan_days * day;
            st.executions = execs;
            st.total_time_ms = double(each + (int64_t(i) < rem ? 1 : 0));
            auto [it, fresh] = stats.try_emplace(st.fingerprint, st);
            PLANFORGE_ASSERT(fresh, "fixture fingerprints collided");
            (void)it;
            ++serial;
        }
    };

    add_group(52, 2, 2, 30000);      // < 1 week          3%
    add_group(181, 2, 14, 50000);    // 1 - 4 weeks       5%
    add_group(545, 2, 56, 10000);    // 4 - 12 weeks      6% across both groups
    add_group(547, 40900, 56, 50000);
    add_group(269, 2, 112, 40000);   // 12 - 24 weeks    19%
    add_group(271, 8700, 112, 150000);
    add_group(4558, 2, 210, 60000);  // 24 - 52 weeks    31%
    add_group(933, 100000, 210, 50000);
    add_group(5492, 108600, 210, 200000);
    add_group(3600, 1, 0, 360000);   // one-off statements: the other 36%
    return stats;
}

} // namespace planforge::testing
