#include "planforge/workload.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "planforge/error.hpp"
#include "planforge/sqlfront.hpp"

namespace planforge {

namespace {

constexpr double kMsPerWeek = 7.0 * 86400.0 * 1000.0;

const char *kBucketLabels[5] = {"< 1 week", "1 - 4 weeks", "4 - 12 weeks", "12 - 24 weeks",
                                "24 - 52 weeks"};

// Upper edges in weeks; the last bucket absorbs anything longer (the intended
// horizon is a year of logs).
constexpr double kBucketEdges[4] = {1, 4, 12, 24};

size_t bucket_of(double lifespan_weeks) {
    for (size_t i = 0; i < 4; ++i)
        if (lifespan_weeks < kBucketEdges[i]) return i;
    return 4;
}

bool malformed(const LogRecord &r) {
    return !(r.duration_ms >= 0) || !std::isfinite(r.duration_ms) || r.sql.empty();
}

// Lower median: the element at index (n-1)/2 of the sorted counts, so the
// statistic is always an execution count that actually occurred.
uint64_t lower_median(std::vector<uint64_t> &counts) {
    if (counts.empty()) return 0;
    size_t mid = (counts.size() - 1) / 2;
    std::nth_element(counts.begin(), counts.begin() + ptrdiff_t(mid), counts.end());
    return counts[mid];
}

// Medians print to the nearest hundred at every magnitude — the year-long
// commercial profile's reference values (40900, 8700, 108600) all carry
// hundreds precision. Counts under a thousand print as "< 1000".
std::string display_median(uint64_t n_templates, uint64_t median) {
    if (n_templates == 0) return "-";
    if (median < 1000) return "< 1000";
    return std::to_string((median + 50) / 100 * 100);
}

int whole_percent(double part, double total) {
    if (total <= 0) return 0;
    return int(std::llround(100.0 * part / total));
}

} // namespace

AggregateResult aggregate(std::span<const LogRecord> log) {
    AggregateResult out;
    for (const LogRecord &r : log) {
        if (malformed(r)) {
            ++out.malformed;
            continue;
        }
        std::string fp = templatize(r.sql).fingerprint;
        auto [it, fresh] = out.stats.try_emplace(fp);
        TemplateStats &st = it->second;
        if (fresh) {
            st.fingerprint = fp;
            st.first_seen = st.last_seen = r.timestamp;
        } else {
            st.first_seen = std::min(st.first_seen, r.timestamp);
            st.last_seen = std::max(st.last_seen, r.timestamp);
        }
        ++st.executions;
        st.total_time_ms += r.duration_ms;
    }
    return out;
}

void merge_stats(std::map<std::string, TemplateStats> &into,
                 const std::map<std::string, TemplateStats> &from) {
    for (const auto &[fp, st] : from) {
        auto [it, fresh] = into.try_emplace(fp, st);
        if (fresh) continue;
        TemplateStats &dst = it->second;
        dst.first_seen = std::min(dst.first_seen, st.first_seen);
        dst.last_seen = std::max(dst.last_seen, st.last_seen);
        dst.executions += st.executions;
        dst.total_time_ms += st.total_time_ms;
    }
}

BucketReport bucket_report(const std::map<std::string, TemplateStats> &stats) {
    BucketReport rep;
    if (stats.empty()) return rep;

    struct Acc {
        uint64_t count = 0;
        double time_ms = 0;
        std::vector<uint64_t> execs;
    };
    Acc accs[5];
    Acc all;

    for (const auto &[fp, st] : stats) {
        PLANFORGE_ASSERT(st.first_seen <= st.last_seen, "template seen backwards in time");
        rep.total_time_ms += st.total_time_ms;
        if (st.executions < 2) {
            ++rep.adhoc_statements; // one-off statement: denominator only
            continue;
        }
        double weeks = double(st.last_seen - st.first_seen) / kMsPerWeek;
        Acc &a = accs[bucket_of(weeks)];
        ++a.count;
        a.time_ms += st.total_time_ms;
        a.execs.push_back(st.executions);
        ++all.count;
        all.execs.push_back(st.executions);
    }

    rep.rows.resize(5);
    int pct_sum = 0;
    for (size_t i = 0; i < 5; ++i) {
        BucketRow &row = rep.rows[i];
        row.label = kBucketLabels[i];
        row.template_count = accs[i].count;
        row.pct_cluster_time = whole_percent(accs[i].time_ms, rep.total_time_ms);
        row.p50_executions = lower_median(accs[i].execs);
        row.p50_display = display_median(accs[i].count, row.p50_executions);
        pct_sum += row.pct_cluster_time;
    }
    rep.total.label = "total";
    rep.total.template_count = all.count;
    // The totals row reports the sum of the rounded bucket shares, keeping the
    // column internally consistent.
    rep.total.pct_cluster_time = pct_sum;
    rep.total.p50_executions = lower_median(all.execs);
    rep.total.p50_display = display_median(all.count, rep.total.p50_executions);
    return rep;
}

std::string render_report(const BucketReport &r) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %10s %16s %16s\n", "lifespan", "templates",
                  "% cluster time", "p50 executions");
    out += line;
    auto emit = [&](const BucketRow &row) {
        std::snprintf(line, sizeof(line), "%-14s %10llu %15d%% %16s\n", row.label.c_str(),
                      (unsigned long long)row.template_count, row.pct_cluster_time,
                      row.p50_display.c_str());
        out += line;
    };
    for (const BucketRow &row : r.rows) emit(row);
    emit(r.total);
    std::snprintf(line, sizeof(line),
                  "one-off statements: %llu (the other %d%% of cluster time)\n",
                  (unsigned long long)r.adhoc_statements,
                  100 - r.total.pct_cluster_time);
    out += line;
    return out;
}

std::string report_csv(const BucketReport &r) {
    std::string out = "bucket,templates,pct_cluster_time,p50_executions,p50_display\n";
    auto emit = [&](const BucketRow &row) {
        out += row.label + "," + std::to_string(row.template_count) + "," +
               std::to_string(row.pct_cluster_time) + "," +
               std::to_string(row.p50_executions) + "," + row.p50_display + "\n";
    };
    for (const BucketRow &row : r.rows) emit(row);
    emit(r.total);
    return out;
}

LogFile read_log_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) raise(errc::data, "cannot open log file " + path);

    LogFile out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("timestamp", 0) == 0) continue; // header
        }
        size_t c1 = line.find(',');
        size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos) {
            ++out.malformed_lines;
            continue;
        }
        LogRecord rec;
        auto ts = std::from_chars(line.data(), line.data() + c1, rec.timestamp);
        auto dur = std::from_chars(line.data() + c1 + 1, line.data() + c2, rec.duration_ms);
        if (ts.ec != std::errc() || ts.ptr != line.data() + c1 || dur.ec != std::errc() ||
            dur.ptr != line.data() + c2) {
            ++out.malformed_lines;
            continue;
        }
        rec.sql = line.substr(c2 + 1); // the sql keeps its commas
        out.records.push_back(std::move(rec));
    }
    return out;
}

} // namespace planforge
