#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace planforge {

using Instant = int64_t; // milliseconds since epoch

struct LogRecord {
    Instant timestamp = 0;
    double duration_ms = 0; // must be finite and >= 0, else the record is malformed
    std::string sql;
};

struct TemplateStats {
    std::string fingerprint;
    Instant first_seen = 0;
    Instant last_seen = 0;
    uint64_t executions = 0;
    double total_time_ms = 0;
};

struct AggregateResult {
    std::map<std::string, TemplateStats> stats;
    uint64_t malformed = 0; // skipped records; ingestion never fails
};

// One pass: templatizes each record's sql and folds it into its template's
// stats. Malformed records (negative/non-finite duration, empty sql) are
// skipped and counted.
AggregateResult aggregate(std::span<const LogRecord> log);

// Folds `from` into `into`; associative and commutative, so aggregation can
// be sharded by fingerprint and merged in any order.
void merge_stats(std::map<std::string, TemplateStats> &into,
                 const std::map<std::string, TemplateStats> &from);

struct BucketRow {
    std::string label;
    uint64_t template_count = 0;
    int pct_cluster_time = 0;     // whole percent of all ingested time
    uint64_t p50_executions = 0;  // raw lower median
    std::string p50_display;      // "< 1000", the median to the nearest 100, or "-"
};

struct BucketReport {
    std::vector<BucketRow> rows;  // the five lifespan buckets, shortest first
    BucketRow total;
    uint64_t adhoc_statements = 0; // single-execution templates, kept out of the rows
    double total_time_ms = 0;      // share denominator: every ingested record
};

// Groups repeated templates (>= 2 executions) by lifespan and reports, per
// bucket, the template count, the share of all ingested time, and the median
// execution count. Single-execution statements stay out of the buckets but
// keep their time in the denominator. Empty stats produce an empty report.
BucketReport bucket_report(const std::map<std::string, TemplateStats> &stats);

std::string render_report(const BucketReport &r); // aligned text table
std::string report_csv(const BucketReport &r);

struct LogFile {
    std::vector<LogRecord> records;
    uint64_t malformed_lines = 0;
};

// CSV log: `timestamp_ms,duration_ms,sql` per line; the sql field runs to the
// end of the line, commas included. A leading header line is skipped. Lines
// that do not yield two leading numeric fields are counted, not fatal.
LogFile read_log_csv(const std::string &path);

} // namespace planforge
