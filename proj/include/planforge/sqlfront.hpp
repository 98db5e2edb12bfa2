#pragma once

#include <string>
#include <vector>

#include "planforge/catalog.hpp"
#include "planforge/value.hpp"

namespace planforge {

// Equality between two columns; sides are kept in lexicographic order so that
// edge sets compare structurally.
struct JoinEdge {
    std::string left_table, left_column;
    std::string right_table, right_column;

    void normalize();
    bool operator==(const JoinEdge &o) const = default;
    bool operator<(const JoinEdge &o) const;
    std::string to_string() const;
};

struct QueryFilter {
    std::string table; // empty until bound when the column was unqualified
    std::string column;
    CompareOp op = CompareOp::eq;
    Term term;

    bool operator==(const QueryFilter &o) const = default;
    bool operator<(const QueryFilter &o) const;
    std::string to_string() const;
};

// COUNT(*) conjunctive equijoin query. Tables, edges and filters are kept
// sorted, so equal queries compare equal structurally.
struct LogicalQuery {
    std::vector<std::string> tables;
    std::vector<JoinEdge> join_edges;
    std::vector<QueryFilter> filters;

    void canonicalize();
    bool operator==(const LogicalQuery &o) const = default;
};

// Accepted grammar:
//   SELECT COUNT(*) FROM t [, t | JOIN t ON a = b]* [WHERE cmp [AND cmp]*] [;]
// where cmp is `column op (literal | $n | column)`; a column = column
// comparison must use `=` and becomes a join edge. `--` starts a comment.
// Keywords are case-insensitive, identifiers are not.
LogicalQuery parse(const std::string &sql);

// Canonical SQL text; parse(print(q)) == q for every parser-produced q.
std::string print(const LogicalQuery &q);

struct QueryTemplate {
    std::string fingerprint; // 16 hex digits
    std::string raw_example;
    int parameter_count = 0;
};

// Lexical templatization: masks quoted strings and numeric literals, lowercases
// everything else, collapses whitespace. Total over arbitrary input.
QueryTemplate templatize(const std::string &sql);

// Reads a query file: one statement per line, `--` comments, blank lines skipped.
std::vector<std::string> read_query_file(const std::string &path);

// LogicalQuery resolved against a database schema.
struct BoundQuery {
    std::vector<std::string> tables; // sorted
    std::vector<QueryFilter> filters; // table always set, type-checked
    std::vector<JoinEdge> edges;

    int table_pos(std::string_view name) const; // -1 when absent
    std::vector<QueryFilter> filters_for(std::string_view table) const;
};

// Resolves names, disambiguates unqualified columns, and type-checks filters
// and join edges (joins only over int64 columns; string filters equality-only).
BoundQuery bind_query(const Database &db, const LogicalQuery &q);

} // namespace planforge
