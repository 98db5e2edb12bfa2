#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "planforge/value.hpp"

namespace planforge {

struct ColumnDef {
    std::string name;
    ColumnType type = ColumnType::int64;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;
    std::string primary_key;
    std::vector<std::string> indexes; // kept sorted

    const ColumnDef *find_column(std::string_view col) const;
    bool has_index(std::string_view col) const;
};

struct Schema {
    std::vector<TableDef> tables;

    void validate() const; // throws errc::schema on any broken invariant
    const TableDef *find_table(std::string_view name) const;
    const TableDef &table(std::string_view name) const; // throws if absent
};

// Columnar storage. Strings are dictionary-encoded: `ints` holds codes into
// `dict`, and `dict_lookup` resolves literals at bind time.
struct Column {
    ColumnType type = ColumnType::int64;
    std::vector<int64_t> ints;
    std::vector<double> floats;
    std::vector<std::string> dict;
    std::unordered_map<std::string, int64_t> dict_lookup;

    size_t size() const { return type == ColumnType::float64 ? floats.size() : ints.size(); }
    int64_t append_string(const std::string &s); // returns the dict code
    Value value_at(size_t row) const;

    // dictionary code for a string literal, -1 when the value never occurs
    int64_t code_of(const std::string &s) const {
        auto it = dict_lookup.find(s);
        return it == dict_lookup.end() ? -1 : it->second;
    }
};

struct Table {
    uint64_t row_count = 0;
    std::vector<Column> columns; // aligned with TableDef::columns
};

struct Database {
    Schema schema;
    std::vector<Table> tables; // aligned with schema.tables
    uint64_t seed = 0;

    // Hash indexes over dictionary codes / raw int64 values.
    using Index = std::unordered_map<int64_t, std::vector<uint32_t>>;
    std::map<std::pair<std::string, std::string>, Index> indexes;

    size_t table_index(std::string_view name) const; // throws errc::schema
    const Table &table(std::string_view name) const;
    const Column &column(std::string_view table, std::string_view col) const;
    size_t column_index(std::string_view table, std::string_view col) const;
    const Index *find_index(std::string_view table, std::string_view col) const;

    void build_indexes();
    void validate() const; // schema + storage invariants
};

struct GenConfig {
    uint64_t seed = 0;
    uint64_t n_actors = 100000;
    uint64_t n_movies = 100000;
    uint64_t n_companies = 1000;
    uint64_t stars_per_movie = 5;
    uint64_t companies_per_movie = 1;
    double skew = 1.0;
    std::array<double, 5> rating_distribution = {0.1, 0.2, 0.3, 0.25, 0.15};

    void validate() const; // throws errc::config naming the field
};

// The five-relation movie schema: Actor, Movie, Company, Stars, Produces.
Schema movie_schema();

// Deterministic synthetic database for a config. Actor and company popularity
// in Stars/Produces follows Zipf(skew); (actor, movie) and (company, movie)
// pairs are distinct within a movie.
Database generate_movie_db(const GenConfig &cfg);

struct ColumnStats {
    int64_t ndv = 0;
    Value min;
    Value max;
    int64_t row_count = 0;
    uint64_t noise_seed = 0;
};

// error_level = 0 reports exact ndv/min/max. error_level > 0 multiplies ndv by
// a lognormal(sigma = error_level) factor seeded per (db.seed, table, column),
// clamped to [1, row_count]. min/max stay exact.
ColumnStats column_stats(const Database &db, std::string_view table, std::string_view column,
                         double error_level);

// Bound predicate / join pair for the naive oracle.
struct Predicate {
    std::string table;
    std::string column;
    CompareOp op = CompareOp::eq;
    Value value;
};

struct JoinPair {
    std::string left_table, left_column;
    std::string right_table, right_column;
};

// Exact row count of the conjunctive query over the named tables, computed by
// naive backtracking enumeration. Independent of the execution engine.
int64_t true_cardinality(const Database &db, std::span<const std::string> tables,
                         std::span<const Predicate> predicates, std::span<const JoinPair> joins);

// Directory layout: manifest.json plus one length-prefixed binary file per
// column (strings keep a companion .dict file).
void save_db(const Database &db, const std::string &dir);
Database load_db(const std::string &dir);

} // namespace planforge
