#include "planforge/catalog.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "planforge/rng.hpp"

namespace planforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

const ColumnDef *TableDef::find_column(std::string_view col) const {
    for (const auto &c : columns)
        if (c.name == col) return &c;
    return nullptr;
}

bool TableDef::has_index(std::string_view col) const {
    return std::find(indexes.begin(), indexes.end(), col) != indexes.end();
}

void Schema::validate() const {
    std::set<std::string> names;
    for (const auto &t : tables) {
        if (t.name.empty()) raise(errc::schema, "table with empty name");
        if (!names.insert(t.name).second) raise(errc::schema, "duplicate table name: " + t.name);
        std::set<std::string> cols;
        for (const auto &c : t.columns)
            if (!cols.insert(c.name).second)
                raise(errc::schema, "duplicate column " + t.name + "." + c.name);
        if (!t.find_column(t.primary_key))
            raise(errc::schema, "primary key " + t.primary_key + " not a column of " + t.name);
        for (const auto &ix : t.indexes)
            if (!t.find_column(ix))
                raise(errc::schema, "index column " + ix + " not a column of " + t.name);
    }
}

const TableDef *Schema::find_table(std::string_view name) const {
    for (const auto &t : tables)
        if (t.name == name) return &t;
    return nullptr;
}

const TableDef &Schema::table(std::string_view name) const {
    const TableDef *t = find_table(name);
    if (!t) raise(errc::schema, "unknown table: " + std::string(name));
    return *t;
}

int64_t Column::append_string(const std::string &s) {
    auto it = dict_lookup.find(s);
    if (it != dict_lookup.end()) {
        ints.push_back(it->second);
        return it->second;
    }
    int64_t code = int64_t(dict.size());
    dict.push_back(s);
    dict_lookup.emplace(s, code);
    ints.push_back(code);
    return code;
}

Value Column::value_at(size_t row) const {
    switch (type) {
    case ColumnType::int64: return ints[row];
    case ColumnType::float64: return floats[row];
    case ColumnType::string: return dict[size_t(ints[row])];
    }
    raise(errc::internal, "bad column type");
}

size_t Database::table_index(std::string_view name) const {
    for (size_t i = 0; i < schema.tables.size(); ++i)
        if (schema.tables[i].name == name) return i;
    raise(errc::schema, "unknown table: " + std::string(name));
}

const Table &Database::table(std::string_view name) const { return tables[table_index(name)]; }

const Column &Database::column(std::string_view table_name, std::string_view col) const {
    size_t ti = table_index(table_name);
    const TableDef &def = schema.tables[ti];
    for (size_t i = 0; i < def.columns.size(); ++i)
        if (def.columns[i].name == col) return tables[ti].columns[i];
    raise(errc::schema, "unknown column: " + std::string(table_name) + "." + std::string(col));
}

size_t Database::column_index(std::string_view table_name, std::string_view col) const {
    const TableDef &def = schema.tables[table_index(table_name)];
    for (size_t i = 0; i < def.columns.size(); ++i)
        if (def.columns[i].name == col) return i;
    raise(errc::schema, "unknown column: " + std::string(table_name) + "." + std::string(col));
}

const Database::Index *Database::find_index(std::string_view table, std::string_view col) const {
    auto it = indexes.find(std::make_pair(std::string(table), std::string(col)));
    return it == indexes.end() ? nullptr : &it->second;
}

void Database::build_indexes() {
    indexes.clear();
    for (size_t ti = 0; ti < schema.tables.size(); ++ti) {
        const TableDef &def = schema.tables[ti];
        for (const auto &ixcol : def.indexes) {
            const Column &col = column(def.name, ixcol);
            if (col.type == ColumnType::float64)
                raise(errc::schema, "index on float column unsupported: " + def.name + "." + ixcol);
            Index ix;
            for (size_t row = 0; row < col.ints.size(); ++row)
                ix[col.ints[row]].push_back(uint32_t(row));
            indexes.emplace(std::make_pair(def.name, ixcol), std::move(ix));
        }
    }
}

void Database::validate() const {
    schema.validate();
    if (tables.size() != schema.tables.size()) raise(errc::schema, "table storage count mismatch");
    for (size_t ti = 0; ti < tables.size(); ++ti) {
        const TableDef &def = schema.tables[ti];
        const Table &t = tables[ti];
        if (t.columns.size() != def.columns.size())
            raise(errc::schema, "column storage count mismatch in " + def.name);
        for (size_t ci = 0; ci < t.columns.size(); ++ci) {
            if (t.columns[ci].type != def.columns[ci].type)
                raise(errc::schema, "column type mismatch: " + def.name + "." + def.columns[ci].name);
            if (t.columns[ci].size() != t.row_count)
                raise(errc::schema, "column length mismatch: " + def.name + "." + def.columns[ci].name);
        }
        // primary-key distinctness
        size_t pk_idx = 0;
        while (def.columns[pk_idx].name != def.primary_key)
            ++pk_idx;
        const Column &pk = t.columns[pk_idx];
        if (pk.type == ColumnType::float64) raise(errc::schema, "float primary key unsupported");
        std::unordered_set<int64_t> seen;
        seen.reserve(pk.ints.size());
        for (int64_t v : pk.ints)
            if (!seen.insert(v).second)
                raise(errc::schema, "duplicate primary key in " + def.name);
    }
}

void GenConfig::validate() const {
    auto positive = [](uint64_t v, const char *field) {
        if (v < 1) raise(errc::config, std::string("GenConfig.") + field + " must be >= 1");
    };
    positive(n_actors, "n_actors");
    positive(n_movies, "n_movies");
    positive(n_companies, "n_companies");
    positive(stars_per_movie, "stars_per_movie");
    positive(companies_per_movie, "companies_per_movie");
    if (skew < 0) raise(errc::config, "GenConfig.skew must be >= 0");
    if (stars_per_movie > n_actors)
        raise(errc::config, "GenConfig.stars_per_movie exceeds n_actors");
    if (companies_per_movie > n_companies)
        raise(errc::config, "GenConfig.companies_per_movie exceeds n_companies");
    double sum = 0;
    for (double p : rating_distribution) {
        if (p < 0) raise(errc::config, "GenConfig.rating_distribution has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        raise(errc::config, "GenConfig.rating_distribution must sum to 1");
}

Schema movie_schema() {
    Schema s;
    s.tables = {
        TableDef{"Actor",
                 {{"actor_id", ColumnType::int64}, {"name", ColumnType::string}},
                 "actor_id",
                 {"name"}},
        TableDef{"Movie",
                 {{"movie_id", ColumnType::int64},
                  {"title", ColumnType::string},
                  {"rating", ColumnType::int64}},
                 "movie_id",
                 {"rating"}},
        TableDef{"Company",
                 {{"company_id", ColumnType::int64}, {"name", ColumnType::string}},
                 "company_id",
                 {"name"}},
        TableDef{"Stars",
                 {{"star_id", ColumnType::int64},
                  {"actor_id", ColumnType::int64},
                  {"movie_id", ColumnType::int64}},
                 "star_id",
                 {"actor_id", "movie_id"}},
        TableDef{"Produces",
                 {{"produce_id", ColumnType::int64},
                  {"company_id", ColumnType::int64},
                  {"movie_id", ColumnType::int64}},
                 "produce_id",
                 {"company_id", "movie_id"}},
    };
    s.validate();
    return s;
}

namespace {

std::string padded_name(const char *prefix, uint64_t id) {
    std::string n = std::to_string(id);
    std::string out = prefix;
    out.append(8 - std::min<size_t>(8, n.size()), '0');
    out += n;
    return out;
}

} // namespace

Database generate_movie_db(const GenConfig &cfg) {
    cfg.validate();
    Database db;
    db.schema = movie_schema();
    db.seed = cfg.seed;
    db.tables.resize(db.schema.tables.size());

    auto table_slot = [&](std::string_view name) -> Table & {
        return db.tables[db.table_index(name)];
    };
    auto init_columns = [&](std::string_view name) {
        size_t ti = db.table_index(name);
        Table &t = db.tables[ti];
        t.columns.resize(db.schema.tables[ti].columns.size());
        for (size_t ci = 0; ci < t.columns.size(); ++ci)
            t.columns[ci].type = db.schema.tables[ti].columns[ci].type;
        return &t;
    };
    for (const auto &t : db.schema.tables)
        init_columns(t.name);

    // Actor
    {
        Table &t = table_slot("Actor");
        t.row_count = cfg.n_actors;
        for (uint64_t i = 0; i < cfg.n_actors; ++i) {
            t.columns[0].ints.push_back(int64_t(i));
            t.columns[1].append_string(padded_name("actor_", i));
        }
    }
    // Company
    {
        Table &t = table_slot("Company");
        t.row_count = cfg.n_companies;
        for (uint64_t i = 0; i < cfg.n_companies; ++i) {
            t.columns[0].ints.push_back(int64_t(i));
            t.columns[1].append_string(padded_name("company_", i));
        }
    }
    // Movie: rating drawn from the configured distribution.
    {
        Rng rng(mix_seed(cfg.seed, fnv1a64("movie")));
        std::array<double, 5> cdf{};
        double acc = 0;
        for (size_t i = 0; i < 5; ++i) {
            acc += cfg.rating_distribution[i];
            cdf[i] = acc;
        }
        Table &t = table_slot("Movie");
        t.row_count = cfg.n_movies;
        for (uint64_t i = 0; i < cfg.n_movies; ++i) {
            t.columns[0].ints.push_back(int64_t(i));
            t.columns[1].append_string(padded_name("movie_", i));
            double u = rng.next_double();
            int64_t rating = 5;
            for (size_t r = 0; r < 5; ++r)
                if (u < cdf[r]) {
                    rating = int64_t(r + 1);
                    break;
                }
            t.columns[2].ints.push_back(rating);
        }
    }
    // Junction tables: per movie, draw distinct entities with Zipf popularity.
    auto fill_junction = [&](std::string_view table, const char *stream, uint64_t per_movie,
                             uint64_t n_entities) {
        Rng rng(mix_seed(cfg.seed, fnv1a64(stream)));
        ZipfSampler zipf(n_entities, cfg.skew);
        Table &t = table_slot(table);
        t.row_count = cfg.n_movies * per_movie;
        int64_t next_id = 0;
        std::vector<int64_t> picked;
        for (uint64_t m = 0; m < cfg.n_movies; ++m) {
            picked.clear();
            while (picked.size() < per_movie) {
                int64_t e = int64_t(zipf.sample(rng));
                if (std::find(picked.begin(), picked.end(), e) == picked.end()) picked.push_back(e);
            }
            for (int64_t e : picked) {
                t.columns[0].ints.push_back(next_id++);
                t.columns[1].ints.push_back(e);
                t.columns[2].ints.push_back(int64_t(m));
            }
        }
    };
    fill_junction("Stars", "stars", cfg.stars_per_movie, cfg.n_actors);
    fill_junction("Produces", "produces", cfg.companies_per_movie, cfg.n_companies);

    db.build_indexes();
    return db;
}

ColumnStats column_stats(const Database &db, std::string_view table, std::string_view column,
                         double error_level) {
    if (error_level < 0) raise(errc::config, "error_level must be >= 0");
    const Column &col = db.column(table, column);
    const Table &t = db.table(table);

    ColumnStats st;
    st.row_count = int64_t(t.row_count);
    st.noise_seed = mix_seed(db.seed, fnv1a64(std::string(table) + "." + std::string(column)));

    int64_t ndv = 0;
    if (col.type == ColumnType::string) {
        ndv = int64_t(col.dict.size());
        // Bounds over dictionary strings, lexicographic.
        if (!col.dict.empty()) {
            auto [mn, mx] = std::minmax_element(col.dict.begin(), col.dict.end());
            st.min = *mn;
            st.max = *mx;
        } else {
            st.min = std::string();
            st.max = std::string();
        }
    } else if (col.type == ColumnType::int64) {
        std::unordered_set<int64_t> seen(col.ints.begin(), col.ints.end());
        ndv = int64_t(seen.size());
        if (!col.ints.empty()) {
            auto [mn, mx] = std::minmax_element(col.ints.begin(), col.ints.end());
            st.min = *mn;
            st.max = *mx;
        } else {
            st.min = int64_t(0);
            st.max = int64_t(0);
        }
    } else {
        std::unordered_set<double> seen(col.floats.begin(), col.floats.end());
        ndv = int64_t(seen.size());
        if (!col.floats.empty()) {
            auto [mn, mx] = std::minmax_element(col.floats.begin(), col.floats.end());
            st.min = *mn;
            st.max = *mx;
        } else {
            st.min = 0.0;
            st.max = 0.0;
        }
    }

    if (error_level > 0 && st.row_count > 0) {
        Rng rng(st.noise_seed);
        double factor = rng.next_lognormal(error_level);
        double perturbed = std::max(1.0, std::round(double(ndv) * factor));
        ndv = int64_t(std::min<double>(perturbed, double(st.row_count)));
    }
    st.ndv = std::max<int64_t>(ndv, t.row_count > 0 ? 1 : 0);
    return st;
}

namespace {

bool eval_predicate(const Column &col, size_t row, CompareOp op, const Value &v) {
    switch (col.type) {
    case ColumnType::int64:
        if (value_type(v) != ColumnType::int64) return false;
        return compare(col.ints[row], op, std::get<int64_t>(v));
    case ColumnType::float64: {
        double rhs;
        if (value_type(v) == ColumnType::float64)
            rhs = std::get<double>(v);
        else if (value_type(v) == ColumnType::int64)
            rhs = double(std::get<int64_t>(v));
        else
            return false;
        return compare(col.floats[row], op, rhs);
    }
    case ColumnType::string: {
        if (value_type(v) != ColumnType::string) return false;
        if (op != CompareOp::eq)
            raise(errc::schema, "range predicate on string column unsupported");
        auto it = col.dict_lookup.find(std::get<std::string>(v));
        if (it == col.dict_lookup.end()) return false;
        return col.ints[row] == it->second;
    }
    }
    return false;
}

} // namespace

int64_t true_cardinality(const Database &db, std::span<const std::string> tables,
                         std::span<const Predicate> predicates, std::span<const JoinPair> joins) {
    // Resolve references up front so unknown columns fail loudly.
    struct TableCtx {
        std::string name;
        const Table *storage;
        std::vector<uint32_t> rows; // rows surviving single-table predicates
    };
    std::vector<TableCtx> ctx;
    for (const auto &name : tables) {
        TableCtx c;
        c.name = name;
        c.storage = &db.table(name);
        ctx.push_back(std::move(c));
    }
    auto find_ctx = [&](std::string_view t) -> size_t {
        for (size_t i = 0; i < ctx.size(); ++i)
            if (ctx[i].name == t) return i;
        raise(errc::schema, "predicate references table not in query: " + std::string(t));
    };
    for (const auto &p : predicates)
        (void)db.column(p.table, p.column); // existence check
    for (const auto &j : joins) {
        (void)db.column(j.left_table, j.left_column);
        (void)db.column(j.right_table, j.right_column);
    }

    for (auto &c : ctx) {
        for (uint32_t row = 0; row < c.storage->row_count; ++row) {
            bool ok = true;
            for (const auto &p : predicates) {
                if (p.table != c.name) continue;
                const Column &col = db.column(p.table, p.column);
                if (!eval_predicate(col, row, p.op, p.value)) {
                    ok = false;
                    break;
                }
            }
            if (ok) c.rows.push_back(row);
        }
    }

    // Backtracking over tables in given order; a join constraint is checked as
    // soon as both of its tables are bound.
    std::vector<uint32_t> bound(ctx.size(), 0);
    std::vector<bool> is_bound(ctx.size(), false);
    int64_t count = 0;

    auto join_value = [&](std::string_view t, std::string_view c, uint32_t row) -> Value {
        return db.column(t, c).value_at(row);
    };

    std::function<void(size_t)> rec = [&](size_t depth) {
        if (depth == ctx.size()) {
            ++count;
            return;
        }
        TableCtx &c = ctx[depth];
        for (uint32_t row : c.rows) {
            bound[depth] = row;
            is_bound[depth] = true;
            bool ok = true;
            for (const auto &j : joins) {
                size_t li = find_ctx(j.left_table), ri = find_ctx(j.right_table);
                if (!is_bound[li] || !is_bound[ri]) continue;
                Value lv = join_value(j.left_table, j.left_column, bound[li]);
                Value rv = join_value(j.right_table, j.right_column, bound[ri]);
                if (!(lv == rv)) {
                    ok = false;
                    break;
                }
            }
            if (ok) rec(depth + 1);
        }
        is_bound[depth] = false;
    };
    rec(0);
    return count;
}

namespace {

void write_u64(std::ofstream &out, uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.write(buf, 8);
}

uint64_t read_u64(std::ifstream &in) {
    char buf[8];
    in.read(buf, 8);
    if (!in) raise(errc::data, "truncated binary column file");
    uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
}

} // namespace

void save_db(const Database &db, const std::string &dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["format"] = "planforge-db-v1";
    manifest["seed"] = db.seed;
    json jtables = json::array();
    for (size_t ti = 0; ti < db.schema.tables.size(); ++ti) {
        const TableDef &def = db.schema.tables[ti];
        json jt;
        jt["name"] = def.name;
        jt["primary_key"] = def.primary_key;
        jt["indexes"] = def.indexes;
        jt["row_count"] = db.tables[ti].row_count;
        json jcols = json::array();
        for (const auto &c : def.columns)
            jcols.push_back({{"name", c.name}, {"type", to_string(c.type)}});
        jt["columns"] = jcols;
        jtables.push_back(jt);
    }
    manifest["tables"] = jtables;
    std::ofstream mf(dir + "/manifest.json");
    mf << manifest.dump(2) << "\n";

    for (size_t ti = 0; ti < db.schema.tables.size(); ++ti) {
        const TableDef &def = db.schema.tables[ti];
        for (size_t ci = 0; ci < def.columns.size(); ++ci) {
            const Column &col = db.tables[ti].columns[ci];
            std::string base = dir + "/" + def.name + "." + def.columns[ci].name;
            std::ofstream out(base + ".bin", std::ios::binary);
            if (col.type == ColumnType::float64) {
                write_u64(out, col.floats.size());
                out.write(reinterpret_cast<const char *>(col.floats.data()),
                          std::streamsize(col.floats.size() * 8));
            } else {
                write_u64(out, col.ints.size());
                out.write(reinterpret_cast<const char *>(col.ints.data()),
                          std::streamsize(col.ints.size() * 8));
            }
            if (col.type == ColumnType::string) {
                std::ofstream dictf(base + ".dict", std::ios::binary);
                write_u64(dictf, col.dict.size());
                for (const auto &s : col.dict) {
                    write_u64(dictf, s.size());
                    dictf.write(s.data(), std::streamsize(s.size()));
                }
            }
        }
    }
}

Database load_db(const std::string &dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) raise(errc::data, "cannot open " + dir + "/manifest.json");
    json manifest = json::parse(mf, nullptr, false);
    if (manifest.is_discarded()) raise(errc::data, "malformed manifest.json");
    if (manifest.value("format", "") != "planforge-db-v1")
        raise(errc::data, "unsupported database format");

    Database db;
    db.seed = manifest.value("seed", uint64_t(0));
    for (const auto &jt : manifest.at("tables")) {
        TableDef def;
        def.name = jt.at("name").get<std::string>();
        def.primary_key = jt.at("primary_key").get<std::string>();
        def.indexes = jt.at("indexes").get<std::vector<std::string>>();
        for (const auto &jc : jt.at("columns")) {
            ColumnDef c;
            c.name = jc.at("name").get<std::string>();
            std::string ty = jc.at("type").get<std::string>();
            if (ty == "int64")
                c.type = ColumnType::int64;
            else if (ty == "float64")
                c.type = ColumnType::float64;
            else if (ty == "string")
                c.type = ColumnType::string;
            else
                raise(errc::data, "unknown column type in manifest: " + ty);
            def.columns.push_back(std::move(c));
        }
        db.schema.tables.push_back(std::move(def));

        Table t;
        t.row_count = jt.at("row_count").get<uint64_t>();
        const TableDef &d = db.schema.tables.back();
        for (const auto &cd : d.columns) {
            Column col;
            col.type = cd.type;
            std::string base = dir + "/" + d.name + "." + cd.name;
            std::ifstream in(base + ".bin", std::ios::binary);
            if (!in) raise(errc::data, "missing column file: " + base + ".bin");
            uint64_t n = read_u64(in);
            if (col.type == ColumnType::float64) {
                col.floats.resize(n);
                in.read(reinterpret_cast<char *>(col.floats.data()), std::streamsize(n * 8));
            } else {
                col.ints.resize(n);
                in.read(reinterpret_cast<char *>(col.ints.data()), std::streamsize(n * 8));
            }
            if (!in) raise(errc::data, "truncated column file: " + base + ".bin");
            if (col.type == ColumnType::string) {
                std::ifstream dictf(base + ".dict", std::ios::binary);
                if (!dictf) raise(errc::data, "missing dict file: " + base + ".dict");
                uint64_t dn = read_u64(dictf);
                col.dict.reserve(dn);
                for (uint64_t i = 0; i < dn; ++i) {
                    uint64_t len = read_u64(dictf);
                    std::string s(len, '\0');
                    dictf.read(s.data(), std::streamsize(len));
                    if (!dictf) raise(errc::data, "truncated dict file: " + base + ".dict");
                    col.dict_lookup.emplace(s, int64_t(i));
                    col.dict.push_back(std::move(s));
                }
            }
            t.columns.push_back(std::move(col));
        }
        db.tables.push_back(std::move(t));
    }
    db.validate();
    db.build_indexes();
    return db;
}

} // namespace planforge
