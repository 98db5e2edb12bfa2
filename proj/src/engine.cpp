#include "planforge/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "planforge/error.hpp"
#include "planforge/rng.hpp"

namespace planforge {

namespace {

// Rows flowing between operators: row ids per constituent table.
struct Chunk {
    std::vector<std::string> tables;        // in leaf order
    std::vector<std::vector<uint32_t>> rows; // rows[t][i] = row id in tables[t]
    size_t size = 0;

    int table_pos(const std::string &t) const {
        for (size_t i = 0; i < tables.size(); ++i)
            if (tables[i] == t)
                return (int)i;
        return -1;
    }
};

struct Sampling {
    bool enabled = false;
    double fraction = 1.0;
    uint64_t seed = 0;
    uint64_t threshold = 0; // keep row iff hash < threshold
};

struct Exec {
    const Database &db;
    const Sampling &sampling;
    uint64_t work = 0;
    uint64_t limit; // 0 = none

    Exec(const Database &d, const Sampling &s, uint64_t lim)
        : db(d), sampling(s), limit(lim) {}

    void charge(uint64_t amount) {
        work += amount;
        if (limit && work > limit)
            raise(errc::budget, "execution exceeded the work limit of " +
                                    std::to_string(limit) + " tuples");
    }

    bool sample_keep(uint64_t table_hash, uint32_t row) const {
        if (!sampling.enabled)
            return true;
        return splitmix64(sampling.seed ^ table_hash ^ (uint64_t)row) <
               sampling.threshold;
    }

    static bool passes(const Table &t, const std::vector<QueryFilter> &filters,
                       const std::vector<size_t> &cols, uint32_t row) {
        for (size_t i = 0; i < filters.size(); ++i) {
            const QueryFilter &f = filters[i];
            const Column &c = t.columns[cols[i]];
            const Value &v = std::get<Value>(f.term);
            switch (c.type) {
            case ColumnType::int64:
                if (!compare(c.ints[row], f.op, std::get<int64_t>(v)))
                    return false;
                break;
            case ColumnType::float64:
                if (!compare(c.floats[row], f.op, std::get<double>(v)))
                    return false;
                break;
            case ColumnType::string: {
                // bind_query guarantees equality; compare dictionary codes
                int64_t code = c.code_of(std::get<std::string>(v));
                if (code < 0 || c.ints[row] != code)
                    return false;
                break;
            }
            }
        }
        return true;
    }

    Chunk leaf(const PlanNode &n) {
        const Table &t = db.table(n.table);
        for (const auto &f : n.filters)
            if (is_param(f.term))
                raise(errc::plan, "plan still carries unbound parameters");
        const uint64_t table_hash = fnv1a64(n.table);

        Chunk out;
        out.tables = {n.table};
        out.rows.resize(1);
        auto &rows = out.rows[0];

        if (n.path == AccessPath::full_scan) {
            std::vector<size_t> cols;
            cols.reserve(n.filters.size());
            for (const auto &f : n.filters)
                cols.push_back(db.column_index(n.table, f.column));
            uint64_t visited = 0;
            for (uint32_t r = 0; r < t.row_count; ++r) {
                if (!sample_keep(table_hash, r))
                    continue;
                ++visited;
                if (passes(t, n.filters, cols, r))
                    rows.push_back(r);
            }
            charge(visited + rows.size());
        } else {
            // probe the index with the equality filter's value, then apply the
            // remaining filters
            const QueryFilter *probe = nullptr;
            for (const auto &f : n.filters)
                if (f.column == n.index_column && f.op == CompareOp::eq) {
                    probe = &f;
                    break;
                }
            if (!probe)
                raise(errc::plan, "index lookup without an equality filter on " +
                                      n.table + "." + n.index_column);
            const Database::Index *ix = db.find_index(n.table, n.index_column);
            if (!ix)
                raise(errc::plan, "no index on " + n.table + "." + n.index_column);

            const Column &pc = db.column(n.table, n.index_column);
            const Value &v = std::get<Value>(probe->term);
            int64_t key = 0;
            bool key_ok = true;
            switch (pc.type) {
            case ColumnType::int64: key = std::get<int64_t>(v); break;
            case ColumnType::string: {
                key = pc.code_of(std::get<std::string>(v));
                key_ok = key >= 0;
                break;
            }
            case ColumnType::float64:
                raise(errc::plan, "indexes cover int64 and string columns only");
            }

            std::vector<QueryFilter> residual;
            for (const auto &f : n.filters)
                if (&f != probe)
                    residual.push_back(f);
            std::vector<size_t> cols;
            for (const auto &f : residual)
                cols.push_back(db.column_index(n.table, f.column));

            uint64_t matched = 0;
            if (key_ok) {
                auto it = ix->find(key);
                if (it != ix->end()) {
                    for (uint32_t r : it->second) {
                        if (!sample_keep(table_hash, r))
                            continue;
                        ++matched;
                        if (passes(t, residual, cols, r))
                            rows.push_back(r);
                    }
                }
            }
            charge(matched + rows.size());
        }
        out.size = rows.size();
        return out;
    }

    // resolve which side of the chunk pair holds each condition's columns
    struct KeyCol {
        int left_chunk_table;  // index into left.tables
        size_t left_col;
        int right_chunk_table; // index into right.tables
        size_t right_col;
    };

    std::vector<KeyCol> key_columns(const Chunk &l, const Chunk &r,
                                    const std::vector<JoinEdge> &conds) const {
        std::vector<KeyCol> out;
        for (const auto &c : conds) {
            KeyCol k{};
            int ll = l.table_pos(c.left_table);
            if (ll >= 0) {
                k.left_chunk_table = ll;
                k.left_col = db.column_index(c.left_table, c.left_column);
                k.right_chunk_table = r.table_pos(c.right_table);
                k.right_col = db.column_index(c.right_table, c.right_column);
            } else {
                k.left_chunk_table = l.table_pos(c.right_table);
                k.left_col = db.column_index(c.right_table, c.right_column);
                k.right_chunk_table = r.table_pos(c.left_table);
                k.right_col = db.column_index(c.left_table, c.left_column);
            }
            PLANFORGE_ASSERT(k.left_chunk_table >= 0 && k.right_chunk_table >= 0,
                             "join condition references a table outside the node");
            out.push_back(k);
        }
        return out;
    }

    int64_t key_at(const Chunk &ch, int chunk_table, size_t col, size_t i) const {
        uint32_t row = ch.rows[(size_t)chunk_table][i];
        return db.table(ch.tables[(size_t)chunk_table]).columns[col].ints[row];
    }

    static Chunk merge_schema(const Chunk &l, const Chunk &r) {
        Chunk out;
        out.tables = l.tables;
        out.tables.insert(out.tables.end(), r.tables.begin(), r.tables.end());
        out.rows.resize(out.tables.size());
        return out;
    }

    void emit(Chunk &out, const Chunk &l, size_t li, const Chunk &r, size_t ri) {
        size_t k = 0;
        for (size_t t = 0; t < l.tables.size(); ++t)
            out.rows[k++].push_back(l.rows[t][li]);
        for (size_t t = 0; t < r.tables.size(); ++t)
            out.rows[k++].push_back(r.rows[t][ri]);
        ++out.size;
    }

    Chunk hash_join(const Chunk &l, const Chunk &r, const std::vector<KeyCol> &keys) {
        charge(l.size + r.size);
        const bool build_left = l.size <= r.size;
        const Chunk &b = build_left ? l : r;
        const Chunk &p = build_left ? r : l;
        charge(b.size);

        auto key_of = [&](const Chunk &ch, bool is_left, size_t i) {
            uint64_t h = 0xcbf29ce484222325ull;
            for (const auto &k : keys) {
                int64_t v = is_left ? key_at(ch, k.left_chunk_table, k.left_col, i)
                                    : key_at(ch, k.right_chunk_table, k.right_col, i);
                h = splitmix64(h ^ (uint64_t)v);
            }
            return h;
        };
        auto keys_equal = [&](size_t bi, size_t pi) {
            for (const auto &k : keys) {
                int64_t bv = build_left ? key_at(l, k.left_chunk_table, k.left_col, bi)
                                        : key_at(r, k.right_chunk_table, k.right_col, bi);
                int64_t pv = build_left ? key_at(r, k.right_chunk_table, k.right_col, pi)
                                        : key_at(l, k.left_chunk_table, k.left_col, pi);
                if (bv != pv)
                    return false;
            }
            return true;
        };

        std::unordered_map<uint64_t, std::vector<uint32_t>> table;
        table.reserve(b.size * 2 + 1);
        for (size_t i = 0; i < b.size; ++i)
            table[key_of(b, build_left, i)].push_back((uint32_t)i);

        Chunk out = merge_schema(l, r);
        for (size_t pi = 0; pi < p.size; ++pi) {
            auto it = table.find(key_of(p, !build_left, pi));
            if (it == table.end())
                continue;
            for (uint32_t bi : it->second) {
                if (!keys_equal(bi, pi))
                    continue;
                if (build_left)
                    emit(out, l, bi, r, pi);
                else
                    emit(out, l, pi, r, bi);
            }
        }
        charge(out.size);
        return out;
    }

    static uint64_t sort_charge(size_t n) {
        if (n < 2)
            return 0;
        uint64_t levels = (uint64_t)std::ceil(std::log2((double)n));
        return (uint64_t)n * levels;
    }

    Chunk merge_join(const Chunk &l, const Chunk &r, const std::vector<KeyCol> &keys) {
        charge(l.size + r.size);
        charge(sort_charge(l.size) + sort_charge(r.size));

        auto sorted_order = [&](const Chunk &ch, bool is_left) {
            std::vector<uint32_t> ord(ch.size);
            for (size_t i = 0; i < ch.size; ++i)
                ord[i] = (uint32_t)i;
            std::sort(ord.begin(), ord.end(), [&](uint32_t a, uint32_t b) {
                for (const auto &k : keys) {
                    int64_t ka = is_left ? key_at(ch, k.left_chunk_table, k.left_col, a)
                                         : key_at(ch, k.right_chunk_table, k.right_col, a);
                    int64_t kb = is_left ? key_at(ch, k.left_chunk_table, k.left_col, b)
                                         : key_at(ch, k.right_chunk_table, k.right_col, b);
                    if (ka != kb)
                        return ka < kb;
                }
                return a < b;
            });
            return ord;
        };
        auto key_tuple = [&](const Chunk &ch, bool is_left, size_t i) {
            std::vector<int64_t> t;
            t.reserve(keys.size());
            for (const auto &k : keys)
                t.push_back(is_left ? key_at(ch, k.left_chunk_table, k.left_col, i)
                                    : key_at(ch, k.right_chunk_table, k.right_col, i));
            return t;
        };

        std::vector<uint32_t> lo = sorted_order(l, true), ro = sorted_order(r, false);
        Chunk out = merge_schema(l, r);
        size_t i = 0, j = 0;
        while (i < lo.size() && j < ro.size()) {
            auto lk = key_tuple(l, true, lo[i]);
            auto rk = key_tuple(r, false, ro[j]);
            if (lk < rk) {
                ++i;
            } else if (rk < lk) {
                ++j;
            } else {
                size_t i2 = i, j2 = j;
                while (i2 < lo.size() && key_tuple(l, true, lo[i2]) == lk)
                    ++i2;
                while (j2 < ro.size() && key_tuple(r, false, ro[j2]) == rk)
                    ++j2;
                for (size_t a = i; a < i2; ++a)
                    for (size_t b = j; b < j2; ++b)
                        emit(out, l, lo[a], r, ro[b]);
                i = i2;
                j = j2;
            }
        }
        charge(out.size);
        return out;
    }

    Chunk nested_loop_join(const Chunk &l, const Chunk &r,
                           const std::vector<KeyCol> &keys) {
        charge(l.size);
        Chunk out = merge_schema(l, r);
        for (size_t i = 0; i < l.size; ++i) {
            charge(r.size);
            for (size_t j = 0; j < r.size; ++j) {
                bool match = true;
                for (const auto &k : keys)
                    if (key_at(l, k.left_chunk_table, k.left_col, i) !=
                        key_at(r, k.right_chunk_table, k.right_col, j)) {
                        match = false;
                        break;
                    }
                if (match)
                    emit(out, l, i, r, j);
            }
        }
        charge(out.size);
        return out;
    }

    Chunk run(const PlanNode &n) {
        if (n.kind == PlanNode::Kind::access)
            return leaf(n);
        Chunk l = run(*n.left);
        Chunk r = run(*n.right);
        auto keys = key_columns(l, r, n.conditions);
        switch (n.algo) {
        case JoinAlgo::hash: return hash_join(l, r, keys);
        case JoinAlgo::sort_merge: return merge_join(l, r, keys);
        case JoinAlgo::nested_loop: return nested_loop_join(l, r, keys);
        }
        raise(errc::internal, "unknown join algorithm");
    }
};

ExecutionResult run_plan(const Database &db, const QueryPlan &plan,
                         const Sampling &sampling, const ExecLimits &limits) {
    PLANFORGE_ASSERT(plan.root, "empty plan");
    Exec exec(db, sampling, limits.max_tuples);
    auto t0 = std::chrono::steady_clock::now();
    Chunk result = exec.run(*plan.root);
    auto t1 = std::chrono::steady_clock::now();

    ExecutionResult r;
    r.answer = (int64_t)result.size;
    r.tuples_processed = exec.work;
    r.wall_ns = (uint64_t)std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
    r.sampled = sampling.enabled;
    r.sample_fraction = sampling.enabled ? sampling.fraction : 1.0;
    return r;
}

} // namespace

ExecutionResult execute(const Database &db, const QueryPlan &plan,
                        const ExecLimits &limits) {
    Sampling s;
    return run_plan(db, plan, s, limits);
}

ExecutionResult execute_on_sample(const Database &db, const QueryPlan &plan,
                                  double fraction, uint64_t seed,
                                  const ExecLimits &limits) {
    if (!(fraction > 0.0) || fraction > 1.0)
        raise(errc::argument, "sample fraction must be in (0, 1]");
    Sampling s;
    s.enabled = fraction < 1.0;
    s.fraction = fraction;
    s.seed = splitmix64(seed);
    if (!s.enabled)
        return run_plan(db, plan, s, limits);
    s.threshold = (uint64_t)(fraction * 18446744073709551616.0); // fraction * 2^64

    ExecutionResult r = run_plan(db, plan, s, limits);
    r.sampled = true;
    r.sample_fraction = fraction;
    return r;
}

} // namespace planforge
