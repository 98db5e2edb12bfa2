#include "planforge/optimizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>

#include "planforge/error.hpp"

namespace planforge {

StatsView::StatsView(const Database &db, double error_level)
    : db_(&db), error_level_(error_level) {
    if (error_level < 0)
        raise(errc::config, "error_level must be >= 0");
}

const ColumnStats &StatsView::stats(const std::string &table, const std::string &column) const {
    auto key = std::make_pair(table, column);
    auto it = cache_.find(key);
    if (it != cache_.end())
        return it->second;
    try {
        return cache_.emplace(key, column_stats(*db_, table, column, error_level_)).first->second;
    } catch (const Error &e) {
        raise(errc::estimation, "no statistics for " + table + "." + column + ": " + e.what());
    }
}

double StatsView::table_rows(const std::string &table) const {
    return (double)db_->table(table).row_count;
}

namespace {

double filter_selectivity(const StatsView &sv, const QueryFilter &f) {
    const ColumnStats &st = sv.stats(f.table, f.column);
    if (f.op == CompareOp::eq)
        return 1.0 / (double)std::max<int64_t>(st.ndv, 1);
    if (is_param(f.term))
        return 1.0 / 3.0; // unknown range literal: classic default
    double v, lo, hi;
    const Value &val = std::get<Value>(f.term);
    if (std::holds_alternative<int64_t>(std::get<Value>(f.term)) &&
        std::holds_alternative<int64_t>(st.min)) {
        v = (double)std::get<int64_t>(val);
        lo = (double)std::get<int64_t>(st.min);
        hi = (double)std::get<int64_t>(st.max);
    } else if (std::holds_alternative<double>(st.min)) {
        v = std::holds_alternative<double>(val) ? std::get<double>(val)
                                                : (double)std::get<int64_t>(val);
        lo = std::get<double>(st.min);
        hi = std::get<double>(st.max);
    } else {
        raise(errc::estimation, "range selectivity undefined for " + f.to_string());
    }
    if (hi <= lo) // single-valued column: the predicate either holds or not
        return compare(lo, f.op, v) ? 1.0 : 0.0;
    double covered;
    if (f.op == CompareOp::lt || f.op == CompareOp::le)
        covered = (v - lo) / (hi - lo);
    else
        covered = (hi - v) / (hi - lo);
    return std::clamp(covered, 0.0, 1.0);
}

double edge_selectivity(const StatsView &sv, const JoinEdge &e) {
    int64_t l = sv.stats(e.left_table, e.left_column).ndv;
    int64_t r = sv.stats(e.right_table, e.right_column).ndv;
    return 1.0 / (double)std::max<int64_t>(std::max(l, r), 1);
}

double sort_work(double rows) {
    if (rows < 2.0)
        return 0.0;
    return rows * std::ceil(std::log2(rows));
}

} // namespace

NodeEst estimate_access_node(const StatsView &sv, const PlanNode &leaf) {
    PLANFORGE_ASSERT(leaf.kind == PlanNode::Kind::access, "expected an access node");
    double base = sv.table_rows(leaf.table);
    double out = base;
    for (const auto &f : leaf.filters)
        out *= filter_selectivity(sv, f);
    NodeEst est;
    est.rows = out;
    if (leaf.path == AccessPath::full_scan) {
        est.cost = base + out;
        return est;
    }
    // probe matches = rows * selectivity of the first equality filter on the
    // index column (the same filter the engine probes with)
    double matched = base;
    for (const auto &f : leaf.filters)
        if (f.column == leaf.index_column && f.op == CompareOp::eq) {
            matched = base * filter_selectivity(sv, f);
            break;
        }
    est.cost = matched + out;
    return est;
}

NodeEst estimate_join_node(const StatsView &sv, JoinAlgo algo,
                           const std::vector<JoinEdge> &conditions, NodeEst left,
                           NodeEst right) {
    double out = left.rows * right.rows;
    for (const auto &c : conditions)
        out *= edge_selectivity(sv, c);
    NodeEst est;
    est.rows = out;
    double work = 0;
    switch (algo) {
    case JoinAlgo::hash:
        work = left.rows + right.rows + std::min(left.rows, right.rows) + out;
        break;
    case JoinAlgo::sort_merge:
        work = left.rows + right.rows + sort_work(left.rows) + sort_work(right.rows) + out;
        break;
    case JoinAlgo::nested_loop:
        work = left.rows + left.rows * right.rows + out;
        break;
    }
    est.cost = left.cost + right.cost + work;
    return est;
}

PlanCosting annotate_plan(const StatsView &sv, const QueryPlan &plan) {
    PLANFORGE_ASSERT(plan.root, "empty plan");
    PlanCosting out;
    std::function<NodeEst(const PlanNode &)> walk = [&](const PlanNode &n) -> NodeEst {
        NodeEst est;
        if (n.kind == PlanNode::Kind::access) {
            est = estimate_access_node(sv, n);
        } else {
            NodeEst l = walk(*n.left);
            NodeEst r = walk(*n.right);
            est = estimate_join_node(sv, n.algo, n.conditions, l, r);
        }
        out.nodes.push_back(est); // postorder: children pushed before parents
        return est;
    };
    NodeEst root = walk(*plan.root);
    out.cost = root.cost;
    out.rows = root.rows;
    return out;
}

CardEstimate estimate_cardinality(const StatsView &sv, const BoundQuery &q) {
    double rows = 1.0;
    for (const auto &t : q.tables) {
        double r = sv.table_rows(t);
        for (const auto &f : q.filters)
            if (f.table == t)
                r *= filter_selectivity(sv, f);
        rows *= r;
    }
    for (const auto &e : q.edges)
        rows *= edge_selectivity(sv, e);
    return CardEstimate{rows};
}

std::vector<PlanNodeRef> access_variants(const Database &db, const BoundQuery &q,
                                         const std::string &table) {
    std::vector<QueryFilter> filters = q.filters_for(table);
    std::vector<PlanNodeRef> out;
    out.push_back(make_access(table, AccessPath::full_scan, "", filters));
    const TableDef &def = db.schema.table(table);
    for (const auto &ixcol : def.indexes)
        for (const auto &f : filters)
            if (f.column == ixcol && f.op == CompareOp::eq) {
                out.push_back(make_access(table, AccessPath::index_lookup, ixcol, filters));
                break;
            }
    return out;
}

std::vector<JoinEdge> connecting_edges(const BoundQuery &q, std::span<const std::string> left,
                                       std::span<const std::string> right) {
    auto in = [](std::span<const std::string> group, const std::string &t) {
        return std::find(group.begin(), group.end(), t) != group.end();
    };
    std::vector<JoinEdge> out;
    for (const auto &e : q.edges) {
        bool ll = in(left, e.left_table), lr = in(right, e.left_table);
        bool rl = in(left, e.right_table), rr = in(right, e.right_table);
        if ((ll && rr) || (lr && rl))
            out.push_back(e);
    }
    return out;
}

namespace {

// Tables are bit positions in the sorted BoundQuery::tables list.
using Mask = uint32_t;

std::vector<JoinEdge> edges_between(const BoundQuery &q, Mask left, Mask right) {
    std::vector<JoinEdge> out;
    for (const auto &e : q.edges) {
        Mask l = Mask(1) << q.table_pos(e.left_table);
        Mask r = Mask(1) << q.table_pos(e.right_table);
        if (((l & left) && (r & right)) || ((l & right) && (r & left)))
            out.push_back(e);
    }
    return out;
}

std::vector<JoinAlgo> algo_choices(bool cross) {
    if (cross)
        return {JoinAlgo::nested_loop};
    return {JoinAlgo::hash, JoinAlgo::sort_merge, JoinAlgo::nested_loop};
}

// ---- exhaustive enumeration ------------------------------------------------

struct EnumCore {
    const Database &db;
    const BoundQuery &q;
    bool bushy;
    bool allow_cross;
    std::vector<std::vector<PlanNodeRef>> memo; // by mask

    EnumCore(const Database &d, const BoundQuery &query, bool bushy_, bool cross_)
        : db(d), q(query), bushy(bushy_), allow_cross(cross_),
          memo(size_t(1) << query.tables.size()) {}

    const std::vector<PlanNodeRef> &plans(Mask mask) {
        auto &slot = memo[mask];
        if (!slot.empty() || mask == 0)
            return slot;
        if (std::popcount(mask) == 1) {
            int pos = std::countr_zero(mask);
            slot = access_variants(db, q, q.tables[(size_t)pos]);
            return slot;
        }
        // ordered partitions (S1, S2); left-deep restricts S2 to single tables
        for (Mask s2 = (mask - 1) & mask; s2 != 0; s2 = (s2 - 1) & mask) {
            Mask s1 = mask ^ s2;
            if (bushy) {
                // every ordered pair is visited exactly once as (s1, s2)
            } else if (std::popcount(s2) != 1) {
                continue;
            }
            auto conds = edges_between(q, s1, s2);
            if (conds.empty() && !allow_cross)
                continue;
            for (JoinAlgo algo : algo_choices(conds.empty()))
                for (const auto &l : plans(s1))
                    for (const auto &r : plans(s2))
                        slot.push_back(make_join(algo, conds, l, r));
        }
        return slot;
    }

    // plan count without materialization, for the refusal message
    unsigned __int128 count(Mask mask, std::vector<unsigned __int128> &cmemo) {
        if (cmemo[mask] != 0)
            return cmemo[mask];
        unsigned __int128 total = 0;
        if (std::popcount(mask) == 1) {
            int pos = std::countr_zero(mask);
            total = access_variants(db, q, q.tables[(size_t)pos]).size();
        } else {
            for (Mask s2 = (mask - 1) & mask; s2 != 0; s2 = (s2 - 1) & mask) {
                Mask s1 = mask ^ s2;
                if (!bushy && std::popcount(s2) != 1)
                    continue;
                auto conds = edges_between(q, s1, s2);
                if (conds.empty() && !allow_cross)
                    continue;
                total += count(s1, cmemo) * count(s2, cmemo) *
                         algo_choices(conds.empty()).size();
            }
        }
        cmemo[mask] = total;
        return total;
    }
};

std::string u128_to_string(unsigned __int128 v) {
    if (v == 0)
        return "0";
    std::string s;
    while (v > 0) {
        s.push_back(char('0' + int(v % 10)));
        v /= 10;
    }
    std::reverse(s.begin(), s.end());
    return s;
}

} // namespace

std::vector<QueryPlan> enumerate_all(const Database &db, const BoundQuery &q,
                                     const EnumerateConfig &cfg) {
    if (cfg.max_tables > 7)
        raise(errc::config, "enumerate_all max_tables is capped at 7");
    size_t n = q.tables.size();
    PLANFORGE_ASSERT(n >= 1, "query without tables");
    if (n > cfg.max_tables) {
        std::string cnt = "more than 10^12";
        if (n <= 12) { // count exactly while the subset lattice is still small
            EnumCore counter(db, q, /*bushy=*/true, /*cross=*/true);
            std::vector<unsigned __int128> cmemo(size_t(1) << n, 0);
            cnt = u128_to_string(counter.count(Mask((size_t(1) << n) - 1), cmemo));
        }
        raise(errc::capacity, "refusing to enumerate " + std::to_string(n) + " tables: " +
                                  cnt + " plans would be generated");
    }
    EnumCore core(db, q, /*bushy=*/true, /*cross=*/true);
    const auto &roots = core.plans(Mask((size_t(1) << n) - 1));
    std::vector<QueryPlan> out;
    out.reserve(roots.size());
    uint64_t id = 1;
    for (const auto &r : roots) {
        QueryPlan p;
        p.root = r;
        p.plan_id = id++;
        out.push_back(std::move(p));
    }
    return out;
}

namespace {

struct DpEntry {
    PlanNodeRef node;
    NodeEst est;
    std::string canonical;
    bool filled = false;
};

// (cost, canonical) minimization; exact arithmetic shared with annotate_plan
// keeps DP results comparable to enumerated plans without tolerance.
bool better(double cost, const std::string &canon, const DpEntry &cur) {
    if (!cur.filled)
        return true;
    if (cost != cur.est.cost)
        return cost < cur.est.cost;
    return canon < cur.canonical;
}

std::vector<DpEntry> run_dp(const BoundQuery &q, const StatsView &sv,
                            const PlannerConfig &cfg) {
    size_t n = q.tables.size();
    if (n > 12)
        raise(errc::capacity, "join ordering DP is capped at 12 tables");
    std::vector<DpEntry> best(size_t(1) << n);
    for (size_t pos = 0; pos < n; ++pos) {
        Mask mask = Mask(1) << pos;
        for (const auto &leaf : access_variants(sv.db(), q, q.tables[pos])) {
            NodeEst est = estimate_access_node(sv, *leaf);
            std::string canon = canonical_node_string(*leaf);
            if (better(est.cost, canon, best[mask]))
                best[mask] = DpEntry{leaf, est, std::move(canon), true};
        }
    }
    Mask full = Mask((size_t(1) << n) - 1);
    for (Mask mask = 1; mask <= full; ++mask) {
        if (std::popcount(mask) < 2)
            continue;
        for (Mask s2 = (mask - 1) & mask; s2 != 0; s2 = (s2 - 1) & mask) {
            Mask s1 = mask ^ s2;
            if (!cfg.bushy && std::popcount(s2) != 1)
                continue;
            const DpEntry &l = best[s1], &r = best[s2];
            if (!l.filled || !r.filled)
                continue;
            auto conds = edges_between(q, s1, s2);
            if (conds.empty() && !cfg.allow_cross_joins)
                continue;
            for (JoinAlgo algo : algo_choices(conds.empty())) {
                NodeEst est = estimate_join_node(sv, algo, conds, l.est, r.est);
                PlanNodeRef node = make_join(algo, conds, l.node, r.node);
                std::string canon = canonical_node_string(*node);
                if (better(est.cost, canon, best[mask]))
                    best[mask] = DpEntry{std::move(node), est, std::move(canon), true};
            }
        }
    }
    return best;
}

} // namespace

CostedPlan optimize(const BoundQuery &q, const StatsView &sv, const PlannerConfig &cfg) {
    size_t n = q.tables.size();
    auto best = run_dp(q, sv, cfg);
    const DpEntry &top = best[(size_t(1) << n) - 1];
    if (!top.filled)
        raise(errc::plan, "no cross-join-free plan exists for this query "
                          "(set allow_cross_joins to plan it)");
    CostedPlan out;
    out.plan.root = top.node;
    out.plan.plan_id = 1;
    out.estimated_cost = top.est.cost;
    out.estimated_rows = top.est.rows;
    return out;
}

std::vector<CostedPlan> top_k_plans(const BoundQuery &q, const StatsView &sv, size_t k,
                                    const PlannerConfig &cfg) {
    if (k < 1)
        raise(errc::argument, "k must be >= 1");
    size_t n = q.tables.size();
    if (n > 7)
        raise(errc::capacity, "top-k enumeration is capped at 7 tables");
    EnumCore core(sv.db(), q, cfg.bushy, cfg.allow_cross_joins);
    const auto &roots = core.plans(Mask((size_t(1) << n) - 1));
    if (roots.empty())
        raise(errc::plan, "no cross-join-free plan exists for this query "
                          "(set allow_cross_joins to plan it)");

    struct Ranked {
        CostedPlan costed;
        std::string canonical;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(roots.size());
    uint64_t id = 1;
    for (const auto &r : roots) {
        QueryPlan p;
        p.root = r;
        p.plan_id = id++;
        PlanCosting costing = annotate_plan(sv, p);
        ranked.push_back(Ranked{CostedPlan{std::move(p), costing.cost, costing.rows},
                                canonical_node_string(*r)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked &a, const Ranked &b) {
        if (a.costed.estimated_cost != b.costed.estimated_cost)
            return a.costed.estimated_cost < b.costed.estimated_cost;
        return a.canonical < b.canonical;
    });
    std::vector<CostedPlan> out;
    for (size_t i = 0; i < ranked.size() && i < k; ++i)
        out.push_back(std::move(ranked[i].costed));
    return out;
}

} // namespace planforge
