#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "planforge/plan.hpp"

namespace planforge {

// Lazily computed, cached per-column statistics at a fixed error level.
// Instances are not synchronized: share one per thread.
class StatsView {
  public:
    StatsView(const Database &db, double error_level);

    const ColumnStats &stats(const std::string &table, const std::string &column) const;
    double table_rows(const std::string &table) const;
    const Database &db() const { return *db_; }
    double error_level() const { return error_level_; }

  private:
    const Database *db_;
    double error_level_;
    mutable std::map<std::pair<std::string, std::string>, ColumnStats> cache_;
};

struct CardEstimate {
    double estimated_rows = 0;
};

struct CostedPlan {
    QueryPlan plan;
    double estimated_cost = 0;
    double estimated_rows = 0;
};

// Estimated output rows and cost of a subtree. The cost mirrors the engine's
// work accounting with estimates substituted for actual sizes:
//   full scan      table rows + estimated output
//   index lookup   estimated probe matches + estimated output
//   hash join      children cost + both inputs + build side (smaller estimate) + output
//   sort-merge     children cost + both inputs + n*ceil(log2 n) per side + output
//   nested loop    children cost + outer + outer*inner + output
// Selectivities: eq = 1/ndv; range = covered fraction of [min,max] clamped to
// [0,1] (a parameter in a range filter falls back to 1/3); conjunctions
// multiply; equijoin divides by max(ndv_left, ndv_right).
struct NodeEst {
    double rows = 0;
    double cost = 0;
};

NodeEst estimate_access_node(const StatsView &stats, const PlanNode &leaf);
NodeEst estimate_join_node(const StatsView &stats, JoinAlgo algo,
                           const std::vector<JoinEdge> &conditions, NodeEst left,
                           NodeEst right);

struct PlanCosting {
    double cost = 0;
    double rows = 0;
    std::vector<NodeEst> nodes; // postorder, aligned with visit_postorder
};

PlanCosting annotate_plan(const StatsView &stats, const QueryPlan &plan);

// Whole-query cardinality under the independence assumptions above; the value
// every complete plan's root estimate equals.
CardEstimate estimate_cardinality(const StatsView &stats, const BoundQuery &q);

struct PlannerConfig {
    bool allow_cross_joins = false; // the deliberate baseline handicap
    bool bushy = false;             // default searches left-deep trees only
};

// Selinger-style dynamic programming over table subsets. Deterministic:
// ties break on the canonical plan string. The returned plan has plan_id 1.
// Throws errc::plan when no cross-join-free plan exists under the config,
// errc::capacity beyond 12 tables.
CostedPlan optimize(const BoundQuery &q, const StatsView &stats,
                    const PlannerConfig &cfg = {});

// The k cheapest distinct plans of the config's search space, ascending
// (estimated_cost, canonical string); fewer if the space is smaller. Element
// 0 always equals optimize()'s choice. plan_ids are enumeration order.
std::vector<CostedPlan> top_k_plans(const BoundQuery &q, const StatsView &stats,
                                    size_t k, const PlannerConfig &cfg = {});

struct EnumerateConfig {
    size_t max_tables = 7; // hard refusal above; must itself be <= 7
};

// Every valid plan for the query exactly once: bushy shapes, cross joins
// (nested-loop only), all join algorithms and access paths. plan_ids are
// 1..N in enumeration order. Refuses queries over max_tables, reporting the
// plan count it would have produced.
std::vector<QueryPlan> enumerate_all(const Database &db, const BoundQuery &q,
                                     const EnumerateConfig &cfg = {});

// All access-path variants for one table of the query: a full scan, plus one
// index lookup per indexed column carrying an equality filter.
std::vector<PlanNodeRef> access_variants(const Database &db, const BoundQuery &q,
                                         const std::string &table);

// The query edges with one endpoint in each group — the conditions a join of
// the two groups must apply.
std::vector<JoinEdge> connecting_edges(const BoundQuery &q, std::span<const std::string> left,
                                       std::span<const std::string> right);

} // namespace planforge
