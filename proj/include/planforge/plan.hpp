#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "planforge/sqlfront.hpp"

namespace planforge {

enum class JoinAlgo { hash, sort_merge, nested_loop };
enum class AccessPath { full_scan, index_lookup };

const char *to_string(JoinAlgo a);
const char *to_string(AccessPath p);

struct PlanNode;
// Nodes are immutable after construction and shared between plans, so large
// enumerations reuse subtrees instead of cloning them.
using PlanNodeRef = std::shared_ptr<const PlanNode>;

struct PlanNode {
    enum class Kind { access, join };
    Kind kind = Kind::access;

    // access node
    std::string table;
    AccessPath path = AccessPath::full_scan;
    std::string index_column;          // set when path == index_lookup
    std::vector<QueryFilter> filters;  // every filter on this table, sorted

    // join node; empty conditions mean a cross join
    JoinAlgo algo = JoinAlgo::hash;
    std::vector<JoinEdge> conditions;  // sorted
    PlanNodeRef left, right;
};

PlanNodeRef make_access(std::string table, AccessPath path,
                        std::string index_column, std::vector<QueryFilter> filters);
PlanNodeRef make_join(JoinAlgo algo, std::vector<JoinEdge> conditions,
                      PlanNodeRef left, PlanNodeRef right);

struct QueryPlan {
    PlanNodeRef root;
    uint64_t plan_id = 0;
};

// Unambiguous single-line rendering; equal strings iff structurally equal
// plans. Used for dedup, tie-breaking and diagnostics.
std::string canonical_plan_string(const QueryPlan &p);
std::string canonical_node_string(const PlanNode &n);

// Leaf tables in left-to-right order.
std::vector<std::string> plan_tables(const QueryPlan &p);
int plan_join_count(const QueryPlan &p);
bool has_unbound_params(const QueryPlan &p);

// Replaces $n slots with params[n-1]; throws when a slot has no value.
QueryPlan bind_parameters(const QueryPlan &p, const std::vector<Value> &params);

// Checks that the plan computes exactly `q` on `db`: each query table appears
// as one leaf, every filter sits on its table's leaf, each join applies
// exactly the edges that cross it, index lookups have a backing index plus an
// equality filter, and cross joins use nested_loop. Throws on violation.
void validate_plan(const Database &db, const BoundQuery &q, const QueryPlan &p);

std::string plan_to_json(const QueryPlan &p);
QueryPlan plan_from_json(const std::string &text);

template <class Fn> void visit_postorder(const PlanNode &n, Fn &&fn) {
    if (n.kind == PlanNode::Kind::join) {
        visit_postorder(*n.left, fn);
        visit_postorder(*n.right, fn);
    }
    fn(n);
}

} // namespace planforge
