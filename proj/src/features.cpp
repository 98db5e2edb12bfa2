#include "planforge/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "planforge/error.hpp"

namespace planforge {

namespace {

struct NodeInfo {
    const PlanNode *node;
    int depth;
};

// postorder with depths, matching the node order used by annotate_plan
void walk(const PlanNode &n, int depth, std::vector<NodeInfo> &out) {
    if (n.kind == PlanNode::Kind::join) {
        walk(*n.left, depth + 1, out);
        walk(*n.right, depth + 1, out);
    }
    out.push_back({&n, depth});
}

} // namespace

FeatureVector featurize(const StatsView &sv, const QueryPlan &plan, const FeatureConfig &cfg) {
    PLANFORGE_ASSERT(plan.root != nullptr, "featurize needs a plan with a root");
    PLANFORGE_ASSERT(cfg.max_tables >= 1, "featurize needs a positive table capacity");

    std::vector<std::string> tables = plan_tables(plan);
    if ((int)tables.size() > cfg.max_tables)
        raise(errc::capacity, "plan touches " + std::to_string(tables.size()) +
                                  " tables but the feature layout holds " +
                                  std::to_string(cfg.max_tables));
    std::vector<std::string> sorted = tables;
    std::sort(sorted.begin(), sorted.end());
    auto table_slot = [&](const std::string &t) {
        return (int)(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    };

    std::vector<NodeInfo> nodes;
    walk(*plan.root, 0, nodes);
    PlanCosting costing = annotate_plan(sv, plan);
    PLANFORGE_ASSERT(costing.nodes.size() == nodes.size(),
                     "cost annotation must cover every plan node");

    const int t = cfg.max_tables;
    const int base_b = 2 * t;
    const int base_c = base_b + 4 * (t - 1);
    const int base_d = base_c + (2 * t - 1);
    const int base_e = base_d + t * (t + 1);
    FeatureVector f = FeatureVector::Zero(cfg.feature_count());

    int join_slot = 0, leaf_slot = 0, height = 0, right_leaf_joins = 0;
    for (size_t i = 0; i < nodes.size(); ++i) {
        const PlanNode &n = *nodes[i].node;
        int depth = nodes[i].depth;
        height = std::max(height, depth);
        f[base_c + (int)i] = std::log1p(costing.nodes[i].rows);
        if (n.kind == PlanNode::Kind::access) {
            int slot = table_slot(n.table);
            f[2 * slot + (n.path == AccessPath::index_lookup ? 1 : 0)] = 1.0;
            int d = base_d + leaf_slot * (t + 1);
            f[d + slot] = 1.0;
            f[d + t] = (double)depth;
            ++leaf_slot;
        } else {
            int b = base_b + join_slot * 4;
            f[b + (int)n.algo] = 1.0;
            f[b + 3] = (double)depth;
            right_leaf_joins += n.right->kind == PlanNode::Kind::access;
            ++join_slot;
        }
    }
    f[base_e] = join_slot == 0 ? 1.0 : (double)right_leaf_joins / (double)join_slot;
    f[base_e + 1] = (double)height;
    PLANFORGE_ASSERT(f.allFinite(), "plan features must be finite");
    return f;
}

} // namespace planforge
