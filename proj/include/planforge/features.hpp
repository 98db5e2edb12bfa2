#pragma once

#include <Eigen/Dense>

#include "planforge/optimizer.hpp"
#include "planforge/plan.hpp"

namespace planforge {

// Fixed-length numeric encoding of a query plan. All slots are keyed either by
// the plan's sorted distinct table list ("table index") or by postorder
// position, so the same plan always lands on the same entries.
//
// Layout for max_tables = T (node slots N = 2T-1, join slots J = T-1):
//   A [0, 2T):            per table index, one-hot access path
//                         {full_scan, index_lookup}
//   B [2T, 2T+4J):        per join slot in postorder: one-hot algorithm
//                         {hash, sort_merge, nested_loop}, then node depth
//                         (root = 0)
//   C [2T+4J, +N):        per node slot in postorder, log(1 + estimated rows)
//   D [.., +T*(T+1)):     per leaf slot in postorder: one-hot table index,
//                         then leaf depth
//   E (last two):         left-deep fraction (joins whose right child is a
//                         leaf; 1 when there are no joins), tree height
// Unused slots stay zero.
//
// Group D exists to make the encoding injective across the plans of one
// query: leaf identities plus postorder depths reconstruct the labelled tree
// shape, groups A/B fill in the operators, and the join conditions are
// implied by the edges each join separates.
struct FeatureConfig {
    int max_tables = 6;

    int feature_count() const {
        int t = max_tables, j = t - 1, n = 2 * t - 1;
        return 2 * t + 4 * j + n + t * (t + 1) + 2;
    }
};

using FeatureVector = Eigen::VectorXd;

// Encodes `plan` using estimated row counts from `sv`. Plans touching more
// than cfg.max_tables tables are refused with a capacity error.
FeatureVector featurize(const StatsView &sv, const QueryPlan &plan,
                        const FeatureConfig &cfg = {});

} // namespace planforge
