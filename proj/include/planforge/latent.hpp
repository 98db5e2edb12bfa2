#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "planforge/features.hpp"
#include "planforge/gp.hpp"
#include "planforge/mlp.hpp"
#include "planforge/optimizer.hpp"

namespace planforge {

// A candidate plan with its cached encodings.
struct PoolEntry {
    QueryPlan plan;
    FeatureVector features;
    Eigen::VectorXd latent; // the network's bottleneck activations
};

// Distinct valid plans for one query, the retrieval set that turns latent
// points back into executable plans. Entries are plan_id-ascending with ids
// reassigned 1..N at build time.
struct PlanPool {
    std::vector<PoolEntry> entries;
    int latent_dim = 0;

    const PoolEntry *find(const std::string &canonical) const;
};

struct PoolConfig {
    size_t enumerate_up_to = 4; // tables; larger queries use top-k + episodes
    size_t top_k = 8;
    int random_episodes = 64;
    uint64_t seed = 1;
    FeatureConfig features;
};

// Encodes the given plans (dropping canonical duplicates) into a pool.
// Distinct plans must encode to distinct feature vectors.
PlanPool pool_from_plans(const StatsView &sv, const BottleneckNet &net,
                         std::span<const QueryPlan> plans, const FeatureConfig &fc = {});

// Builds the candidate set for a query: the full enumerated space when the
// query is small enough, otherwise the optimizer's top-k of both search
// spaces plus fully random episode plans. Always contains the baseline plan.
PlanPool build_pool(const StatsView &sv, const BoundQuery &q, const BottleneckNet &net,
                    const PoolConfig &cfg = {});

// Nearest pool entry to z by Euclidean latent distance; ties go to the
// lowest plan_id. An empty pool is a decode error.
const QueryPlan &decode(const PlanPool &pool, const Eigen::VectorXd &z);

struct LatentTraceRecord {
    int iteration = 0;          // 0 = the baseline evaluation
    Eigen::VectorXd offset;     // v-hat: chosen point minus the baseline encoding
    uint64_t plan_id = 0;
    std::string canonical;
    double measured = 0;
    double incumbent = 0; // best measured cost so far, non-increasing
};

struct LatentReport {
    QueryPlan best_plan;
    double best_measured = 0;
    std::string status; // "ok" or "latent space exhausted"
    std::vector<LatentTraceRecord> trace;
};

struct LatentConfig {
    int budget = 20;        // BO iterations after the baseline evaluation
    int candidates = 512;   // random proposals per iteration
    uint64_t seed = 1;
};

// Bayesian optimization over the latent space: starting from the baseline
// plan's encoding, each iteration fits a Gaussian process to the executed
// (latent, log cost) pairs, proposes random offsets (half Gaussian around
// the incumbent, half uniform over the pool's latent bounding box), takes
// the best expected improvement whose decoded plan is still unexecuted, and
// measures it. Stops early with status "latent space exhausted" after three
// consecutive iterations in which every proposal decoded to an
// already-executed plan.
LatentReport bayes_superoptimize(const StatsView &sv, const BoundQuery &q, const PlanPool &pool,
                                 const BottleneckNet &net, const LatentConfig &cfg = {});

} // namespace planforge
