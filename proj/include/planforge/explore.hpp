#pragma once

#include <span>
#include <string>
#include <vector>

#include "planforge/engine.hpp"
#include "planforge/experience.hpp"
#include "planforge/features.hpp"
#include "planforge/mlp.hpp"
#include "planforge/optimizer.hpp"

namespace planforge {

// Scores a (possibly partial) plan: lower is better. The production model is
// the bottleneck network over plan features; tests may substitute an exact
// oracle.
struct ValueModel {
    virtual ~ValueModel() = default;
    virtual double score(const QueryPlan &plan) const = 0;
};

class NetValueModel : public ValueModel {
  public:
    NetValueModel(const StatsView &sv, const BottleneckNet &net, FeatureConfig fc = {})
        : sv_(&sv), net_(&net), fc_(fc) {}
    double score(const QueryPlan &plan) const override {
        return net_->predict(featurize(*sv_, plan, fc_));
    }

  private:
    const StatsView *sv_;
    const BottleneckNet *net_;
    FeatureConfig fc_;
};

struct ExploreConfig {
    double epsilon = 0.5;       // probability of a random action per step
    int episodes_per_round = 8; // E
    int select_k = 4;           // k, at most E
    int rounds = 3;             // R
    double sample_fraction = 1.0;
    uint64_t seed = 1;

    void validate() const;
};

// Builds one complete plan bottom-up. Each step either materializes a table
// (choosing its access path) or joins two built fragments (choosing the
// algorithm); with probability epsilon the step is uniformly random,
// otherwise it takes the action whose resulting fragment the model scores
// lowest. Cross joins are allowed, so the whole bushy plan space is
// reachable. Deterministic in the seed; the returned plan_id is the seed.
QueryPlan run_episode(const Database &db, const BoundQuery &q, const ValueModel &model,
                      double epsilon, uint64_t seed);

// Greedy max-min pick of k feature-diverse candidates: duplicates (by
// canonical form) collapse first, the model's best-scored plan opens the
// set, then each pick maximizes the minimum feature distance to the already
// picked. Ties break toward the lower plan_id. Returns all distinct
// candidates when k exceeds their count.
std::vector<QueryPlan> select_diverse(const StatsView &sv, std::span<const QueryPlan> candidates,
                                      int k, const ValueModel &model,
                                      const FeatureConfig &fc = {});

struct ExecutedPlanRecord {
    uint64_t plan_id = 0;
    std::string canonical;
    double measured = 0; // work units (tuples processed)
    bool sampled = false;
    int round = 0; // 0 = baseline / final verification
};

struct ExploreReport {
    QueryPlan best_plan;
    double best_measured = 0; // always from a full-data run
    QueryPlan baseline_plan;
    double baseline_measured = 0;
    bool superoptimized = false; // false when rounds == 0
    std::string status;          // "ok" or "no superoptimization performed"
    std::vector<ExecutedPlanRecord> executed;
};

// Round loop: run E episodes, keep the k most diverse, execute each on
// sample_fraction of the data, append the measurements to the store (exactly
// k per round; episodes are topped up with fully random ones if diversity
// runs short), retrain the value model, and fully execute the round winner.
// The baseline optimizer's plan is always executed on full data first, so
// the returned plan is never worse than it. rounds == 0 just returns the
// baseline.
ExploreReport superoptimize_explore(const StatsView &sv, const LogicalQuery &query,
                                    const ExploreConfig &cfg, ExperienceStore &store);

} // namespace planforge
