#include "planforge/latent.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "planforge/engine.hpp"
#include "planforge/error.hpp"
#include "planforge/explore.hpp"
#include "planforge/rng.hpp"

namespace planforge {

const PoolEntry *PlanPool::find(const std::string &canonical) const {
    for (const auto &e : entries)
        if (canonical_plan_string(e.plan) == canonical)
            return &e;
    return nullptr;
}

PlanPool pool_from_plans(const StatsView &sv, const BottleneckNet &net,
                         std::span<const QueryPlan> plans, const FeatureConfig &fc) {
    if (net.input_dim() != fc.feature_count())
        raise(errc::argument, "network input width does not match the feature layout");
    PlanPool pool;
    pool.latent_dim = net.latent_dim();
    std::set<std::string> seen;
    std::map<std::vector<double>, std::string> by_features;
    for (const QueryPlan &p : plans) {
        std::string canon = canonical_plan_string(p);
        if (!seen.insert(canon).second)
            continue;
        PoolEntry e;
        e.plan = p;
        e.plan.plan_id = pool.entries.size() + 1;
        e.features = featurize(sv, p, fc);
        std::vector<double> key(e.features.data(), e.features.data() + e.features.size());
        auto [it, fresh] = by_features.try_emplace(std::move(key), canon);
        PLANFORGE_ASSERT(fresh, "distinct plans " + it->second + " and " + canon +
                                    " encode to identical features");
        e.latent = net.encode(e.features);
        pool.entries.push_back(std::move(e));
    }
    if (pool.entries.empty())
        raise(errc::argument, "a plan pool needs at least one plan");
    return pool;
}

PlanPool build_pool(const StatsView &sv, const BoundQuery &q, const BottleneckNet &net,
                    const PoolConfig &cfg) {
    std::vector<QueryPlan> plans;
    if (q.tables.size() <= cfg.enumerate_up_to) {
        plans = enumerate_all(sv.db(), q);
    } else {
        CostedPlan base = optimize(q, sv);
        plans.push_back(base.plan);
        for (const auto &cp : top_k_plans(q, sv, cfg.top_k))
            plans.push_back(cp.plan);
        PlannerConfig wide;
        wide.allow_cross_joins = true;
        wide.bushy = true;
        for (const auto &cp : top_k_plans(q, sv, cfg.top_k, wide))
            plans.push_back(cp.plan);
        struct NoScore : ValueModel {
            double score(const QueryPlan &) const override { return 0; }
        } none;
        uint64_t seed = mix_seed(cfg.seed, fnv1a64("pool-episodes"));
        for (int i = 0; i < cfg.random_episodes; ++i)
            plans.push_back(run_episode(sv.db(), q, none, 1.0, seed + (uint64_t)i));
    }
    return pool_from_plans(sv, net, plans, cfg.features);
}

const QueryPlan &decode(const PlanPool &pool, const Eigen::VectorXd &z) {
    if (pool.entries.empty())
        raise(errc::decode, "cannot decode against an empty plan pool");
    if (z.size() != pool.entries.front().latent.size())
        raise(errc::decode, "latent point width does not match the pool");
    const PoolEntry *best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto &e : pool.entries) {
        double d = (e.latent - z).norm();
        if (d < best_d || (d == best_d && best && e.plan.plan_id < best->plan.plan_id)) {
            best_d = d;
            best = &e;
        }
    }
    return best->plan;
}

LatentReport bayes_superoptimize(const StatsView &sv, const BoundQuery &q, const PlanPool &pool,
                                 const BottleneckNet &net, const LatentConfig &cfg) {
    if (cfg.budget < 1)
        raise(errc::argument, "the optimization budget must be at least 1");
    if (cfg.candidates < 2)
        raise(errc::argument, "need at least two candidate proposals per iteration");
    if (pool.entries.empty())
        raise(errc::argument, "the plan pool is empty");
    const Database &db = sv.db();

    CostedPlan base = optimize(q, sv);
    const std::string base_canon = canonical_plan_string(base.plan);
    const PoolEntry *p1 = pool.find(base_canon);
    if (!p1)
        raise(errc::argument, "the baseline plan is missing from the pool");
    const Eigen::VectorXd z1 = p1->latent;
    const int dim = (int)z1.size();
    PLANFORGE_ASSERT(net.latent_dim() == dim, "pool and network disagree on the latent width");

    // latent bounding box of the whole pool, the proposal playground
    Eigen::VectorXd lo = pool.entries.front().latent, hi = lo;
    for (const auto &e : pool.entries) {
        lo = lo.cwiseMin(e.latent);
        hi = hi.cwiseMax(e.latent);
    }
    Eigen::VectorXd span = hi - lo;
    Eigen::VectorXd sigma = (0.1 * span).cwiseMax(1e-3);

    LatentReport rep;
    std::map<std::string, double> executed; // canonical -> measured
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    const PoolEntry *incumbent = p1;

    // Decoded proposals span the whole pool, cross-join nested loops included,
    // and those run essentially forever on anything beyond toy data. Every
    // execution after the baseline is therefore capped at a fixed multiple of
    // the baseline's measured work; an aborted run is recorded at the cap —
    // an honest "at least this bad" observation for the surrogate that sits
    // far above the incumbent, so best_measured only ever holds a complete
    // measurement.
    ExecLimits limits; // baseline runs uncapped, then the cap is derived from it
    auto run = [&](const PoolEntry &e, int iteration, const Eigen::VectorXd &offset) {
        double measured;
        try {
            measured = (double)execute(db, e.plan, limits).tuples_processed;
        } catch (const Error &err) {
            if (err.kind() != errc::budget)
                throw;
            measured = (double)limits.max_tuples;
        }
        executed.emplace(canonical_plan_string(e.plan), measured);
        xs.push_back(e.latent);
        ys.push_back(std::log1p(measured));
        if (measured < rep.best_measured || rep.trace.empty()) {
            rep.best_measured = measured;
            rep.best_plan = e.plan;
            incumbent = &e;
        }
        rep.trace.push_back({iteration, offset, e.plan.plan_id, canonical_plan_string(e.plan),
                             measured, rep.best_measured});
    };
    run(*p1, 0, Eigen::VectorXd::Zero(dim));
    limits.max_tuples = 32 * (uint64_t)rep.best_measured + 1;

    Rng rng(mix_seed(cfg.seed, fnv1a64("latent-bo")));
    int exhausted_streak = 0;
    rep.status = "ok";
    for (int iter = 1; iter <= cfg.budget; ++iter) {
        Eigen::MatrixXd X((Eigen::Index)xs.size(), dim);
        Eigen::VectorXd y((Eigen::Index)ys.size());
        for (size_t i = 0; i < xs.size(); ++i) {
            X.row((Eigen::Index)i) = xs[i];
            y[(Eigen::Index)i] = ys[i];
        }
        GpModel gp = fit_gp(X, y);
        double best_y = y.minCoeff();

        std::vector<Eigen::VectorXd> cand((size_t)cfg.candidates);
        for (int c = 0; c < cfg.candidates; ++c) {
            Eigen::VectorXd z(dim);
            if (c < cfg.candidates / 2)
                for (int d = 0; d < dim; ++d)
                    z[d] = incumbent->latent[d] + sigma[d] * rng.next_normal();
            else
                for (int d = 0; d < dim; ++d)
                    z[d] = lo[d] + span[d] * rng.next_double();
            cand[(size_t)c] = std::move(z);
        }
        std::vector<size_t> order(cand.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> ei(cand.size());
        for (size_t c = 0; c < cand.size(); ++c)
            ei[c] = gp.expected_improvement(cand[c], best_y);
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return ei[a] > ei[b]; });

        const PoolEntry *pick = nullptr;
        Eigen::VectorXd pick_offset;
        for (size_t c : order) {
            const QueryPlan &plan = decode(pool, cand[c]);
            std::string canon = canonical_plan_string(plan);
            if (executed.count(canon))
                continue; // already measured, nothing new to learn
            pick = pool.find(canon);
            pick_offset = cand[c] - z1;
            break;
        }
        if (!pick) {
            if (++exhausted_streak == 3) {
                rep.status = "latent space exhausted";
                break;
            }
            continue;
        }
        exhausted_streak = 0;
        run(*pick, iter, pick_offset);
    }
    return rep;
}

} // namespace planforge
