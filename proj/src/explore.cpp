#include "planforge/explore.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "planforge/error.hpp"
#include "planforge/rng.hpp"

namespace planforge {

void ExploreConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        raise(errc::config, "epsilon must lie in [0, 1]");
    if (episodes_per_round < 1)
        raise(errc::config, "episodes_per_round must be positive");
    if (select_k < 1 || select_k > episodes_per_round)
        raise(errc::config, "select_k must lie in [1, episodes_per_round]");
    if (rounds < 0)
        raise(errc::config, "rounds must be non-negative");
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
        raise(errc::config, "sample_fraction must lie in (0, 1]");
}

namespace {

struct Fragment {
    PlanNodeRef node;
    std::vector<std::string> tables; // sorted
};

std::vector<std::string> merge_tables(const std::vector<std::string> &a,
                                      const std::vector<std::string> &b) {
    std::vector<std::string> out;
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

QueryPlan run_episode(const Database &db, const BoundQuery &q, const ValueModel &model,
                      double epsilon, uint64_t seed) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        raise(errc::argument, "epsilon must lie in [0, 1]");
    PLANFORGE_ASSERT(!q.tables.empty(), "an episode needs at least one table");
    Rng rng(mix_seed(seed, fnv1a64("episode")));

    struct Action {
        PlanNodeRef result;
        bool join;
        size_t a, b; // materialize: pending slot; join: built slots a < b
    };

    std::vector<Fragment> built;
    std::vector<size_t> pending(q.tables.size());
    for (size_t i = 0; i < pending.size(); ++i)
        pending[i] = i;

    while (!pending.empty() || built.size() > 1) {
        std::vector<Action> actions;
        for (size_t pi = 0; pi < pending.size(); ++pi)
            for (auto &leaf : access_variants(db, q, q.tables[pending[pi]]))
                actions.push_back({leaf, false, pi, 0});
        for (size_t i = 0; i < built.size(); ++i)
            for (size_t j = i + 1; j < built.size(); ++j) {
                auto conds = connecting_edges(q, built[i].tables, built[j].tables);
                auto algos = conds.empty()
                                 ? std::vector<JoinAlgo>{JoinAlgo::nested_loop}
                                 : std::vector<JoinAlgo>{JoinAlgo::hash, JoinAlgo::sort_merge,
                                                         JoinAlgo::nested_loop};
                for (JoinAlgo algo : algos)
                    actions.push_back(
                        {make_join(algo, conds, built[i].node, built[j].node), true, i, j});
            }
        PLANFORGE_ASSERT(!actions.empty(), "an unfinished episode always has a next action");

        size_t pick = 0;
        if (rng.next_bernoulli(epsilon)) {
            pick = (size_t)rng.next_below(actions.size());
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (size_t a = 0; a < actions.size(); ++a) {
                double s = model.score(QueryPlan{actions[a].result, seed});
                if (s < best) {
                    best = s;
                    pick = a;
                }
            }
        }

        const Action &act = actions[pick];
        if (act.join) {
            Fragment merged{act.result, merge_tables(built[act.a].tables, built[act.b].tables)};
            built.erase(built.begin() + (ptrdiff_t)act.b);
            built.erase(built.begin() + (ptrdiff_t)act.a);
            built.push_back(std::move(merged));
        } else {
            built.push_back({act.result, {q.tables[pending[act.a]]}});
            pending.erase(pending.begin() + (ptrdiff_t)act.a);
        }
    }
    return QueryPlan{built.front().node, seed};
}

std::vector<QueryPlan> select_diverse(const StatsView &sv, std::span<const QueryPlan> candidates,
                                      int k, const ValueModel &model, const FeatureConfig &fc) {
    if (k < 1)
        raise(errc::argument, "select_diverse needs k >= 1");

    // collapse duplicates, keeping the lowest plan_id per canonical form
    std::map<std::string, QueryPlan> by_canon;
    for (const QueryPlan &c : candidates) {
        auto [it, fresh] = by_canon.try_emplace(canonical_plan_string(c), c);
        if (!fresh && c.plan_id < it->second.plan_id)
            it->second = c;
    }
    std::vector<QueryPlan> pool;
    for (auto &[canon, plan] : by_canon)
        pool.push_back(plan);
    std::sort(pool.begin(), pool.end(),
              [](const QueryPlan &a, const QueryPlan &b) { return a.plan_id < b.plan_id; });
    if ((int)pool.size() <= k)
        return pool;

    std::vector<FeatureVector> feats;
    feats.reserve(pool.size());
    for (const QueryPlan &p : pool)
        feats.push_back(featurize(sv, p, fc));

    std::vector<size_t> picked;
    std::vector<bool> used(pool.size(), false);
    size_t first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pool.size(); ++i) {
        double s = model.score(pool[i]);
        if (s < best) { // strict: ties keep the earlier (lower plan_id) entry
            best = s;
            first = i;
        }
    }
    picked.push_back(first);
    used[first] = true;
    while ((int)picked.size() < k) {
        size_t next = 0;
        double far = -1.0;
        for (size_t i = 0; i < pool.size(); ++i) {
            if (used[i])
                continue;
            double near = std::numeric_limits<double>::infinity();
            for (size_t p : picked)
                near = std::min(near, (feats[i] - feats[p]).norm());
            if (near > far) {
                far = near;
                next = i;
            }
        }
        picked.push_back(next);
        used[next] = true;
    }
    std::vector<QueryPlan> out;
    for (size_t i : picked)
        out.push_back(pool[i]);
    return out;
}

ExploreReport superoptimize_explore(const StatsView &sv, const LogicalQuery &query,
                                    const ExploreConfig &cfg, ExperienceStore &store) {
    cfg.validate();
    const Database &db = sv.db();
    BoundQuery q = bind_query(db, query);
    const std::string fp = templatize(print(query)).fingerprint;

    ExploreReport rep;
    CostedPlan base = optimize(q, sv);
    rep.baseline_plan = base.plan;
    rep.baseline_measured = (double)execute(db, base.plan).tuples_processed;
    rep.executed.push_back(
        {base.plan.plan_id, canonical_plan_string(base.plan), rep.baseline_measured, false, 0});

    // plans verified on the full data, keyed by canonical form
    std::map<std::string, std::pair<QueryPlan, double>> verified;
    verified.emplace(canonical_plan_string(base.plan),
                     std::make_pair(base.plan, rep.baseline_measured));

    if (cfg.rounds == 0) {
        rep.best_plan = base.plan;
        rep.best_measured = rep.baseline_measured;
        rep.superoptimized = false;
        rep.status = "no superoptimization performed";
        return rep;
    }
    rep.superoptimized = true;
    rep.status = "ok";

    // Random episodes reach the full plan space, cross-join nested loops
    // included, and those run essentially forever on anything beyond toy data.
    // Every post-baseline execution is capped at a fixed multiple of the
    // baseline's measured work; an aborted run is recorded at the cap — an
    // honest "at least this bad" value for training that sits far above the
    // baseline, so the verified minimum is always a complete measurement.
    const ExecLimits limits{32 * (uint64_t)rep.baseline_measured + 1};
    auto capped = [&](auto &&go) -> double {
        try {
            return (double)go().tuples_processed;
        } catch (const Error &err) {
            if (err.kind() != errc::budget)
                throw;
            return (double)limits.max_tuples;
        }
    };

    FeatureConfig fc;
    NetConfig nc;
    nc.input = fc.feature_count();
    TrainConfig tc;
    tc.seed = cfg.seed;
    BottleneckNet net = store.size() ? train_bottleneck(store.all(), nc, tc)
                                     : BottleneckNet(nc, cfg.seed);

    uint64_t ep_seed = mix_seed(cfg.seed, fnv1a64("explore-episodes"));
    for (int round = 1; round <= cfg.rounds; ++round) {
        NetValueModel model(sv, net, fc);
        std::vector<QueryPlan> episodes;
        for (int e = 0; e < cfg.episodes_per_round; ++e)
            episodes.push_back(run_episode(db, q, model, cfg.epsilon, ep_seed++));
        std::vector<QueryPlan> chosen = select_diverse(sv, episodes, cfg.select_k, model, fc);

        // the store must grow by exactly select_k rows per round: top up with
        // fully random episodes, falling back to repeat measurements when the
        // whole plan space is smaller than k
        auto contains = [&](const QueryPlan &p) {
            std::string c = canonical_plan_string(p);
            return std::any_of(chosen.begin(), chosen.end(), [&](const QueryPlan &x) {
                return canonical_plan_string(x) == c;
            });
        };
        for (int guard = 64 * cfg.select_k;
             (int)chosen.size() < cfg.select_k && guard > 0; --guard) {
            QueryPlan extra = run_episode(db, q, model, 1.0, ep_seed++);
            if (!contains(extra))
                chosen.push_back(extra);
        }
        while ((int)chosen.size() < cfg.select_k)
            chosen.push_back(chosen[chosen.size() % std::max<size_t>(chosen.size(), 1)]);

        QueryPlan round_best;
        double round_best_cost = std::numeric_limits<double>::infinity();
        for (const QueryPlan &p : chosen) {
            const bool sampled = cfg.sample_fraction < 1.0;
            double measured = capped([&] {
                return sampled ? execute_on_sample(db, p, cfg.sample_fraction,
                                                   mix_seed(cfg.seed, (uint64_t)round), limits)
                               : execute(db, p, limits);
            });
            std::string canon = canonical_plan_string(p);
            rep.executed.push_back({p.plan_id, canon, measured, sampled, round});
            store.add({fp, featurize(sv, p, fc), measured, sampled});
            if (!sampled)
                verified.emplace(canon, std::make_pair(p, measured));
            if (measured < round_best_cost) {
                round_best_cost = measured;
                round_best = p;
            }
        }
        net = train_bottleneck(store.all(), nc, tc);

        // judge the round winner on the real data before it can become the answer
        std::string canon = canonical_plan_string(round_best);
        if (!verified.count(canon)) {
            double full = capped([&] { return execute(db, round_best, limits); });
            rep.executed.push_back({round_best.plan_id, canon, full, false, round});
            verified.emplace(canon, std::make_pair(round_best, full));
        }
    }

    auto best = verified.begin();
    for (auto it = verified.begin(); it != verified.end(); ++it)
        if (it->second.second < best->second.second)
            best = it;
    rep.best_plan = best->second.first;
    rep.best_measured = best->second.second;
    return rep;
}

} // namespace planforge
