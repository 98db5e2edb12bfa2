// planforge: generate data, plan queries, superoptimize them three ways,
// benchmark the bespoke bitmap path, and analyze workload logs.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "planforge/bespoke.hpp"
#include "planforge/engine.hpp"
#include "planforge/error.hpp"
#include "planforge/explore.hpp"
#include "planforge/latent.hpp"
#include "planforge/mlp.hpp"
#include "planforge/optimizer.hpp"
#include "planforge/rng.hpp"
#include "planforge/sqlfront.hpp"
#include "planforge/workbench.hpp"
#include "planforge/workload.hpp"

using namespace planforge;
using json = nlohmann::json;

namespace {

struct GlobalFlags {
    uint64_t seed = 1;
    double error_level = 1.0;
    std::string cost = "tuples";
    std::string out; // empty = stdout only

    CostKind cost_kind() const { return cost == "wall" ? CostKind::wall : CostKind::tuples; }
};

void write_out(const GlobalFlags &g, const std::string &text) {
    if (g.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream f(g.out);
    if (!f) raise(errc::data, "cannot write " + g.out);
    f << text;
}

// <out>.csv companion for commands that emit both machine formats
void write_companion_csv(const GlobalFlags &g, const std::string &csv) {
    if (g.out.empty()) return;
    std::ofstream f(g.out + ".csv");
    if (!f) raise(errc::data, "cannot write " + g.out + ".csv");
    f << csv;
}

Database open_db(const std::string &dir) { return load_db(dir); }

struct QueryArgs {
    std::string db_dir;
    std::string query_file;
};

void add_query_args(CLI::App *cmd, QueryArgs &qa) {
    cmd->add_option("--db", qa.db_dir, "database directory (from `gen`)")->required();
    cmd->add_option("--queries", qa.query_file, "query file, one statement per line")->required();
}

int run_gen(const GlobalFlags &g, const GenConfig &cfg, const std::string &dir) {
    GenConfig c = cfg;
    c.seed = g.seed;
    c.validate();
    Database db = generate_movie_db(c);
    save_db(db, dir);
    std::printf("wrote %s: %llu actors, %llu movies, %llu companies\n", dir.c_str(),
                (unsigned long long)c.n_actors, (unsigned long long)c.n_movies,
                (unsigned long long)c.n_companies);
    return 0;
}

int run_optimize(const GlobalFlags &g, const QueryArgs &qa, size_t k, bool bushy, bool cross) {
    Database db = open_db(qa.db_dir);
    StatsView sv(db, g.error_level);
    PlannerConfig pc;
    pc.bushy = bushy;
    pc.allow_cross_joins = cross;

    json out = json::array();
    for (const std::string &sql : read_query_file(qa.query_file)) {
        BoundQuery bq = bind_query(db, parse(sql));
        json entry = {{"sql", sql}};
        if (k <= 1) {
            CostedPlan cp = optimize(bq, sv, pc);
            entry["estimated_cost"] = cp.estimated_cost;
            entry["plan"] = json::parse(plan_to_json(cp.plan));
        } else {
            json ranked = json::array();
            for (const CostedPlan &cp : top_k_plans(bq, sv, k, pc))
                ranked.push_back({{"estimated_cost", cp.estimated_cost},
                                  {"plan", json::parse(plan_to_json(cp.plan))}});
            entry["ranked"] = ranked;
        }
        out.push_back(std::move(entry));
    }
    write_out(g, out.dump(2));
    return 0;
}

ExperimentConfig experiment_base(const GlobalFlags &g, const QueryArgs &qa) {
    ExperimentConfig cfg;
    cfg.db_dir = qa.db_dir;
    cfg.query_file = qa.query_file;
    cfg.error_level = g.error_level;
    cfg.seed = g.seed;
    cfg.cost = g.cost_kind();
    return cfg;
}

int emit_experiment(const GlobalFlags &g, const ExperimentConfig &cfg) {
    ExperimentReport rep = run_experiment(cfg);
    write_out(g, experiment_to_json(rep).dump(2));
    write_companion_csv(g, experiment_to_csv(rep));
    return 0;
}

// rank by estimate, then execute down the list until the wall budget is spent
int run_topk_budget(const GlobalFlags &g, const QueryArgs &qa, double budget_ms) {
    Database db = open_db(qa.db_dir);
    StatsView sv(db, g.error_level);
    json out = json::array();
    for (const std::string &sql : read_query_file(qa.query_file)) {
        BoundQuery bq = bind_query(db, parse(sql));
        std::vector<CostedPlan> ranked = top_k_plans(bq, sv, 64);
        auto t0 = std::chrono::steady_clock::now();
        json tried = json::array();
        double best = 0;
        std::string best_canonical;
        for (const CostedPlan &cp : ranked) {
            double measured = double(execute(db, cp.plan).tuples_processed);
            std::string canon = canonical_plan_string(cp.plan);
            tried.push_back({{"estimated_cost", cp.estimated_cost}, {"measured", measured}});
            if (best_canonical.empty() || measured < best ||
                (measured == best && canon < best_canonical)) {
                best = measured;
                best_canonical = canon;
            }
            double spent_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
            if (spent_ms >= budget_ms) break;
        }
        out.push_back({{"sql", sql},
                       {"plans_tried", tried.size()},
                       {"best_measured", best},
                       {"best_plan", best_canonical},
                       {"trace", tried}});
    }
    write_out(g, out.dump(2));
    return 0;
}

int run_latent(const GlobalFlags &g, const QueryArgs &qa, const StrategySpec &spec,
               const std::string &store_csv, const std::string &trace_csv,
               const std::string &weights_out) {
    ExperimentConfig cfg = experiment_base(g, qa);
    cfg.strategy = spec;
    cfg.store_path = store_csv;
    ExperimentReport rep = run_experiment(cfg);
    write_out(g, experiment_to_json(rep).dump(2));
    write_companion_csv(g, experiment_to_csv(rep));

    // re-derive the detailed trace / weights on request (same sub-seeds)
    if (!trace_csv.empty() || !weights_out.empty()) {
        Database db = open_db(qa.db_dir);
        StatsView sv(db, g.error_level);
        ExperienceStore store =
            store_csv.empty() ? ExperienceStore() : ExperienceStore(store_csv);
        std::ofstream tf;
        if (!trace_csv.empty()) {
            tf.open(trace_csv);
            if (!tf) raise(errc::data, "cannot write " + trace_csv);
            tf << "query,iteration,offset,plan_id,measured,incumbent\n";
        }
        std::vector<std::string> queries = read_query_file(qa.query_file);
        for (size_t i = 0; i < queries.size(); ++i) {
            uint64_t sub_seed = mix_seed(g.seed, uint64_t(i));
            BoundQuery bq = bind_query(db, parse(queries[i]));
            BottleneckNet net = store.all().empty() ? BottleneckNet(NetConfig{}, sub_seed)
                                                    : train_bottleneck(store.all());
            PoolConfig pc = spec.pool;
            pc.seed = sub_seed;
            LatentConfig lc = spec.latent;
            lc.seed = sub_seed;
            LatentReport lrep = bayes_superoptimize(sv, bq, build_pool(sv, bq, net, pc), net, lc);
            if (tf.is_open()) {
                for (const LatentTraceRecord &t : lrep.trace) {
                    tf << i << ',' << t.iteration << ",\"";
                    for (int d = 0; d < t.offset.size(); ++d)
                        tf << (d ? ";" : "") << t.offset[d];
                    tf << "\"," << t.plan_id << ',' << t.measured << ',' << t.incumbent << '\n';
                }
            }
            if (!weights_out.empty() && i == 0) net.save(weights_out);
        }
    }
    return 0;
}

int run_bench(const GlobalFlags &g, const std::string &db_dir, size_t n) {
    Database db = open_db(db_dir);
    BenchReport rep = bench_compare(db, n, g.seed);
    std::cout << render_bench(rep);
    if (!g.out.empty()) write_out(g, bench_to_json(rep).dump(2));
    return 0;
}

int run_analyze(const GlobalFlags &g, const std::string &log_path) {
    LogFile log = read_log_csv(log_path);
    AggregateResult agg = aggregate(log.records);
    BucketReport rep = bucket_report(agg.stats);
    std::cout << render_report(rep);
    if (agg.malformed + log.malformed_lines > 0)
        std::printf("skipped %llu malformed records\n",
                    (unsigned long long)(agg.malformed + log.malformed_lines));
    if (!g.out.empty()) write_out(g, report_csv(rep));
    return 0;
}

int run_compare(const GlobalFlags &g, const QueryArgs &qa,
                const std::vector<std::string> &strategy_names) {
    Database db = open_db(qa.db_dir);
    CompareConfig cc;
    for (const std::string &s : strategy_names) cc.strategies.push_back(parse_strategy(s));
    cc.error_level = g.error_level;
    cc.seed = g.seed;
    std::vector<std::string> queries = read_query_file(qa.query_file);
    CompareMatrix m = compare_strategies(db, queries, cc);
    std::cout << render_compare(m);
    if (!g.out.empty()) {
        write_out(g, compare_to_json(m).dump(2));
        write_companion_csv(g, compare_to_csv(m));
    }
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"query superoptimization workbench"};
    app.require_subcommand(1);
    app.fallthrough(); // lets --seed/--out trail the subcommand

    GlobalFlags g;
    app.add_option("--seed", g.seed, "root RNG seed")->capture_default_str();
    app.add_option("--error-level", g.error_level, "statistics corruption level, 0 = exact")
        ->capture_default_str();
    app.add_option("--cost", g.cost, "measured-cost metric")
        ->check(CLI::IsMember({"tuples", "wall"}))
        ->capture_default_str();
    app.add_option("--out", g.out, "write the machine-readable report here");

    // gen
    GenConfig gen_cfg;
    std::string gen_dir;
    auto *gen = app.add_subcommand("gen", "generate a seeded movie database");
    gen->add_option("--dir", gen_dir, "output directory")->required();
    gen->add_option("--actors", gen_cfg.n_actors)->capture_default_str();
    gen->add_option("--movies", gen_cfg.n_movies)->capture_default_str();
    gen->add_option("--companies", gen_cfg.n_companies)->capture_default_str();
    gen->add_option("--stars-per-movie", gen_cfg.stars_per_movie)->capture_default_str();
    gen->add_option("--companies-per-movie", gen_cfg.companies_per_movie)->capture_default_str();
    gen->add_option("--skew", gen_cfg.skew, "Zipf skew of actor/company popularity")
        ->capture_default_str();

    // optimize
    QueryArgs opt_qa;
    size_t opt_k = 1;
    bool opt_bushy = false, opt_cross = false;
    auto *opt = app.add_subcommand("optimize", "plan queries and print JSON plans");
    add_query_args(opt, opt_qa);
    opt->add_option("--k", opt_k, "emit the k cheapest plans instead of one")
        ->capture_default_str();
    opt->add_flag("--bushy", opt_bushy, "search bushy join trees");
    opt->add_flag("--cross", opt_cross, "allow cross joins");

    // superopt topk | explore | latent
    auto *so = app.add_subcommand("superopt", "execution-based plan search");
    so->require_subcommand(1);

    QueryArgs topk_qa;
    size_t topk_k = 3;
    double topk_budget_ms = 0;
    auto *topk = so->add_subcommand("topk", "execute the k best-estimated plans");
    add_query_args(topk, topk_qa);
    topk->add_option("--k", topk_k)->capture_default_str();
    topk->add_option("--budget-ms", topk_budget_ms,
                     "instead of k, execute ranked plans until this much wall time is spent");

    QueryArgs ex_qa;
    StrategySpec ex_spec;
    ex_spec.kind = StrategySpec::Kind::explore;
    std::string ex_store;
    auto *ex = so->add_subcommand("explore", "epsilon-greedy episode search");
    add_query_args(ex, ex_qa);
    ex->add_option("--epsilon", ex_spec.explore.epsilon)->capture_default_str();
    ex->add_option("--episodes", ex_spec.explore.episodes_per_round)->capture_default_str();
    ex->add_option("--select-k", ex_spec.explore.select_k)->capture_default_str();
    ex->add_option("--rounds", ex_spec.explore.rounds)->capture_default_str();
    ex->add_option("--sample-fraction", ex_spec.explore.sample_fraction)->capture_default_str();
    ex->add_option("--store", ex_store, "experience CSV, read + appended");

    QueryArgs la_qa;
    StrategySpec la_spec;
    la_spec.kind = StrategySpec::Kind::latent;
    std::string la_store, la_trace, la_weights;
    auto *la = so->add_subcommand("latent", "Bayesian optimization in plan latent space");
    add_query_args(la, la_qa);
    la->add_option("--budget", la_spec.latent.budget, "BO iterations")->capture_default_str();
    la->add_option("--candidates", la_spec.latent.candidates)->capture_default_str();
    la->add_option("--pool-top-k", la_spec.pool.top_k)->capture_default_str();
    la->add_option("--pool-episodes", la_spec.pool.random_episodes)->capture_default_str();
    la->add_option("--store", la_store, "experience CSV to train the bottleneck net from");
    la->add_option("--trace", la_trace, "write the BO trace CSV here");
    la->add_option("--weights", la_weights, "save the trained network here");

    // bench bespoke
    auto *bench = app.add_subcommand("bench", "head-to-head benchmarks");
    bench->require_subcommand(1);
    std::string bench_db;
    size_t bench_n = 1000;
    auto *bb = bench->add_subcommand("bespoke", "bitmap index vs the generic engine");
    bb->add_option("--db", bench_db, "database directory")->required();
    bb->add_option("--n", bench_n, "query instances, >= 100")->capture_default_str();

    // analyze
    std::string an_log;
    auto *an = app.add_subcommand("analyze", "workload-repetition report from a query log");
    an->add_option("--log", an_log, "CSV log: timestamp_ms,duration_ms,sql")->required();

    // compare
    QueryArgs cmp_qa;
    std::vector<std::string> cmp_strategies = {"baseline", "topk:3", "explore", "latent"};
    auto *cmp = app.add_subcommand("compare", "strategy-by-query cost matrix");
    add_query_args(cmp, cmp_qa);
    cmp->add_option("--strategies", cmp_strategies, "e.g. baseline topk:5 explore latent:10")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e); // prints help/usage; nonzero collapses to 1
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return run_gen(g, gen_cfg, gen_dir);
        if (opt->parsed()) return run_optimize(g, opt_qa, opt_k, opt_bushy, opt_cross);
        if (topk->parsed()) {
            if (topk_budget_ms > 0) return run_topk_budget(g, topk_qa, topk_budget_ms);
            ExperimentConfig cfg = experiment_base(g, topk_qa);
            cfg.strategy = parse_strategy("topk:" + std::to_string(topk_k));
            return emit_experiment(g, cfg);
        }
        if (ex->parsed()) {
            ExperimentConfig cfg = experiment_base(g, ex_qa);
            cfg.strategy = ex_spec;
            cfg.store_path = ex_store;
            return emit_experiment(g, cfg);
        }
        if (la->parsed()) return run_latent(g, la_qa, la_spec, la_store, la_trace, la_weights);
        if (bb->parsed()) return run_bench(g, bench_db, bench_n);
        if (an->parsed()) return run_analyze(g, an_log);
        if (cmp->parsed()) return run_compare(g, cmp_qa, cmp_strategies);
        std::fprintf(stderr, "no subcommand\n");
        return 1;
    } catch (const Error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == errc::internal ? 3 : 2;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
