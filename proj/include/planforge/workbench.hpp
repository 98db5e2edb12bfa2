#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planforge/bespoke.hpp"
#include "planforge/catalog.hpp"
#include "planforge/engine.hpp"
#include "planforge/explore.hpp"
#include "planforge/latent.hpp"
#include "planforge/optimizer.hpp"
#include "planforge/workload.hpp"

namespace planforge {

struct TopkRecord {
    uint64_t plan_id = 0;
    std::string canonical;
    double estimated = 0;
    double measured = 0; // tuples processed
};

struct TopkReport {
    QueryPlan best_plan;
    double best_measured = 0;
    QueryPlan baseline_plan; // the k=1 element, i.e. the optimizer's choice
    double baseline_measured = 0;
    std::vector<TopkRecord> executed; // ascending estimated cost
};

// Executes the k estimate-cheapest plans and keeps the one that measured
// best. The executed sets nest as k grows, so the best measured cost is
// non-increasing in k. k must be >= 1.
TopkReport superoptimize_topk(const StatsView &sv, const LogicalQuery &query, size_t k,
                              const PlannerConfig &pcfg = {});

// One experiment strategy; the kind selects which config applies.
struct StrategySpec {
    enum class Kind { baseline, topk, explore, latent };
    Kind kind = Kind::baseline;
    size_t k = 3;            // topk
    ExploreConfig explore;   // explore (its seed is overridden per query)
    LatentConfig latent;     // latent
    PoolConfig pool;         // latent's plan-pool source

    std::string name() const;
};

// "baseline", "topk:K", "explore", "latent" (latent accepts "latent:BUDGET").
StrategySpec parse_strategy(const std::string &text);

struct ExperimentConfig {
    std::optional<GenConfig> gen; // generate in-process when set ...
    std::string db_dir;           // ... otherwise load from this directory
    std::string query_file;       // one statement per line
    StrategySpec strategy;
    double error_level = 1.0;
    uint64_t seed = 1;
    CostKind cost = CostKind::tuples; // the metric the report's costs use
    std::string store_path;          // optional experience CSV shared across queries

    void validate() const; // exactly one database source, sane numbers
};

struct QueryExperiment {
    int line = 0; // 1-based line in the query file
    std::string sql;
    double baseline_estimated = 0;
    double baseline_measured = 0;
    std::string baseline_canonical;
    std::string chosen_canonical;
    double chosen_measured = 0;
    uint64_t plans_executed = 0; // every engine run this query triggered
    double optimize_wall_ns = 0; // planning plus strategy search
    double baseline_wall_ns = 0; // one timed baseline-plan run
    double chosen_wall_ns = 0;   // one timed chosen-plan run
    std::string break_even;      // executions until the search pays for itself
};

struct ExperimentReport {
    std::string strategy;
    uint64_t seed = 0;
    double error_level = 0;
    std::string cost_metric; // "tuples" or "wall"
    std::vector<QueryExperiment> queries;
};

// Runs the strategy over every query in the file. Deterministic plan choices
// for a fixed seed: each query gets the sub-seed mix_seed(seed, index). Any
// sub-error is rethrown with the query file line prepended. The break-even
// field is ceil(optimize_wall / per-execution savings), or "never" when the
// chosen plan saves nothing.
ExperimentReport run_experiment(const ExperimentConfig &cfg);

struct CompareCell {
    double measured = 0;   // tuples processed by the strategy's chosen plan
    double normalized = 0; // measured / baseline measured
    std::string canonical;
};

struct CompareConfig {
    std::vector<StrategySpec> strategies;
    double error_level = 1.0;
    uint64_t seed = 1;
};

struct CompareMatrix {
    std::vector<std::string> strategy_names;
    std::vector<std::string> queries;
    std::vector<std::vector<CompareCell>> cells; // [query][strategy]
};

// Runs every strategy on every query against the same database, normalizing
// each cell by that query's baseline measured cost (so a baseline column is
// exactly 1.0). Strategy randomness is derived per (strategy, query), making
// the matrix deterministic for a fixed seed.
CompareMatrix compare_strategies(const Database &db, std::span<const std::string> queries,
                                 const CompareConfig &cfg);

// Report serialization. Every to_json output validates against the matching
// schema below; the copies under docs/ are kept byte-for-byte equivalent by a
// test.
nlohmann::json experiment_to_json(const ExperimentReport &r);
std::string experiment_to_csv(const ExperimentReport &r);
nlohmann::json compare_to_json(const CompareMatrix &m);
std::string compare_to_csv(const CompareMatrix &m);
std::string render_compare(const CompareMatrix &m); // aligned text
nlohmann::json bench_to_json(const BenchReport &r);

nlohmann::json experiment_report_schema();
nlohmann::json compare_report_schema();
nlohmann::json bench_report_schema();

// Structural validation against the JSON-schema subset the shipped schemas
// use: type, properties, required, additionalProperties, items, enum,
// minimum, minItems. Throws errc::data naming the failing path.
void validate_against_schema(const nlohmann::json &doc, const nlohmann::json &schema);

} // namespace planforge
