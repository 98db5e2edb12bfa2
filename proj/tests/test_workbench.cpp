#include <doctest.h>

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "planforge/engine.hpp"
#include "planforge/error.hpp"
#include "planforge/workbench.hpp"
#include "test_support.hpp"

using namespace planforge;
using doctest::Contains;
using json = nlohmann::json;
using planforge::testing::tiny_config;

namespace {

const char *kThreeWay = "SELECT COUNT(*) FROM Actor JOIN Stars ON Actor.actor_id = Stars.actor_id "
                        "JOIN Movie ON Stars.movie_id = Movie.movie_id WHERE rating = 5";
const char *kFourWay =
    "SELECT COUNT(*) FROM Actor JOIN Stars ON Actor.actor_id = Stars.actor_id "
    "JOIN Movie ON Stars.movie_id = Movie.movie_id "
    "JOIN Produces ON Movie.movie_id = Produces.movie_id WHERE rating >= 4";

std::filesystem::path write_queries(const char *name, const std::string &body) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << body;
    return path;
}

StrategySpec quick_explore() {
    StrategySpec s;
    s.kind = StrategySpec::Kind::explore;
    s.explore.episodes_per_round = 4;
    s.explore.select_k = 2;
    s.explore.rounds = 2;
    return s;
}

StrategySpec quick_latent() {
    StrategySpec s;
    s.kind = StrategySpec::Kind::latent;
    s.latent.budget = 3;
    s.latent.candidates = 64;
    return s;
}

bool all_digits(const std::string &s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

} // namespace

TEST_CASE("top-k with k=1 is the optimizer choice plus one verification run") {
    Database db = generate_movie_db(tiny_config(11));
    StatsView sv(db, 2.0);
    LogicalQuery lq = parse(kFourWay);
    CostedPlan base = optimize(bind_query(db, lq), sv);

    TopkReport rep = superoptimize_topk(sv, lq, 1);
    CHECK(rep.executed.size() == 1);
    CHECK(canonical_plan_string(rep.best_plan) == canonical_plan_string(base.plan));
    CHECK(canonical_plan_string(rep.baseline_plan) == canonical_plan_string(base.plan));
    CHECK(rep.best_measured == rep.baseline_measured);
    CHECK(rep.best_measured == double(execute(db, base.plan).tuples_processed));
}

TEST_CASE("best measured cost never increases as k grows") {
    Database db = generate_movie_db(tiny_config(11));
    StatsView sv(db, 2.0);
    LogicalQuery lq = parse(kFourWay);

    double prev = -1;
    for (size_t k : {1, 2, 3, 5, 8}) {
        TopkReport rep = superoptimize_topk(sv, lq, k);
        CHECK(rep.executed.size() <= k);
        if (prev >= 0) CHECK(rep.best_measured <= prev);
        prev = rep.best_measured;
        // the candidate list is estimate-ordered, so the first entry is always
        // the baseline choice
        CHECK(rep.executed.front().canonical == canonical_plan_string(rep.baseline_plan));
    }
    CHECK_THROWS_WITH_AS(superoptimize_topk(sv, lq, 0), Contains("k >= 1"), Error);
}

TEST_CASE("strategy grammar round-trips and rejects junk") {
    CHECK(parse_strategy("baseline").name() == "baseline");
    CHECK(parse_strategy("topk").name() == "topk:3");
    CHECK(parse_strategy("topk:5").name() == "topk:5");
    CHECK(parse_strategy("explore").kind == StrategySpec::Kind::explore);
    CHECK(parse_strategy("latent").name() == "latent:20");
    CHECK(parse_strategy("latent:7").latent.budget == 7);

    CHECK_THROWS_WITH_AS(parse_strategy("banana"), Contains("unknown strategy"), Error);
    CHECK_THROWS_WITH_AS(parse_strategy("topk:0"), Contains("positive count"), Error);
    CHECK_THROWS_WITH_AS(parse_strategy("topk:x"), Contains("positive count"), Error);
    CHECK_THROWS_WITH_AS(parse_strategy("baseline:2"), Contains("no argument"), Error);
    CHECK_THROWS_WITH_AS(parse_strategy("explore:4"), Contains("tuned by flags"), Error);
}

TEST_CASE("experiment config demands exactly one database source") {
    ExperimentConfig cfg;
    cfg.query_file = "q.sql";
    CHECK_THROWS_WITH_AS(cfg.validate(), Contains("exactly one"), Error);
    cfg.gen = tiny_config(1);
    cfg.db_dir = "somewhere";
    CHECK_THROWS_WITH_AS(cfg.validate(), Contains("exactly one"), Error);
    cfg.db_dir.clear();
    CHECK_NOTHROW(cfg.validate());
    cfg.query_file.clear();
    CHECK_THROWS_WITH_AS(cfg.validate(), Contains("query file"), Error);
}

TEST_CASE("baseline experiment runs one plan per query and keeps line numbers") {
    auto qf = write_queries("wb_baseline.sql", "-- two probes\n" + std::string(kThreeWay) +
                                                   "\n\n   \n" + kFourWay + " -- trailing\n");
    ExperimentConfig cfg;
    cfg.gen = tiny_config(11);
    cfg.query_file = qf.string();
    cfg.strategy = parse_strategy("baseline");
    cfg.error_level = 2.0;
    cfg.seed = 5;

    ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.strategy == "baseline");
    CHECK(rep.cost_metric == "tuples");
    REQUIRE(rep.queries.size() == 2);
    CHECK(rep.queries[0].line == 2);
    CHECK(rep.queries[1].line == 5);
    for (const QueryExperiment &q : rep.queries) {
        CHECK(q.plans_executed == 1);
        CHECK(q.chosen_canonical == q.baseline_canonical);
        CHECK(q.chosen_measured == q.baseline_measured);
        CHECK(q.baseline_measured > 0);
        CHECK(q.break_even == "never"); // identical plans save nothing
    }

    // under the superoptimizer the chosen plan can only match or beat baseline
    cfg.strategy = parse_strategy("topk:8");
    ExperimentReport topk = run_experiment(cfg);
    for (size_t i = 0; i < topk.queries.size(); ++i) {
        const QueryExperiment &q = topk.queries[i];
        CHECK(q.plans_executed > 1);
        CHECK(q.chosen_measured <= q.baseline_measured);
        CHECK((q.break_even == "never" || all_digits(q.break_even)));
        CHECK(q.baseline_canonical == rep.queries[i].baseline_canonical);
    }
}

TEST_CASE("errors surface with the failing query's line number") {
    auto qf = write_queries("wb_broken.sql", "-- fine\n" + std::string(kThreeWay) +
                                                 "\n\nSELECT COUNT(*) FROM Nowhere\n");
    ExperimentConfig cfg;
    cfg.gen = tiny_config(3);
    cfg.query_file = qf.string();
    cfg.strategy = parse_strategy("baseline");
    CHECK_THROWS_WITH_AS(run_experiment(cfg), Contains("wb_broken.sql:4:"), Error);

    cfg.query_file = "/no/such/dir/q.sql";
    CHECK_THROWS_WITH_AS(run_experiment(cfg), Contains("cannot open query file"), Error);
}

TEST_CASE("comparison matrix is normalized to the baseline column") {
    Database db = generate_movie_db(tiny_config(11));
    std::vector<std::string> queries = {kThreeWay, kFourWay};
    CompareConfig cc;
    cc.strategies = {parse_strategy("baseline"), parse_strategy("topk:4"), quick_explore(),
                     quick_latent()};
    cc.error_level = 2.0;
    cc.seed = 17;

    CompareMatrix m = compare_strategies(db, queries, cc);
    REQUIRE(m.strategy_names.size() == 4);
    CHECK(m.strategy_names[0] == "baseline");
    REQUIRE(m.cells.size() == 2);
    for (const auto &row : m.cells) {
        REQUIRE(row.size() == 4);
        CHECK(row[0].normalized == 1.0); // baseline against itself
        for (const CompareCell &c : row) {
            CHECK(c.normalized <= 1.0);
            CHECK(c.measured > 0);
        }
    }

    // bit-identical on a second run: no wall-clock fields live in the cells
    CompareMatrix m2 = compare_strategies(db, queries, cc);
    for (size_t qi = 0; qi < m.cells.size(); ++qi)
        for (size_t si = 0; si < m.cells[qi].size(); ++si) {
            CHECK(m.cells[qi][si].measured == m2.cells[qi][si].measured);
            CHECK(m.cells[qi][si].normalized == m2.cells[qi][si].normalized);
            CHECK(m.cells[qi][si].canonical == m2.cells[qi][si].canonical);
        }

    json doc = compare_to_json(m); // validates internally
    CHECK(doc["strategies"].size() == 4);
    std::string csv = compare_to_csv(m);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4);
    CHECK(render_compare(m).find("baseline") != std::string::npos);

    CompareConfig empty;
    CHECK_THROWS_WITH_AS(compare_strategies(db, queries, empty), Contains("at least one"), Error);
}

TEST_CASE("reports validate against the shipped schemas") {
    auto qf = write_queries("wb_schema.sql", std::string(kThreeWay) + "\n");
    ExperimentConfig cfg;
    cfg.gen = tiny_config(7);
    cfg.query_file = qf.string();
    cfg.strategy = parse_strategy("topk:2");

    json doc = experiment_to_json(run_experiment(cfg));
    CHECK_NOTHROW(validate_against_schema(doc, experiment_report_schema()));

    json missing = doc;
    missing.erase("strategy");
    CHECK_THROWS_WITH_AS(validate_against_schema(missing, experiment_report_schema()),
                         Contains("missing required field \"strategy\""), Error);

    json wrong_type = doc;
    wrong_type["seed"] = "five";
    CHECK_THROWS_WITH_AS(validate_against_schema(wrong_type, experiment_report_schema()),
                         Contains("/seed"), Error);

    json extra = doc;
    extra["queries"][0]["vibe"] = "good";
    CHECK_THROWS_WITH_AS(validate_against_schema(extra, experiment_report_schema()),
                         Contains("unexpected field 'vibe'"), Error);

    json bad_enum = doc;
    bad_enum["cost_metric"] = "latency";
    CHECK_THROWS_WITH_AS(validate_against_schema(bad_enum, experiment_report_schema()),
                         Contains("not in the allowed set"), Error);

    json below = doc;
    below["queries"][0]["line"] = 0;
    CHECK_THROWS_WITH_AS(validate_against_schema(below, experiment_report_schema()),
                         Contains("/queries/0/line"), Error);
}

TEST_CASE("shipped schema files match the built-in definitions") {
    auto load = [](const char *rel) {
        std::ifstream in(std::string(PLANFORGE_REPO_DIR) + "/docs/" + rel);
        REQUIRE(in.good());
        return json::parse(in);
    };
    CHECK(load("experiment_report.schema.json") == experiment_report_schema());
    CHECK(load("compare_report.schema.json") == compare_report_schema());
    CHECK(load("bench_report.schema.json") == bench_report_schema());
}

TEST_CASE("bench reports serialize under their schema") {
    Database db = generate_movie_db(tiny_config(5));
    BenchReport rep = bench_compare(db, 100, 21);
    json doc = bench_to_json(rep); // validates internally
    CHECK(doc["n_queries"] == 100);
    CHECK(doc["generic"].contains("p50_ns"));

    json broken = doc;
    broken["n_queries"] = 12;
    CHECK_THROWS_WITH_AS(validate_against_schema(broken, bench_report_schema()),
                         Contains("below minimum"), Error);
}

TEST_CASE("experiment csv quotes sql and carries one row per query") {
    auto qf = write_queries("wb_csv.sql", std::string(kThreeWay) + "\n" + kFourWay + "\n");
    ExperimentConfig cfg;
    cfg.gen = tiny_config(7);
    cfg.query_file = qf.string();
    cfg.strategy = parse_strategy("baseline");

    std::string csv = experiment_to_csv(run_experiment(cfg));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("\"SELECT COUNT(*)") != std::string::npos);
    CHECK(csv.substr(0, 8) == "line,sql");
}
