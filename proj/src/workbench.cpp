#include "planforge/workbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "planforge/error.hpp"
#include "planforge/rng.hpp"
#include "planforge/sqlfront.hpp"

namespace planforge {

using json = nlohmann::json;

TopkReport superoptimize_topk(const StatsView &sv, const LogicalQuery &query, size_t k,
                              const PlannerConfig &pcfg) {
    if (k < 1) raise(errc::argument, "superoptimize_topk needs k >= 1");
    BoundQuery bq = bind_query(sv.db(), query);
    std::vector<CostedPlan> plans = top_k_plans(bq, sv, k, pcfg);
    PLANFORGE_ASSERT(!plans.empty(), "top_k_plans returned nothing");

    TopkReport rep;
    rep.baseline_plan = plans[0].plan;
    size_t best = 0;
    for (size_t i = 0; i < plans.size(); ++i) {
        ExecutionResult r = execute(sv.db(), plans[i].plan);
        TopkRecord rec;
        rec.plan_id = plans[i].plan.plan_id;
        rec.canonical = canonical_plan_string(plans[i].plan);
        rec.estimated = plans[i].estimated_cost;
        rec.measured = double(r.tuples_processed);
        rep.executed.push_back(rec);
        if (i == 0) rep.baseline_measured = rec.measured;
        const TopkRecord &b = rep.executed[best];
        if (rec.measured < b.measured ||
            (rec.measured == b.measured && rec.canonical < b.canonical))
            best = i;
    }
    rep.best_plan = plans[best].plan;
    rep.best_measured = rep.executed[best].measured;
    return rep;
}

std::string StrategySpec::name() const {
    switch (kind) {
    case Kind::baseline: return "baseline";
    case Kind::topk: return "topk:" + std::to_string(k);
    case Kind::explore: return "explore";
    case Kind::latent: return "latent:" + std::to_string(latent.budget);
    }
    return "?";
}

StrategySpec parse_strategy(const std::string &text) {
    StrategySpec spec;
    std::string head = text, arg;
    if (auto colon = text.find(':'); colon != std::string::npos) {
        head = text.substr(0, colon);
        arg = text.substr(colon + 1);
    }
    auto numeric_arg = [&](const char *what) {
        size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(arg, &pos);
        } catch (const std::exception &) {
            pos = std::string::npos;
        }
        if (arg.empty() || pos != arg.size() || v < 1)
            raise(errc::argument, std::string(what) + " needs a positive count, got '" + arg + "'");
        return size_t(v);
    };
    if (head == "baseline") {
        spec.kind = StrategySpec::Kind::baseline;
        if (!arg.empty()) raise(errc::argument, "baseline takes no argument");
    } else if (head == "topk") {
        spec.kind = StrategySpec::Kind::topk;
        if (!arg.empty()) spec.k = numeric_arg("topk");
    } else if (head == "explore") {
        spec.kind = StrategySpec::Kind::explore;
        if (!arg.empty()) raise(errc::argument, "explore is tuned by flags, not 'explore:N'");
    } else if (head == "latent") {
        spec.kind = StrategySpec::Kind::latent;
        if (!arg.empty()) spec.latent.budget = int(numeric_arg("latent"));
    } else {
        raise(errc::argument, "unknown strategy '" + text +
                                  "' (expected baseline, topk[:K], explore, latent[:BUDGET])");
    }
    return spec;
}

void ExperimentConfig::validate() const {
    if (gen.has_value() == !db_dir.empty())
        raise(errc::config, "exactly one of a generator config and a database directory is required");
    if (query_file.empty()) raise(errc::config, "experiment needs a query file");
    if (error_level < 0) raise(errc::config, "error_level must be >= 0");
    if (gen) gen->validate();
}

namespace {

using clock = std::chrono::steady_clock;

double ns_since(clock::time_point t0) {
    return double(std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
}

struct NumberedQuery {
    int line = 0;
    std::string sql;
};

// read_query_file with the original line numbers kept for error reports
std::vector<NumberedQuery> read_numbered_queries(const std::string &path) {
    std::ifstream in(path);
    if (!in) raise(errc::data, "cannot open query file " + path);
    std::vector<NumberedQuery> out;
    std::string line;
    for (int no = 1; std::getline(in, line); ++no) {
        if (auto cut = line.find("--"); cut != std::string::npos) line.resize(cut);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = line.find_last_not_of(" \t\r");
        out.push_back({no, line.substr(a, b - a + 1)});
    }
    return out;
}

struct StrategyOutcome {
    QueryPlan chosen;
    double measured_tuples = 0;
    uint64_t executions = 0;
};

// Runs one strategy on one query. All randomness flows from sub_seed, so
// queries can be dispatched in any order (or in parallel) without changing
// the outcome.
StrategyOutcome run_strategy(const StatsView &sv, const LogicalQuery &lq, const BoundQuery &bq,
                             const StrategySpec &spec, uint64_t sub_seed,
                             ExperienceStore &store) {
    StrategyOutcome out;
    switch (spec.kind) {
    case StrategySpec::Kind::baseline: {
        out.chosen = optimize(bq, sv).plan;
        out.measured_tuples = double(execute(sv.db(), out.chosen).tuples_processed);
        out.executions = 1;
        return out;
    }
    case StrategySpec::Kind::topk: {
        TopkReport rep = superoptimize_topk(sv, lq, spec.k);
        out.chosen = rep.best_plan;
        out.measured_tuples = rep.best_measured;
        out.executions = rep.executed.size();
        return out;
    }
    case StrategySpec::Kind::explore: {
        ExploreConfig ec = spec.explore;
        ec.seed = sub_seed;
        ExploreReport rep = superoptimize_explore(sv, lq, ec, store);
        out.chosen = rep.best_plan;
        out.measured_tuples = rep.best_measured;
        out.executions = rep.executed.size();
        return out;
    }
    case StrategySpec::Kind::latent: {
        BottleneckNet net = store.all().empty() ? BottleneckNet(NetConfig{}, sub_seed)
                                                : train_bottleneck(store.all());
        PoolConfig pc = spec.pool;
        pc.seed = sub_seed;
        PlanPool pool = build_pool(sv, bq, net, pc);
        LatentConfig lc = spec.latent;
        lc.seed = sub_seed;
        LatentReport rep = bayes_superoptimize(sv, bq, pool, net, lc);
        out.chosen = rep.best_plan;
        out.measured_tuples = rep.best_measured;
        out.executions = rep.trace.size();
        return out;
    }
    }
    raise(errc::internal, "unreachable strategy kind");
}

std::string break_even_of(double optimize_wall_ns, double baseline_wall_ns,
                          double chosen_wall_ns) {
    double savings = baseline_wall_ns - chosen_wall_ns;
    if (savings <= 0) return "never";
    return std::to_string((long long)std::ceil(optimize_wall_ns / std::max(1.0, savings)));
}

std::string csv_quote(const std::string &s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig &cfg) {
    cfg.validate();
    Database db = cfg.gen ? generate_movie_db(*cfg.gen) : load_db(cfg.db_dir);
    StatsView sv(db, cfg.error_level);
    ExperienceStore store =
        cfg.store_path.empty() ? ExperienceStore() : ExperienceStore(cfg.store_path);

    ExperimentReport rep;
    rep.strategy = cfg.strategy.name();
    rep.seed = cfg.seed;
    rep.error_level = cfg.error_level;
    rep.cost_metric = cfg.cost == CostKind::tuples ? "tuples" : "wall";

    std::vector<NumberedQuery> queries = read_numbered_queries(cfg.query_file);
    for (size_t i = 0; i < queries.size(); ++i) {
        const NumberedQuery &nq = queries[i];
        QueryExperiment qe;
        qe.line = nq.line;
        qe.sql = nq.sql;
        try {
            uint64_t sub_seed = mix_seed(cfg.seed, uint64_t(i));
            LogicalQuery lq = parse(nq.sql);
            BoundQuery bq = bind_query(db, lq);

            auto t0 = clock::now();
            CostedPlan base = optimize(bq, sv);
            StrategyOutcome got = run_strategy(sv, lq, bq, cfg.strategy, sub_seed, store);
            qe.optimize_wall_ns = ns_since(t0);

            auto tb = clock::now();
            ExecutionResult base_run = execute(db, base.plan);
            qe.baseline_wall_ns = ns_since(tb);
            auto tc = clock::now();
            ExecutionResult chosen_run = execute(db, got.chosen);
            qe.chosen_wall_ns = ns_since(tc);

            qe.baseline_estimated = base.estimated_cost;
            qe.baseline_canonical = canonical_plan_string(base.plan);
            qe.chosen_canonical = canonical_plan_string(got.chosen);
            if (cfg.cost == CostKind::tuples) {
                qe.baseline_measured = double(base_run.tuples_processed);
                qe.chosen_measured = double(chosen_run.tuples_processed);
            } else {
                qe.baseline_measured = qe.baseline_wall_ns;
                qe.chosen_measured = qe.chosen_wall_ns;
            }
            qe.plans_executed = got.executions;
            qe.break_even = qe.chosen_canonical == qe.baseline_canonical
                                ? "never" // identical plans cannot save anything
                                : break_even_of(qe.optimize_wall_ns, qe.baseline_wall_ns,
                                                qe.chosen_wall_ns);
        } catch (const Error &e) {
            raise(e.kind(), cfg.query_file + ":" + std::to_string(nq.line) + ": " + e.what());
        }
        rep.queries.push_back(std::move(qe));
    }
    return rep;
}

CompareMatrix compare_strategies(const Database &db, std::span<const std::string> queries,
                                 const CompareConfig &cfg) {
    if (cfg.strategies.empty()) raise(errc::argument, "compare needs at least one strategy");
    if (cfg.error_level < 0) raise(errc::config, "error_level must be >= 0");
    StatsView sv(db, cfg.error_level);

    CompareMatrix m;
    for (const StrategySpec &s : cfg.strategies) m.strategy_names.push_back(s.name());

    for (size_t qi = 0; qi < queries.size(); ++qi) {
        LogicalQuery lq = parse(queries[qi]);
        BoundQuery bq = bind_query(db, lq);
        m.queries.push_back(print(lq));

        double baseline =
            double(execute(db, optimize(bq, sv).plan).tuples_processed);
        double denom = std::max(baseline, 1.0);

        std::vector<CompareCell> row;
        for (size_t si = 0; si < cfg.strategies.size(); ++si) {
            uint64_t sub_seed =
                mix_seed(cfg.seed, fnv1a64(m.strategy_names[si] + "#" + std::to_string(qi)));
            ExperienceStore store; // strategies start cold: no cross-column leakage
            StrategyOutcome got =
                run_strategy(sv, lq, bq, cfg.strategies[si], sub_seed, store);
            CompareCell cell;
            cell.measured = got.measured_tuples;
            cell.normalized = got.measured_tuples / denom;
            cell.canonical = canonical_plan_string(got.chosen);
            row.push_back(std::move(cell));
        }
        m.cells.push_back(std::move(row));
    }
    return m;
}

json experiment_to_json(const ExperimentReport &r) {
    json queries = json::array();
    for (const QueryExperiment &q : r.queries) {
        queries.push_back({{"line", q.line},
                           {"sql", q.sql},
                           {"baseline_estimated", q.baseline_estimated},
                           {"baseline_measured", q.baseline_measured},
                           {"baseline_canonical", q.baseline_canonical},
                           {"chosen_canonical", q.chosen_canonical},
                           {"chosen_measured", q.chosen_measured},
                           {"plans_executed", q.plans_executed},
                           {"optimize_wall_ns", q.optimize_wall_ns},
                           {"baseline_wall_ns", q.baseline_wall_ns},
                           {"chosen_wall_ns", q.chosen_wall_ns},
                           {"break_even", q.break_even}});
    }
    json doc = {{"strategy", r.strategy},
                {"seed", r.seed},
                {"error_level", r.error_level},
                {"cost_metric", r.cost_metric},
                {"queries", queries}};
    validate_against_schema(doc, experiment_report_schema());
    return doc;
}

std::string experiment_to_csv(const ExperimentReport &r) {
    std::string out = "line,sql,baseline_estimated,baseline_measured,chosen_measured,"
                      "plans_executed,optimize_wall_ns,break_even,chosen_canonical\n";
    char buf[128];
    for (const QueryExperiment &q : r.queries) {
        std::snprintf(buf, sizeof(buf), "%d,", q.line);
        out += buf;
        out += csv_quote(q.sql);
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%llu,%.0f,", q.baseline_estimated,
                      q.baseline_measured, q.chosen_measured,
                      (unsigned long long)q.plans_executed, q.optimize_wall_ns);
        out += buf;
        out += q.break_even + "," + csv_quote(q.chosen_canonical) + "\n";
    }
    return out;
}

json compare_to_json(const CompareMatrix &m) {
    json rows = json::array();
    for (const auto &row : m.cells) {
        json cells = json::array();
        for (const CompareCell &c : row)
            cells.push_back({{"measured", c.measured},
                             {"normalized", c.normalized},
                             {"canonical", c.canonical}});
        rows.push_back(cells);
    }
    json doc = {{"strategies", m.strategy_names}, {"queries", m.queries}, {"rows", rows}};
    validate_against_schema(doc, compare_report_schema());
    return doc;
}

std::string compare_to_csv(const CompareMatrix &m) {
    std::string out = "query,strategy,measured,normalized,canonical\n";
    char buf[96];
    for (size_t qi = 0; qi < m.queries.size(); ++qi)
        for (size_t si = 0; si < m.strategy_names.size(); ++si) {
            const CompareCell &c = m.cells[qi][si];
            out += csv_quote(m.queries[qi]) + "," + m.strategy_names[si];
            std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,", c.measured, c.normalized);
            out += buf;
            out += csv_quote(c.canonical) + "\n";
        }
    return out;
}

std::string render_compare(const CompareMatrix &m) {
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-44s", "query");
    out += buf;
    for (const std::string &s : m.strategy_names) {
        std::snprintf(buf, sizeof(buf), " %12s", s.c_str());
        out += buf;
    }
    out += '\n';
    for (size_t qi = 0; qi < m.queries.size(); ++qi) {
        std::string label = m.queries[qi];
        if (label.size() > 43) label = label.substr(0, 40) + "...";
        std::snprintf(buf, sizeof(buf), "%-44s", label.c_str());
        out += buf;
        for (const CompareCell &c : m.cells[qi]) {
            std::snprintf(buf, sizeof(buf), " %12.4f", c.normalized);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

json bench_to_json(const BenchReport &r) {
    json doc = {{"generic", {{"p50_ns", r.generic.p50_ns}, {"p90_ns", r.generic.p90_ns}}},
                {"bespoke", {{"p50_ns", r.bespoke.p50_ns}, {"p90_ns", r.bespoke.p90_ns}}},
                {"speedup_p50", r.speedup_p50},
                {"speedup_p90", r.speedup_p90},
                {"index_build_ms", r.index_build_ms},
                {"n_queries", r.n_queries},
                {"answer_checksum", r.answer_checksum}};
    validate_against_schema(doc, bench_report_schema());
    return doc;
}

namespace {

json non_negative(const char *type) { return json{{"type", type}, {"minimum", 0}}; }

} // namespace

json experiment_report_schema() {
    json query = {
        {"type", "object"},
        {"required", json::array({"line", "sql", "baseline_estimated", "baseline_measured",
                                  "baseline_canonical", "chosen_canonical", "chosen_measured",
                                  "plans_executed", "optimize_wall_ns", "baseline_wall_ns",
                                  "chosen_wall_ns", "break_even"})},
        {"additionalProperties", false},
        {"properties",
         {{"line", {{"type", "integer"}, {"minimum", 1}}},
          {"sql", {{"type", "string"}}},
          {"baseline_estimated", non_negative("number")},
          {"baseline_measured", non_negative("number")},
          {"baseline_canonical", {{"type", "string"}}},
          {"chosen_canonical", {{"type", "string"}}},
          {"chosen_measured", non_negative("number")},
          {"plans_executed", non_negative("integer")},
          {"optimize_wall_ns", non_negative("number")},
          {"baseline_wall_ns", non_negative("number")},
          {"chosen_wall_ns", non_negative("number")},
          {"break_even", {{"type", "string"}}}}}};
    return json{{"$schema", "http://json-schema.org/draft-07/schema#"},
                {"title", "planforge experiment report"},
                {"type", "object"},
                {"required",
                 json::array({"strategy", "seed", "error_level", "cost_metric", "queries"})},
                {"additionalProperties", false},
                {"properties",
                 {{"strategy", {{"type", "string"}}},
                  {"seed", non_negative("integer")},
                  {"error_level", non_negative("number")},
                  {"cost_metric", {{"enum", json::array({"tuples", "wall"})}}},
                  {"queries", {{"type", "array"}, {"items", query}}}}}};
}

json compare_report_schema() {
    json cell = {{"type", "object"},
                 {"required", json::array({"measured", "normalized", "canonical"})},
                 {"additionalProperties", false},
                 {"properties",
                  {{"measured", non_negative("number")},
                   {"normalized", non_negative("number")},
                   {"canonical", {{"type", "string"}}}}}};
    return json{{"$schema", "http://json-schema.org/draft-07/schema#"},
                {"title", "planforge strategy comparison"},
                {"type", "object"},
                {"required", json::array({"strategies", "queries", "rows"})},
                {"additionalProperties", false},
                {"properties",
                 {{"strategies",
                   {{"type", "array"}, {"minItems", 1}, {"items", {{"type", "string"}}}}},
                  {"queries", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                  {"rows", {{"type", "array"}, {"items", {{"type", "array"}, {"items", cell}}}}}}}};
}

json bench_report_schema() {
    json percentiles = {{"type", "object"},
                        {"required", json::array({"p50_ns", "p90_ns"})},
                        {"additionalProperties", false},
                        {"properties",
                         {{"p50_ns", non_negative("number")},
                          {"p90_ns", non_negative("number")}}}};
    return json{{"$schema", "http://json-schema.org/draft-07/schema#"},
                {"title", "planforge bespoke benchmark"},
                {"type", "object"},
                {"required",
                 json::array({"generic", "bespoke", "speedup_p50", "speedup_p90",
                              "index_build_ms", "n_queries", "answer_checksum"})},
                {"additionalProperties", false},
                {"properties",
                 {{"generic", percentiles},
                  {"bespoke", percentiles},
                  {"speedup_p50", non_negative("number")},
                  {"speedup_p90", non_negative("number")},
                  {"index_build_ms", non_negative("number")},
                  {"n_queries", {{"type", "integer"}, {"minimum", 100}}},
                  {"answer_checksum", non_negative("integer")}}}};
}

namespace {

void schema_fail(const std::string &path, const std::string &why) {
    raise(errc::data, "schema violation at " + (path.empty() ? "/" : path) + ": " + why);
}

void validate_node(const json &doc, const json &schema, const std::string &path) {
    if (auto it = schema.find("enum"); it != schema.end()) {
        for (const json &allowed : *it)
            if (doc == allowed) return;
        schema_fail(path, "value " + doc.dump() + " not in the allowed set");
    }
    if (auto it = schema.find("type"); it != schema.end()) {
        const std::string &t = it->get_ref<const std::string &>();
        bool ok = (t == "object" && doc.is_object()) || (t == "array" && doc.is_array()) ||
                  (t == "string" && doc.is_string()) || (t == "number" && doc.is_number()) ||
                  (t == "integer" && doc.is_number_integer()) ||
                  (t == "boolean" && doc.is_boolean());
        if (!ok) schema_fail(path, "expected " + t + ", got " + std::string(doc.type_name()));
    }
    if (auto it = schema.find("minimum"); it != schema.end()) {
        if (doc.is_number() && doc.get<double>() < it->get<double>())
            schema_fail(path, "value " + doc.dump() + " below minimum " + it->dump());
    }
    if (doc.is_object()) {
        if (auto req = schema.find("required"); req != schema.end())
            for (const json &key : *req)
                if (!doc.contains(key.get_ref<const std::string &>()))
                    schema_fail(path, "missing required field " + key.dump());
        auto props = schema.find("properties");
        bool sealed = schema.value("additionalProperties", true) == false;
        for (const auto &[key, value] : doc.items()) {
            if (props != schema.end() && props->contains(key))
                validate_node(value, (*props)[key], path + "/" + key);
            else if (sealed)
                schema_fail(path, "unexpected field '" + key + "'");
        }
    }
    if (doc.is_array()) {
        if (auto it = schema.find("minItems"); it != schema.end())
            if (doc.size() < it->get<size_t>())
                schema_fail(path, "fewer than " + it->dump() + " items");
        if (auto items = schema.find("items"); items != schema.end())
            for (size_t i = 0; i < doc.size(); ++i)
                validate_node(doc[i], *items, path + "/" + std::to_string(i));
    }
}

} // namespace

void validate_against_schema(const json &doc, const json &schema) {
    validate_node(doc, schema, "");
}

} // namespace planforge
