#include "planforge/plan.hpp"

#include <algorithm>
#include <functional>

#include <nlohmann/json.hpp>

#include "planforge/error.hpp"

namespace planforge {

using json = nlohmann::json;

const char *to_string(JoinAlgo a) {
    switch (a) {
    case JoinAlgo::hash: return "hash";
    case JoinAlgo::sort_merge: return "sort_merge";
    case JoinAlgo::nested_loop: return "nested_loop";
    }
    return "?";
}

const char *to_string(AccessPath p) {
    return p == AccessPath::full_scan ? "full_scan" : "index_lookup";
}

PlanNodeRef make_access(std::string table, AccessPath path,
                        std::string index_column, std::vector<QueryFilter> filters) {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanNode::Kind::access;
    n->table = std::move(table);
    n->path = path;
    n->index_column = std::move(index_column);
    std::sort(filters.begin(), filters.end());
    n->filters = std::move(filters);
    PLANFORGE_ASSERT(n->path == AccessPath::full_scan || !n->index_column.empty(),
                     "index lookup without a column");
    return n;
}

PlanNodeRef make_join(JoinAlgo algo, std::vector<JoinEdge> conditions,
                      PlanNodeRef left, PlanNodeRef right) {
    PLANFORGE_ASSERT(left && right, "join node needs two children");
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanNode::Kind::join;
    n->algo = algo;
    std::sort(conditions.begin(), conditions.end());
    n->conditions = std::move(conditions);
    n->left = std::move(left);
    n->right = std::move(right);
    return n;
}

std::string canonical_node_string(const PlanNode &n) {
    std::string out;
    if (n.kind == PlanNode::Kind::access) {
        out = "A(" + n.table;
        if (n.path == AccessPath::index_lookup)
            out += "|ix:" + n.index_column;
        for (const auto &f : n.filters)
            out += "|" + f.to_string();
        out += ")";
        return out;
    }
    out = std::string("J(") + to_string(n.algo);
    for (const auto &c : n.conditions)
        out += "|" + c.to_string();
    out += ";" + canonical_node_string(*n.left);
    out += ";" + canonical_node_string(*n.right);
    out += ")";
    return out;
}

std::string canonical_plan_string(const QueryPlan &p) {
    PLANFORGE_ASSERT(p.root, "empty plan");
    return canonical_node_string(*p.root);
}

std::vector<std::string> plan_tables(const QueryPlan &p) {
    std::vector<std::string> out;
    PLANFORGE_ASSERT(p.root, "empty plan");
    visit_postorder(*p.root, [&](const PlanNode &n) {
        if (n.kind == PlanNode::Kind::access)
            out.push_back(n.table);
    });
    return out;
}

int plan_join_count(const QueryPlan &p) {
    int joins = 0;
    if (p.root)
        visit_postorder(*p.root, [&](const PlanNode &n) {
            joins += n.kind == PlanNode::Kind::join;
        });
    return joins;
}

bool has_unbound_params(const QueryPlan &p) {
    bool found = false;
    if (p.root)
        visit_postorder(*p.root, [&](const PlanNode &n) {
            for (const auto &f : n.filters)
                found |= is_param(f.term);
        });
    return found;
}

QueryPlan bind_parameters(const QueryPlan &p, const std::vector<Value> &params) {
    PLANFORGE_ASSERT(p.root, "empty plan");
    std::function<PlanNodeRef(const PlanNode &)> rebuild =
        [&](const PlanNode &n) -> PlanNodeRef {
        if (n.kind == PlanNode::Kind::join)
            return make_join(n.algo, n.conditions, rebuild(*n.left), rebuild(*n.right));
        auto filters = n.filters;
        for (auto &f : filters) {
            if (!is_param(f.term))
                continue;
            int ix = std::get<ParamSlot>(f.term).index;
            if (ix < 1 || (size_t)ix > params.size())
                raise(errc::plan, "no value supplied for parameter $" + std::to_string(ix));
            f.term = params[(size_t)ix - 1];
        }
        return make_access(n.table, n.path, n.index_column, std::move(filters));
    };
    QueryPlan out;
    out.plan_id = p.plan_id;
    out.root = rebuild(*p.root);
    return out;
}

namespace {

// table names under a node, sorted
std::vector<std::string> node_tables(const PlanNode &n) {
    std::vector<std::string> out;
    visit_postorder(n, [&](const PlanNode &m) {
        if (m.kind == PlanNode::Kind::access)
            out.push_back(m.table);
    });
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

void validate_plan(const Database &db, const BoundQuery &q, const QueryPlan &p) {
    if (!p.root)
        raise(errc::plan, "plan has no root");

    std::vector<std::string> leaves = plan_tables(p);
    std::vector<std::string> sorted = leaves;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != q.tables) {
        std::string got;
        for (const auto &t : leaves)
            got += (got.empty() ? "" : ", ") + t;
        raise(errc::plan, "plan leaves [" + got + "] do not cover the query tables");
    }

    visit_postorder(*p.root, [&](const PlanNode &n) {
        if (n.kind == PlanNode::Kind::access) {
            const TableDef &def = db.schema.table(n.table);
            auto expected = q.filters_for(n.table);
            if (n.filters != expected)
                raise(errc::plan, "leaf " + n.table +
                                      " does not carry exactly the query's filters");
            if (n.path == AccessPath::index_lookup) {
                if (!def.has_index(n.index_column))
                    raise(errc::plan, "no index on " + n.table + "." + n.index_column);
                bool eq = false;
                for (const auto &f : n.filters)
                    eq |= f.column == n.index_column && f.op == CompareOp::eq;
                if (!eq)
                    raise(errc::plan, "index lookup on " + n.table + "." + n.index_column +
                                          " has no equality filter to probe with");
            }
            return;
        }
        auto lt = node_tables(*n.left), rt = node_tables(*n.right);
        std::vector<JoinEdge> expected;
        for (const auto &e : q.edges) {
            bool ll = std::binary_search(lt.begin(), lt.end(), e.left_table);
            bool lr = std::binary_search(rt.begin(), rt.end(), e.left_table);
            bool rl = std::binary_search(lt.begin(), lt.end(), e.right_table);
            bool rr = std::binary_search(rt.begin(), rt.end(), e.right_table);
            if ((ll && rr) || (lr && rl))
                expected.push_back(e);
        }
        std::sort(expected.begin(), expected.end());
        if (n.conditions != expected)
            raise(errc::plan, "join node must apply exactly the edges separated at it");
        if (n.conditions.empty() && n.algo != JoinAlgo::nested_loop)
            raise(errc::plan, "cross joins are executed as nested loops only");
    });
}

namespace {

json term_to_json(const Term &t) {
    if (is_param(t))
        return json{{"kind", "param"}, {"index", std::get<ParamSlot>(t).index}};
    const Value &v = std::get<Value>(t);
    switch (v.index()) {
    case 0: return json{{"kind", "int"}, {"value", std::get<int64_t>(v)}};
    case 1: return json{{"kind", "float"}, {"value", std::get<double>(v)}};
    default: return json{{"kind", "string"}, {"value", std::get<std::string>(v)}};
    }
}

Term term_from_json(const json &j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "param")
        return ParamSlot{j.at("index").get<int>()};
    if (kind == "int")
        return Value(j.at("value").get<int64_t>());
    if (kind == "float")
        return Value(j.at("value").get<double>());
    if (kind == "string")
        return Value(j.at("value").get<std::string>());
    raise(errc::data, "unknown term kind " + kind);
}

CompareOp op_from_string(const std::string &s) {
    if (s == "=") return CompareOp::eq;
    if (s == "<") return CompareOp::lt;
    if (s == "<=") return CompareOp::le;
    if (s == ">") return CompareOp::gt;
    if (s == ">=") return CompareOp::ge;
    raise(errc::data, "unknown comparison operator " + s);
}

json node_to_json(const PlanNode &n) {
    if (n.kind == PlanNode::Kind::access) {
        json filters = json::array();
        for (const auto &f : n.filters)
            filters.push_back(json{{"table", f.table},
                                   {"column", f.column},
                                   {"op", to_string(f.op)},
                                   {"term", term_to_json(f.term)}});
        json j{{"node", "access"},
               {"table", n.table},
               {"path", to_string(n.path)},
               {"filters", std::move(filters)}};
        if (n.path == AccessPath::index_lookup)
            j["index_column"] = n.index_column;
        return j;
    }
    json conds = json::array();
    for (const auto &c : n.conditions)
        conds.push_back(json{{"left_table", c.left_table},
                             {"left_column", c.left_column},
                             {"right_table", c.right_table},
                             {"right_column", c.right_column}});
    return json{{"node", "join"},
                {"algo", to_string(n.algo)},
                {"conditions", std::move(conds)},
                {"left", node_to_json(*n.left)},
                {"right", node_to_json(*n.right)}};
}

PlanNodeRef node_from_json(const json &j) {
    const std::string node = j.at("node").get<std::string>();
    if (node == "access") {
        std::vector<QueryFilter> filters;
        for (const auto &f : j.at("filters")) {
            QueryFilter qf;
            qf.table = f.at("table").get<std::string>();
            qf.column = f.at("column").get<std::string>();
            qf.op = op_from_string(f.at("op").get<std::string>());
            qf.term = term_from_json(f.at("term"));
            filters.push_back(std::move(qf));
        }
        const std::string path = j.at("path").get<std::string>();
        if (path == "full_scan")
            return make_access(j.at("table").get<std::string>(), AccessPath::full_scan,
                               "", std::move(filters));
        if (path != "index_lookup")
            raise(errc::data, "unknown access path " + path);
        return make_access(j.at("table").get<std::string>(), AccessPath::index_lookup,
                           j.at("index_column").get<std::string>(), std::move(filters));
    }
    if (node != "join")
        raise(errc::data, "unknown plan node kind " + node);
    const std::string algo = j.at("algo").get<std::string>();
    JoinAlgo a;
    if (algo == "hash") a = JoinAlgo::hash;
    else if (algo == "sort_merge") a = JoinAlgo::sort_merge;
    else if (algo == "nested_loop") a = JoinAlgo::nested_loop;
    else raise(errc::data, "unknown join algorithm " + algo);
    std::vector<JoinEdge> conds;
    for (const auto &c : j.at("conditions")) {
        JoinEdge e;
        e.left_table = c.at("left_table").get<std::string>();
        e.left_column = c.at("left_column").get<std::string>();
        e.right_table = c.at("right_table").get<std::string>();
        e.right_column = c.at("right_column").get<std::string>();
        conds.push_back(std::move(e));
    }
    return make_join(a, std::move(conds), node_from_json(j.at("left")),
                     node_from_json(j.at("right")));
}

} // namespace

std::string plan_to_json(const QueryPlan &p) {
    PLANFORGE_ASSERT(p.root, "empty plan");
    json j{{"plan_id", p.plan_id}, {"root", node_to_json(*p.root)}};
    return j.dump(2);
}

QueryPlan plan_from_json(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        raise(errc::data, std::string("bad plan JSON: ") + e.what());
    }
    try {
        QueryPlan p;
        p.plan_id = j.at("plan_id").get<uint64_t>();
        p.root = node_from_json(j.at("root"));
        return p;
    } catch (const json::exception &e) {
        raise(errc::data, std::string("bad plan JSON: ") + e.what());
    }
}

} // namespace planforge
