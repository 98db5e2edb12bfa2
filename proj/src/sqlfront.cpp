#include "planforge/sqlfront.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <tuple>

#include "planforge/error.hpp"
#include "planforge/rng.hpp"

namespace planforge {

namespace {

enum class Tok { kw_select, kw_count, kw_from, kw_join, kw_on, kw_where, kw_and,
                 ident, number, string, param, punct, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;   // ident/keyword original text, punct chars, string body
    double num = 0;     // number value
    bool is_float = false;
    int param_index = 0;
    size_t offset = 0;
};

bool ident_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
bool ident_char(char c) { return std::isalnum((unsigned char)c) || c == '_'; }

std::string lower(std::string_view s) {
    std::string out(s);
    for (char &c : out)
        c = (char)std::tolower((unsigned char)c);
    return out;
}

struct Lexer {
    const std::string &src;
    size_t pos = 0;

    explicit Lexer(const std::string &s) : src(s) {}

    void skip_space() {
        for (;;) {
            while (pos < src.size() && std::isspace((unsigned char)src[pos]))
                ++pos;
            if (pos + 1 < src.size() && src[pos] == '-' && src[pos + 1] == '-') {
                while (pos < src.size() && src[pos] != '\n')
                    ++pos;
                continue;
            }
            break;
        }
    }

    Token next() {
        skip_space();
        Token t;
        t.offset = pos;
        if (pos >= src.size())
            return t;
        char c = src[pos];
        if (ident_start(c)) {
            size_t start = pos;
            while (pos < src.size() && ident_char(src[pos]))
                ++pos;
            t.text = src.substr(start, pos - start);
            std::string low = lower(t.text);
            if (low == "select") t.kind = Tok::kw_select;
            else if (low == "count") t.kind = Tok::kw_count;
            else if (low == "from") t.kind = Tok::kw_from;
            else if (low == "join") t.kind = Tok::kw_join;
            else if (low == "on") t.kind = Tok::kw_on;
            else if (low == "where") t.kind = Tok::kw_where;
            else if (low == "and") t.kind = Tok::kw_and;
            else t.kind = Tok::ident;
            return t;
        }
        if (std::isdigit((unsigned char)c) ||
            (c == '.' && pos + 1 < src.size() && std::isdigit((unsigned char)src[pos + 1]))) {
            size_t start = pos;
            while (pos < src.size() && std::isdigit((unsigned char)src[pos]))
                ++pos;
            if (pos < src.size() && src[pos] == '.') {
                t.is_float = true;
                ++pos;
                while (pos < src.size() && std::isdigit((unsigned char)src[pos]))
                    ++pos;
            }
            if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
                t.is_float = true;
                ++pos;
                if (pos < src.size() && (src[pos] == '+' || src[pos] == '-'))
                    ++pos;
                if (pos >= src.size() || !std::isdigit((unsigned char)src[pos]))
                    throw ParseError("malformed number exponent", pos);
                while (pos < src.size() && std::isdigit((unsigned char)src[pos]))
                    ++pos;
            }
            t.kind = Tok::number;
            t.text = src.substr(start, pos - start);
            t.num = std::stod(t.text);
            return t;
        }
        if (c == '\'') {
            ++pos;
            std::string body;
            for (;;) {
                if (pos >= src.size())
                    throw ParseError("unterminated string literal", t.offset);
                if (src[pos] == '\'') {
                    if (pos + 1 < src.size() && src[pos + 1] == '\'') {
                        body.push_back('\''); // '' escapes a quote
                        pos += 2;
                        continue;
                    }
                    ++pos;
                    break;
                }
                body.push_back(src[pos++]);
            }
            t.kind = Tok::string;
            t.text = std::move(body);
            return t;
        }
        if (c == '$') {
            size_t start = ++pos;
            while (pos < src.size() && std::isdigit((unsigned char)src[pos]))
                ++pos;
            if (pos == start)
                throw ParseError("expected digits after '$'", t.offset);
            t.kind = Tok::param;
            t.param_index = std::stoi(src.substr(start, pos - start));
            if (t.param_index < 1)
                throw ParseError("parameter indices start at $1", t.offset);
            return t;
        }
        // two-char comparison operators first
        if (pos + 1 < src.size()) {
            std::string two = src.substr(pos, 2);
            if (two == "<=" || two == ">=") {
                t.kind = Tok::punct;
                t.text = two;
                pos += 2;
                return t;
            }
        }
        static const std::string singles = "(),.*=<>;";
        if (singles.find(c) != std::string::npos) {
            t.kind = Tok::punct;
            t.text = std::string(1, c);
            ++pos;
            return t;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos);
    }
};

struct Parser {
    Lexer lex;
    Token tok;

    explicit Parser(const std::string &s) : lex(s) { tok = lex.next(); }

    void advance() { tok = lex.next(); }

    void expect_punct(const std::string &p) {
        if (tok.kind != Tok::punct || tok.text != p)
            throw ParseError("expected '" + p + "'", tok.offset);
        advance();
    }

    void expect_kw(Tok k, const char *name) {
        if (tok.kind != k)
            throw ParseError(std::string("expected ") + name, tok.offset);
        advance();
    }

    std::string expect_ident() {
        if (tok.kind != Tok::ident)
            throw ParseError("expected identifier", tok.offset);
        std::string s = tok.text;
        advance();
        return s;
    }

    bool at_punct(const std::string &p) const {
        return tok.kind == Tok::punct && tok.text == p;
    }

    // column reference: ident or ident.ident
    struct ColRef {
        std::string table, column;
    };

    ColRef parse_colref() {
        ColRef r;
        r.column = expect_ident();
        if (at_punct(".")) {
            advance();
            r.table = r.column;
            r.column = expect_ident();
        }
        return r;
    }

    CompareOp parse_op() {
        if (tok.kind != Tok::punct)
            throw ParseError("expected comparison operator", tok.offset);
        CompareOp op;
        if (tok.text == "=") op = CompareOp::eq;
        else if (tok.text == "<") op = CompareOp::lt;
        else if (tok.text == "<=") op = CompareOp::le;
        else if (tok.text == ">") op = CompareOp::gt;
        else if (tok.text == ">=") op = CompareOp::ge;
        else throw ParseError("expected comparison operator", tok.offset);
        advance();
        return op;
    }

    // one WHERE / ON conjunct; either a filter or a join edge
    void parse_comparison(LogicalQuery &q) {
        if (tok.kind != Tok::ident)
            throw ParseError("comparison must start with a column reference", tok.offset);
        ColRef left = parse_colref();
        size_t op_off = tok.offset;
        CompareOp op = parse_op();
        if (tok.kind == Tok::ident) {
            ColRef right = parse_colref();
            if (op != CompareOp::eq)
                throw ParseError("column-to-column comparison must use '='", op_off);
            JoinEdge e{left.table, left.column, right.table, right.column};
            e.normalize();
            q.join_edges.push_back(std::move(e));
            return;
        }
        QueryFilter f;
        f.table = left.table;
        f.column = left.column;
        f.op = op;
        if (tok.kind == Tok::number) {
            if (tok.is_float)
                f.term = Value(tok.num);
            else
                f.term = Value((int64_t)std::llround(tok.num));
            advance();
        } else if (tok.kind == Tok::string) {
            f.term = Value(tok.text);
            advance();
        } else if (tok.kind == Tok::param) {
            f.term = ParamSlot{tok.param_index};
            advance();
        } else {
            throw ParseError("expected literal, parameter or column", tok.offset);
        }
        q.filters.push_back(std::move(f));
    }

    LogicalQuery parse_query() {
        LogicalQuery q;
        expect_kw(Tok::kw_select, "SELECT");
        expect_kw(Tok::kw_count, "COUNT(*)");
        expect_punct("(");
        expect_punct("*");
        expect_punct(")");
        expect_kw(Tok::kw_from, "FROM");
        q.tables.push_back(expect_ident());
        for (;;) {
            if (at_punct(",")) {
                advance();
                q.tables.push_back(expect_ident());
                continue;
            }
            if (tok.kind == Tok::kw_join) {
                advance();
                q.tables.push_back(expect_ident());
                expect_kw(Tok::kw_on, "ON");
                size_t off = tok.offset;
                size_t before = q.join_edges.size();
                parse_comparison(q);
                if (q.join_edges.size() != before + 1)
                    throw ParseError("ON clause must be a column = column condition", off);
                continue;
            }
            break;
        }
        if (tok.kind == Tok::kw_where) {
            advance();
            parse_comparison(q);
            while (tok.kind == Tok::kw_and) {
                advance();
                parse_comparison(q);
            }
        }
        if (at_punct(";"))
            advance();
        if (tok.kind != Tok::end)
            throw ParseError("trailing input after query", tok.offset);
        q.canonicalize();
        return q;
    }
};

std::string term_sql(const Term &t) {
    if (is_param(t))
        return "$" + std::to_string(std::get<ParamSlot>(t).index);
    const Value &v = std::get<Value>(t);
    if (std::holds_alternative<std::string>(v)) {
        std::string body = std::get<std::string>(v), quoted = "'";
        for (char c : body) {
            quoted.push_back(c);
            if (c == '\'')
                quoted.push_back('\'');
        }
        return quoted + "'";
    }
    return planforge::to_string(v);
}

} // namespace

void JoinEdge::normalize() {
    if (std::tie(right_table, right_column) < std::tie(left_table, left_column)) {
        std::swap(left_table, right_table);
        std::swap(left_column, right_column);
    }
}

bool JoinEdge::operator<(const JoinEdge &o) const {
    return std::tie(left_table, left_column, right_table, right_column) <
           std::tie(o.left_table, o.left_column, o.right_table, o.right_column);
}

std::string JoinEdge::to_string() const {
    return left_table + "." + left_column + " = " + right_table + "." + right_column;
}

bool QueryFilter::operator<(const QueryFilter &o) const {
    auto key = [](const QueryFilter &f) {
        return std::make_tuple(f.table, f.column, (int)f.op, f.term.index(),
                               planforge::to_string(f.term));
    };
    return key(*this) < key(o);
}

std::string QueryFilter::to_string() const {
    std::string col = table.empty() ? column : table + "." + column;
    return col + " " + planforge::to_string(op) + " " + term_sql(term);
}

void LogicalQuery::canonicalize() {
    std::sort(tables.begin(), tables.end());
    auto dup = std::adjacent_find(tables.begin(), tables.end());
    if (dup != tables.end())
        raise(errc::parse, "table " + *dup + " appears twice in FROM");
    for (auto &e : join_edges)
        e.normalize();
    std::sort(join_edges.begin(), join_edges.end());
    join_edges.erase(std::unique(join_edges.begin(), join_edges.end()), join_edges.end());
    std::sort(filters.begin(), filters.end());
}

LogicalQuery parse(const std::string &sql) { return Parser(sql).parse_query(); }

std::string print(const LogicalQuery &q) {
    std::string out = "SELECT COUNT(*) FROM ";
    for (size_t i = 0; i < q.tables.size(); ++i) {
        if (i)
            out += ", ";
        out += q.tables[i];
    }
    bool first = true;
    auto conjunct = [&](const std::string &s) {
        out += first ? " WHERE " : " AND ";
        out += s;
        first = false;
    };
    for (const auto &e : q.join_edges)
        conjunct(e.to_string());
    for (const auto &f : q.filters)
        conjunct(f.to_string());
    return out;
}

QueryTemplate templatize(const std::string &sql) {
    QueryTemplate t;
    t.raw_example = sql;
    std::string canon;
    int masked = 0;
    auto emit = [&](const std::string &piece) {
        if (!canon.empty())
            canon.push_back(' ');
        canon += piece;
    };
    size_t pos = 0;
    while (pos < sql.size()) {
        char c = sql[pos];
        if (std::isspace((unsigned char)c)) {
            ++pos;
            continue;
        }
        if (c == '-' && pos + 1 < sql.size() && sql[pos + 1] == '-') {
            while (pos < sql.size() && sql[pos] != '\n')
                ++pos;
            continue;
        }
        if (c == '\'') {
            ++pos;
            while (pos < sql.size()) {
                if (sql[pos] == '\'') {
                    if (pos + 1 < sql.size() && sql[pos + 1] == '\'') {
                        pos += 2;
                        continue;
                    }
                    ++pos;
                    break;
                }
                ++pos;
            }
            emit("?" + std::to_string(++masked));
            continue;
        }
        if (std::isdigit((unsigned char)c) ||
            (c == '.' && pos + 1 < sql.size() && std::isdigit((unsigned char)sql[pos + 1]))) {
            while (pos < sql.size() &&
                   (std::isdigit((unsigned char)sql[pos]) || sql[pos] == '.'))
                ++pos;
            if (pos < sql.size() && (sql[pos] == 'e' || sql[pos] == 'E')) {
                size_t save = pos++;
                if (pos < sql.size() && (sql[pos] == '+' || sql[pos] == '-'))
                    ++pos;
                if (pos < sql.size() && std::isdigit((unsigned char)sql[pos])) {
                    while (pos < sql.size() && std::isdigit((unsigned char)sql[pos]))
                        ++pos;
                } else {
                    pos = save; // trailing 'e' belongs to the next token
                }
            }
            emit("?" + std::to_string(++masked));
            continue;
        }
        if (ident_start(c)) {
            size_t start = pos;
            while (pos < sql.size() && ident_char(sql[pos]))
                ++pos;
            emit(lower(sql.substr(start, pos - start)));
            continue;
        }
        if (c == '$') {
            size_t start = pos++;
            while (pos < sql.size() && std::isdigit((unsigned char)sql[pos]))
                ++pos;
            emit(sql.substr(start, pos - start));
            ++t.parameter_count;
            continue;
        }
        if (pos + 1 < sql.size()) {
            std::string two = sql.substr(pos, 2);
            if (two == "<=" || two == ">=" || two == "<>" || two == "!=") {
                emit(two);
                pos += 2;
                continue;
            }
        }
        emit(std::string(1, c));
        ++pos;
    }
    t.parameter_count += masked;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a64(canon));
    t.fingerprint = buf;
    return t;
}

std::vector<std::string> read_query_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        raise(errc::data, "cannot open query file " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto cut = line.find("--"); cut != std::string::npos)
            line.resize(cut);
        size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos)
            continue;
        size_t b = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(a, b - a + 1));
    }
    return out;
}

int BoundQuery::table_pos(std::string_view name) const {
    auto it = std::lower_bound(tables.begin(), tables.end(), name);
    if (it == tables.end() || *it != name)
        return -1;
    return (int)(it - tables.begin());
}

std::vector<QueryFilter> BoundQuery::filters_for(std::string_view table) const {
    std::vector<QueryFilter> out;
    for (const auto &f : filters)
        if (f.table == table)
            out.push_back(f);
    return out;
}

BoundQuery bind_query(const Database &db, const LogicalQuery &q) {
    if (q.tables.empty())
        raise(errc::schema, "query references no tables");
    BoundQuery b;
    b.tables = q.tables;
    for (const auto &t : b.tables)
        db.schema.table(t); // throws for unknown tables

    // resolve a possibly-unqualified column to (table, type)
    auto resolve = [&](const std::string &table, const std::string &column)
        -> std::pair<std::string, ColumnType> {
        if (!table.empty()) {
            if (b.table_pos(table) < 0)
                raise(errc::schema, "table " + table + " is not part of the query");
            const ColumnDef *c = db.schema.table(table).find_column(column);
            if (!c)
                raise(errc::schema, "no column " + column + " in table " + table);
            return {table, c->type};
        }
        std::string found;
        ColumnType type{};
        for (const auto &t : b.tables) {
            if (const ColumnDef *c = db.schema.table(t).find_column(column)) {
                if (!found.empty())
                    raise(errc::schema, "column " + column + " is ambiguous (" +
                                            found + ", " + t + ")");
                found = t;
                type = c->type;
            }
        }
        if (found.empty())
            raise(errc::schema, "column " + column + " not found in any query table");
        return {found, type};
    };

    for (const auto &f : q.filters) {
        QueryFilter r = f;
        auto [table, type] = resolve(f.table, f.column);
        r.table = table;
        if (!is_param(r.term)) {
            const Value &v = std::get<Value>(r.term);
            switch (type) {
            case ColumnType::int64:
                if (!std::holds_alternative<int64_t>(v))
                    raise(errc::schema, "filter on int column " + r.to_string() +
                                            " needs an integer literal");
                break;
            case ColumnType::float64:
                if (std::holds_alternative<std::string>(v))
                    raise(errc::schema, "filter on float column " + r.to_string() +
                                            " needs a numeric literal");
                if (std::holds_alternative<int64_t>(v))
                    r.term = Value((double)std::get<int64_t>(v));
                break;
            case ColumnType::string:
                if (!std::holds_alternative<std::string>(v))
                    raise(errc::schema, "filter on string column " + r.to_string() +
                                            " needs a string literal");
                break;
            }
        }
        if (type == ColumnType::string && r.op != CompareOp::eq)
            raise(errc::schema, "string columns support equality filters only: " +
                                    r.to_string());
        b.filters.push_back(std::move(r));
    }
    std::sort(b.filters.begin(), b.filters.end());

    for (const auto &e : q.join_edges) {
        JoinEdge r = e;
        auto [lt, ltype] = resolve(e.left_table, e.left_column);
        auto [rt, rtype] = resolve(e.right_table, e.right_column);
        r.left_table = lt;
        r.right_table = rt;
        if (lt == rt)
            raise(errc::schema, "join edge joins " + lt + " with itself");
        if (ltype != rtype || ltype != ColumnType::int64)
            raise(errc::schema, "join edges must connect int64 columns: " + r.to_string());
        r.normalize();
        b.edges.push_back(std::move(r));
    }
    std::sort(b.edges.begin(), b.edges.end());
    b.edges.erase(std::unique(b.edges.begin(), b.edges.end()), b.edges.end());
    return b;
}

} // namespace planforge
