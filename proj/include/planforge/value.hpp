#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <variant>

#include "planforge/error.hpp"

namespace planforge {

enum class ColumnType { int64, float64, string };

inline const char *to_string(ColumnType t) {
    switch (t) {
    case ColumnType::int64: return "int64";
    case ColumnType::float64: return "float64";
    case ColumnType::string: return "string";
    }
    return "?";
}

using Value = std::variant<int64_t, double, std::string>;

inline ColumnType value_type(const Value &v) {
    switch (v.index()) {
    case 0: return ColumnType::int64;
    case 1: return ColumnType::float64;
    default: return ColumnType::string;
    }
}

inline std::string format_double(double d) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), d);
    return std::string(buf, res.ptr);
}

inline std::string to_string(const Value &v) {
    switch (v.index()) {
    case 0: return std::to_string(std::get<int64_t>(v));
    case 1: return format_double(std::get<double>(v));
    default: return std::get<std::string>(v);
    }
}

enum class CompareOp { eq, lt, le, gt, ge };

inline const char *to_string(CompareOp op) {
    switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    }
    return "?";
}

inline bool compare(int64_t a, CompareOp op, int64_t b) {
    switch (op) {
    case CompareOp::eq: return a == b;
    case CompareOp::lt: return a < b;
    case CompareOp::le: return a <= b;
    case CompareOp::gt: return a > b;
    case CompareOp::ge: return a >= b;
    }
    return false;
}

inline bool compare(double a, CompareOp op, double b) {
    switch (op) {
    case CompareOp::eq: return a == b;
    case CompareOp::lt: return a < b;
    case CompareOp::le: return a <= b;
    case CompareOp::gt: return a > b;
    case CompareOp::ge: return a >= b;
    }
    return false;
}

// A filter's right-hand side: a literal, or a $n parameter slot (1-based).
struct ParamSlot {
    int index = 0;
    bool operator==(const ParamSlot &o) const { return index == o.index; }
};

using Term = std::variant<Value, ParamSlot>;

inline bool is_param(const Term &t) { return t.index() == 1; }

inline std::string to_string(const Term &t) {
    if (is_param(t)) return "$" + std::to_string(std::get<ParamSlot>(t).index);
    return to_string(std::get<Value>(t));
}

} // namespace planforge
