#pragma once

#include <stdexcept>
#include <string>

namespace planforge {

// Error taxonomy shared by the library and the CLI. The CLI maps kinds to
// exit codes: usage -> 1, data-ish kinds -> 2, internal -> 3.
enum class errc {
    config,      // invalid configuration value
    schema,      // unknown table/column, malformed schema
    parse,       // SQL syntax error
    plan,        // plan fails validation against its query/database
    estimation,  // missing statistics
    capacity,    // request exceeds a hard limit (table count, ...)
    training,    // bad training input
    decode,      // latent decode impossible (empty pool)
    argument,    // out-of-range argument
    data,        // malformed external data (files, logs)
    budget,      // execution aborted by a work limit
    internal,    // invariant violation
};

class Error : public std::runtime_error {
  public:
    Error(errc kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    errc kind() const { return kind_; }

  private:
    errc kind_;
};

[[noreturn]] inline void raise(errc kind, std::string msg) { throw Error(kind, std::move(msg)); }

// Syntax errors carry the byte offset of the offending token.
class ParseError : public Error {
  public:
    ParseError(std::string msg, size_t offset)
        : Error(errc::parse, msg + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    size_t offset() const { return offset_; }

  private:
    size_t offset_;
};

#define PLANFORGE_ASSERT(cond, msg)                                                                \
    do {                                                                                           \
        if (!(cond)) ::planforge::raise(::planforge::errc::internal, std::string("invariant: ") + (msg)); \
    } while (0)

} // namespace planforge
