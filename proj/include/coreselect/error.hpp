#pragma once

#include <stdexcept>
#include <string>

namespace coreselect {

enum class Errc {
    format,        // malformed file contents
    data,          // non-finite or otherwise invalid values
    duplicate_id,
    split,
    shape,         // dimension mismatch
    size,          // too few / too many samples for the request
    parameter,     // precondition on an argument
    consistency,   // inputs disagree with each other
    degenerate,    // numerically degenerate input (zero variance, ...)
    undefined,     // quantity undefined for the input (e.g. 1-cluster silhouette)
    spec,          // invalid generator spec
    config,
    io,
    state,         // corrupted or incompatible pipeline state
};

const char* errc_name(Errc code) noexcept;

/// Process exit code for an error class: 2 config, 3 data, 4 numeric, 5 I/O.
int exit_code(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace coreselect
