#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cnm {

using NodeId = std::uint32_t;
using ClusterId = std::uint32_t;
using Seed = std::uint64_t;

/// Error type for all validation and precondition failures in the library.
/// The CLI turns these into diagnostics + nonzero exit; the Python bindings
/// map them to RuntimeError.
class CnmError : public std::runtime_error {
public:
    explicit CnmError(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw CnmError(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

} // namespace cnm
