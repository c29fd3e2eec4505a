#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hbnet {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using u32 = std::uint32_t;
using u16 = std::uint16_t;
using u8 = std::uint8_t;

/// User-facing problem: bad config, bad file, shape mismatch. CLI exit code 1.
class ValueError : public std::runtime_error {
  public:
    explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Broken internal invariant. CLI exit code 2.
class InternalError : public std::logic_error {
  public:
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw ValueError(msg); }

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw ValueError(msg);
}

inline void check_internal(bool cond, const std::string& msg) {
    if (!cond) throw InternalError(msg);
}

}  // namespace hbnet
