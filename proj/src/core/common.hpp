#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace efn {

// All recoverable failures in the core surface as EfnError; the C API
// translates them into status codes.
class EfnError : public std::runtime_error {
public:
    explicit EfnError(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw EfnError(msg); }

inline void require(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
}

}  // namespace efn
