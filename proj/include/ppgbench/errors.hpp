#pragma once

#include <stdexcept>
#include <string>

namespace ppgbench {

// Bad inputs: malformed files, violated invariants, incompatible shapes.
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Failures during an otherwise valid run (NaN loss, I/O mid-write).
// The CLI maps these to exit code 3.
class RuntimeAbort : public std::runtime_error {
public:
    explicit RuntimeAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ppgbench
