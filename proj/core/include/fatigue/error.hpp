#pragma once

#include <stdexcept>
#include <string>

namespace fatigue {

// Thrown for any contract violation surfaced to callers: bad input files,
// schema mismatches, dimension errors. Message carries the context
// (file, row, field) the user needs to fix the input.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fatigue
