#pragma once

#include <stdexcept>

namespace elf {

/// A numerical failure inside an algorithm (non-finite gradient, a
/// non-converging special function), as opposed to bad input.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace elf
