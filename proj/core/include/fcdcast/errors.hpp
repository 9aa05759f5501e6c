#pragma once

#include <stdexcept>
#include <string>

namespace fcd {

/// Input failed a semantic check (bad value, too few samples, bad config).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Input has the wrong structure (index out of range, mismatched shapes).
class StructuralError : public std::logic_error {
public:
    explicit StructuralError(const std::string& what) : std::logic_error(what) {}
};

/// Malformed or truncated file on disk.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fcd
