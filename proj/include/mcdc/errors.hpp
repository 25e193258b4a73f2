#pragma once

#include <stdexcept>
#include <string>

namespace mcdc {

// Shape disagreement between tensors/layers (wrong rank, extent, channel count).
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed on-disk data (IDX headers, checkpoint records, PGM constraints).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Two inputs that must agree do not (e.g. image/label counts).
class ConsistencyError : public std::runtime_error {
public:
    explicit ConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

// Operation invoked without the state it needs (e.g. backward without a matching cache).
class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// An ArchitectureSpec that cannot be realized (indivisible extents etc.).
class SpecError : public std::invalid_argument {
public:
    explicit SpecError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace mcdc
