#pragma once

// Error taxonomy. Precondition violations throw InvalidInput; the estimator
// reports unsolvable systems through RankError (carrying the numerical rank it
// found); the protocol scheduler and the power allocator have their own types
// so callers can tell configuration bugs from runtime conditions.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace igesim {

struct InvalidInput : std::invalid_argument {
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

struct RankError : std::runtime_error {
    RankError(const std::string& what, std::size_t numerical_rank_, std::size_t required_rank_)
        : std::runtime_error(what + " (numerical rank " + std::to_string(numerical_rank_) +
                             ", required " + std::to_string(required_rank_) + ")"),
          numerical_rank(numerical_rank_),
          required_rank(required_rank_) {}
    std::size_t numerical_rank;
    std::size_t required_rank;
};

struct SchedulingError : std::runtime_error {
    SchedulingError(const std::string& what, int node_)
        : std::runtime_error(what + " (node " + std::to_string(node_) + ")"), node(node_) {}
    int node;
};

struct AllocationError : std::runtime_error {
    explicit AllocationError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace igesim
