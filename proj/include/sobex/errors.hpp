#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sobex {

// Domain-level mathematical flags. These fire when the *input geometry*
// misbehaves (irregular set, disconnected domain, exhausted resolution),
// which is an expected outcome for negative experiments. The CLI maps
// them to exit code 2.
class domain_flag_error : public std::runtime_error {
public:
    explicit domain_flag_error(const std::string& what) : std::runtime_error(what) {}
};

class empty_domain_error : public domain_flag_error {
public:
    explicit empty_domain_error(const std::string& what) : domain_flag_error(what) {}
};

class connectivity_error : public domain_flag_error {
public:
    explicit connectivity_error(const std::string& what) : domain_flag_error(what) {}
};

// Whitney construction could not cover the complement at the requested
// max_level; carries the cells that remained uncovered.
class resolution_exhausted_error : public domain_flag_error {
public:
    resolution_exhausted_error(const std::string& what, std::vector<std::int64_t> cells)
        : domain_flag_error(what), uncovered_cells(std::move(cells)) {}
    std::vector<std::int64_t> uncovered_cells;
};

// A quasi-cube H_Q came out empty for a cube that should have one;
// carries the offending cube ids.
class regularity_violation_error : public domain_flag_error {
public:
    regularity_violation_error(const std::string& what, std::vector<std::int32_t> cubes)
        : domain_flag_error(what), cube_ids(std::move(cubes)) {}
    std::vector<std::int32_t> cube_ids;
};

// Internal invariant broken: a bug, not a property of the input.
// CLI exit code 3.
class invariant_violation : public std::logic_error {
public:
    explicit invariant_violation(const std::string& what) : std::logic_error(what) {}
};

class empty_region_error : public std::invalid_argument {
public:
    explicit empty_region_error(const std::string& what) : std::invalid_argument(what) {}
};

class in_set_error : public std::invalid_argument {
public:
    explicit in_set_error(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace sobex
