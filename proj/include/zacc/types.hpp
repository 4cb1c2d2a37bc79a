#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace zacc {

/// Element counts / extents per dimension.
using Shape = std::vector<std::int64_t>;

/// Element index vector; -1 is the empty-prefix sentinel where documented.
using Index = std::vector<std::int64_t>;

// ============================================================================
// Error taxonomy
// ============================================================================

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Index or bounds outside the valid range.
struct BoundsError : Error {
    using Error::Error;
};

/// Missing or inconsistent stored data (absent chunk without fill, ...).
struct DataError : Error {
    using Error::Error;
};

/// Malformed stored bytes or metadata documents.
struct FormatError : Error {
    using Error::Error;
};

/// The store lacks a required accumulation dataset or configuration.
struct CapabilityError : Error {
    using Error::Error;
};

/// Attribute document violates the accumulation schemas.
struct SchemaError : Error {
    using Error::Error;
};

// ============================================================================
// Small helpers
// ============================================================================

inline std::int64_t product(const Shape& s)
{
    std::int64_t p = 1;
    for (auto v : s) p *= v;
    return p;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b)
{
    return (a + b - 1) / b;
}

} // namespace zacc
