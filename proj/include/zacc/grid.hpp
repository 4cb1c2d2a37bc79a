#pragma once

#include "zacc/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace zacc {

// ============================================================================
// ChunkGrid
// ============================================================================

/// Geometry of a chunked n-d array: dimension names, element extents and
/// chunk extents. The last chunk along a dimension may be partial.
class ChunkGrid {
public:
    ChunkGrid() = default;
    ChunkGrid(std::vector<std::string> dim_names, Shape shape, Shape chunk_shape);

    std::size_t ndim() const { return shape_.size(); }
    const std::vector<std::string>& dim_names() const { return dim_names_; }
    const Shape& shape() const { return shape_; }
    const Shape& chunk_shape() const { return chunk_shape_; }

    /// Chunks along dimension d, counting a trailing partial chunk.
    std::int64_t chunk_count(std::size_t d) const
    {
        return ceil_div(shape_[d], chunk_shape_[d]);
    }
    Shape chunk_counts() const;

    /// Axis position of a dimension name; throws BoundsError when unknown.
    std::size_t axis(const std::string& name) const;

    /// Chunk coordinate holding an element index. Throws BoundsError when the
    /// index is outside [0, shape).
    Index chunk_of(const Index& index) const;

    /// First element index of a chunk.
    Index chunk_origin(const Index& chunk) const;

    /// Actual extents of a chunk (trailing chunks trimmed to the array edge).
    Shape chunk_extent(const Index& chunk) const;

    bool operator==(const ChunkGrid&) const = default;

private:
    std::vector<std::string> dim_names_;
    Shape shape_;
    Shape chunk_shape_;
};

// ============================================================================
// DimSubset
// ============================================================================

/// An ordered subset of grid dimensions, canonicalized to grid axis order.
class DimSubset {
public:
    DimSubset() = default;

    /// Canonicalizes and deduplicates; throws BoundsError on unknown names.
    static DimSubset of(const ChunkGrid& grid, const std::vector<std::string>& names);

    /// From axis positions (sorted + deduplicated).
    static DimSubset of_axes(std::vector<std::size_t> axes);

    const std::vector<std::size_t>& axes() const { return axes_; }
    std::size_t size() const { return axes_.size(); }
    bool empty() const { return axes_.empty(); }
    bool contains(std::size_t axis) const;
    bool subset_of(const DimSubset& other) const;

    std::vector<std::string> names(const ChunkGrid& grid) const;

    auto operator<=>(const DimSubset&) const = default;

private:
    std::vector<std::size_t> axes_;
};

/// All subsets of `dims` including the empty one, in increasing-cardinality
/// order (ties broken by axis order). Drives composite-chunk construction.
std::vector<DimSubset> subset_lattice(const DimSubset& dims);

// ============================================================================
// RegionQuery
// ============================================================================

enum class Weighting { unweighted, weighted };

/// Half-open index interval [start, end).
struct IndexRange {
    std::int64_t start = 0;
    std::int64_t end = 0;
    std::int64_t count() const { return end - start; }
    bool operator==(const IndexRange&) const = default;
};

/// A hyperrectangular aggregation request: which dimensions are aggregated,
/// their half-open element bounds, and the weighting mode. Kept dimensions
/// are the implicit complement.
struct RegionQuery {
    DimSubset agg_dims;
    std::vector<IndexRange> bounds; // one per aggregated dimension, in subset order
    Weighting weighting = Weighting::unweighted;

    /// Throws BoundsError when bounds are empty, inverted, or outside the grid.
    void validate(const ChunkGrid& grid) const;
};

// ============================================================================
// Inclusion-exclusion corners
// ============================================================================

/// A signed prefix endpoint. `point` holds, per aggregated dimension, either
/// end-1 (inclusive) or start-1; -1 denotes the empty prefix.
struct Corner {
    Index point;
    int sign = 1;
    bool operator==(const Corner&) const = default;
};

/// The 2^d signed corners whose prefix sums combine to the region sum.
/// The first corner uses end-1 everywhere and carries sign +1.
std::vector<Corner> enumerate_corners(const RegionQuery& q);

} // namespace zacc
