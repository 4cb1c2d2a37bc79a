#include "zacc/grid.hpp"

#include <algorithm>
#include <set>

namespace zacc {

// ============================================================================
// ChunkGrid
// ============================================================================

ChunkGrid::ChunkGrid(std::vector<std::string> dim_names, Shape shape, Shape chunk_shape)
    : dim_names_(std::move(dim_names)), shape_(std::move(shape)), chunk_shape_(std::move(chunk_shape))
{
    if (dim_names_.size() != shape_.size() || shape_.size() != chunk_shape_.size())
        throw BoundsError("chunk grid: dim_names, shape and chunk_shape lengths differ");
    if (shape_.empty())
        throw BoundsError("chunk grid: at least one dimension required");
    for (std::size_t d = 0; d < shape_.size(); ++d) {
        if (shape_[d] < 1 || chunk_shape_[d] < 1)
            throw BoundsError("chunk grid: sizes must be >= 1 (dim " + dim_names_[d] + ")");
    }
    std::set<std::string> uniq(dim_names_.begin(), dim_names_.end());
    if (uniq.size() != dim_names_.size())
        throw BoundsError("chunk grid: dimension names must be unique");
}

Shape ChunkGrid::chunk_counts() const
{
    Shape out(ndim());
    for (std::size_t d = 0; d < ndim(); ++d) out[d] = chunk_count(d);
    return out;
}

std::size_t ChunkGrid::axis(const std::string& name) const
{
    for (std::size_t d = 0; d < dim_names_.size(); ++d)
        if (dim_names_[d] == name) return d;
    throw BoundsError("unknown dimension name: " + name);
}

Index ChunkGrid::chunk_of(const Index& index) const
{
    if (index.size() != ndim())
        throw BoundsError("chunk_of: index rank mismatch");
    Index out(ndim());
    for (std::size_t d = 0; d < ndim(); ++d) {
        if (index[d] < 0 || index[d] >= shape_[d])
            throw BoundsError("chunk_of: index out of range along " + dim_names_[d]);
        out[d] = index[d] / chunk_shape_[d];
    }
    return out;
}

Index ChunkGrid::chunk_origin(const Index& chunk) const
{
    Index out(ndim());
    for (std::size_t d = 0; d < ndim(); ++d) out[d] = chunk[d] * chunk_shape_[d];
    return out;
}

Shape ChunkGrid::chunk_extent(const Index& chunk) const
{
    Shape out(ndim());
    for (std::size_t d = 0; d < ndim(); ++d) {
        if (chunk[d] < 0 || chunk[d] >= chunk_count(d))
            throw BoundsError("chunk_extent: chunk coordinate out of range along " + dim_names_[d]);
        out[d] = std::min(chunk_shape_[d], shape_[d] - chunk[d] * chunk_shape_[d]);
    }
    return out;
}

// ============================================================================
// DimSubset
// ============================================================================

DimSubset DimSubset::of(const ChunkGrid& grid, const std::vector<std::string>& names)
{
    std::vector<std::size_t> axes;
    axes.reserve(names.size());
    for (const auto& n : names) axes.push_back(grid.axis(n));
    return of_axes(std::move(axes));
}

DimSubset DimSubset::of_axes(std::vector<std::size_t> axes)
{
    std::sort(axes.begin(), axes.end());
    axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
    DimSubset s;
    s.axes_ = std::move(axes);
    return s;
}

bool DimSubset::contains(std::size_t axis) const
{
    return std::binary_search(axes_.begin(), axes_.end(), axis);
}

bool DimSubset::subset_of(const DimSubset& other) const
{
    return std::includes(other.axes_.begin(), other.axes_.end(), axes_.begin(), axes_.end());
}

std::vector<std::string> DimSubset::names(const ChunkGrid& grid) const
{
    std::vector<std::string> out;
    out.reserve(axes_.size());
    for (auto a : axes_) out.push_back(grid.dim_names()[a]);
    return out;
}

std::vector<DimSubset> subset_lattice(const DimSubset& dims)
{
    const auto& axes = dims.axes();
    const std::size_t n = axes.size();
    std::vector<DimSubset> out;
    out.reserve(std::size_t{1} << n);
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
        std::vector<std::size_t> sel;
        for (std::size_t i = 0; i < n; ++i)
            if (bits & (std::uint64_t{1} << i)) sel.push_back(axes[i]);
        out.push_back(DimSubset::of_axes(std::move(sel)));
    }
    std::stable_sort(out.begin(), out.end(), [](const DimSubset& a, const DimSubset& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.axes() < b.axes();
    });
    return out;
}

// ============================================================================
// RegionQuery / corners
// ============================================================================

void RegionQuery::validate(const ChunkGrid& grid) const
{
    if (agg_dims.empty())
        throw BoundsError("region query: aggregation dimension set is empty");
    if (bounds.size() != agg_dims.size())
        throw BoundsError("region query: one bound per aggregated dimension required");
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const auto axis = agg_dims.axes()[i];
        const auto& b = bounds[i];
        if (b.start < 0 || b.start >= b.end || b.end > grid.shape()[axis])
            throw BoundsError("region query: bad bounds along " + grid.dim_names()[axis]);
    }
}

std::vector<Corner> enumerate_corners(const RegionQuery& q)
{
    const std::size_t d = q.agg_dims.size();
    std::vector<Corner> out;
    out.reserve(std::size_t{1} << d);
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << d); ++bits) {
        Corner c;
        c.point.resize(d);
        int starts = 0;
        for (std::size_t i = 0; i < d; ++i) {
            if (bits & (std::uint64_t{1} << i)) {
                c.point[i] = q.bounds[i].start - 1;
                ++starts;
            } else {
                c.point[i] = q.bounds[i].end - 1;
            }
        }
        c.sign = (starts % 2 == 0) ? 1 : -1;
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace zacc
