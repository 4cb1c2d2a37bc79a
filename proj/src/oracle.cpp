#include "zacc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zacc {

// ============================================================================
// BruteEngine
// ============================================================================

BruteEngine::BruteEngine(Store& store, std::string var, const WeightSource& wsrc)
    : store_(&store), var_(std::move(var)), grid_(grid_of(store, var_)),
      raw_(Array::open(store, var_)), fill_(raw_.meta().fill_as_double()),
      weights_(wsrc.resolve(store, grid_))
{
    if (weights_.kind() == WeightSource::Kind::full_array)
        weight_array_ = Array::open(store, weights_.full_array_name());
}

AggregateResult BruteEngine::region_aggregate(const RegionQuery& q,
                                              const std::map<std::size_t, IndexRange>& kept_restrict) const
{
    q.validate(grid_);
    const std::size_t nd = grid_.ndim();

    // Full region box: aggregated bounds plus (restricted) kept extents.
    Index lo(nd), hi(nd);
    AggregateResult out;
    for (std::size_t d = 0; d < nd; ++d) {
        if (q.agg_dims.contains(d)) {
            const auto i = static_cast<std::size_t>(
                std::find(q.agg_dims.axes().begin(), q.agg_dims.axes().end(), d) -
                q.agg_dims.axes().begin());
            lo[d] = q.bounds[i].start;
            hi[d] = q.bounds[i].end;
        } else {
            IndexRange r{0, grid_.shape()[d]};
            auto it = kept_restrict.find(d);
            if (it != kept_restrict.end()) r = it->second;
            if (r.start < 0 || r.start >= r.end || r.end > grid_.shape()[d])
                throw BoundsError("bad kept-dimension bounds along " + grid_.dim_names()[d]);
            lo[d] = r.start;
            hi[d] = r.end;
            out.kept_axes.push_back(d);
            out.kept_bounds.push_back(r);
            out.kept_extent.push_back(r.count());
        }
    }
    out.fill = fill_.value_or(std::numeric_limits<double>::quiet_NaN());

    std::int64_t region_elems = 1;
    for (std::size_t d = 0; d < nd; ++d) region_elems *= hi[d] - lo[d];
    if (region_elems > ceiling_)
        throw CapabilityError("brute-force scan of " + std::to_string(region_elems) +
                              " elements exceeds the oracle ceiling of " +
                              std::to_string(ceiling_));

    const auto cells = static_cast<std::size_t>(product(out.kept_extent));
    out.data_sum.assign(cells, 0.0);
    out.weight_sum.assign(cells, 0.0);
    out.average.assign(cells, 0.0);

    // Kept-cell strides (row-major over kept extents).
    Shape kept_stride_by_axis(nd, 0);
    {
        std::int64_t s = 1;
        for (std::size_t k = out.kept_axes.size(); k-- > 0;) {
            kept_stride_by_axis[out.kept_axes[k]] = s;
            s *= out.kept_extent[k];
        }
    }

    const bool weighted = q.weighting == Weighting::weighted;
    const auto& vecs = weights_.vectors();
    const auto before = store_->counter().snapshot();

    // Chunk-range iteration keeps per-cell contributions ascending in grid
    // order along the aggregated dimensions.
    Index clo(nd), chi(nd);
    for (std::size_t d = 0; d < nd; ++d) {
        clo[d] = lo[d] / grid_.chunk_shape()[d];
        chi[d] = (hi[d] - 1) / grid_.chunk_shape()[d] + 1;
    }

    const Shape& cs = grid_.chunk_shape();
    Shape chunk_strides(nd);
    {
        std::int64_t s = 1;
        for (std::size_t d = nd; d-- > 0;) {
            chunk_strides[d] = s;
            s *= cs[d];
        }
    }
    const std::size_t last = nd - 1;

    for_each_index(clo, chi, [&](const Index& chunk) {
        const auto block = raw_.read_chunk_f64(chunk);
        std::vector<double> wblock;
        if (weight_array_) wblock = weight_array_->read_chunk_f64(chunk);
        const auto origin = grid_.chunk_origin(chunk);

        // Overlap of this chunk with the region, in local coordinates.
        Index llo(nd), lhi(nd);
        for (std::size_t d = 0; d < nd; ++d) {
            llo[d] = std::max(lo[d], origin[d]) - origin[d];
            lhi[d] = std::min(hi[d], origin[d] + grid_.chunk_extent(chunk)[d]) - origin[d];
        }

        Index row_lo(llo.begin(), llo.end() - 1), row_hi(lhi.begin(), lhi.end() - 1);
        for_each_index(row_lo, row_hi, [&](const Index& row) {
            std::int64_t coff = 0;
            std::int64_t cell = 0;
            double wrow = 1.0;
            for (std::size_t d = 0; d < last; ++d) {
                coff += row[d] * chunk_strides[d];
                const auto x = origin[d] + row[d];
                cell += (x - lo[d]) * kept_stride_by_axis[d]; // 0 along aggregated dims
                if (weighted && !vecs.empty()) {
                    auto it = vecs.find(d);
                    if (it != vecs.end()) wrow *= it->second[static_cast<std::size_t>(x)];
                }
            }
            const auto it_last = vecs.find(last);
            const bool last_kept = !q.agg_dims.contains(last);
            const auto cell_step = last_kept ? kept_stride_by_axis[last] : 0;
            const auto x0 = origin[last];
            for (std::int64_t i = llo[last]; i < lhi[last]; ++i) {
                const double v = block[static_cast<std::size_t>(coff + i)];
                const bool valid = !is_fill_element(v, fill_) && !std::isnan(v);
                if (!valid) continue;
                const auto c = static_cast<std::size_t>(
                    cell + (last_kept ? (x0 + i - lo[last]) * cell_step : 0));
                if (weighted) {
                    double w = 1.0;
                    if (weight_array_)
                        w = wblock[static_cast<std::size_t>(coff + i)];
                    else if (!vecs.empty())
                        w = wrow * (it_last != vecs.end()
                                        ? it_last->second[static_cast<std::size_t>(x0 + i)]
                                        : 1.0);
                    out.data_sum[c] += v * w;
                    out.weight_sum[c] += w;
                } else {
                    out.data_sum[c] += v;
                }
            }
        });
    });

    if (!weighted) {
        double count = 1.0;
        for (const auto& b : q.bounds) count *= static_cast<double>(b.count());
        std::fill(out.weight_sum.begin(), out.weight_sum.end(), count);
    }
    for (std::size_t c = 0; c < cells; ++c) {
        if (out.weight_sum[c] > 0.0) {
            out.average[c] = out.data_sum[c] / out.weight_sum[c];
        } else {
            out.average[c] = out.fill;
            ++out.zero_weight_cells;
        }
    }

    const auto after = store_->counter().snapshot();
    out.fetch = {after.chunk_reads - before.chunk_reads, after.bytes_read - before.bytes_read};
    return out;
}

namespace {

RegionQuery brute_query(const ChunkGrid& grid, const std::map<std::string, IndexRange>& bounds,
                        Weighting mode)
{
    std::vector<std::string> names;
    for (const auto& [name, r] : bounds) names.push_back(name);
    RegionQuery q;
    q.agg_dims = DimSubset::of(grid, names);
    q.weighting = mode;
    for (auto a : q.agg_dims.axes()) q.bounds.push_back(bounds.at(grid.dim_names()[a]));
    return q;
}

} // namespace

AggregateResult BruteEngine::area_averaged_series(const std::map<std::string, IndexRange>& spatial_bounds,
                                                  const std::string& time_dim,
                                                  IndexRange time_range, Weighting mode) const
{
    auto bounds = spatial_bounds;
    if (bounds.empty()) // global averaging
        for (std::size_t d = 0; d < grid_.ndim(); ++d)
            if (d != grid_.axis(time_dim)) bounds[grid_.dim_names()[d]] = {0, grid_.shape()[d]};
    auto q = brute_query(grid_, bounds, mode);
    return region_aggregate(q, {{grid_.axis(time_dim), time_range}});
}

AggregateResult BruteEngine::time_averaged_map(const std::string& time_dim, IndexRange time_range,
                                               const std::map<std::string, IndexRange>& spatial_bounds,
                                               Weighting mode) const
{
    auto q = brute_query(grid_, {{time_dim, time_range}}, mode);
    std::map<std::size_t, IndexRange> kept;
    for (const auto& [name, r] : spatial_bounds) kept[grid_.axis(name)] = r;
    return region_aggregate(q, kept);
}

// ============================================================================
// NRMSD
// ============================================================================

NrmsdReport nrmsd(std::span<const double> baseline, std::span<const double> candidate)
{
    if (baseline.size() != candidate.size())
        throw BoundsError("nrmsd: result shapes differ");
    if (baseline.empty())
        throw BoundsError("nrmsd: empty inputs");

    NrmsdReport r;
    r.n = static_cast<std::int64_t>(baseline.size());
    r.baseline_max = -std::numeric_limits<double>::infinity();
    r.baseline_min = std::numeric_limits<double>::infinity();
    double sq = 0.0;
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        const double d = baseline[i] - candidate[i];
        sq += d * d;
        r.baseline_max = std::max(r.baseline_max, baseline[i]);
        r.baseline_min = std::min(r.baseline_min, baseline[i]);
    }
    const double range = r.baseline_max - r.baseline_min;
    if (range > 0.0) {
        r.nrmsd = std::sqrt(sq / static_cast<double>(r.n)) / range;
        r.defined = true;
    }
    return r;
}

} // namespace zacc
