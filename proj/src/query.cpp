#include "zacc/query.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <unordered_map>

namespace zacc {

// ============================================================================
// Per-query chunk cache
// ============================================================================

struct QueryEngine::Cache {
    // Key packs (array id, flat chunk ordinal); local to one query, so each
    // distinct chunk is fetched from the store once.
    std::unordered_map<std::uint64_t, std::vector<double>> blocks;

    const std::vector<double>& block(const Array& arr, int array_id, const Index& chunk)
    {
        const auto grid_shape = arr.chunk_grid_shape();
        std::uint64_t flat = 0;
        for (std::size_t d = 0; d < chunk.size(); ++d)
            flat = flat * static_cast<std::uint64_t>(grid_shape[d]) +
                   static_cast<std::uint64_t>(chunk[d]);
        const std::uint64_t key = (static_cast<std::uint64_t>(array_id) << 44) | flat;
        auto it = blocks.find(key);
        if (it != blocks.end()) return it->second;
        return blocks.emplace(key, arr.read_chunk_f64(chunk)).first->second;
    }
};

// ============================================================================
// Construction
// ============================================================================

QueryEngine::QueryEngine(Store& store, std::string var, const WeightSource& wsrc)
    : store_(&store), var_(std::move(var)), grid_(grid_of(store, var_)),
      raw_(Array::open(store, var_)), fill_(raw_.meta().fill_as_double())
{
    const std::string group = var_ + "_accumulation_group";
    if (!store.contains(group + "/.zattrs") && !store.contains(group + "/.zattr"))
        throw CapabilityError("no accumulation group for '" + var_ +
                              "': run generate first");
    auto dims = grid_.dim_names();
    group_attrs_ = GroupAttrs::from_json(read_attrs(store, group), &dims);

    // Open every referenced dataset up front; queries stay lock-free.
    int next_id = 2; // 0 = raw, 1 = full weight array
    std::function<void(const GroupAttrs::Node&, std::vector<std::size_t>)> walk =
        [&](const GroupAttrs::Node& node, std::vector<std::size_t> axes) {
            auto open_kind = [&](const std::optional<std::string>& name, DatasetKind kind) {
                if (!name) return;
                auto subset = DimSubset::of_axes(axes);
                OpenDataset ds{next_id++, Array::open(*store_, group + "/" + *name),
                               DatasetAttrs::from_json(read_attrs(*store_, group + "/" + *name))};
                datasets_.emplace(std::make_pair(subset.axes(), static_cast<int>(kind)),
                                  std::move(ds));
            };
            open_kind(node.data_unweighted, DatasetKind::unweighted);
            open_kind(node.data_weighted, DatasetKind::weighted);
            open_kind(node.weights, DatasetKind::weights);
            for (const auto& [name, child] : node.children) {
                auto next = axes;
                next.push_back(grid_.axis(name));
                walk(child, std::move(next));
            }
        };
    walk(group_attrs_.root, {});

    // Slot placement requires one stride per dimension across datasets.
    stride_.assign(grid_.ndim(), 0);
    for (const auto& [key, ds] : datasets_) {
        for (std::size_t d = 0; d < grid_.ndim(); ++d) {
            const auto s = lookup_stride(ds.attrs, grid_.dim_names()[d]);
            if (s == 0) continue;
            if (stride_[d] == 0)
                stride_[d] = s;
            else if (stride_[d] != s)
                throw CapabilityError("inconsistent accumulation stride along " +
                                      grid_.dim_names()[d]);
        }
    }

    weights_ = wsrc.resolve(store, grid_);
    if (weights_.kind() == WeightSource::Kind::full_array) {
        weight_array_ = Array::open(store, weights_.full_array_name());
        weight_array_id_ = 1;
    }
}

const QueryEngine::OpenDataset* QueryEngine::find_dataset(const DimSubset& subset,
                                                          DatasetKind kind) const
{
    auto it = datasets_.find({subset.axes(), static_cast<int>(kind)});
    return it == datasets_.end() ? nullptr : &it->second;
}

void QueryEngine::require_datasets(const DimSubset& agg, Weighting mode) const
{
    for (const auto& subset : subset_lattice(agg)) {
        if (subset.empty()) continue;
        auto missing = [&](DatasetKind kind) {
            return find_dataset(subset, kind) == nullptr;
        };
        std::string absent;
        if (mode == Weighting::weighted) {
            if (missing(DatasetKind::weighted)) absent = "weighted data";
            else if (missing(DatasetKind::weights)) absent = "weights";
        } else if (missing(DatasetKind::unweighted)) {
            absent = "unweighted data";
        }
        if (!absent.empty()) {
            std::string dims;
            for (auto a : subset.axes()) {
                if (!dims.empty()) dims += "+";
                dims += grid_.dim_names()[a];
            }
            throw CapabilityError("no " + absent + " accumulation dataset for {" + dims + "}");
        }
    }
}

// ============================================================================
// Element access
// ============================================================================

double QueryEngine::value_at(const Array& arr, int array_id, const Index& elem,
                             Cache& cache) const
{
    const auto& chunks = arr.meta().chunks;
    const std::size_t nd = chunks.size();
    Index chunk(nd);
    std::int64_t local_flat = 0;
    for (std::size_t d = 0; d < nd; ++d) {
        chunk[d] = elem[d] / chunks[d];
        local_flat = local_flat * chunks[d] + (elem[d] % chunks[d]);
    }
    return cache.block(arr, array_id, chunk)[static_cast<std::size_t>(local_flat)];
}

double QueryEngine::weight_at(const Index& elem, Cache& cache) const
{
    switch (weights_.kind()) {
    case WeightSource::Kind::unit: return 1.0;
    case WeightSource::Kind::vectors: {
        double w = 1.0;
        for (const auto& [axis, vec] : weights_.vectors())
            w *= vec[static_cast<std::size_t>(elem[axis])];
        return w;
    }
    case WeightSource::Kind::full_array:
        return value_at(*weight_array_, weight_array_id_, elem, cache);
    }
    return 1.0;
}

double QueryEngine::masked_raw(const Index& elem, Cache& cache) const
{
    const double v = value_at(raw_, 0, elem, cache);
    if (is_fill_element(v, fill_) || std::isnan(v)) return std::numeric_limits<double>::quiet_NaN();
    return v;
}

// ============================================================================
// Prefix evaluation
// ============================================================================

std::pair<double, double> QueryEngine::eval_prefix(const DimSubset& agg,
                                                   const std::vector<DimSubset>& lattice,
                                                   const Index& endpoint, Index& idx,
                                                   Weighting mode, Cache& cache,
                                                   CompositePrefix* breakdown) const
{
    const auto& axes = agg.axes();
    const std::size_t na = axes.size();

    for (std::size_t i = 0; i < na; ++i)
        if (endpoint[i] < 0) return {0.0, 0.0};

    // Last slot boundary at or before each endpoint coordinate.
    std::vector<std::int64_t> slot(na), bound(na);
    for (std::size_t i = 0; i < na; ++i) {
        const auto d = axes[i];
        slot[i] = stride_[d] > 0 ? slot_at_or_before(grid_, d, stride_[d], endpoint[i]) : -1;
        bound[i] = slot[i] >= 0 ? slot_boundary(grid_, d, stride_[d], slot[i]) : -1;
    }

    double value = 0.0, weight = 0.0;
    for (const auto& subset : lattice) {
        // Subsets needing a slot on a dimension that has none contribute 0.
        bool usable = true;
        for (auto d : subset.axes()) {
            const auto i = static_cast<std::size_t>(
                std::find(axes.begin(), axes.end(), d) - axes.begin());
            if (slot[i] < 0) usable = false;
        }
        if (!usable) continue;

        // Residual raw ranges over the aggregated dims outside the subset.
        Index lo, hi;
        std::vector<std::size_t> res_axes;
        bool empty = false;
        for (std::size_t i = 0; i < na; ++i) {
            if (subset.contains(axes[i])) continue;
            res_axes.push_back(i);
            lo.push_back(bound[i] + 1);
            hi.push_back(endpoint[i] + 1);
            if (bound[i] + 1 > endpoint[i]) empty = true;
        }
        if (empty) continue;

        const OpenDataset* data_ds = nullptr;
        const OpenDataset* weight_ds = nullptr;
        if (!subset.empty()) {
            data_ds = find_dataset(subset, mode == Weighting::weighted
                                               ? DatasetKind::weighted
                                               : DatasetKind::unweighted);
            if (mode == Weighting::weighted) weight_ds = find_dataset(subset, DatasetKind::weights);
        }

        double term_v = 0.0, term_w = 0.0;
        auto visit = [&](const Index& res) {
            for (std::size_t r = 0; r < res_axes.size(); ++r)
                idx[axes[res_axes[r]]] = res[r];
            for (std::size_t i = 0; i < na; ++i)
                if (subset.contains(axes[i])) idx[axes[i]] = slot[i];

            if (subset.empty()) {
                const double v = masked_raw(idx, cache);
                if (std::isnan(v)) return; // fill gap
                if (mode == Weighting::weighted) {
                    const double w = weight_at(idx, cache);
                    term_v += v * w;
                    term_w += w;
                } else {
                    term_v += v;
                }
            } else {
                term_v += value_at(data_ds->array, data_ds->id, idx, cache);
                if (mode == Weighting::weighted)
                    term_w += value_at(weight_ds->array, weight_ds->id, idx, cache);
            }
        };
        for_each_index(lo, hi, visit);

        value += term_v;
        weight += term_w;

        if (breakdown) {
            CompositePrefix::Term t;
            t.subset = subset;
            if (data_ds) {
                t.dataset = data_ds->array.name();
                for (auto d : subset.axes()) {
                    const auto i = static_cast<std::size_t>(
                        std::find(axes.begin(), axes.end(), d) - axes.begin());
                    t.slots.push_back(slot[i]);
                }
            }
            for (std::size_t r = 0; r < res_axes.size(); ++r)
                t.residual.push_back({lo[r], hi[r]});
            t.value = term_v;
            t.weight = term_w;
            breakdown->terms.push_back(std::move(t));
        }
    }
    return {value, weight};
}

CompositePrefix QueryEngine::prefix_sum(const DimSubset& agg, const Index& endpoint,
                                        const Index& kept_index, Weighting mode) const
{
    if (endpoint.size() != agg.size())
        throw BoundsError("prefix_sum: one endpoint per aggregated dimension");
    if (kept_index.size() != grid_.ndim() - agg.size())
        throw BoundsError("prefix_sum: one index per kept dimension");
    for (std::size_t i = 0; i < agg.size(); ++i) {
        const auto d = agg.axes()[i];
        if (endpoint[i] < -1 || endpoint[i] >= grid_.shape()[d])
            throw BoundsError("prefix_sum: endpoint out of range along " + grid_.dim_names()[d]);
    }
    require_datasets(agg, mode);

    Index idx(grid_.ndim(), 0);
    std::size_t k = 0;
    for (std::size_t d = 0; d < grid_.ndim(); ++d)
        if (!agg.contains(d)) idx[d] = kept_index[k++];

    Cache cache;
    CompositePrefix out;
    out.endpoint = endpoint;
    const auto lattice = subset_lattice(agg);
    auto [v, w] = eval_prefix(agg, lattice, endpoint, idx, mode, cache, &out);
    out.value = v;
    if (mode == Weighting::weighted) {
        out.weight = w;
    } else {
        double count = 1.0;
        for (std::size_t i = 0; i < agg.size(); ++i)
            count *= static_cast<double>(endpoint[i] + 1);
        out.weight = count;
    }
    return out;
}

// ============================================================================
// Composite chunk (inspection parity with the workflow figures)
// ============================================================================

QueryEngine::CompositeChunk QueryEngine::composite_chunk(const Index& chunk_coord,
                                                         const DimSubset& agg,
                                                         Weighting mode) const
{
    require_datasets(agg, mode);
    const auto origin = grid_.chunk_origin(chunk_coord);
    const auto extent = grid_.chunk_extent(chunk_coord);

    CompositeChunk out;
    out.chunk = chunk_coord;
    out.extent = extent;
    out.values.resize(static_cast<std::size_t>(product(extent)));

    Cache cache;
    std::size_t pos = 0;
    for_each_index(extent, [&](const Index& local) {
        Index elem(grid_.ndim());
        for (std::size_t d = 0; d < grid_.ndim(); ++d) elem[d] = origin[d] + local[d];

        std::vector<std::size_t> front;
        for (auto d : agg.axes())
            if (local[d] == 0) front.push_back(d);

        double v;
        if (front.empty()) {
            v = masked_raw(elem, cache);
            if (std::isnan(v)) v = 0.0;
            else if (mode == Weighting::weighted) v *= weight_at(elem, cache);
        } else {
            const auto sub = DimSubset::of_axes(front);
            Index endpoint;
            for (auto d : sub.axes()) endpoint.push_back(elem[d]);
            Index idx = elem;
            v = eval_prefix(sub, subset_lattice(sub), endpoint, idx, mode, cache, nullptr).first;
        }
        out.values[pos++] = v;
    });
    return out;
}

// ============================================================================
// Region aggregation
// ============================================================================

AggregateResult QueryEngine::region_aggregate(const RegionQuery& q,
                                              const std::map<std::size_t, IndexRange>& kept_restrict) const
{
    q.validate(grid_);
    require_datasets(q.agg_dims, q.weighting);

    AggregateResult out;
    for (std::size_t d = 0; d < grid_.ndim(); ++d) {
        if (q.agg_dims.contains(d)) continue;
        IndexRange r{0, grid_.shape()[d]};
        auto it = kept_restrict.find(d);
        if (it != kept_restrict.end()) {
            r = it->second;
            if (r.start < 0 || r.start >= r.end || r.end > grid_.shape()[d])
                throw BoundsError("bad kept-dimension bounds along " + grid_.dim_names()[d]);
        }
        out.kept_axes.push_back(d);
        out.kept_bounds.push_back(r);
        out.kept_extent.push_back(r.count());
    }
    out.fill = fill_.value_or(std::numeric_limits<double>::quiet_NaN());

    const auto cells = static_cast<std::size_t>(product(out.kept_extent));
    out.data_sum.assign(cells, 0.0);
    out.weight_sum.assign(cells, 0.0);
    out.average.assign(cells, 0.0);

    const auto corners = enumerate_corners(q);
    const auto before = store_->counter().snapshot();
    Cache cache;

    // Unweighted divisors are pure element counts, identical at every kept
    // position: the signed corner combination collapses to the region volume.
    double uw_count = 1.0;
    if (q.weighting == Weighting::unweighted)
        for (const auto& b : q.bounds) uw_count *= static_cast<double>(b.count());

    Index kept_lo(out.kept_axes.size()), kept_hi(out.kept_axes.size());
    for (std::size_t k = 0; k < out.kept_axes.size(); ++k) {
        kept_lo[k] = out.kept_bounds[k].start;
        kept_hi[k] = out.kept_bounds[k].end;
    }

    const auto lattice = subset_lattice(q.agg_dims);
    Index idx(grid_.ndim(), 0);
    std::size_t cell = 0;
    for_each_index(kept_lo, kept_hi, [&](const Index& kept) {
        for (std::size_t k = 0; k < out.kept_axes.size(); ++k) idx[out.kept_axes[k]] = kept[k];

        double data = 0.0, weight = 0.0;
        for (const auto& corner : corners) {
            auto [v, w] =
                eval_prefix(q.agg_dims, lattice, corner.point, idx, q.weighting, cache, nullptr);
            data += corner.sign * v;
            weight += corner.sign * w;
        }
        if (q.weighting == Weighting::unweighted) weight = uw_count;

        out.data_sum[cell] = data;
        out.weight_sum[cell] = weight;
        if (weight > 0.0) {
            out.average[cell] = data / weight;
        } else {
            out.average[cell] = out.fill;
            ++out.zero_weight_cells;
        }
        ++cell;
    });

    const auto after = store_->counter().snapshot();
    out.fetch = {after.chunk_reads - before.chunk_reads, after.bytes_read - before.bytes_read};
    return out;
}

// ============================================================================
// Named services
// ============================================================================

namespace {

RegionQuery make_query(const ChunkGrid& grid, const std::map<std::string, IndexRange>& bounds,
                       Weighting mode)
{
    std::vector<std::string> names;
    names.reserve(bounds.size());
    for (const auto& [name, r] : bounds) names.push_back(name);
    RegionQuery q;
    q.agg_dims = DimSubset::of(grid, names);
    q.weighting = mode;
    for (auto a : q.agg_dims.axes()) q.bounds.push_back(bounds.at(grid.dim_names()[a]));
    return q;
}

} // namespace

AggregateResult QueryEngine::area_averaged_series(const std::map<std::string, IndexRange>& spatial_bounds,
                                                  const std::string& time_dim,
                                                  IndexRange time_range, Weighting mode) const
{
    auto bounds = spatial_bounds;
    if (bounds.empty()) // global averaging
        for (std::size_t d = 0; d < grid_.ndim(); ++d)
            if (d != grid_.axis(time_dim)) bounds[grid_.dim_names()[d]] = {0, grid_.shape()[d]};
    auto q = make_query(grid_, bounds, mode);
    return region_aggregate(q, {{grid_.axis(time_dim), time_range}});
}

AggregateResult QueryEngine::time_averaged_map(const std::string& time_dim, IndexRange time_range,
                                               const std::map<std::string, IndexRange>& spatial_bounds,
                                               Weighting mode) const
{
    auto q = make_query(grid_, {{time_dim, time_range}}, mode);
    std::map<std::size_t, IndexRange> kept;
    for (const auto& [name, r] : spatial_bounds) kept[grid_.axis(name)] = r;
    return region_aggregate(q, kept);
}

} // namespace zacc
