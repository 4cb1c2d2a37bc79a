#include "zacc/accumulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <set>

namespace zacc {

// ============================================================================
// Slot geometry
// ============================================================================

std::int64_t slot_count(const ChunkGrid& grid, std::size_t axis, std::int64_t stride)
{
    return grid.chunk_count(axis) / stride;
}

std::int64_t slot_boundary(const ChunkGrid& grid, std::size_t axis, std::int64_t stride,
                           std::int64_t s)
{
    const auto covered = (s + 1) * stride * grid.chunk_shape()[axis];
    return std::min(covered, grid.shape()[axis]) - 1;
}

std::int64_t slot_at_or_before(const ChunkGrid& grid, std::size_t axis, std::int64_t stride,
                               std::int64_t endpoint)
{
    if (endpoint < 0) return -1;
    const auto chunk = grid.chunk_shape()[axis];
    // Complete chunks ending at or before the endpoint.
    std::int64_t complete;
    if (endpoint >= grid.shape()[axis] - 1)
        complete = grid.chunk_count(axis);
    else
        complete = (endpoint + 1) / chunk;
    return complete / stride - 1;
}

// ============================================================================
// WeightSource
// ============================================================================

WeightSource WeightSource::dim_vectors(std::map<std::size_t, std::vector<double>> vecs)
{
    WeightSource w;
    w.kind_ = Kind::vectors;
    w.vectors_ = std::move(vecs);
    return w;
}

WeightSource WeightSource::dim_arrays(std::map<std::size_t, std::string> names)
{
    WeightSource w;
    w.kind_ = Kind::vectors;
    w.vector_names_ = std::move(names);
    return w;
}

WeightSource WeightSource::full_array(std::string name)
{
    WeightSource w;
    w.kind_ = Kind::full_array;
    w.full_name_ = std::move(name);
    return w;
}

WeightSource WeightSource::resolve(const Store& store, const ChunkGrid& grid) const
{
    WeightSource out = *this;
    auto& mutable_store = const_cast<Store&>(store);
    for (const auto& [axis, name] : vector_names_) {
        if (out.vectors_.count(axis)) continue;
        out.vectors_[axis] = read_1d_f64(mutable_store, name);
    }
    out.vector_names_.clear();
    for (const auto& [axis, vec] : out.vectors_) {
        if (axis >= grid.ndim())
            throw BoundsError("weight vector axis out of range");
        if (static_cast<std::int64_t>(vec.size()) != grid.shape()[axis])
            throw BoundsError("weight vector length mismatch along " + grid.dim_names()[axis]);
        for (double v : vec)
            if (!(v >= 0.0))
                throw BoundsError("weights must be nonnegative");
    }
    if (kind_ == Kind::full_array) {
        auto arr = Array::open(mutable_store, full_name_);
        if (arr.meta().shape != grid.shape() || arr.meta().chunks != grid.chunk_shape())
            throw BoundsError("full weight array must share the variable's shape and chunks");
    }
    return out;
}

// ============================================================================
// Naming and planning
// ============================================================================

namespace {

std::vector<std::string> dim_abbreviations(const ChunkGrid& grid)
{
    std::vector<std::string> ab;
    ab.reserve(grid.ndim());
    for (const auto& n : grid.dim_names())
        ab.push_back(n.size() > 4 ? n.substr(0, 3) : n);
    std::set<std::string> uniq(ab.begin(), ab.end());
    if (uniq.size() != ab.size()) return grid.dim_names(); // collision: full names
    return ab;
}

GroupAttrs::Node lattice_node(const ChunkGrid& grid, std::size_t min_axis)
{
    GroupAttrs::Node node;
    for (std::size_t a = min_axis; a < grid.ndim(); ++a)
        node.children[grid.dim_names()[a]] = lattice_node(grid, a + 1);
    return node;
}

} // namespace

std::string dataset_name(const ChunkGrid& grid, const DimSubset& subset, DatasetKind kind)
{
    auto ab = dim_abbreviations(grid);
    std::string name = kind == DatasetKind::weights     ? "acc_wt"
                       : kind == DatasetKind::unweighted ? "acc_uw"
                                                         : "acc";
    for (auto a : subset.axes()) name += "_" + ab[a];
    return name;
}

Plan plan(const ChunkGrid& grid, const std::string& var, const AccumulationSpec& spec)
{
    if (spec.stride.size() != grid.ndim())
        throw CapabilityError("accumulation spec needs one stride per dimension");
    if (!spec.variants.any())
        throw CapabilityError("accumulation spec selects no dataset variants");

    std::vector<DimSubset> subsets = spec.subsets;
    std::sort(subsets.begin(), subsets.end(), [](const DimSubset& a, const DimSubset& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a.axes() < b.axes();
    });
    subsets.erase(std::unique(subsets.begin(), subsets.end()), subsets.end());
    if (subsets.empty() || subsets.front().empty())
        throw CapabilityError("accumulation spec needs non-empty dimension subsets");

    Plan out;
    out.group = var + "_accumulation_group";
    out.group_attrs.root = lattice_node(grid, 0);

    for (const auto& subset : subsets) {
        for (auto a : subset.axes()) {
            if (spec.stride[a] < 1)
                throw CapabilityError("stride along " + grid.dim_names()[a] + " must be >= 1");
            if (slot_count(grid, a, spec.stride[a]) == 0)
                throw CapabilityError("stride along " + grid.dim_names()[a] +
                                      " exceeds its chunk count: no slots");
        }

        Shape shape(grid.ndim());
        Shape stride_attr(grid.ndim(), 0);
        for (std::size_t d = 0; d < grid.ndim(); ++d) {
            if (subset.contains(d)) {
                shape[d] = slot_count(grid, d, spec.stride[d]);
                stride_attr[d] = spec.stride[d];
            } else {
                shape[d] = grid.shape()[d];
            }
        }
        Shape chunks = shape;
        if (spec.acc_chunks) {
            for (std::size_t d = 0; d < grid.ndim(); ++d)
                chunks[d] = std::min(shape[d], (*spec.acc_chunks)[d]);
        }

        GroupAttrs::Node* node = &out.group_attrs.root;
        for (auto a : subset.axes()) node = &node->children[grid.dim_names()[a]];

        const DatasetKind kinds[] = {DatasetKind::unweighted, DatasetKind::weighted,
                                     DatasetKind::weights};
        const bool enabled[] = {spec.variants.unweighted, spec.variants.weighted,
                                spec.variants.weights};
        for (int k = 0; k < 3; ++k) {
            if (!enabled[k]) continue;
            PlannedDataset ds;
            ds.name = dataset_name(grid, subset, kinds[k]);
            ds.subset = subset;
            ds.kind = kinds[k];
            ds.attrs = DatasetAttrs{grid.dim_names(), stride_attr};
            ds.shape = shape;
            ds.chunks = chunks;
            switch (kinds[k]) {
            case DatasetKind::unweighted: node->data_unweighted = ds.name; break;
            case DatasetKind::weighted: node->data_weighted = ds.name; break;
            case DatasetKind::weights: node->weights = ds.name; break;
            }
            out.datasets.push_back(std::move(ds));
        }
    }
    return out;
}

std::int64_t Plan::element_count() const
{
    std::int64_t n = 0;
    for (const auto& ds : datasets) n += product(ds.shape);
    return n;
}

const PlannedDataset* Plan::find(const DimSubset& subset, DatasetKind kind) const
{
    for (const auto& ds : datasets)
        if (ds.subset == subset && ds.kind == kind) return &ds;
    return nullptr;
}

// ============================================================================
// Grid discovery
// ============================================================================

ChunkGrid grid_of(const Store& store, const std::string& var)
{
    auto& mutable_store = const_cast<Store&>(store);
    auto arr = Array::open(mutable_store, var);
    auto attrs = read_attrs(store, var);
    std::vector<std::string> names;
    if (attrs.contains(kArrayDimensions))
        names = attrs.at(kArrayDimensions).get<std::vector<std::string>>();
    else
        for (std::size_t d = 0; d < arr.meta().shape.size(); ++d)
            names.push_back("dim_" + std::to_string(d));
    return ChunkGrid(std::move(names), arr.meta().shape, arr.meta().chunks);
}

// ============================================================================
// Chain extension
// ============================================================================

NdBuffer extend_accumulation(const ChunkGrid& grid, const Shape& stride,
                             const NdBuffer& parent, const DimSubset& parent_subset,
                             std::size_t axis)
{
    if (parent_subset.contains(axis))
        throw BoundsError("extension axis already accumulated");
    const auto nslots = slot_count(grid, axis, stride[axis]);
    const auto raw_len = grid.shape()[axis];
    if (parent.shape()[axis] != raw_len)
        throw BoundsError("parent block does not span the extension axis");

    Shape child_shape = parent.shape();
    child_shape[axis] = nslots;
    NdBuffer child(child_shape);

    std::int64_t outer = 1, tail = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= parent.shape()[d];
    for (std::size_t d = axis + 1; d < parent.shape().size(); ++d) tail *= parent.shape()[d];

    std::vector<double> running(static_cast<std::size_t>(tail));
    for (std::int64_t o = 0; o < outer; ++o) {
        std::fill(running.begin(), running.end(), 0.0);
        const double* src = parent.data().data() + o * raw_len * tail;
        double* dst = child.data().data() + o * nslots * tail;
        std::int64_t s = 0;
        std::int64_t next_boundary = s < nslots ? slot_boundary(grid, axis, stride[axis], s) : -1;
        for (std::int64_t x = 0; x < raw_len; ++x) {
            const double* row = src + x * tail;
            for (std::int64_t t = 0; t < tail; ++t) running[static_cast<std::size_t>(t)] += row[t];
            if (x == next_boundary) {
                std::memcpy(dst + s * tail, running.data(),
                            static_cast<std::size_t>(tail) * sizeof(double));
                ++s;
                if (s >= nslots) break;
                next_boundary = slot_boundary(grid, axis, stride[axis], s);
            }
        }
    }
    return child;
}

// ============================================================================
// Generation
// ============================================================================

namespace {

struct VariantBuffers {
    NdBuffer unweighted;
    NdBuffer weighted;
    NdBuffer weights;
};

// Accumulates one single-dimension subset directly from the raw chunks:
// a running cross-section plane snapshotted into slots at stride boundaries.
VariantBuffers accumulate_base(Store& store, const Array& raw, const ChunkGrid& grid,
                               const WeightSource& wsrc, std::size_t axis,
                               std::int64_t stride, const VariantSet& variants)
{
    const std::size_t nd = grid.ndim();
    const auto fill = raw.meta().fill_as_double();
    const auto nslots = slot_count(grid, axis, stride);

    // Cross-section running sums; an empty shape is a scalar (1-d grids).
    Shape plane_shape;
    for (std::size_t d = 0; d < nd; ++d)
        if (d != axis) plane_shape.push_back(grid.shape()[d]);

    Shape out_shape = grid.shape();
    out_shape[axis] = nslots;

    VariantBuffers out;
    NdBuffer plane_uw, plane_w, plane_wt;
    if (variants.unweighted) {
        out.unweighted = NdBuffer(out_shape);
        plane_uw = NdBuffer(plane_shape);
    }
    if (variants.weighted) {
        out.weighted = NdBuffer(out_shape);
        plane_w = NdBuffer(plane_shape);
    }
    if (variants.weights) {
        out.weights = NdBuffer(out_shape);
        plane_wt = NdBuffer(plane_shape);
    }

    // Plane strides indexed by raw axis (stride 0 for the accumulated axis).
    Shape plane_stride(nd, 0);
    {
        std::int64_t s = 1;
        for (std::size_t d = nd; d-- > 0;) {
            if (d == axis) continue;
            plane_stride[d] = s;
            s *= grid.shape()[d];
        }
    }

    std::optional<Array> weight_array;
    if (wsrc.kind() == WeightSource::Kind::full_array)
        weight_array = Array::open(store, wsrc.full_array_name());
    const auto& vecs = wsrc.vectors();

    const auto chunk_counts = grid.chunk_counts();
    Shape inner_counts;
    for (std::size_t d = 0; d < nd; ++d)
        if (d != axis) inner_counts.push_back(chunk_counts[d]);

    const Shape& cs = grid.chunk_shape();
    Shape chunk_strides(nd);
    {
        std::int64_t s = 1;
        for (std::size_t d = nd; d-- > 0;) {
            chunk_strides[d] = s;
            s *= cs[d];
        }
    }

    std::int64_t next_slot = 0;
    for (std::int64_t cd = 0; cd < chunk_counts[axis] && next_slot < nslots; ++cd) {
        for_each_index(inner_counts, [&](const Index& inner) {
            Index chunk(nd);
            for (std::size_t d = 0, i = 0; d < nd; ++d)
                chunk[d] = (d == axis) ? cd : inner[i++];

            const auto block = raw.read_chunk_f64(chunk);
            std::vector<double> wblock;
            if (weight_array) wblock = weight_array->read_chunk_f64(chunk);

            const auto origin = grid.chunk_origin(chunk);
            const auto extent = grid.chunk_extent(chunk);
            const std::size_t last = nd - 1;

            Shape row_extent(extent.begin(), extent.end() - 1);
            for_each_index(row_extent, [&](const Index& row) {
                std::int64_t coff = 0;    // chunk-local flat offset of the row start
                std::int64_t poff = 0;    // plane offset contribution of leading axes
                double wrow = 1.0;
                for (std::size_t d = 0; d < last; ++d) {
                    coff += row[d] * chunk_strides[d];
                    const auto x = origin[d] + row[d];
                    poff += x * plane_stride[d]; // stride 0 on the accumulated axis
                    auto it = vecs.find(d);
                    if (it != vecs.end()) wrow *= it->second[static_cast<std::size_t>(x)];
                }
                const auto it_last = vecs.find(last);
                const auto xlast0 = origin[last];
                for (std::int64_t i = 0; i < extent[last]; ++i) {
                    const double v = block[static_cast<std::size_t>(coff + i)];
                    const bool valid = !is_fill_element(v, fill) && !std::isnan(v);
                    if (!valid) continue;
                    double w = 1.0;
                    if (weight_array)
                        w = wblock[static_cast<std::size_t>(coff + i)];
                    else if (!vecs.empty())
                        w = wrow * (it_last != vecs.end()
                                        ? it_last->second[static_cast<std::size_t>(xlast0 + i)]
                                        : 1.0);
                    const auto p = poff + (xlast0 + i) * plane_stride[last];
                    if (variants.unweighted) plane_uw[p] += v;
                    if (variants.weighted) plane_w[p] += v * w;
                    if (variants.weights) plane_wt[p] += w;
                }
            });
        });

        if ((cd + 1) % stride == 0) {
            auto snapshot = [&](const NdBuffer& plane, NdBuffer& dst) {
                const std::size_t nrest = plane.ndim();
                Index ctr(nrest, 0);
                std::int64_t off = next_slot * dst.stride(axis);
                const auto n = plane.size();
                for (std::int64_t p = 0; p < n; ++p) {
                    dst[off] = plane[p];
                    for (std::size_t r = nrest; r-- > 0;) {
                        const std::size_t oa = r < axis ? r : r + 1;
                        off += dst.stride(oa);
                        if (++ctr[r] < plane.shape()[r]) break;
                        off -= plane.shape()[r] * dst.stride(oa);
                        ctr[r] = 0;
                        if (r == 0) break;
                    }
                }
            };
            if (variants.unweighted) snapshot(plane_uw, out.unweighted);
            if (variants.weighted) snapshot(plane_w, out.weighted);
            if (variants.weights) snapshot(plane_wt, out.weights);
            ++next_slot;
        }
    }
    return out;
}

std::vector<double> copy_block(const NdBuffer& buf, const Index& origin, const Shape& extent)
{
    std::vector<double> out(static_cast<std::size_t>(product(extent)));
    const std::size_t nd = extent.size();
    const auto row_len = static_cast<std::size_t>(extent[nd - 1]);
    Shape row_extent(extent.begin(), extent.end() - 1);
    std::size_t dst = 0;
    for_each_index(row_extent, [&](const Index& row) {
        std::int64_t src = origin[nd - 1];
        for (std::size_t d = 0; d + 1 < nd; ++d) src += (origin[d] + row[d]) * buf.stride(d);
        std::memcpy(out.data() + dst, buf.data().data() + src, row_len * sizeof(double));
        dst += row_len;
    });
    return out;
}

void write_dataset(Store& store, const std::string& path, const PlannedDataset& ds,
                   const NdBuffer& buf, Codec codec, int level)
{
    ArrayMeta meta;
    meta.shape = ds.shape;
    meta.chunks = ds.chunks;
    meta.dtype = DType::f64;
    meta.fill_value = 0.0;
    meta.codec = codec;
    meta.codec_level = level;
    auto arr = Array::create(store, path, meta);
    write_attrs(store, path, ds.attrs.to_json());

    Shape grid_shape = arr.chunk_grid_shape();
    for_each_index(grid_shape, [&](const Index& chunk) {
        Index origin(ds.shape.size());
        for (std::size_t d = 0; d < origin.size(); ++d) origin[d] = chunk[d] * ds.chunks[d];
        auto extent = arr.chunk_extent(chunk);
        arr.write_chunk_f64(chunk, copy_block(buf, origin, extent));
    });
}

} // namespace

Plan generate(Store& store, const std::string& var, const AccumulationSpec& spec,
              const WeightSource& wsrc)
{
    const auto grid = grid_of(store, var);
    auto p = plan(grid, var, spec);
    auto raw = Array::open(store, var);
    const auto weights = wsrc.resolve(store, grid);
    const Codec codec = spec.codec.value_or(raw.meta().codec);

    write_group_marker(store, p.group);
    write_attrs(store, p.group, p.group_attrs.to_json());

    // Chain cache: lower-dimension blocks are reused for higher subsets.
    std::map<std::pair<std::vector<std::size_t>, int>, NdBuffer> cache;
    auto cached = [&](const DimSubset& s, DatasetKind k) -> NdBuffer& {
        return cache[{s.axes(), static_cast<int>(k)}];
    };
    auto has = [&](const DimSubset& s, DatasetKind k) {
        return cache.count({s.axes(), static_cast<int>(k)}) > 0;
    };

    std::vector<DatasetKind> kinds;
    if (spec.variants.unweighted) kinds.push_back(DatasetKind::unweighted);
    if (spec.variants.weighted) kinds.push_back(DatasetKind::weighted);
    if (spec.variants.weights) kinds.push_back(DatasetKind::weights);

    std::function<void(const DimSubset&)> ensure = [&](const DimSubset& s) {
        if (has(s, kinds.front())) return;
        if (s.size() == 1) {
            auto bufs = accumulate_base(store, raw, grid, weights, s.axes()[0],
                                        spec.stride[s.axes()[0]], spec.variants);
            if (spec.variants.unweighted)
                cached(s, DatasetKind::unweighted) = std::move(bufs.unweighted);
            if (spec.variants.weighted)
                cached(s, DatasetKind::weighted) = std::move(bufs.weighted);
            if (spec.variants.weights)
                cached(s, DatasetKind::weights) = std::move(bufs.weights);
            return;
        }
        auto axes = s.axes();
        const std::size_t last = axes.back();
        axes.pop_back();
        const auto parent = DimSubset::of_axes(axes);
        ensure(parent);
        for (auto k : kinds)
            cached(s, k) = extend_accumulation(grid, spec.stride, cached(parent, k), parent, last);
    };

    for (const auto& ds : p.datasets) {
        ensure(ds.subset);
        write_dataset(store, p.group + "/" + ds.name, ds, cached(ds.subset, ds.kind), codec,
                      spec.codec_level);
    }
    return p;
}

// ============================================================================
// Storage accounting
// ============================================================================

StorageAccounting account_storage(const Store& store, const std::string& var)
{
    auto& mutable_store = const_cast<Store&>(store);
    StorageAccounting acc;

    auto is_metadata = [](const std::string& leaf) {
        return !leaf.empty() && leaf.front() == '.';
    };
    auto tally = [&](const std::string& array_name, std::int64_t& elements,
                     std::int64_t& ubytes, std::int64_t& sbytes) {
        auto arr = Array::open(mutable_store, array_name);
        elements += product(arr.meta().shape);
        ubytes += product(arr.meta().shape) *
                  static_cast<std::int64_t>(dtype_size(arr.meta().dtype));
        for (const auto& key : store.list(array_name + "/")) {
            auto leaf = key.substr(array_name.size() + 1);
            if (is_metadata(leaf)) continue;
            sbytes += static_cast<std::int64_t>(store.size(key));
        }
    };

    tally(var, acc.raw_elements, acc.raw_bytes_uncompressed, acc.raw_bytes_stored);

    const std::string group = var + "_accumulation_group";
    for (const auto& key : store.list(group + "/")) {
        const std::string suffix = "/.zarray";
        if (key.size() > suffix.size() &&
            key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
            auto name = key.substr(0, key.size() - suffix.size());
            tally(name, acc.acc_elements, acc.acc_bytes_uncompressed, acc.acc_bytes_stored);
        }
    }
    return acc;
}

} // namespace zacc
