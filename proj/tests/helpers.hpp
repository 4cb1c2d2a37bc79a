#pragma once

#include "zacc/accumulate.hpp"
#include "zacc/ndbuf.hpp"
#include "zacc/store.hpp"

#include <functional>
#include <vector>

namespace zacc::testing {

/// Store holding one variable with the given elements (row-major).
inline void put_variable(Store& store, const std::string& var,
                         const std::vector<std::string>& dims, const Shape& shape,
                         const Shape& chunks, const std::vector<double>& values,
                         json fill = -9999.0, DType dtype = DType::f64)
{
    ChunkGrid grid(dims, shape, chunks);
    ArrayMeta meta;
    meta.shape = shape;
    meta.chunks = chunks;
    meta.dtype = dtype;
    meta.fill_value = fill;
    auto arr = Array::create(store, var, meta);
    write_attrs(store, var, json{{kArrayDimensions, dims}});

    NdBuffer buf(shape);
    buf.data() = values;
    for_each_index(grid.chunk_counts(), [&](const Index& chunk) {
        const auto origin = grid.chunk_origin(chunk);
        const auto extent = grid.chunk_extent(chunk);
        std::vector<double> block;
        block.reserve(static_cast<std::size_t>(product(extent)));
        for_each_index(extent, [&](const Index& local) {
            Index idx(shape.size());
            for (std::size_t d = 0; d < shape.size(); ++d) idx[d] = origin[d] + local[d];
            block.push_back(buf.at(idx));
        });
        arr.write_chunk_f64(chunk, block);
    });
}

/// Whole array as a dense buffer (valid regions of every chunk).
inline NdBuffer read_full(Store& store, const std::string& name)
{
    auto arr = Array::open(store, name);
    std::vector<std::string> dims;
    for (std::size_t d = 0; d < arr.meta().shape.size(); ++d)
        dims.push_back("d" + std::to_string(d));
    ChunkGrid grid(dims, arr.meta().shape, arr.meta().chunks);
    NdBuffer out(arr.meta().shape);

    for_each_index(grid.chunk_counts(), [&](const Index& chunk) {
        const auto block = arr.read_chunk_f64(chunk);
        const auto origin = grid.chunk_origin(chunk);
        const auto extent = grid.chunk_extent(chunk);
        Shape strides(extent.size());
        std::int64_t s = 1;
        for (std::size_t d = extent.size(); d-- > 0;) {
            strides[d] = s;
            s *= arr.meta().chunks[d];
        }
        for_each_index(extent, [&](const Index& local) {
            Index idx(extent.size());
            std::int64_t flat = 0;
            for (std::size_t d = 0; d < extent.size(); ++d) {
                idx[d] = origin[d] + local[d];
                flat += local[d] * strides[d];
            }
            out.at(idx) = block[static_cast<std::size_t>(flat)];
        });
    });
    return out;
}

/// Direct masked/weighted sum over an index box [lo, hi), the reference for
/// every accumulation and prefix check.
inline double brute_box_sum(const NdBuffer& raw, const std::optional<double>& fill,
                            const std::function<double(const Index&)>& weight,
                            const Index& lo, const Index& hi)
{
    double sum = 0.0;
    for_each_index(lo, hi, [&](const Index& idx) {
        const double v = raw.at(idx);
        if (is_fill_element(v, fill)) return;
        sum += v * weight(idx);
    });
    return sum;
}

inline std::function<double(const Index&)> unit_weight()
{
    return [](const Index&) { return 1.0; };
}

} // namespace zacc::testing
