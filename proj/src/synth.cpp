#include "zacc/synth.hpp"

#include "zacc/grid.hpp"
#include "zacc/meta.hpp"
#include "zacc/ndbuf.hpp"

#include <cmath>

namespace zacc {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::string synth_weight_array(const SynthConfig& cfg)
{
    return "weights_" + cfg.dims[0];
}

void synth(Store& store, const SynthConfig& cfg)
{
    ChunkGrid grid(cfg.dims, cfg.shape, cfg.chunks); // validates the geometry

    write_group_marker(store, "");

    // Coordinate arrays per the Xarray layout convention.
    for (std::size_t d = 0; d < cfg.dims.size(); ++d) {
        ArrayMeta meta;
        meta.shape = {cfg.shape[d]};
        meta.chunks = {cfg.chunks[d]};
        meta.dtype = DType::f64;
        meta.fill_value = nullptr;
        meta.codec = cfg.codec;
        meta.codec_level = cfg.codec_level;
        auto arr = Array::create(store, cfg.dims[d], meta);
        write_attrs(store, cfg.dims[d], json{{kArrayDimensions, {cfg.dims[d]}}});
        const auto n = cfg.shape[d];
        for (std::int64_t c = 0; c * cfg.chunks[d] < n; ++c) {
            const auto len = std::min(cfg.chunks[d], n - c * cfg.chunks[d]);
            std::vector<double> block(static_cast<std::size_t>(len));
            for (std::int64_t i = 0; i < len; ++i)
                block[static_cast<std::size_t>(i)] = static_cast<double>(c * cfg.chunks[d] + i);
            arr.write_chunk_f64({c}, block);
        }
    }

    if (cfg.with_weights) {
        const auto n = cfg.shape[0];
        ArrayMeta meta;
        meta.shape = {n};
        meta.chunks = {cfg.chunks[0]};
        meta.dtype = DType::f64;
        meta.fill_value = nullptr;
        meta.codec = cfg.codec;
        meta.codec_level = cfg.codec_level;
        auto arr = Array::create(store, synth_weight_array(cfg), meta);
        write_attrs(store, synth_weight_array(cfg), json{{kArrayDimensions, {cfg.dims[0]}}});
        for (std::int64_t c = 0; c * cfg.chunks[0] < n; ++c) {
            const auto len = std::min(cfg.chunks[0], n - c * cfg.chunks[0]);
            std::vector<double> block(static_cast<std::size_t>(len));
            for (std::int64_t i = 0; i < len; ++i) {
                const double frac = (static_cast<double>(c * cfg.chunks[0] + i) + 0.5) /
                                    static_cast<double>(n);
                // Quantized to 2^-12 so weighted sums stay exact in float64
                // at desk scale; clamped away from zero.
                const double w = std::round(std::cos((frac - 0.5) * M_PI) * 4096.0) / 4096.0;
                block[static_cast<std::size_t>(i)] = std::max(w, 1.0 / 4096.0);
            }
            arr.write_chunk_f64({c}, block);
        }
    }

    ArrayMeta meta;
    meta.shape = cfg.shape;
    meta.chunks = cfg.chunks;
    meta.dtype = cfg.dtype;
    meta.fill_value = cfg.fill;
    meta.codec = cfg.codec;
    meta.codec_level = cfg.codec_level;
    auto arr = Array::create(store, cfg.var, meta);
    write_attrs(store, cfg.var, json{{kArrayDimensions, cfg.dims}});

    const std::size_t nd = cfg.dims.size();
    Shape elem_strides(nd);
    {
        std::int64_t s = 1;
        for (std::size_t d = nd; d-- > 0;) {
            elem_strides[d] = s;
            s *= cfg.shape[d];
        }
    }
    const auto gap_cut =
        static_cast<std::uint64_t>(cfg.gap_fraction * 4294967296.0); // of 2^32

    for_each_index(grid.chunk_counts(), [&](const Index& chunk) {
        const auto origin = grid.chunk_origin(chunk);
        const auto extent = grid.chunk_extent(chunk);
        std::vector<double> block(static_cast<std::size_t>(product(extent)));
        std::size_t pos = 0;
        Shape row_extent(extent.begin(), extent.end() - 1);
        for_each_index(row_extent, [&](const Index& row) {
            std::int64_t flat = 0;
            for (std::size_t d = 0; d + 1 < nd; ++d)
                flat += (origin[d] + row[d]) * elem_strides[d];
            flat += origin[nd - 1];
            for (std::int64_t i = 0; i < extent[nd - 1]; ++i, ++pos) {
                const auto h = splitmix64(cfg.seed ^ static_cast<std::uint64_t>(flat + i) *
                                                         0x2545f4914f6cdd1dULL);
                if (gap_cut > 0 && (h & 0xffffffffULL) < gap_cut) {
                    block[pos] = cfg.fill;
                } else {
                    // Uniform on [0, 10) over a 2^-10 lattice: element sums
                    // stay exactly representable in float64 at desk scale.
                    block[pos] = static_cast<double>((h >> 32) % 10240) / 1024.0;
                }
            }
        });
        arr.write_chunk_f64(chunk, block);
    });
}

} // namespace zacc
