#include "zacc/array.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

static_assert(std::endian::native == std::endian::little,
              "chunk codecs assume a little-endian host");

namespace zacc {

// ============================================================================
// Element types
// ============================================================================

std::size_t dtype_size(DType t)
{
    switch (t) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::i32: return 4;
    case DType::i64: return 8;
    }
    return 8;
}

std::string dtype_to_zarr(DType t)
{
    switch (t) {
    case DType::f32: return "<f4";
    case DType::f64: return "<f8";
    case DType::i32: return "<i4";
    case DType::i64: return "<i8";
    }
    return "<f8";
}

DType dtype_from_zarr(const std::string& s)
{
    if (s == "<f4" || s == "|f4") return DType::f32;
    if (s == "<f8" || s == "|f8") return DType::f64;
    if (s == "<i4" || s == "|i4") return DType::i32;
    if (s == "<i8" || s == "|i8") return DType::i64;
    throw FormatError("unsupported dtype: " + s);
}

DType dtype_from_name(const std::string& s)
{
    if (s == "f32" || s == "float32") return DType::f32;
    if (s == "f64" || s == "float64") return DType::f64;
    if (s == "i32" || s == "int32") return DType::i32;
    if (s == "i64" || s == "int64") return DType::i64;
    return dtype_from_zarr(s);
}

// ============================================================================
// zlib codec
// ============================================================================

std::string deflate_bytes(std::string_view raw, int level)
{
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string out(bound, '\0');
    int rc = compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                       reinterpret_cast<const Bytef*>(raw.data()),
                       static_cast<uLong>(raw.size()), level);
    if (rc != Z_OK) throw FormatError("deflate failed");
    out.resize(bound);
    return out;
}

std::string inflate_bytes(std::string_view compressed, std::size_t expected_size)
{
    std::string out(expected_size, '\0');
    uLongf len = static_cast<uLongf>(expected_size);
    int rc = uncompress(reinterpret_cast<Bytef*>(out.data()), &len,
                        reinterpret_cast<const Bytef*>(compressed.data()),
                        static_cast<uLong>(compressed.size()));
    if (rc != Z_OK || len != expected_size) throw FormatError("inflate failed");
    return out;
}

// ============================================================================
// ArrayMeta
// ============================================================================

json ArrayMeta::to_zarray() const
{
    json j;
    j["zarr_format"] = 2;
    j["shape"] = shape;
    j["chunks"] = chunks;
    j["dtype"] = dtype_to_zarr(dtype);
    j["fill_value"] = fill_value.is_null() ? json(nullptr) : fill_value;
    j["order"] = "C";
    j["filters"] = nullptr;
    j["dimension_separator"] = ".";
    if (codec == Codec::none)
        j["compressor"] = nullptr;
    else
        j["compressor"] = {{"id", "zlib"}, {"level", codec_level}};
    return j;
}

ArrayMeta ArrayMeta::from_zarray(const json& j)
{
    ArrayMeta m;
    try {
        m.shape = j.at("shape").get<Shape>();
        m.chunks = j.at("chunks").get<Shape>();
        m.dtype = dtype_from_zarr(j.at("dtype").get<std::string>());
        m.fill_value = j.value("fill_value", json(nullptr));
        if (j.value("order", "C") != "C")
            throw FormatError("only row-major ('C') order is supported");
        auto comp = j.value("compressor", json(nullptr));
        if (comp.is_null()) {
            m.codec = Codec::none;
        } else {
            if (comp.value("id", "") != "zlib")
                throw FormatError("unsupported compressor: " + comp.dump());
            m.codec = Codec::deflate;
            m.codec_level = comp.value("level", 6);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed .zarray document: ") + e.what());
    }
    if (m.shape.size() != m.chunks.size() || m.shape.empty())
        throw FormatError(".zarray: shape/chunks rank mismatch");
    return m;
}

std::optional<double> ArrayMeta::fill_as_double() const
{
    if (fill_value.is_null()) return std::nullopt;
    if (fill_value.is_number()) return fill_value.get<double>();
    if (fill_value.is_string()) {
        auto s = fill_value.get<std::string>();
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    }
    throw FormatError("unsupported fill_value: " + fill_value.dump());
}

// ============================================================================
// Array
// ============================================================================

namespace {

std::string dump_doc(const json& j)
{
    return j.dump(4) + "\n";
}

template <typename T>
void convert_to_f64(const std::uint8_t* src, double* dst, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, src + i * sizeof(T), sizeof(T));
        dst[i] = static_cast<double>(v);
    }
}

template <typename T>
void convert_from_f64(const double* src, std::uint8_t* dst, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        T v = static_cast<T>(src[i]);
        std::memcpy(dst + i * sizeof(T), &v, sizeof(T));
    }
}

} // namespace

Array::Array(Store& store, std::string name, ArrayMeta meta)
    : store_(&store), name_(std::move(name)), meta_(std::move(meta))
{
}

Array Array::create(Store& store, const std::string& name, ArrayMeta meta)
{
    store.put(name + "/.zarray", dump_doc(meta.to_zarray()));
    return Array(store, name, std::move(meta));
}

Array Array::open(Store& store, const std::string& name)
{
    auto doc = store.get(name + "/.zarray");
    if (!doc) throw DataError("array not found: " + name);
    json j;
    try {
        j = json::parse(*doc);
    } catch (const json::exception& e) {
        throw FormatError(std::string("unparseable .zarray for ") + name + ": " + e.what());
    }
    return Array(store, name, ArrayMeta::from_zarray(j));
}

bool Array::exists(const Store& store, const std::string& name)
{
    return store.contains(name + "/.zarray");
}

Shape Array::chunk_grid_shape() const
{
    Shape out(meta_.shape.size());
    for (std::size_t d = 0; d < out.size(); ++d)
        out[d] = ceil_div(meta_.shape[d], meta_.chunks[d]);
    return out;
}

std::string Array::chunk_key(const Index& chunk_coord) const
{
    std::string key = name_ + "/";
    for (std::size_t d = 0; d < chunk_coord.size(); ++d) {
        if (d) key += '.';
        key += std::to_string(chunk_coord[d]);
    }
    return key;
}

void Array::check_chunk_coord(const Index& chunk_coord) const
{
    auto grid = chunk_grid_shape();
    if (chunk_coord.size() != grid.size())
        throw BoundsError("chunk coordinate rank mismatch for " + name_);
    for (std::size_t d = 0; d < grid.size(); ++d)
        if (chunk_coord[d] < 0 || chunk_coord[d] >= grid[d])
            throw BoundsError("chunk coordinate out of range for " + name_);
}

bool Array::chunk_exists(const Index& chunk_coord) const
{
    check_chunk_coord(chunk_coord);
    return store_->contains(chunk_key(chunk_coord));
}

Shape Array::chunk_extent(const Index& chunk_coord) const
{
    check_chunk_coord(chunk_coord);
    Shape out(meta_.shape.size());
    for (std::size_t d = 0; d < out.size(); ++d)
        out[d] = std::min(meta_.chunks[d], meta_.shape[d] - chunk_coord[d] * meta_.chunks[d]);
    return out;
}

std::vector<std::uint8_t> Array::read_chunk_raw(const Index& chunk_coord) const
{
    check_chunk_coord(chunk_coord);
    const auto volume = static_cast<std::size_t>(meta_.chunk_volume());
    const auto nbytes = volume * dtype_size(meta_.dtype);

    auto stored = store_->get(chunk_key(chunk_coord));
    if (!stored) {
        auto fill = meta_.fill_as_double();
        if (!fill)
            throw DataError("missing chunk with no fill_value: " + chunk_key(chunk_coord));
        std::vector<double> filled(volume, *fill);
        std::vector<std::uint8_t> out(nbytes);
        switch (meta_.dtype) {
        case DType::f32: convert_from_f64<float>(filled.data(), out.data(), volume); break;
        case DType::f64: std::memcpy(out.data(), filled.data(), nbytes); break;
        case DType::i32: convert_from_f64<std::int32_t>(filled.data(), out.data(), volume); break;
        case DType::i64: convert_from_f64<std::int64_t>(filled.data(), out.data(), volume); break;
        }
        return out;
    }

    store_->counter().record(stored->size());
    std::string raw;
    if (meta_.codec == Codec::deflate)
        raw = inflate_bytes(*stored, nbytes);
    else
        raw = std::move(*stored);
    if (raw.size() != nbytes)
        throw FormatError("chunk size mismatch for " + chunk_key(chunk_coord));

    std::vector<std::uint8_t> out(nbytes);
    std::memcpy(out.data(), raw.data(), nbytes);
    return out;
}

void Array::write_chunk_raw(const Index& chunk_coord, const std::vector<std::uint8_t>& bytes)
{
    check_chunk_coord(chunk_coord);
    const auto nbytes = static_cast<std::size_t>(meta_.chunk_volume()) * dtype_size(meta_.dtype);
    if (bytes.size() != nbytes)
        throw BoundsError("chunk byte size mismatch for " + chunk_key(chunk_coord));
    std::string_view view(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    if (meta_.codec == Codec::deflate) {
        auto packed = deflate_bytes(view, meta_.codec_level);
        store_->put(chunk_key(chunk_coord), packed);
    } else {
        store_->put(chunk_key(chunk_coord), view);
    }
}

std::vector<double> Array::read_chunk_f64(const Index& chunk_coord) const
{
    auto bytes = read_chunk_raw(chunk_coord);
    const auto volume = static_cast<std::size_t>(meta_.chunk_volume());
    std::vector<double> out(volume);
    switch (meta_.dtype) {
    case DType::f32: convert_to_f64<float>(bytes.data(), out.data(), volume); break;
    case DType::f64: std::memcpy(out.data(), bytes.data(), bytes.size()); break;
    case DType::i32: convert_to_f64<std::int32_t>(bytes.data(), out.data(), volume); break;
    case DType::i64: convert_to_f64<std::int64_t>(bytes.data(), out.data(), volume); break;
    }
    return out;
}

void Array::write_chunk_f64(const Index& chunk_coord, const std::vector<double>& block)
{
    const auto extent = chunk_extent(chunk_coord);
    if (static_cast<std::int64_t>(block.size()) != product(extent))
        throw BoundsError("block shape mismatch for " + chunk_key(chunk_coord));

    const auto volume = static_cast<std::size_t>(meta_.chunk_volume());
    std::vector<double> full(volume, meta_.fill_as_double().value_or(0.0));

    // Scatter the trimmed block into the padded chunk buffer.
    const auto& chunks = meta_.chunks;
    const std::size_t nd = chunks.size();
    Shape full_strides(nd), ext_strides(nd);
    std::int64_t fs = 1, es = 1;
    for (std::size_t d = nd; d-- > 0;) {
        full_strides[d] = fs;
        ext_strides[d] = es;
        fs *= chunks[d];
        es *= extent[d];
    }
    const std::int64_t rows = product(extent) / extent[nd - 1];
    Index idx(nd, 0);
    for (std::int64_t r = 0; r < rows; ++r) {
        std::int64_t src = 0, dst = 0;
        for (std::size_t d = 0; d + 1 < nd; ++d) {
            src += idx[d] * ext_strides[d];
            dst += idx[d] * full_strides[d];
        }
        std::memcpy(full.data() + dst, block.data() + src,
                    static_cast<std::size_t>(extent[nd - 1]) * sizeof(double));
        for (std::size_t d = nd - 1; d-- > 0;) {
            if (++idx[d] < extent[d]) break;
            idx[d] = 0;
        }
    }

    const auto nbytes = volume * dtype_size(meta_.dtype);
    std::vector<std::uint8_t> bytes(nbytes);
    switch (meta_.dtype) {
    case DType::f32: convert_from_f64<float>(full.data(), bytes.data(), volume); break;
    case DType::f64: std::memcpy(bytes.data(), full.data(), nbytes); break;
    case DType::i32: convert_from_f64<std::int32_t>(full.data(), bytes.data(), volume); break;
    case DType::i64: convert_from_f64<std::int64_t>(full.data(), bytes.data(), volume); break;
    }
    write_chunk_raw(chunk_coord, bytes);
}

// ============================================================================
// Attributes and group markers
// ============================================================================

json read_attrs(const Store& store, const std::string& node)
{
    const std::string base = node.empty() ? "" : node + "/";
    auto doc = store.get(base + ".zattrs");
    if (!doc) doc = store.get(base + ".zattr"); // legacy spelling
    if (!doc) return json::object();
    try {
        return json::parse(*doc);
    } catch (const json::exception& e) {
        throw FormatError("malformed attributes at " + base + ": " + e.what());
    }
}

void write_attrs(Store& store, const std::string& node, const json& attrs)
{
    const std::string base = node.empty() ? "" : node + "/";
    store.put(base + ".zattrs", dump_doc(attrs));
}

void write_group_marker(Store& store, const std::string& node)
{
    const std::string base = node.empty() ? "" : node + "/";
    store.put(base + ".zgroup", dump_doc({{"zarr_format", 2}}));
}

std::vector<double> read_1d_f64(Store& store, const std::string& name)
{
    auto arr = Array::open(store, name);
    if (arr.meta().shape.size() != 1)
        throw BoundsError("expected a 1-d array: " + name);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(arr.meta().shape[0]));
    const auto nchunks = arr.chunk_grid_shape()[0];
    for (std::int64_t c = 0; c < nchunks; ++c) {
        auto block = arr.read_chunk_f64({c});
        auto valid = arr.chunk_extent({c})[0];
        out.insert(out.end(), block.begin(), block.begin() + valid);
    }
    return out;
}

} // namespace zacc
