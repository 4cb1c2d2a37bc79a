#pragma once

#include "zacc/store.hpp"
#include "zacc/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace zacc {

using json = nlohmann::json;

// ============================================================================
// Element types and codecs
// ============================================================================

enum class DType { f32, f64, i32, i64 };

std::size_t dtype_size(DType t);
std::string dtype_to_zarr(DType t);      // "<f4", "<f8", "<i4", "<i8"
DType dtype_from_zarr(const std::string& s);
DType dtype_from_name(const std::string& s); // "f32"/"float32"/...

enum class Codec { none, deflate };

// ============================================================================
// ArrayMeta: the ".zarray" document
// ============================================================================

struct ArrayMeta {
    Shape shape;
    Shape chunks;
    DType dtype = DType::f64;
    json fill_value;            // number, null, or "NaN"
    Codec codec = Codec::none;
    int codec_level = 6;

    json to_zarray() const;
    static ArrayMeta from_zarray(const json& j);

    /// Fill value as double; nullopt when fill is null (undefined).
    std::optional<double> fill_as_double() const;

    std::int64_t chunk_volume() const { return product(chunks); }
};

// ============================================================================
// Array: chunk and attribute I/O over a Store
// ============================================================================

/// One stored array ("var" or "group/name"). Chunks are stored full-size in
/// row-major order under dot-joined coordinate keys; edge chunks are padded
/// with the fill value on write and returned padded on read.
class Array {
public:
    static Array create(Store& store, const std::string& name, ArrayMeta meta);
    static Array open(Store& store, const std::string& name);
    static bool exists(const Store& store, const std::string& name);

    const std::string& name() const { return name_; }
    const ArrayMeta& meta() const { return meta_; }
    Shape chunk_grid_shape() const;

    std::string chunk_key(const Index& chunk_coord) const;
    bool chunk_exists(const Index& chunk_coord) const;

    /// Decoded full-size chunk as float64, padded per fill_value. An absent
    /// chunk reads as all-fill; absent with null fill raises DataError.
    std::vector<double> read_chunk_f64(const Index& chunk_coord) const;

    /// `block` must hold the trimmed extent of the chunk (edge chunks
    /// trimmed), row-major; it is padded to full chunk size for storage.
    void write_chunk_f64(const Index& chunk_coord, const std::vector<double>& block);

    /// Raw little-endian element bytes of a full-size chunk.
    std::vector<std::uint8_t> read_chunk_raw(const Index& chunk_coord) const;
    void write_chunk_raw(const Index& chunk_coord, const std::vector<std::uint8_t>& bytes);

    /// Extent of a chunk trimmed to the array edge.
    Shape chunk_extent(const Index& chunk_coord) const;

private:
    Array(Store& store, std::string name, ArrayMeta meta);
    void check_chunk_coord(const Index& chunk_coord) const;

    Store* store_ = nullptr;
    std::string name_;
    ArrayMeta meta_;
};

// ============================================================================
// Attribute documents and group markers
// ============================================================================

/// Reads "{node}/.zattrs" (accepting the ".zattr" spelling as well); the root
/// node is the empty string. Missing documents read as {}.
json read_attrs(const Store& store, const std::string& node);
void write_attrs(Store& store, const std::string& node, const json& attrs);

void write_group_marker(Store& store, const std::string& node);

// Codec transforms (exposed for tests).
std::string deflate_bytes(std::string_view raw, int level);
std::string inflate_bytes(std::string_view compressed, std::size_t expected_size);

/// Whole 1-d array as float64.
std::vector<double> read_1d_f64(Store& store, const std::string& name);

inline bool is_fill_element(double v, const std::optional<double>& fill)
{
    if (!fill) return false;
    if (std::isnan(*fill)) return std::isnan(v);
    return v == *fill;
}

} // namespace zacc
