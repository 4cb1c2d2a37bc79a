#pragma once

#include "zacc/array.hpp"
#include "zacc/grid.hpp"
#include "zacc/meta.hpp"
#include "zacc/ndbuf.hpp"
#include "zacc/store.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zacc {

// ============================================================================
// Slot geometry
// ============================================================================
//
// Accumulation slots sit at chunk boundaries: slot s (0-based) along a
// dimension with stride k stores the inclusive prefix through the last
// element of chunk (s+1)*k - 1. A trailing chunk range shorter than the
// stride gets no slot; queries fall back to raw scans there.

std::int64_t slot_count(const ChunkGrid& grid, std::size_t axis, std::int64_t stride);

/// Inclusive element index covered by slot s (clipped to the array edge).
std::int64_t slot_boundary(const ChunkGrid& grid, std::size_t axis, std::int64_t stride,
                           std::int64_t s);

/// Largest slot whose boundary is <= endpoint, or -1 when none precedes it.
std::int64_t slot_at_or_before(const ChunkGrid& grid, std::size_t axis, std::int64_t stride,
                               std::int64_t endpoint);

// ============================================================================
// Weight sources
// ============================================================================

/// Per-element weights: unit, a multiplicative broadcast of per-dimension
/// vectors, or a full-shape array stored alongside the variable. Weights are
/// forced to 0 wherever the raw value equals the fill value.
class WeightSource {
public:
    enum class Kind { unit, vectors, full_array };

    static WeightSource unit() { return WeightSource(); }
    static WeightSource dim_vectors(std::map<std::size_t, std::vector<double>> vecs);
    /// Per-dimension vectors stored as 1-d arrays in the store.
    static WeightSource dim_arrays(std::map<std::size_t, std::string> names);
    /// A full-shape weight array; must match the variable's shape and chunks.
    static WeightSource full_array(std::string name);

    Kind kind() const { return kind_; }
    const std::map<std::size_t, std::vector<double>>& vectors() const { return vectors_; }
    const std::map<std::size_t, std::string>& vector_names() const { return vector_names_; }
    const std::string& full_array_name() const { return full_name_; }

    /// Loads named vectors from the store; validates lengths and sign.
    WeightSource resolve(const Store& store, const ChunkGrid& grid) const;

private:
    Kind kind_ = Kind::unit;
    std::map<std::size_t, std::vector<double>> vectors_;
    std::map<std::size_t, std::string> vector_names_;
    std::string full_name_;
};

// ============================================================================
// Accumulation planning
// ============================================================================

struct VariantSet {
    bool unweighted = false;
    bool weighted = true;
    bool weights = true;

    bool any() const { return unweighted || weighted || weights; }
};

struct AccumulationSpec {
    std::vector<DimSubset> subsets;    // canonicalized on plan()
    Shape stride;                      // per grid dimension, >= 1 where accumulated
    VariantSet variants;
    std::optional<Shape> acc_chunks;   // per-dim cap on accumulation array chunks;
                                       // default one chunk per dataset
    std::optional<Codec> codec;        // default: the raw variable's codec
    int codec_level = 6;
};

struct PlannedDataset {
    std::string name;       // relative to the accumulation group
    DimSubset subset;
    DatasetKind kind;
    DatasetAttrs attrs;
    Shape shape;            // slot counts along accumulated dims, raw lengths else
    Shape chunks;
};

struct Plan {
    std::string group;     // "{var}_accumulation_group"
    std::vector<PlannedDataset> datasets;
    GroupAttrs group_attrs;

    std::int64_t element_count() const;
    const PlannedDataset* find(const DimSubset& subset, DatasetKind kind) const;
};

/// Deterministic dataset names: "acc_" / "acc_uw_" / "acc_wt_" plus dimension
/// abbreviations (three leading characters for names longer than four, full
/// names on abbreviation collisions).
std::string dataset_name(const ChunkGrid& grid, const DimSubset& subset, DatasetKind kind);

/// Lays out one dataset per requested subset and configured variant and the
/// group attribute tree. Throws CapabilityError when a stride exceeds the
/// chunk count along an accumulated dimension (zero slots).
Plan plan(const ChunkGrid& grid, const std::string& var, const AccumulationSpec& spec);

// ============================================================================
// Generation
// ============================================================================

/// Builds the grid of a stored variable from its .zarray shape/chunks and the
/// "_ARRAY_DIMENSIONS" attribute.
ChunkGrid grid_of(const Store& store, const std::string& var);

/// Extends an accumulated block over `subset` to `subset + {axis}`: a running
/// prefix along the (still raw) axis sampled at that axis's slot boundaries.
/// Output is identical to accumulating over the larger subset directly.
NdBuffer extend_accumulation(const ChunkGrid& grid, const Shape& stride,
                             const NdBuffer& parent, const DimSubset& parent_subset,
                             std::size_t axis);

/// Generates every planned accumulation dataset of `var` plus the group
/// attributes. Accumulation elements are float64; fill-value elements of the
/// raw data contribute zero to data and weight sums. Two runs over the same
/// inputs produce byte-identical stores.
Plan generate(Store& store, const std::string& var, const AccumulationSpec& spec,
              const WeightSource& wsrc = WeightSource::unit());

// ============================================================================
// Storage accounting
// ============================================================================

struct StorageAccounting {
    std::int64_t raw_elements = 0;
    std::int64_t raw_bytes_uncompressed = 0;
    std::int64_t raw_bytes_stored = 0;
    std::int64_t acc_elements = 0;
    std::int64_t acc_bytes_uncompressed = 0;
    std::int64_t acc_bytes_stored = 0;

    double uncompressed_ratio() const
    {
        return static_cast<double>(acc_bytes_uncompressed) /
               static_cast<double>(raw_bytes_uncompressed);
    }
    double stored_ratio() const
    {
        return static_cast<double>(acc_bytes_stored) / static_cast<double>(raw_bytes_stored);
    }
};

/// Measures a generated store: element counts from dataset shapes, stored
/// bytes from the store keys.
StorageAccounting account_storage(const Store& store, const std::string& var);

} // namespace zacc
