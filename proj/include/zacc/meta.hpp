#pragma once

#include "zacc/array.hpp"
#include "zacc/grid.hpp"
#include "zacc/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zacc {

// Reserved keys of the accumulation group schema.
inline constexpr const char* kDataUnweighted = "_DATA_UNWEIGHTED";
inline constexpr const char* kDataWeighted = "_DATA_WEIGHTED";
inline constexpr const char* kWeights = "_WEIGHTS";
inline constexpr const char* kAccumulationGroup = "_ACCUMULATION_GROUP";
inline constexpr const char* kArrayDimensions = "_ARRAY_DIMENSIONS";
inline constexpr const char* kAccumulationStride = "_ACCUMULATION_STRIDE";

enum class DatasetKind { unweighted, weighted, weights };

// ============================================================================
// Group attributes: the nested "_ACCUMULATION_GROUP" tree
// ============================================================================

/// Typed model of the accumulation group attribute document. Children are
/// keyed by dimension name; along any path the names follow the grid's
/// canonical dimension order. An empty node means no accumulation exists
/// for that dimension combination.
struct GroupAttrs {
    struct Node {
        std::optional<std::string> data_unweighted;
        std::optional<std::string> data_weighted;
        std::optional<std::string> weights;
        std::map<std::string, Node> children;

        bool empty_entry() const
        {
            return !data_unweighted && !data_weighted && !weights;
        }
        bool operator==(const Node&) const = default;
    };

    Node root; // children of the "_ACCUMULATION_GROUP" key

    json to_json() const;

    /// Parses a group attribute document. When `dim_order` is given, nested
    /// names must be known dimensions in strictly increasing grid order;
    /// violations raise SchemaError.
    static GroupAttrs from_json(const json& doc,
                                const std::vector<std::string>* dim_order = nullptr);

    bool operator==(const GroupAttrs&) const = default;
};

/// Walks the tree along `dims` (canonical order) and returns the entry of the
/// requested kind, or nullopt when the node is absent, empty, or lacks it.
std::optional<std::string> lookup_dataset(const GroupAttrs& attrs,
                                          const std::vector<std::string>& dims,
                                          DatasetKind kind);

// ============================================================================
// Per-dataset attributes
// ============================================================================

/// "_ARRAY_DIMENSIONS" + "_ACCUMULATION_STRIDE": equal-length, strides are
/// nonnegative chunk counts, 0 marking a dimension the accumulation does not
/// run along.
struct DatasetAttrs {
    std::vector<std::string> array_dimensions;
    std::vector<std::int64_t> stride;

    json to_json() const;
    static DatasetAttrs from_json(const json& doc);

    bool operator==(const DatasetAttrs&) const = default;
};

/// Stride paired with `dim`; raises BoundsError when the name is absent.
std::int64_t lookup_stride(const DatasetAttrs& attrs, const std::string& dim);

// ============================================================================
// Schema validation
// ============================================================================

enum class SchemaKind { group, dataset };

/// Checks a parsed attribute document against the accumulation schemas plus
/// the prose rules (equal lengths, nonnegative strides). Returns violations;
/// empty means valid.
std::vector<std::string> validate(const json& doc, SchemaKind kind);

/// Human-readable name of the shipped schema fixture file.
std::string schema_fixture_name(SchemaKind kind);

} // namespace zacc
