#pragma once

#include "zacc/accumulate.hpp"
#include "zacc/array.hpp"
#include "zacc/grid.hpp"
#include "zacc/meta.hpp"
#include "zacc/store.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace zacc {

// ============================================================================
// Results
// ============================================================================

/// An evaluated prefix sum at one endpoint, decomposed into per-subset
/// accumulation terms plus the raw residual term. The empty-subset term is a
/// pure raw-data scan of the residual hyperrectangle.
struct CompositePrefix {
    struct Term {
        DimSubset subset;                 // accumulation dims of this term
        std::string dataset;              // empty for the raw residual term
        Index slots;                      // slot per subset dim (subset order)
        std::vector<IndexRange> residual; // raw scan range per remaining agg dim
        double value = 0;
        double weight = 0;
    };

    Index endpoint; // per aggregated dim, -1 allowed
    std::vector<Term> terms;
    double value = 0;
    double weight = 0;
};

struct AggregateResult {
    std::vector<std::size_t> kept_axes;    // grid order
    std::vector<IndexRange> kept_bounds;   // evaluated window per kept axis
    Shape kept_extent;

    std::vector<double> average;           // fill at zero-weight positions
    std::vector<double> data_sum;
    std::vector<double> weight_sum;        // masked weight sums, or element
                                           // counts in unweighted mode
    double fill = 0;
    std::uint64_t zero_weight_cells = 0;
    FetchStats fetch;                      // chunk reads issued by this call
};

// ============================================================================
// QueryEngine
// ============================================================================

/// Read-only aggregation over a variable with a generated accumulation group.
/// Prefix sums are evaluated from accumulation slots plus residual raw
/// chunks and combined by inclusion-exclusion; I/O per query is proportional
/// to corner chunks, not region volume. Safe for concurrent use, though the
/// per-result fetch statistics come from the store's shared counter and
/// overlap under concurrent queries.
///
/// Weighted queries must use the same weight source the accumulation data
/// was generated with; residual raw scans re-derive weights from it.
class QueryEngine {
public:
    /// Throws CapabilityError when the accumulation group is missing.
    QueryEngine(Store& store, std::string var,
                const WeightSource& wsrc = WeightSource::unit());

    const ChunkGrid& grid() const { return grid_; }
    const std::string& variable() const { return var_; }

    /// Verifies a dataset exists for every non-empty subset of `agg` under
    /// the given weighting; throws CapabilityError naming the absent subset.
    void require_datasets(const DimSubset& agg, Weighting mode) const;

    /// Prefix sum through `endpoint` (inclusive; -1 = empty) along `agg`, at
    /// fixed kept-dimension indices. Raw residual scans touch only chunks
    /// between the last slot boundary and the endpoint.
    CompositePrefix prefix_sum(const DimSubset& agg, const Index& endpoint,
                               const Index& kept_index, Weighting mode) const;

    struct CompositeChunk {
        Index chunk;
        Shape extent;
        std::vector<double> values; // row-major over extent
    };

    /// Materializes the hybrid chunk of Figure-2 style reconstruction: each
    /// foremost element whose origin-dimension set lies inside `agg` carries
    /// the prefix sum through itself; other positions keep (masked) raw data.
    /// Summing the block over [origin, e] reproduces prefix_sum(e).
    CompositeChunk composite_chunk(const Index& chunk_coord, const DimSubset& agg,
                                   Weighting mode) const;

    /// Signed-corner combination of prefix sums over the query box, evaluated
    /// for every kept-dimension position (optionally restricted per axis).
    AggregateResult region_aggregate(const RegionQuery& q,
                                     const std::map<std::size_t, IndexRange>& kept_restrict = {}) const;

    /// Spatial average per step of `time_dim` within `time_range`. Empty
    /// spatial bounds mean the full (global) domain.
    AggregateResult area_averaged_series(const std::map<std::string, IndexRange>& spatial_bounds,
                                         const std::string& time_dim, IndexRange time_range,
                                         Weighting mode) const;

    /// Temporal average per cell of the (restricted) spatial domain.
    AggregateResult time_averaged_map(const std::string& time_dim, IndexRange time_range,
                                      const std::map<std::string, IndexRange>& spatial_bounds,
                                      Weighting mode) const;

private:
    struct OpenDataset {
        int id = 0;
        Array array;
        DatasetAttrs attrs;
    };
    struct Cache; // per-query chunk cache

    const OpenDataset* find_dataset(const DimSubset& subset, DatasetKind kind) const;
    double value_at(const Array& arr, int array_id, const Index& elem, Cache& cache) const;
    double weight_at(const Index& elem, Cache& cache) const;
    double masked_raw(const Index& elem, Cache& cache) const;

    /// Core prefix evaluation; `idx` must carry kept indices, agg positions
    /// are scratch. Returns {data, weight(weighted mode only)}.
    std::pair<double, double> eval_prefix(const DimSubset& agg,
                                          const std::vector<DimSubset>& lattice,
                                          const Index& endpoint, Index& idx, Weighting mode,
                                          Cache& cache, CompositePrefix* breakdown) const;

    Store* store_;
    std::string var_;
    ChunkGrid grid_;
    Array raw_;
    std::optional<double> fill_;
    GroupAttrs group_attrs_;
    std::map<std::pair<std::vector<std::size_t>, int>, OpenDataset> datasets_;
    Shape stride_; // per-dim, uniform across datasets (0 = never accumulated)
    WeightSource weights_;
    std::optional<Array> weight_array_;
    int weight_array_id_ = 0;
};

} // namespace zacc
