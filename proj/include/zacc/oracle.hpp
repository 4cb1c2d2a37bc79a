#pragma once

#include "zacc/accumulate.hpp"
#include "zacc/query.hpp"

#include <map>
#include <span>
#include <string>

namespace zacc {

// ============================================================================
// Brute-force reference engine
// ============================================================================

/// Answers the same queries as QueryEngine by scanning every raw element of
/// the region. Ground truth for equivalence tests and the baseline for
/// benchmark comparisons; desk scale only.
class BruteEngine {
public:
    BruteEngine(Store& store, std::string var,
                const WeightSource& wsrc = WeightSource::unit());

    const ChunkGrid& grid() const { return grid_; }

    /// Element ceiling guarding accidental full-scale scans.
    void set_element_ceiling(std::int64_t ceiling) { ceiling_ = ceiling; }

    AggregateResult region_aggregate(const RegionQuery& q,
                                     const std::map<std::size_t, IndexRange>& kept_restrict = {}) const;

    AggregateResult area_averaged_series(const std::map<std::string, IndexRange>& spatial_bounds,
                                         const std::string& time_dim, IndexRange time_range,
                                         Weighting mode) const;

    AggregateResult time_averaged_map(const std::string& time_dim, IndexRange time_range,
                                      const std::map<std::string, IndexRange>& spatial_bounds,
                                      Weighting mode) const;

private:
    Store* store_;
    std::string var_;
    ChunkGrid grid_;
    Array raw_;
    std::optional<double> fill_;
    WeightSource weights_;
    std::optional<Array> weight_array_;
    std::int64_t ceiling_ = std::int64_t{1} << 32;
};

// ============================================================================
// Accuracy metric
// ============================================================================

/// Root-mean-square deviation of candidate from baseline, normalized by the
/// baseline's value range. Undefined when the baseline is constant.
struct NrmsdReport {
    double nrmsd = 0;
    std::int64_t n = 0;
    double baseline_max = 0;
    double baseline_min = 0;
    bool defined = false;
};

NrmsdReport nrmsd(std::span<const double> baseline, std::span<const double> candidate);

} // namespace zacc
