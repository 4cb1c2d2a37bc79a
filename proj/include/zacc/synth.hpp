#pragma once

#include "zacc/array.hpp"
#include "zacc/store.hpp"

#include <string>
#include <vector>

namespace zacc {

// ============================================================================
// Synthetic store builder
// ============================================================================

/// Reproducible pseudo-random store: a chunked variable with optional fill
/// gaps, coordinate arrays, and a latitude-style weight vector along the
/// first dimension. Element values depend only on (seed, element index), so
/// identical configs produce byte-identical stores.
struct SynthConfig {
    std::string var = "data";
    std::vector<std::string> dims = {"lat", "lon", "time"};
    Shape shape;
    Shape chunks;
    DType dtype = DType::f32;
    double fill = -9999.0;
    Codec codec = Codec::none;
    int codec_level = 6;
    std::uint64_t seed = 0;
    double gap_fraction = 0.0; // probability an element holds the fill value
    bool with_weights = true;  // writes "weights_{dims[0]}"
};

void synth(Store& store, const SynthConfig& cfg);

/// Name of the weight vector array written by synth.
std::string synth_weight_array(const SynthConfig& cfg);

} // namespace zacc
