#pragma once

#include "zacc/types.hpp"

#include <functional>

namespace zacc {

// ============================================================================
// NdBuffer: a dense row-major float64 block with index arithmetic
// ============================================================================

class NdBuffer {
public:
    NdBuffer() = default;

    explicit NdBuffer(Shape shape, double init = 0.0)
        : shape_(std::move(shape)), data_(static_cast<std::size_t>(product(shape_)), init)
    {
        strides_.resize(shape_.size());
        std::int64_t s = 1;
        for (std::size_t d = shape_.size(); d-- > 0;) {
            strides_[d] = s;
            s *= shape_[d];
        }
    }

    const Shape& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    std::int64_t flat(const Index& idx) const
    {
        std::int64_t off = 0;
        for (std::size_t d = 0; d < shape_.size(); ++d) off += idx[d] * strides_[d];
        return off;
    }

    double& at(const Index& idx) { return data_[static_cast<std::size_t>(flat(idx))]; }
    double at(const Index& idx) const { return data_[static_cast<std::size_t>(flat(idx))]; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    std::int64_t stride(std::size_t d) const { return strides_[d]; }

private:
    Shape shape_;
    Shape strides_;
    std::vector<double> data_;
};

// ============================================================================
// Odometer iteration over an n-d index box
// ============================================================================

/// Calls fn(idx) for every index in [lo, hi) in row-major order.
/// Empty ranges produce no calls.
inline void for_each_index(const Index& lo, const Index& hi,
                           const std::function<void(const Index&)>& fn)
{
    const std::size_t n = lo.size();
    for (std::size_t d = 0; d < n; ++d)
        if (lo[d] >= hi[d]) return;
    Index idx = lo;
    while (true) {
        fn(idx);
        std::size_t d = n;
        while (d-- > 0) {
            if (++idx[d] < hi[d]) break;
            idx[d] = lo[d];
            if (d == 0) return;
        }
        if (n == 0) return;
    }
}

/// Same over [0, extents).
inline void for_each_index(const Shape& extents, const std::function<void(const Index&)>& fn)
{
    for_each_index(Index(extents.size(), 0), extents, fn);
}

} // namespace zacc
