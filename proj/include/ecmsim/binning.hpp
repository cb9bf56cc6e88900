#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"

namespace ecmsim {

// Uniform quantization of the throughput range (lower, upper] into bin_count
// half-open cells (edges[k], edges[k+1]]. Bin k is the k-th state of the
// first-order Markov model; values outside the range clamp to the edge bins
// so the mapping stays total on finite reals.
class BinningScheme {
public:
    BinningScheme(double lower, double upper, std::size_t bin_count)
        : lower_(lower), upper_(upper), bin_count_(bin_count) {
        if (!(std::isfinite(lower) && std::isfinite(upper)) || !(lower < upper))
            throw ValidationError("binning requires finite lower < upper");
        if (bin_count < 2)
            throw ValidationError("binning requires at least 2 bins");
        edges_.resize(bin_count + 1);
        const double width = (upper - lower) / static_cast<double>(bin_count);
        for (std::size_t i = 0; i <= bin_count; ++i)
            edges_[i] = lower + width * static_cast<double>(i);
        edges_.front() = lower;
        edges_.back() = upper;
    }

    double lower() const { return lower_; }
    double upper() const { return upper_; }
    std::size_t bin_count() const { return bin_count_; }
    double width() const { return (upper_ - lower_) / static_cast<double>(bin_count_); }
    const std::vector<double>& edges() const { return edges_; }

    /// Bin holding `value` under (edges[k], edges[k+1]] semantics, clamped to
    /// the edge bins for out-of-range values.
    std::size_t index_of(double value) const {
        if (!std::isfinite(value))
            throw std::domain_error("bin index of non-finite value");
        double pos = std::floor((value - lower_) / width());
        auto k = static_cast<std::ptrdiff_t>(pos);
        k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(bin_count_) - 1);
        // Resolve rounding against the stored edges: cells are left-open.
        while (k > 0 && value <= edges_[static_cast<std::size_t>(k)])
            --k;
        while (k + 1 < static_cast<std::ptrdiff_t>(bin_count_) &&
               value > edges_[static_cast<std::size_t>(k) + 1])
            ++k;
        return static_cast<std::size_t>(k);
    }

    /// Midpoint of bin k, the value a bin contributes to expectation sums.
    double representative(std::size_t k) const {
        if (k >= bin_count_)
            throw std::domain_error("bin index out of range");
        return (edges_[k] + edges_[k + 1]) / 2.0;
    }

private:
    double lower_;
    double upper_;
    std::size_t bin_count_;
    std::vector<double> edges_;
};

/// Binning over the observed range of a training sequence.
inline BinningScheme fit_binning(std::span<const double> training, std::size_t bin_count) {
    if (training.size() < 2)
        throw ValidationError("degenerate training data: need at least 2 values");
    auto [lo, hi] = std::minmax_element(training.begin(), training.end());
    if (!(*lo < *hi))
        throw ValidationError("degenerate training data: all values equal");
    return BinningScheme(*lo, *hi, bin_count);
}

} // namespace ecmsim
