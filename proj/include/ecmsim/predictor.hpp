#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "binning.hpp"
#include "contingency.hpp"
#include "errors.hpp"

namespace ecmsim {

// Empirical confidence interval over throughput bins. The trimming that
// produces it never removes more than alpha/2 probability mass per tail, so
// retained_mass >= nominal_level always holds.
struct PredictionInterval {
    double low = 0.0;
    double high = 0.0;
    double nominal_level = 0.0; // 1 - alpha
    double retained_mass = 0.0; // empirical mass inside (low, high]
    double width() const { return high - low; }
};

// One-step throughput predictor: feed each measured throughput as it
// arrives, ask for the next value any time.
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual void observe(double throughput) = 0;
    virtual double predict() const = 0;
};

// Moving average of the last `window_size` observations. With a partially
// filled window it averages what it has; before any observation it returns
// the configured initial guess.
class AmPredictor final : public Predictor {
public:
    AmPredictor(std::size_t window_size, double fallback_initial)
        : window_size_(window_size), fallback_initial_(fallback_initial) {
        if (window_size == 0)
            throw ValidationError("AM window size must be positive");
        if (!(std::isfinite(fallback_initial)))
            throw ValidationError("AM fallback must be finite");
    }

    void observe(double throughput) override {
        if (!std::isfinite(throughput))
            throw std::domain_error("observation must be finite");
        window_.push_back(throughput);
        if (window_.size() > window_size_)
            window_.pop_front();
    }

    double predict() const override {
        if (window_.empty())
            return fallback_initial_;
        const double sum = std::accumulate(window_.begin(), window_.end(), 0.0);
        return sum / static_cast<double>(window_.size());
    }

    std::size_t window_size() const { return window_size_; }
    const std::deque<double>& window() const { return window_; }

private:
    std::size_t window_size_;
    std::deque<double> window_;
    double fallback_initial_;
};

// Empirical conditional mean over binned throughput. Consecutive
// observations enter a contingency matrix whose row = the older value's bin
// and column = the newer value's bin; a row normalized by its sum is the
// empirical distribution of the next throughput given the current bin. The
// point estimate is the expectation of that distribution with each bin
// contributing its midpoint; the interval estimate trims equal tails off it.
//
// Cold start: a conditioning row with no recorded transitions falls back to
// the last raw observation, and before any observation the configured
// initial guess is returned.
class EcmPredictor final : public Predictor {
public:
    EcmPredictor(BinningScheme binning, std::optional<std::uint64_t> grandsum_cap,
                 double fallback_initial)
        : binning_(std::move(binning)),
          matrix_(binning_.bin_count(), grandsum_cap),
          fallback_initial_(fallback_initial) {
        if (!std::isfinite(fallback_initial))
            throw ValidationError("ECM fallback must be finite");
    }

    /// Start from a previously accumulated matrix (e.g. a loaded snapshot).
    EcmPredictor(BinningScheme binning, ContingencyMatrix pretrained, double fallback_initial)
        : binning_(std::move(binning)),
          matrix_(std::move(pretrained)),
          fallback_initial_(fallback_initial) {
        if (matrix_.bins() != binning_.bin_count())
            throw ValidationError("pretrained matrix size does not match binning");
        if (!std::isfinite(fallback_initial))
            throw ValidationError("ECM fallback must be finite");
    }

    void observe(double throughput) override {
        if (!std::isfinite(throughput))
            throw std::domain_error("observation must be finite");
        const std::size_t bin = binning_.index_of(throughput);
        if (last_bin_)
            matrix_.record(*last_bin_, bin);
        last_observation_ = throughput;
        last_bin_ = bin;
    }

    double predict() const override {
        if (last_bin_ && matrix_.row_sum(*last_bin_) > 0)
            return *row_mean(*last_bin_);
        if (last_observation_)
            return *last_observation_;
        return fallback_initial_;
    }

    /// Conditional mean of the next throughput given the current bin; empty
    /// when the row has no recorded transitions.
    std::optional<double> row_mean(std::size_t row) const {
        const std::uint64_t total = matrix_.row_sum(row);
        if (total == 0)
            return std::nullopt;
        double mean = 0.0;
        for (std::size_t j = 0; j < binning_.bin_count(); ++j) {
            const std::uint64_t c = matrix_.count(row, j);
            if (c)
                mean += (static_cast<double>(c) / static_cast<double>(total)) *
                        binning_.representative(j);
        }
        return mean;
    }

    /// Empirical Pr{next in bin j | current in bin `row`} for every j; empty
    /// vector when the conditional is undefined (row sum zero).
    std::vector<double> row_distribution(std::size_t row) const {
        const std::uint64_t total = matrix_.row_sum(row);
        if (total == 0)
            return {};
        std::vector<double> q(binning_.bin_count());
        for (std::size_t j = 0; j < q.size(); ++j)
            q[j] = static_cast<double>(matrix_.count(row, j)) / static_cast<double>(total);
        return q;
    }

    /// Interval for the next throughput conditioned on the last observation's
    /// bin; empty when no observation has been made or its row is all zeros.
    std::optional<PredictionInterval> interval(double alpha) const {
        if (!last_bin_)
            return std::nullopt;
        return row_interval(*last_bin_, alpha);
    }

    // Whole-bin tail trimming: a tail bin is dropped while the tail's total
    // count stays within alpha/2 of the row mass, then the result is widened
    // if rounding ever pushed the retained mass below 1 - alpha.
    std::optional<PredictionInterval> row_interval(std::size_t row, double alpha) const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::domain_error("alpha must be in (0, 1)");
        const std::uint64_t total = matrix_.row_sum(row);
        if (total == 0)
            return std::nullopt;

        const std::size_t bins = binning_.bin_count();
        std::vector<std::uint64_t> cnt(bins);
        for (std::size_t j = 0; j < bins; ++j)
            cnt[j] = matrix_.count(row, j);

        const double tail_budget = alpha / 2.0 * static_cast<double>(total);
        std::size_t lo = 0;
        std::size_t hi = bins - 1;
        std::uint64_t trimmed_lo = 0;
        std::uint64_t trimmed_hi = 0;
        while (lo < hi && static_cast<double>(trimmed_lo + cnt[lo]) <= tail_budget) {
            trimmed_lo += cnt[lo];
            ++lo;
        }
        while (hi > lo && static_cast<double>(trimmed_hi + cnt[hi]) <= tail_budget) {
            trimmed_hi += cnt[hi];
            --hi;
        }

        const double nominal = 1.0 - alpha;
        auto retained = [&] {
            return static_cast<double>(total - trimmed_lo - trimmed_hi) /
                   static_cast<double>(total);
        };
        // Guards the retained_mass >= nominal_level invariant against the
        // rounding of tail_budget itself.
        while (retained() < nominal) {
            if (trimmed_lo >= trimmed_hi && lo > 0) {
                --lo;
                trimmed_lo -= cnt[lo];
            } else if (hi + 1 < bins) {
                ++hi;
                trimmed_hi -= cnt[hi];
            } else if (lo > 0) {
                --lo;
                trimmed_lo -= cnt[lo];
            } else {
                break;
            }
        }

        PredictionInterval iv;
        iv.low = binning_.edges()[lo];
        iv.high = binning_.edges()[hi + 1];
        iv.nominal_level = nominal;
        iv.retained_mass = retained();
        return iv;
    }

    const BinningScheme& binning() const { return binning_; }
    const ContingencyMatrix& matrix() const { return matrix_; }
    std::optional<double> last_observation() const { return last_observation_; }
    std::optional<std::size_t> last_bin() const { return last_bin_; }

private:
    BinningScheme binning_;
    ContingencyMatrix matrix_;
    std::optional<double> last_observation_;
    std::optional<std::size_t> last_bin_;
    double fallback_initial_;
};

} // namespace ecmsim
