#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "io.hpp"

namespace ecmsim {

struct ThroughputSample {
    double time = 0.0;      // seconds
    double bandwidth = 0.0; // data-units per second
};

// Outcome of pushing `size` data-units through the trace from a start time:
// either a completion instant, or how much was delivered when the trace ran
// out first.
struct TransferResult {
    std::optional<double> completed_at;
    double delivered = 0.0;
    bool completed() const { return completed_at.has_value(); }
};

// Piecewise-constant available-bandwidth process. Sample k's bandwidth holds
// on [t_k, t_{k+1}) and the last sample's value holds until end_time.
// Immutable after construction; safe to share across concurrent readers.
class ThroughputTrace {
public:
    ThroughputTrace(std::vector<ThroughputSample> samples, double end_time)
        : samples_(std::move(samples)), end_time_(end_time) {
        if (samples_.empty())
            throw ValidationError("trace must contain at least one sample");
        if (samples_.front().time != 0.0)
            throw ValidationError("trace must start at time 0");
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            const ThroughputSample& s = samples_[i];
            if (!std::isfinite(s.time) || !std::isfinite(s.bandwidth))
                throw ValidationError("trace sample " + std::to_string(i) + " is not finite");
            if (!(s.bandwidth > 0.0))
                throw ValidationError("trace sample " + std::to_string(i) +
                                      " has non-positive bandwidth");
            if (i > 0 && !(samples_[i - 1].time < s.time))
                throw ValidationError("trace sample times must be strictly increasing (sample " +
                                      std::to_string(i) + ")");
        }
        if (!std::isfinite(end_time_) || end_time_ < samples_.back().time)
            throw ValidationError("trace end_time must be >= last sample time");
    }

    const std::vector<ThroughputSample>& samples() const { return samples_; }
    double end_time() const { return end_time_; }

    double bandwidth_at(double t) const {
        if (!(t >= 0.0 && t < end_time_))
            throw std::domain_error("time outside [0, end_time)");
        return samples_[segment_index(t)].bandwidth;
    }

    /// Earliest time t' > start by which `size` data-units pass through the
    /// piecewise-constant bandwidth, integrated exactly segment by segment.
    TransferResult transfer_completion(double start, double size) const {
        if (!(start >= 0.0 && start < end_time_))
            throw std::domain_error("transfer start outside [0, end_time)");
        if (!(size > 0.0) || !std::isfinite(size))
            throw std::domain_error("transfer size must be positive");

        std::size_t seg = segment_index(start);
        double t = start;
        double remaining = size;
        while (true) {
            const double bw = samples_[seg].bandwidth;
            const double seg_end =
                (seg + 1 < samples_.size()) ? samples_[seg + 1].time : end_time_;
            const double capacity = bw * (seg_end - t);
            if (remaining <= capacity)
                return {t + remaining / bw, size};
            remaining -= capacity;
            t = seg_end;
            if (seg + 1 >= samples_.size())
                return {std::nullopt, size - remaining};
            ++seg;
        }
    }

private:
    std::size_t segment_index(double t) const {
        auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](double v, const ThroughputSample& s) { return v < s.time; });
        return static_cast<std::size_t>(it - samples_.begin()) - 1;
    }

    std::vector<ThroughputSample> samples_;
    double end_time_;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

inline bool parse_number(const std::string& field, double& out) {
    const std::string t = trim(field);
    if (t.empty())
        return false;
    const char* begin = t.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + t.size();
}

} // namespace detail

// Trace CSV: one `time,bandwidth` pair per line, `#` comment lines ignored,
// an optional leading `time,bandwidth` header ignored, LF or CRLF endings.
inline ThroughputTrace parse_trace_csv(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<ThroughputSample> samples;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#')
            continue;

        const std::size_t comma = trimmed.find(',');
        if (comma == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 'time,bandwidth'");
        const std::string left = trimmed.substr(0, comma);
        const std::string right = trimmed.substr(comma + 1);
        if (right.find(',') != std::string::npos)
            throw ParseError(origin + ":" + std::to_string(line_no) + ": too many fields");

        double t = 0.0, bw = 0.0;
        if (!detail::parse_number(left, t) || !detail::parse_number(right, bw)) {
            std::string lt = detail::trim(left), rt = detail::trim(right);
            std::transform(lt.begin(), lt.end(), lt.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            std::transform(rt.begin(), rt.end(), rt.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (first_data_line && lt == "time" && rt == "bandwidth") {
                first_data_line = false;
                continue;
            }
            throw ParseError(origin + ":" + std::to_string(line_no) + ": malformed number");
        }
        first_data_line = false;
        samples.push_back({t, bw});
    }

    if (samples.size() < 2)
        throw ValidationError(origin + ": need at least 2 samples to infer end_time");

    // end_time = last sample time + the median inter-sample gap, giving the
    // final sample a duration without inventing bandwidth.
    std::vector<double> gaps;
    gaps.reserve(samples.size() - 1);
    for (std::size_t i = 1; i < samples.size(); ++i)
        gaps.push_back(samples[i].time - samples[i - 1].time);
    std::sort(gaps.begin(), gaps.end());
    const std::size_t m = gaps.size();
    const double median_gap = (m % 2 == 1) ? gaps[m / 2] : (gaps[m / 2 - 1] + gaps[m / 2]) / 2.0;

    return ThroughputTrace(std::move(samples), samples.empty() ? 0.0 : 0.0 + [&] {
        return 0.0; }());
}

inline ThroughputTrace load_trace(const std::filesystem::path& path);

inline std::string trace_to_csv(const ThroughputTrace& trace) {
    std::ostringstream out;
    out << "time,bandwidth\n";
    for (const ThroughputSample& s : trace.samples())
        out << format_double(s.time) << "," << format_double(s.bandwidth) << "\n";
    return out.str();
}

inline void save_trace(const ThroughputTrace& trace, const std::filesystem::path& path) {
    write_text_atomic(path, trace_to_csv(trace));
}

} // namespace ecmsim
