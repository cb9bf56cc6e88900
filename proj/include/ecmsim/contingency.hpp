#pragma once

#include <cstdint>
#include <deque>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace ecmsim {

// K x K grid of transition counts between throughput bins, with optional
// FIFO forgetting: once the grandsum reaches the cap, recording a new
// transition first removes the oldest recorded one, so the matrix always
// holds exactly the most recent transitions.
class ContingencyMatrix {
public:
    struct Event {
        std::uint32_t row;
        std::uint32_t col;
    };

    explicit ContingencyMatrix(std::size_t bins,
                               std::optional<std::uint64_t> grandsum_cap = std::nullopt)
        : bins_(bins), cap_(grandsum_cap), counts_(bins * bins, 0), row_sums_(bins, 0) {
        if (bins == 0)
            throw ValidationError("contingency matrix needs at least 1 bin");
        if (cap_ && *cap_ == 0)
            throw ValidationError("grandsum cap must be positive");
    }

    std::size_t bins() const { return bins_; }
    std::optional<std::uint64_t> grandsum_cap() const { return cap_; }
    std::uint64_t grandsum() const { return events_.size(); }

    std::uint64_t count(std::size_t row, std::size_t col) const {
        check_index(row);
        check_index(col);
        return counts_[row * bins_ + col];
    }

    std::uint64_t row_sum(std::size_t row) const {
        check_index(row);
        return row_sums_[row];
    }

    /// Insertion-ordered transition log; replaying it from a zero matrix
    /// reproduces the counts.
    const std::deque<Event>& events() const { return events_; }

    void record(std::size_t row, std::size_t col) {
        check_index(row);
        check_index(col);
        if (cap_ && events_.size() == *cap_) {
            const Event oldest = events_.front();
            events_.pop_front();
            --counts_[oldest.row * bins_ + oldest.col];
            --row_sums_[oldest.row];
        }
        events_.push_back({static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col)});
        ++counts_[row * bins_ + col];
        ++row_sums_[row];
    }

    // Snapshot format: header `K,<K>,grandsum,<g>,cap,<cap or "inf">`
    // followed by K lines of K comma-separated integer counts.
    std::string to_snapshot() const {
        std::ostringstream out;
        out << "K," << bins_ << ",grandsum," << grandsum() << ",cap,";
        if (cap_)
            out << *cap_;
        else
            out << "inf";
        out << "\n";
        for (std::size_t r = 0; r < bins_; ++r) {
            for (std::size_t c = 0; c < bins_; ++c) {
                if (c)
                    out << ",";
                out << counts_[r * bins_ + c];
            }
            out << "\n";
        }
        return out.str();
    }

    // The snapshot does not preserve event order; the rebuilt queue lists each
    // cell's transitions in row-major order, which replays to the same counts.
    static ContingencyMatrix from_snapshot(std::istream& in) {
        std::string line;
        if (!std::getline(in, line))
            throw ParseError("empty matrix snapshot");
        strip_cr(line);
        std::vector<std::string> head = split(line);
        if (head.size() != 6 || head[0] != "K" || head[2] != "grandsum" || head[4] != "cap")
            throw ParseError("bad snapshot header: " + line);
        const std::uint64_t bins = parse_u64(head[1], "K");
        const std::uint64_t declared_grandsum = parse_u64(head[3], "grandsum");
        std::optional<std::uint64_t> cap;
        if (head[5] != "inf")
            cap = parse_u64(head[5], "cap");

        if (bins == 0)
            throw ParseError("snapshot declares zero bins");
        ContingencyMatrix m(static_cast<std::size_t>(bins), cap);
        for (std::size_t r = 0; r < bins; ++r) {
            if (!std::getline(in, line))
                throw ParseError("snapshot truncated at row " + std::to_string(r));
            strip_cr(line);
            std::vector<std::string> cells = split(line);
            if (cells.size() != bins)
                throw ParseError("snapshot row " + std::to_string(r) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(bins));
            for (std::size_t c = 0; c < bins; ++c) {
                const std::uint64_t n = parse_u64(cells[c], "count");
                m.counts_[r * bins + c] = n;
                m.row_sums_[r] += n;
                for (std::uint64_t i = 0; i < n; ++i)
                    m.events_.push_back({static_cast<std::uint32_t>(r),
                                         static_cast<std::uint32_t>(c)});
            }
        }
        if (m.grandsum() != declared_grandsum)
            throw ParseError("snapshot grandsum mismatch: header says " +
                             std::to_string(declared_grandsum) + ", counts sum to " +
                             std::to_string(m.grandsum()));
        if (cap && m.grandsum() > *cap)
            throw ParseError("snapshot grandsum exceeds its cap");
        return m;
    }

private:
    void check_index(std::size_t i) const {
        if (i >= bins_)
            throw std::domain_error("bin index out of range");
    }

    static void strip_cr(std::string& s) {
        if (!s.empty() && s.back() == '\r')
            s.pop_back();
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        out.push_back(cur);
        return out;
    }

    static std::uint64_t parse_u64(const std::string& s, const char* what) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError(std::string("bad ") + what + " in snapshot: '" + s + "'");
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw ParseError(std::string("bad ") + what + " in snapshot: '" + s + "'");
        }
    }

    std::size_t bins_;
    std::optional<std::uint64_t> cap_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> row_sums_;
    std::deque<Event> events_;
};

} // namespace ecmsim
