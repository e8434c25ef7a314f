#pragma once

// Partial random walk machinery: n x n tiling of a map, reassembly, and the
// edge-mean calibration that aligns score baselines across tiles.

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/tensor_io.hpp"

namespace rwpm {

inline constexpr std::size_t kDefaultPartitionPixel = 4; // pixel-based embedding maps
inline constexpr std::size_t kDefaultPartitionMask = 2;  // mask-based embedding maps

struct PartitionGrid {
    std::size_t n = 1;
    std::size_t sub_h = 0;
    std::size_t sub_w = 0;

    static PartitionGrid make(std::size_t h, std::size_t w, std::size_t n) {
        if (n < 1 || h % n != 0 || w % n != 0)
            throw PartitionError("cannot split H=" + std::to_string(h) + ", W=" + std::to_string(w) +
                                 " into n=" + std::to_string(n) + " equal parts per axis");
        return {n, h / n, w / n};
    }
    std::size_t count() const noexcept { return n * n; }
};

namespace detail {

template <typename Map>
Map make_like(std::size_t channels, std::size_t h, std::size_t w) {
    if constexpr (std::is_same_v<Map, ScoreMap>) {
        (void)channels;
        return ScoreMap(h, w);
    } else {
        return Map(channels, h, w);
    }
}

} // namespace detail

/// Sub-map (r, c) covers rows [r*sub_h, (r+1)*sub_h) and columns
/// [c*sub_w, (c+1)*sub_w); the result is ordered row-major by (r, c).
/// Works for EmbeddingMap and ScoreMap.
template <typename Map>
std::vector<Map> split_map(const Map& m, std::size_t n) {
    const auto grid = PartitionGrid::make(m.height(), m.width(), n);
    std::vector<Map> parts;
    parts.reserve(grid.count());
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            Map part = detail::make_like<Map>(m.channels(), grid.sub_h, grid.sub_w);
            for (std::size_t ch = 0; ch < m.channels(); ++ch)
                for (std::size_t y = 0; y < grid.sub_h; ++y)
                    for (std::size_t x = 0; x < grid.sub_w; ++x)
                        part.at(ch, y, x) = m.at(ch, r * grid.sub_h + y, c * grid.sub_w + x);
            parts.push_back(std::move(part));
        }
    return parts;
}

/// Inverse of split_map. Parts must be in row-major grid order; that ordering
/// is the caller's contract and is not checked.
template <typename Map>
Map assemble_map(std::span<const Map> parts, std::size_t n) {
    if (n < 1 || parts.size() != n * n)
        throw PartitionError("assemble needs n*n = " + std::to_string(n * n) + " parts, got " +
                             std::to_string(parts.size()));
    const std::size_t sub_h = parts[0].height(), sub_w = parts[0].width(), ch = parts[0].channels();
    for (const auto& p : parts)
        if (p.height() != sub_h || p.width() != sub_w || p.channels() != ch)
            throw PartitionError("assemble: parts have non-uniform dimensions");
    Map out = detail::make_like<Map>(ch, sub_h * n, sub_w * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const Map& part = parts[r * n + c];
            for (std::size_t k = 0; k < ch; ++k)
                for (std::size_t y = 0; y < sub_h; ++y)
                    for (std::size_t x = 0; x < sub_w; ++x)
                        out.at(k, r * sub_h + y, c * sub_w + x) = part.at(k, y, x);
        }
    return out;
}

template <typename Map>
Map assemble_map(const std::vector<Map>& parts, std::size_t n) {
    return assemble_map(std::span<const Map>(parts), n);
}

enum class Side {
    right_left, // a is left of b: a's last column faces b's first column
    bottom_top  // a is above b: a's last row faces b's first row
};

struct EdgeMeans {
    double i = 0.0; // mean over a's facing edge
    double j = 0.0; // mean over b's facing edge
};

inline EdgeMeans edge_mean(const ScoreMap& a, const ScoreMap& b, Side side) {
    EdgeMeans e;
    if (side == Side::right_left) {
        if (a.height() != b.height())
            throw PartitionError("edge_mean: facing columns have lengths " + std::to_string(a.height()) + " and " +
                                 std::to_string(b.height()));
        for (std::size_t y = 0; y < a.height(); ++y) {
            e.i += a.at(y, a.width() - 1);
            e.j += b.at(y, 0);
        }
        e.i /= static_cast<double>(a.height());
        e.j /= static_cast<double>(b.height());
    } else {
        if (a.width() != b.width())
            throw PartitionError("edge_mean: facing rows have lengths " + std::to_string(a.width()) + " and " +
                                 std::to_string(b.width()));
        for (std::size_t x = 0; x < a.width(); ++x) {
            e.i += a.at(a.height() - 1, x);
            e.j += b.at(0, x);
        }
        e.i /= static_cast<double>(a.width());
        e.j /= static_cast<double>(b.width());
    }
    return e;
}

enum class CalibrationMode { off, multiplicative, additive };

struct CalibrationStep {
    std::size_t ref_row = 0, ref_col = 0;       // already-calibrated neighbor
    std::size_t target_row = 0, target_col = 0; // sub-map being adjusted
    Side side = Side::right_left;
    double i = 0.0, j = 0.0;
    double factor = 1.0; // ratio I/J (multiplicative) or offset I-J (additive)
};

struct CalibrationReport {
    CalibrationMode mode = CalibrationMode::multiplicative;
    std::vector<CalibrationStep> steps; // in traversal order

    void write_text(std::ostream& out) const {
        const char* key = mode == CalibrationMode::additive ? "offset" : "ratio";
        out.precision(17);
        for (const auto& s : steps)
            out << "ref=(" << s.ref_row << ',' << s.ref_col << ") target=(" << s.target_row << ',' << s.target_col
                << ") side=" << (s.side == Side::right_left ? "right-left" : "bottom-top") << " I=" << s.i
                << " J=" << s.j << ' ' << key << '=' << s.factor << '\n';
    }
    std::string to_text() const {
        std::ostringstream os;
        write_text(os);
        return os.str();
    }
};

inline constexpr double kCalibrationMinMean = 1e-12;

/// Anchors on sub-map (0,0) and sweeps row-major. Each other sub-map is
/// matched against its left neighbor if it has one, else its top neighbor;
/// both are already calibrated when visited.
inline std::pair<std::vector<ScoreMap>, CalibrationReport> calibrate_scores(std::vector<ScoreMap> parts,
                                                                            std::size_t n, CalibrationMode mode) {
    if (n < 2) throw PartitionError("calibration needs n >= 2, got n=" + std::to_string(n));
    if (parts.size() != n * n)
        throw PartitionError("calibration needs n*n = " + std::to_string(n * n) + " parts, got " +
                             std::to_string(parts.size()));
    if (mode == CalibrationMode::off) throw ParameterError("calibrate_scores called with mode off");
    CalibrationReport report{mode, {}};
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            if (r == 0 && c == 0) continue;
            CalibrationStep step;
            step.target_row = r;
            step.target_col = c;
            if (c > 0) {
                step.ref_row = r;
                step.ref_col = c - 1;
                step.side = Side::right_left;
            } else {
                step.ref_row = r - 1;
                step.ref_col = c;
                step.side = Side::bottom_top;
            }
            ScoreMap& target = parts[r * n + c];
            const auto e = edge_mean(parts[step.ref_row * n + step.ref_col], target, step.side);
            step.i = e.i;
            step.j = e.j;
            if (mode == CalibrationMode::multiplicative) {
                if (std::abs(e.i) < kCalibrationMinMean || std::abs(e.j) < kCalibrationMinMean ||
                    (e.i > 0) != (e.j > 0))
                    throw CalibrationError("multiplicative calibration undefined for edge means I=" +
                                           std::to_string(e.i) + ", J=" + std::to_string(e.j) +
                                           " (zero or mixed sign); use additive calibration");
                step.factor = e.i / e.j;
                for (double& v : target.scores()) v *= step.factor;
            } else {
                step.factor = e.i - e.j;
                for (double& v : target.scores()) v += step.factor;
            }
            report.steps.push_back(step);
        }
    return {std::move(parts), std::move(report)};
}

inline CalibrationMode parse_calibration_mode(const std::string& s) {
    if (s == "off") return CalibrationMode::off;
    if (s == "multiplicative") return CalibrationMode::multiplicative;
    if (s == "additive") return CalibrationMode::additive;
    throw ParameterError("unknown calibration mode '" + s + "' (off | multiplicative | additive)");
}

inline const char* to_string(CalibrationMode m) noexcept {
    switch (m) {
    case CalibrationMode::off: return "off";
    case CalibrationMode::multiplicative: return "multiplicative";
    case CalibrationMode::additive: return "additive";
    }
    return "?";
}

} // namespace rwpm
