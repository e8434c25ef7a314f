#pragma once

// Wall-clock scaling of limited iteration versus the closed-form solve on one
// sub-map operator. Graph construction is shared by both modes and is not
// timed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rwpm/diffusion.hpp"
#include "rwpm/graph.hpp"
#include "rwpm/partition.hpp"
#include "rwpm/synth.hpp"

namespace rwpm {

inline constexpr const char* kBenchCsvHeader = "mode,N,d,T,n,wall_ms,peak_matrix_elems";

struct BenchConfig {
    std::vector<std::size_t> sizes{256, 1024, 4096};
    std::size_t dim = 16;
    std::size_t iterations = kDefaultIterations;
    std::size_t partition = kDefaultPartitionMask; // recorded only
    double alpha = kDefaultAlpha;
    double tau = kDefaultTemperature;
    std::uint64_t seed = 1;
    std::size_t repeats = 1; // best-of
    unsigned threads = 1;
};

struct BenchRow {
    std::string mode; // iterative | closed_form
    std::size_t n_pixels = 0;
    std::size_t dim = 0;
    std::size_t iterations = 0; // 0 for closed_form (written as "inf")
    std::size_t partition = 0;
    double wall_ms = 0.0;
    std::size_t peak_matrix_elems = 0;
};

inline Matrix random_embeddings(std::size_t n, std::size_t d, std::uint64_t seed) {
    SynthRandom rng(seed);
    Matrix m(n, d);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

inline std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    std::vector<BenchRow> rows;
    for (std::size_t n : cfg.sizes) {
        const Matrix m0 = random_embeddings(n, cfg.dim, cfg.seed + n);
        const auto s = softmax_transition(build_affinity(m0, false, cfg.threads), cfg.tau, cfg.threads);

        auto time_ms = [&](auto&& fn) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < std::max<std::size_t>(1, cfg.repeats); ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                fn();
                const auto t1 = std::chrono::steady_clock::now();
                best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
            }
            return best;
        };

        DiffusionConfig dcfg;
        dcfg.alpha = cfg.alpha;
        dcfg.iterations = cfg.iterations;
        dcfg.threads = cfg.threads;
        const double iter_ms = time_ms([&] { (void)diffuse_iterative(s, m0, dcfg); });
        rows.push_back({"iterative", n, cfg.dim, cfg.iterations, cfg.partition, iter_ms, n * n});
        const double closed_ms = time_ms([&] { (void)diffuse_closed_form(s, m0, cfg.alpha); });
        rows.push_back({"closed_form", n, cfg.dim, 0, cfg.partition, closed_ms, 2 * n * n});
    }
    return rows;
}

inline void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
    out << kBenchCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.mode << ',' << r.n_pixels << ',' << r.dim << ',';
        if (r.mode == "closed_form") out << "inf";
        else out << r.iterations;
        out << ',' << r.partition << ',' << r.wall_ms << ',' << r.peak_matrix_elems << '\n';
    }
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Slope of wall time versus N for one mode.
inline double mode_slope(std::span<const BenchRow> rows, const std::string& mode) {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
        if (r.mode == mode) {
            xs.push_back(static_cast<double>(r.n_pixels));
            ys.push_back(std::max(r.wall_ms, 1e-6));
        }
    return loglog_slope(xs, ys);
}

} // namespace rwpm
