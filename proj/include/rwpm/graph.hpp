#pragma once

// Manifold graph over pixels: cosine affinity with the diagonal removed, and
// its row-stochastic normalization by temperature softmax or top-k pruning.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/matrix.hpp"
#include "rwpm/parallel.hpp"
#include "rwpm/tensor_io.hpp"

namespace rwpm {

inline constexpr double kDefaultTemperature = 0.01;

struct AffinityMatrix {
    Matrix entries;
    std::size_t n_pixels() const noexcept { return entries.rows(); }
};

enum class GraphMode { softmax, topk };

struct TransitionGraph {
    Matrix entries;
    GraphMode mode = GraphMode::softmax;
    double tau = kDefaultTemperature;
    std::size_t k = 0; // topk only

    std::size_t n_pixels() const noexcept { return entries.rows(); }
};

/// W_ij = <x_i, x_j> / (|x_i| |x_j|) for i != j, W_ii = 0.
inline AffinityMatrix build_affinity(const Matrix& x, bool already_normalized, unsigned threads = 1) {
    const std::size_t n = x.rows();
    if (n < 2) throw SizeError("affinity needs at least 2 pixels, got " + std::to_string(n));
    const Matrix unit = already_normalized ? x : l2_normalize_rows(x);
    AffinityMatrix w{Matrix(n, n)};
    parallel_for(0, n, threads, [&](std::size_t i) {
        const auto xi = unit.row(i);
        auto out = w.entries.row(i);
        for (std::size_t j = 0; j < n; ++j) out[j] = i == j ? 0.0 : dot(xi, unit.row(j));
    });
    return w;
}

namespace detail {

// Softmax over the listed columns of one affinity row, written into `out`
// (which must be zeroed). Columns are visited in the given (ascending) order.
inline void softmax_row(std::span<const double> affinity, std::span<const std::size_t> cols, double tau,
                        std::span<double> out) {
    double shift = -std::numeric_limits<double>::infinity();
    for (auto j : cols) shift = std::max(shift, affinity[j]);
    double total = 0.0;
    for (auto j : cols) {
        out[j] = std::exp((affinity[j] - shift) / tau);
        total += out[j];
    }
    for (auto j : cols) out[j] /= total;
}

inline void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw ParameterError("temperature tau must be positive, got " + std::to_string(tau));
}

} // namespace detail

/// S_ij = exp(W_ij / tau) / sum_{j' != i} exp(W_ij' / tau), S_ii = 0.
inline TransitionGraph softmax_transition(const AffinityMatrix& w, double tau = kDefaultTemperature,
                                          unsigned threads = 1) {
    detail::check_tau(tau);
    const std::size_t n = w.n_pixels();
    if (n < 2) throw SizeError("transition graph needs at least 2 pixels");
    TransitionGraph s{Matrix(n, n), GraphMode::softmax, tau, 0};
    parallel_for(0, n, threads, [&](std::size_t i) {
        std::vector<std::size_t> cols;
        cols.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) cols.push_back(j);
        detail::softmax_row(w.entries.row(i), cols, tau, s.entries.row(i));
    });
    return s;
}

/// Keeps the min(k, N-1) strongest off-diagonal affinities per row (ties go
/// to the lower column), then softmax-normalizes the survivors with tau.
inline TransitionGraph topk_transition(const AffinityMatrix& w, std::size_t k,
                                       double tau = kDefaultTemperature, unsigned threads = 1) {
    if (k < 1) throw ParameterError("topk needs k >= 1");
    detail::check_tau(tau);
    const std::size_t n = w.n_pixels();
    if (n < 2) throw SizeError("transition graph needs at least 2 pixels");
    const std::size_t keep = std::min(k, n - 1);
    TransitionGraph s{Matrix(n, n), GraphMode::topk, tau, k};
    parallel_for(0, n, threads, [&](std::size_t i) {
        const auto row = w.entries.row(i);
        std::vector<std::size_t> cols;
        cols.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) cols.push_back(j);
        std::partial_sort(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(keep), cols.end(),
                          [&](std::size_t a, std::size_t b) {
                              return row[a] > row[b] || (row[a] == row[b] && a < b);
                          });
        cols.resize(keep);
        std::sort(cols.begin(), cols.end());
        detail::softmax_row(row, cols, tau, s.entries.row(i));
    });
    return s;
}

/// Symmetric, doubly stochastic companion of S: (S + S^T) / 2 balanced by
/// symmetric Sinkhorn scaling D (S + S^T)/2 D. The result is still a valid
/// transition graph (row sums within `tol` of 1, exactly symmetric) and is
/// the setting in which diffusion minimizes diffusion_objective exactly.
inline TransitionGraph symmetrize(const TransitionGraph& s, double tol = 1e-13,
                                  std::size_t max_iters = 100000) {
    const std::size_t n = s.n_pixels();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s.entries(i, j) + s.entries(j, i));

    std::vector<double> scale(n, 1.0), ax(n);
    for (std::size_t it = 0; it < max_iters; ++it) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ax[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) ax[i] += a(i, j) * scale[j];
            worst = std::max(worst, std::abs(scale[i] * ax[i] - 1.0));
        }
        if (worst <= tol) break;
        if (it + 1 == max_iters) throw NumericalError("symmetric balancing did not converge");
        for (std::size_t i = 0; i < n; ++i) scale[i] = std::sqrt(scale[i] / ax[i]);
    }

    TransitionGraph out{Matrix(n, n), s.mode, s.tau, s.k};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.entries(i, j) = a(i, j) * (scale[i] * scale[j]);
    return out;
}

} // namespace rwpm
