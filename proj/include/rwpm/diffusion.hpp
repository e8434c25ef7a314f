#pragma once

// Random walk with restart over a transition graph:
//   m^{t+1} = alpha * S * m^t + (1 - alpha) * m^0
// run for a fixed number of steps, or solved in closed form
//   m^inf = (1 - alpha) (I - alpha S)^{-1} m^0.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/graph.hpp"
#include "rwpm/lu.hpp"
#include "rwpm/matrix.hpp"
#include "rwpm/parallel.hpp"

namespace rwpm {

inline constexpr double kDefaultAlpha = 0.99;
inline constexpr std::size_t kDefaultIterations = 20;      // high-diversity scenes
inline constexpr std::size_t kDefaultIterationsShort = 5;  // everything else

enum class Solver { iterative, closed_form };

struct DiffusionConfig {
    double alpha = kDefaultAlpha;
    std::size_t iterations = kDefaultIterations;
    Solver solver = Solver::iterative;
    // Opt-in early stop: quit once the max-row-norm step falls below this.
    double tolerance = 0.0;
    unsigned threads = 1;
    // Called after every iterative step with (t + 1, m^{t+1}).
    std::function<void(std::size_t, const Matrix&)> observer;
};

struct DiffusionResult {
    Matrix refined;
    std::vector<double> residual_history; // max_i |m^{t+1}_i - m^t_i|, iterative only
};

namespace detail {

inline void check_shapes(const TransitionGraph& s, const Matrix& m0) {
    if (s.entries.rows() != s.entries.cols())
        throw SizeError("transition graph is not square");
    if (s.n_pixels() != m0.rows())
        throw SizeError("transition graph has " + std::to_string(s.n_pixels()) +
                        " pixels but embeddings have " + std::to_string(m0.rows()) + " rows");
}

} // namespace detail

inline DiffusionResult diffuse_iterative(const TransitionGraph& s, const Matrix& m0, const DiffusionConfig& cfg) {
    detail::check_shapes(s, m0);
    const double alpha = cfg.alpha;
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw ParameterError("iterative diffusion needs 0 <= alpha < 1, got " + std::to_string(alpha));
    const std::size_t n = m0.rows(), d = m0.cols();

    DiffusionResult result{m0, {}};
    result.residual_history.reserve(cfg.iterations);
    Matrix next(n, d);
    std::vector<double> row_step(n);
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        const Matrix& cur = result.refined;
        parallel_for(0, n, cfg.threads, [&](std::size_t i) {
            auto out = next.row(i);
            std::fill(out.begin(), out.end(), 0.0);
            const auto si = s.entries.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double w = si[j];
                if (w == 0.0) continue;
                const auto mj = cur.row(j);
                for (std::size_t c = 0; c < d; ++c) out[c] += w * mj[c];
            }
            const auto init = m0.row(i);
            const auto prev = cur.row(i);
            double step = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                out[c] = alpha * out[c] + (1.0 - alpha) * init[c];
                const double diff = out[c] - prev[c];
                step += diff * diff;
            }
            row_step[i] = std::sqrt(step);
        });
        if (!all_finite(next))
            throw NumericalError("non-finite value in diffusion step " + std::to_string(t + 1));
        std::swap(result.refined, next);
        double residual = 0.0;
        for (double r : row_step) residual = std::max(residual, r);
        result.residual_history.push_back(residual);
        if (cfg.observer) cfg.observer(t + 1, result.refined);
        if (cfg.tolerance > 0.0 && residual < cfg.tolerance) break;
    }
    return result;
}

/// Factor (I - alpha S) once and back-substitute all d columns of m^0.
inline DiffusionResult diffuse_closed_form(const TransitionGraph& s, const Matrix& m0, double alpha) {
    detail::check_shapes(s, m0);
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ParameterError("closed-form diffusion needs 0 < alpha < 1, got " + std::to_string(alpha));
    const std::size_t n = m0.rows();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - alpha * s.entries(i, j);
    const LuFactorization lu(std::move(a));
    Matrix x = lu.solve(m0);
    for (double& v : x.data()) v *= (1.0 - alpha);
    if (!all_finite(x)) throw NumericalError("closed-form diffusion produced non-finite values");
    return {std::move(x), {}};
}

inline DiffusionResult diffuse(const TransitionGraph& s, const Matrix& m0, const DiffusionConfig& cfg) {
    return cfg.solver == Solver::closed_form ? diffuse_closed_form(s, m0, cfg.alpha)
                                             : diffuse_iterative(s, m0, cfg);
}

/// J(m) = 1/2 sum_ij S_ij |m_i - m_j|^2 + (1 - alpha)/alpha sum_i |m_i - m0_i|^2.
/// Diagnostic only; diffusion minimizes it when S is symmetric and stochastic.
inline double diffusion_objective(const TransitionGraph& s, const Matrix& m, const Matrix& m0, double alpha) {
    detail::check_shapes(s, m0);
    if (m.rows() != m0.rows() || m.cols() != m0.cols())
        throw SizeError("objective: m and m0 shapes differ");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("objective needs 0 < alpha < 1");
    const std::size_t n = m.rows(), d = m.cols();
    double smooth = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto mi = m.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double w = s.entries(i, j);
            if (w == 0.0) continue;
            const auto mj = m.row(j);
            double sq = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double diff = mi[c] - mj[c];
                sq += diff * diff;
            }
            smooth += w * sq;
        }
    }
    double fidelity = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double diff = m.data()[i] - m0.data()[i];
        fidelity += diff * diff;
    }
    return 0.5 * smooth + (1.0 - alpha) / alpha * fidelity;
}

} // namespace rwpm
