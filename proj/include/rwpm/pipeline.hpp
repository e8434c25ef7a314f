#pragma once

// End-to-end refinement: split the embedding map into n x n sub-maps, diffuse
// each sub-map on its own manifold graph, score the refined sub-maps,
// optionally calibrate their score baselines, and reassemble.

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rwpm/diffusion.hpp"
#include "rwpm/errors.hpp"
#include "rwpm/graph.hpp"
#include "rwpm/key_value.hpp"
#include "rwpm/parallel.hpp"
#include "rwpm/partition.hpp"
#include "rwpm/scoring.hpp"
#include "rwpm/tensor_io.hpp"

namespace rwpm {

struct PipelineConfig {
    double alpha = kDefaultAlpha;
    double tau = kDefaultTemperature;
    std::size_t iterations = kDefaultIterations;
    std::size_t partition = kDefaultPartitionMask;
    GraphMode graph = GraphMode::softmax;
    std::size_t knn = 0; // topk graph only
    Solver solver = Solver::iterative;
    ScoringFunction scoring{};
    std::optional<CalibrationMode> calibration; // unset: off for n <= 2, multiplicative above
    bool renormalize = false;
    double tolerance = 0.0;
    unsigned threads = 1;

    CalibrationMode effective_calibration() const {
        if (partition < 2) return CalibrationMode::off;
        return calibration.value_or(partition > 2 ? CalibrationMode::multiplicative : CalibrationMode::off);
    }

    DiffusionConfig diffusion() const {
        DiffusionConfig d;
        d.alpha = alpha;
        d.iterations = iterations;
        d.solver = solver;
        d.tolerance = tolerance;
        return d;
    }

    void validate() const {
        if (solver == Solver::closed_form ? !(alpha > 0.0 && alpha < 1.0) : !(alpha >= 0.0 && alpha < 1.0))
            throw ParameterError("alpha " + std::to_string(alpha) + " out of range for the chosen solver");
        if (!(tau > 0.0)) throw ParameterError("tau must be positive");
        if (partition < 1) throw ParameterError("partition n must be >= 1");
        if (graph == GraphMode::topk && knn < 1) throw ParameterError("topk graph needs knn >= 1");
        if (tolerance < 0.0) throw ParameterError("tolerance must be >= 0");
    }

    /// Applies keys alpha, tau, iters, partition, knn, solver, score_fn,
    /// activation, calibrate, renormalize, tolerance, threads.
    void apply_key_values(const KeyValues& kv) {
        for (const auto& [key, value] : kv) {
            if (key == "alpha") alpha = parse_double(key, value);
            else if (key == "tau") tau = parse_double(key, value);
            else if (key == "iters") iterations = parse_u64(key, value);
            else if (key == "partition") partition = parse_u64(key, value);
            else if (key == "knn") {
                knn = parse_u64(key, value);
                graph = knn > 0 ? GraphMode::topk : GraphMode::softmax;
            } else if (key == "solver") {
                if (value == "iterative") solver = Solver::iterative;
                else if (value == "closed_form") solver = Solver::closed_form;
                else throw ParameterError("solver must be iterative or closed_form");
            } else if (key == "score_fn") scoring.kind = parse_score_kind(value);
            else if (key == "activation") scoring.activation = parse_activation(value);
            else if (key == "calibrate") {
                if (value == "auto") calibration.reset();
                else calibration = parse_calibration_mode(value);
            } else if (key == "renormalize") renormalize = value == "1" || value == "true";
            else if (key == "tolerance") tolerance = parse_double(key, value);
            else if (key == "threads") threads = static_cast<unsigned>(parse_u64(key, value));
            else throw ParameterError("pipeline config: unknown key '" + key + "'");
        }
    }

    void write_key_values(std::ostream& out) const {
        out.precision(17);
        out << "alpha=" << alpha << "\ntau=" << tau << "\niters=" << iterations << "\npartition=" << partition
            << "\ngraph=" << (graph == GraphMode::topk ? "topk" : "softmax") << "\nknn=" << knn
            << "\nsolver=" << (solver == Solver::closed_form ? "closed_form" : "iterative")
            << "\nscore_fn=" << to_string(scoring.kind)
            << "\nactivation=" << (scoring.activation == Activation::softmax ? "softmax" : "sigmoid")
            << "\ncalibrate=" << to_string(effective_calibration()) << "\nrenormalize=" << (renormalize ? 1 : 0)
            << "\ntolerance=" << tolerance << "\nthreads=" << threads << '\n';
    }
};

struct StageTimings {
    double split_ms = 0.0;
    double refine_ms = 0.0;
    double score_ms = 0.0;
    double calibrate_ms = 0.0;
    double assemble_ms = 0.0;
};

struct PipelineOutput {
    EmbeddingMap refined;
    std::optional<ScoreMap> scores;
    std::optional<CalibrationReport> calibration;
    std::size_t peak_matrix_elems = 0; // N*N of one sub-map operator
    StageTimings timings;
    std::vector<std::string> warnings;
};

namespace detail {

class Stopwatch {
public:
    double lap_ms() {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
        return ms;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

} // namespace detail

/// normalize -> affinity -> transition -> diffuse on one (sub-)map. The
/// diffusion starts from the raw embeddings; normalization only feeds the
/// affinity. Output is rounded to real32 storage.
inline EmbeddingMap refine_submap(const EmbeddingMap& sub, const PipelineConfig& cfg, unsigned threads = 1) {
    const Matrix x = to_pixel_matrix(sub);
    const auto w = build_affinity(l2_normalize_rows(x), true, threads);
    const auto s = cfg.graph == GraphMode::topk ? topk_transition(w, cfg.knn, cfg.tau, threads)
                                                : softmax_transition(w, cfg.tau, threads);
    auto dcfg = cfg.diffusion();
    dcfg.threads = threads;
    auto result = diffuse(s, x, dcfg);
    const Matrix refined = cfg.renormalize ? l2_normalize_rows(result.refined) : std::move(result.refined);
    return from_pixel_matrix(refined, sub.height(), sub.width());
}

/// Runs the full pipeline. With no classifier only the refinement stage runs.
inline PipelineOutput run_pipeline(const EmbeddingMap& embeddings, const PipelineConfig& cfg,
                                   const LinearClassifier* classifier = nullptr) {
    cfg.validate();
    PipelineOutput out;
    detail::Stopwatch clock;
    const std::size_t n = cfg.partition;
    const auto parts = split_map(embeddings, n);
    const std::size_t sub_pixels = parts.front().height() * parts.front().width();
    out.peak_matrix_elems = sub_pixels * sub_pixels;
    out.timings.split_ms = clock.lap_ms();

    std::vector<EmbeddingMap> refined(parts.size());
    parallel_for(0, parts.size(), cfg.threads, [&](std::size_t i) { refined[i] = refine_submap(parts[i], cfg); });
    out.timings.refine_ms = clock.lap_ms();

    const auto mode = cfg.effective_calibration();
    if (n > 2 && mode == CalibrationMode::off)
        out.warnings.push_back("partition n=" + std::to_string(n) +
                               " > 2 with calibration off; sub-map score baselines may disagree");

    if (classifier) {
        std::vector<ScoreMap> scores(refined.size());
        parallel_for(0, refined.size(), cfg.threads,
                     [&](std::size_t i) { scores[i] = score_map(refined[i], *classifier, cfg.scoring); });
        out.timings.score_ms = clock.lap_ms();
        if (mode != CalibrationMode::off) {
            auto [calibrated, report] = calibrate_scores(std::move(scores), n, mode);
            scores = std::move(calibrated);
            out.calibration = std::move(report);
        }
        out.timings.calibrate_ms = clock.lap_ms();
        out.scores = assemble_map(scores, n);
    }
    out.refined = assemble_map(refined, n);
    out.timings.assemble_ms = clock.lap_ms();
    return out;
}

} // namespace rwpm
