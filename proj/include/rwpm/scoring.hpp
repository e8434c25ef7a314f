#pragma once

// Logits from a linear prototype classifier and the per-pixel anomaly
// scores built on them. Every score is "higher = more anomalous".

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/matrix.hpp"
#include "rwpm/tensor_io.hpp"

namespace rwpm {

/// K prototype rows of dimension d, plus an optional per-class bias.
struct LinearClassifier {
    Matrix weights;            // [K, d]
    std::vector<double> bias;  // [K], zeros by default

    LinearClassifier() = default;
    explicit LinearClassifier(Matrix w, std::vector<double> b = {}) : weights(std::move(w)), bias(std::move(b)) {
        if (weights.rows() == 0 || weights.cols() == 0) throw SizeError("classifier needs K >= 1 and d >= 1");
        if (bias.empty()) bias.assign(weights.rows(), 0.0);
        if (bias.size() != weights.rows())
            throw SizeError("classifier bias has " + std::to_string(bias.size()) + " entries, expected K = " +
                            std::to_string(weights.rows()));
    }

    std::size_t classes() const noexcept { return weights.rows(); }
    std::size_t dim() const noexcept { return weights.cols(); }

    static LinearClassifier from_tensors(const Tensor& w, const std::optional<Tensor>& b = std::nullopt) {
        if (w.dtype() != DType::real32 || w.rank() != 2)
            throw FormatError("classifier tensor must be real32 with dims [K, d]");
        const auto& v = w.real_values();
        Matrix m(w.dims()[0], w.dims()[1], std::vector<double>(v.begin(), v.end()));
        std::vector<double> bias;
        if (b) {
            if (b->dtype() != DType::real32 || b->rank() != 1)
                throw FormatError("classifier bias tensor must be real32 with dims [K]");
            bias.assign(b->real_values().begin(), b->real_values().end());
        }
        return LinearClassifier(std::move(m), std::move(bias));
    }
    Tensor weights_tensor() const {
        std::vector<float> v(weights.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(weights.data()[i]);
        return Tensor::real32({weights.rows(), weights.cols()}, std::move(v));
    }
    Tensor bias_tensor() const {
        return Tensor::real32({bias.size()}, std::vector<float>(bias.begin(), bias.end()));
    }
};

enum class ScoreKind { energy, rba, one_minus_max };
enum class Activation { sigmoid, softmax };

struct ScoringFunction {
    ScoreKind kind = ScoreKind::energy;
    Activation activation = Activation::sigmoid; // one_minus_max only
};

inline Matrix compute_logits(const Matrix& m, const LinearClassifier& c) {
    if (m.cols() != c.dim())
        throw SizeError("embedding dim " + std::to_string(m.cols()) + " does not match classifier dim " +
                        std::to_string(c.dim()));
    Matrix logits(m.rows(), c.classes());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t k = 0; k < c.classes(); ++k) logits(i, k) = dot(m.row(i), c.weights.row(k)) + c.bias[k];
    return logits;
}

inline double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// -log sum_k exp(l_k)
inline double energy_score(std::span<const double> logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double l : logits) total += std::exp(l - top);
    return -(top + std::log(total));
}

/// -sum_k sigmoid(l_k)
inline double rba_score(std::span<const double> logits) {
    double total = 0.0;
    for (double l : logits) total += sigmoid(l);
    return -total;
}

/// 1 - max_k act(l)_k
inline double one_minus_max_score(std::span<const double> logits, Activation act = Activation::sigmoid) {
    const double top = *std::max_element(logits.begin(), logits.end());
    if (act == Activation::sigmoid) return 1.0 - sigmoid(top);
    double total = 0.0;
    for (double l : logits) total += std::exp(l - top);
    return 1.0 - 1.0 / total;
}

inline double score_row(std::span<const double> logits, const ScoringFunction& fn) {
    switch (fn.kind) {
    case ScoreKind::energy: return energy_score(logits);
    case ScoreKind::rba: return rba_score(logits);
    case ScoreKind::one_minus_max: return one_minus_max_score(logits, fn.activation);
    }
    throw ParameterError("unknown scoring function");
}

/// Scores a pixel-major matrix laid out as an H x W map.
inline ScoreMap score_map(const Matrix& pixels, std::size_t h, std::size_t w, const LinearClassifier& c,
                          const ScoringFunction& fn) {
    if (pixels.rows() != h * w) throw SizeError("pixel matrix rows do not match H*W");
    const Matrix logits = compute_logits(pixels, c);
    std::vector<double> scores(pixels.rows());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = score_row(logits.row(i), fn);
        if (!std::isfinite(scores[i]))
            throw NumericalError("non-finite anomaly score at pixel " + std::to_string(i));
    }
    return {h, w, std::move(scores)};
}

inline ScoreMap score_map(const EmbeddingMap& m, const LinearClassifier& c, const ScoringFunction& fn) {
    return score_map(to_pixel_matrix(m), m.height(), m.width(), c, fn);
}

inline const char* to_string(ScoreKind k) noexcept {
    switch (k) {
    case ScoreKind::energy: return "energy";
    case ScoreKind::rba: return "rba";
    case ScoreKind::one_minus_max: return "one_minus_max";
    }
    return "?";
}

inline ScoreKind parse_score_kind(const std::string& s) {
    if (s == "energy") return ScoreKind::energy;
    if (s == "rba") return ScoreKind::rba;
    if (s == "one_minus_max" || s == "1-max") return ScoreKind::one_minus_max;
    throw ParameterError("unknown scoring function '" + s + "' (energy | rba | one_minus_max)");
}

inline Activation parse_activation(const std::string& s) {
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "softmax") return Activation::softmax;
    throw ParameterError("unknown activation '" + s + "' (sigmoid | softmax)");
}

} // namespace rwpm
