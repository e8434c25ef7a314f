#pragma once

// Seeded synthetic scenes with bent class manifolds. Every inlier class is a
// one-parameter arc that starts at its prototype and rotates toward a fixed
// tangent direction, so far-end inliers lose logit against their own class
// while staying connected to it. Outliers sit in one contiguous blob and are
// mixtures of the two prototypes whose regions border the blob.
//
// Random stream: std::mt19937_64 (output sequence fixed by the C++ standard).
//   uniform01 = (x >> 11) * 2^-53
//   normal    = Box-Muller cosine branch from two uniforms, u1 replaced by 1 - u1
// Draw order: K prototype vectors and K tangent vectors (d normals each),
// blob boundary index, blob top row, then pixels row-major (inliers: theta,
// then d normals; outliers: d normals).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/key_value.hpp"
#include "rwpm/matrix.hpp"
#include "rwpm/scoring.hpp"
#include "rwpm/tensor_io.hpp"

namespace rwpm {

inline constexpr const char* kSynthGenerator = "mt19937_64+box-muller";

struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t classes = 4;        // K
    std::size_t dim = 16;           // d
    std::size_t height = 64;        // H
    std::size_t width = 64;         // W
    double outlier_fraction = 0.1;
    double theta_max = 1.2;         // arc length of each class manifold, radians
    double noise_sigma = 0.02;
    double outlier_mix = 0.5;
    // The classifier is logit_scale * prototype with bias logit_bias, i.e. a
    // cosine classifier with a margin. Unit prototypes with zero bias give
    // logits in [-1, 1], where a two-prototype mixture outscores every inlier
    // under sum-based scores.
    double logit_scale = 50.0;
    double logit_bias = -40.0;

    void validate() const {
        auto fail = [](const std::string& m) { throw ParameterError("synth config: " + m); };
        if (classes < 2) fail("classes (K) must be >= 2");
        if (dim < 3) fail("dim (d) must be >= 3");
        if (dim < classes + 1) fail("dim (d) must exceed classes (K) to leave room for tangents");
        if (height < 1 || width < 1) fail("height and width must be >= 1");
        if (width < classes) fail("width must be >= classes so every class region is non-empty");
        if (!(outlier_fraction > 0.0 && outlier_fraction < 0.5)) fail("outlier_fraction must lie in (0, 0.5)");
        if (!(theta_max >= 0.0 && theta_max < std::numbers::pi / 2)) fail("theta_max must lie in [0, pi/2)");
        if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) fail("noise_sigma must be >= 0");
        if (!(outlier_mix > 0.0 && outlier_mix < 1.0)) fail("outlier_mix must lie in (0, 1)");
        if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) fail("logit_scale must be positive");
        if (!std::isfinite(logit_bias)) fail("logit_bias must be finite");
    }

    static SynthConfig from_key_values(const KeyValues& kv) {
        SynthConfig c;
        for (const auto& [key, value] : kv) {
            if (key == "seed") c.seed = parse_u64(key, value);
            else if (key == "classes" || key == "K") c.classes = parse_u64(key, value);
            else if (key == "dim" || key == "d") c.dim = parse_u64(key, value);
            else if (key == "height" || key == "H") c.height = parse_u64(key, value);
            else if (key == "width" || key == "W") c.width = parse_u64(key, value);
            else if (key == "outlier_fraction") c.outlier_fraction = parse_double(key, value);
            else if (key == "theta_max") c.theta_max = parse_double(key, value);
            else if (key == "noise_sigma") c.noise_sigma = parse_double(key, value);
            else if (key == "outlier_mix") c.outlier_mix = parse_double(key, value);
            else if (key == "logit_scale") c.logit_scale = parse_double(key, value);
            else if (key == "logit_bias") c.logit_bias = parse_double(key, value);
            else if (key == "generator") {
                if (value != kSynthGenerator) throw ParameterError("unsupported generator '" + value + "'");
            } else if (key.rfind("blob_", 0) == 0) {
                // Derived values echoed by manifests; ignored on input.
            } else {
                throw ParameterError("synth config: unknown key '" + key + "'");
            }
        }
        c.validate();
        return c;
    }

    void write_key_values(std::ostream& out) const {
        out.precision(17);
        out << "seed=" << seed << "\nclasses=" << classes << "\ndim=" << dim << "\nheight=" << height
            << "\nwidth=" << width << "\noutlier_fraction=" << outlier_fraction << "\ntheta_max=" << theta_max
            << "\nnoise_sigma=" << noise_sigma << "\noutlier_mix=" << outlier_mix << "\nlogit_scale=" << logit_scale
            << "\nlogit_bias=" << logit_bias << "\ngenerator=" << kSynthGenerator << '\n';
    }
};

struct OutlierBlob {
    std::size_t top = 0, left = 0, size = 0;
    std::size_t class_a = 0, class_b = 0; // outlier = mix * p_a + (1 - mix) * p_b
};

struct SynthScene {
    EmbeddingMap embeddings;
    LabelMap labels;
    LinearClassifier classifier;
    Matrix prototypes;            // [K, d], unit rows
    Matrix tangents;              // [K, d], unit rows orthogonal to own prototype
    std::vector<int> pixel_class; // class index per pixel, -1 for outliers
    OutlierBlob blob;
    SynthConfig manifest;

    void write_manifest(std::ostream& out) const {
        manifest.write_key_values(out);
        out << "blob_top=" << blob.top << "\nblob_left=" << blob.left << "\nblob_size=" << blob.size
            << "\nblob_classes=" << blob.class_a << ',' << blob.class_b << '\n';
    }
};

class SynthRandom {
public:
    explicit SynthRandom(std::uint64_t seed) : engine_(seed) {}
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double normal() {
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform01() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

/// Region (class) of column x when the grid is cut into K vertical stripes.
inline std::size_t stripe_of(std::size_t x, std::size_t width, std::size_t classes) noexcept {
    return x * classes / width;
}

inline SynthScene generate_scene(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t K = cfg.classes, d = cfg.dim, H = cfg.height, W = cfg.width;
    SynthRandom rng(cfg.seed);

    // Orthonormal prototypes, then tangents orthogonal to every prototype
    // (and to earlier tangents while the dimension allows).
    std::vector<std::vector<double>> basis;
    auto draw_direction = [&](std::size_t against) {
        for (;;) {
            std::vector<double> v(d);
            for (double& x : v) x = rng.normal();
            for (std::size_t b = 0; b < against; ++b) {
                const double p = dot(v, basis[b]);
                for (std::size_t c = 0; c < d; ++c) v[c] -= p * basis[b][c];
            }
            const double n = norm2(v);
            if (n < 1e-6) continue;
            for (double& x : v) x /= n;
            return v;
        }
    };
    for (std::size_t k = 0; k < K; ++k) basis.push_back(draw_direction(basis.size()));
    for (std::size_t k = 0; k < K; ++k) basis.push_back(draw_direction(K + k < d ? K + k : K));

    SynthScene scene;
    scene.manifest = cfg;
    scene.prototypes = Matrix(K, d);
    scene.tangents = Matrix(K, d);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t c = 0; c < d; ++c) {
            scene.prototypes(k, c) = basis[k][c];
            scene.tangents(k, c) = basis[K + k][c];
        }

    // Square blob straddling the boundary between stripes b-1 and b.
    auto& blob = scene.blob;
    const double side = std::round(std::sqrt(cfg.outlier_fraction * static_cast<double>(H * W)));
    blob.size = std::min<std::size_t>(std::max(1.0, side), std::min(H, W));
    const std::size_t boundary_class = 1 + rng.below(K - 1);
    const std::size_t boundary_x = (boundary_class * W + K - 1) / K; // first column of stripe b
    const std::size_t half = blob.size / 2;
    blob.left = std::min(boundary_x > half ? boundary_x - half : 0, W - blob.size);
    blob.top = rng.below(H - blob.size + 1);
    blob.class_a = boundary_class - 1;
    blob.class_b = boundary_class;

    std::vector<float> values(d * H * W);
    std::vector<std::uint8_t> labels(H * W);
    scene.pixel_class.assign(H * W, -1);
    std::vector<double> v(d);
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
            const bool outlier =
                y >= blob.top && y < blob.top + blob.size && x >= blob.left && x < blob.left + blob.size;
            const std::size_t pixel = y * W + x;
            if (outlier) {
                for (std::size_t c = 0; c < d; ++c)
                    v[c] = cfg.outlier_mix * scene.prototypes(blob.class_a, c) +
                           (1.0 - cfg.outlier_mix) * scene.prototypes(blob.class_b, c) + cfg.noise_sigma * rng.normal();
                labels[pixel] = kOutlier;
            } else {
                const std::size_t k = stripe_of(x, W, K);
                const double theta = rng.uniform01() * cfg.theta_max;
                const double ct = std::cos(theta), st = std::sin(theta);
                for (std::size_t c = 0; c < d; ++c)
                    v[c] = ct * scene.prototypes(k, c) + st * scene.tangents(k, c) + cfg.noise_sigma * rng.normal();
                labels[pixel] = kInlier;
                scene.pixel_class[pixel] = static_cast<int>(k);
            }
            const double n = norm2(v);
            if (n < kDegenerateRowNorm) throw NumericalError("synth produced a zero embedding");
            for (std::size_t c = 0; c < d; ++c) values[(c * H + y) * W + x] = static_cast<float>(v[c] / n);
        }

    scene.embeddings = EmbeddingMap(d, H, W, std::move(values));
    scene.labels = LabelMap(H, W, std::move(labels));
    Matrix weights(K, d);
    for (std::size_t i = 0; i < weights.size(); ++i)
        weights.data()[i] = cfg.logit_scale * scene.prototypes.data()[i];
    scene.classifier = LinearClassifier(std::move(weights), std::vector<double>(K, cfg.logit_bias));
    return scene;
}

struct ClassStatistics {
    std::size_t count = 0;
    double mean_cosine = 0.0;          // mean pairwise cosine over distinct pixel pairs
    double mean_prototype_logit = 0.0; // mean <x, unit prototype>
};

struct SceneStatistics {
    std::vector<ClassStatistics> classes; // one per inlier class
    std::size_t outlier_count = 0;
};

/// Mean of cos(x_i, x_j) over distinct pairs in `members`, via
/// |sum of unit rows|^2 = n + sum_{i != j} cos.
inline double mean_pairwise_cosine(const Matrix& pixels, const std::vector<std::size_t>& members) {
    if (members.size() < 2) return 1.0;
    std::vector<double> sum(pixels.cols(), 0.0);
    for (auto i : members) {
        const double n = norm2(pixels.row(i));
        if (n < kDegenerateRowNorm) throw DegenerateRowError(i, "zero embedding in cosine statistics");
        for (std::size_t c = 0; c < pixels.cols(); ++c) sum[c] += pixels(i, c) / n;
    }
    const double m = static_cast<double>(members.size());
    return (dot(sum, sum) - m) / (m * (m - 1.0));
}

/// Statistics of `pixels` (defaults to the scene's own embeddings) grouped by
/// the scene's class layout.
inline SceneStatistics scene_statistics(const SynthScene& scene, const Matrix* pixels = nullptr) {
    const Matrix own = pixels ? Matrix{} : to_pixel_matrix(scene.embeddings);
    const Matrix& x = pixels ? *pixels : own;
    const std::size_t K = scene.prototypes.rows();
    if (x.rows() != scene.pixel_class.size()) throw SizeError("statistics: pixel count mismatch");
    std::vector<std::vector<std::size_t>> members(K);
    SceneStatistics stats;
    for (std::size_t i = 0; i < scene.pixel_class.size(); ++i) {
        if (scene.pixel_class[i] < 0) ++stats.outlier_count;
        else members[static_cast<std::size_t>(scene.pixel_class[i])].push_back(i);
    }
    stats.classes.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        auto& cs = stats.classes[k];
        cs.count = members[k].size();
        if (cs.count == 0) continue;
        cs.mean_cosine = mean_pairwise_cosine(x, members[k]);
        double logit = 0.0;
        for (auto i : members[k]) logit += dot(x.row(i), scene.prototypes.row(k));
        cs.mean_prototype_logit = logit / static_cast<double>(cs.count);
    }
    return stats;
}

} // namespace rwpm
