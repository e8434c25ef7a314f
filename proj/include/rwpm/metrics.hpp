#pragma once

// Pixel-level AUROC, average precision and FPR at 95% TPR. Outlier pixels
// are positives; ignore pixels (label 255) are dropped before anything else.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/tensor_io.hpp"

namespace rwpm {

struct EvalResult {
    double auroc = 0.0;
    double ap = 0.0;
    double fpr95 = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;

    std::string line() const {
        std::ostringstream os;
        os.precision(10);
        os << "auroc=" << auroc << " ap=" << ap << " fpr95=" << fpr95 << " n_pos=" << n_pos << " n_neg=" << n_neg;
        return os.str();
    }
    void write_key_values(std::ostream& out) const {
        out.precision(17);
        out << "auroc=" << auroc << "\nap=" << ap << "\nfpr95=" << fpr95 << "\nn_pos=" << n_pos
            << "\nn_neg=" << n_neg << '\n';
    }
};

namespace detail {

struct Sample {
    double score;
    bool positive;
};

inline std::vector<Sample> collect(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw SizeError("score and label counts differ: " + std::to_string(scores.size()) + " vs " +
                        std::to_string(labels.size()));
    std::vector<Sample> out;
    out.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == kIgnore) continue;
        if (labels[i] != kInlier && labels[i] != kOutlier)
            throw DataError("label " + std::to_string(labels[i]) + " at pixel " + std::to_string(i) + " is invalid");
        if (std::isnan(scores[i])) throw DataError("NaN score at pixel " + std::to_string(i));
        out.push_back({scores[i], labels[i] == kOutlier});
    }
    return out;
}

inline void count_classes(const std::vector<Sample>& s, std::size_t& pos, std::size_t& neg) {
    pos = static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](const Sample& x) { return x.positive; }));
    neg = s.size() - pos;
    if (pos == 0) throw EvaluationError("no outlier (positive) pixels to evaluate");
    if (neg == 0) throw EvaluationError("no inlier (negative) pixels to evaluate");
}

// TPR >= 0.95 decided on integers so both evaluation paths agree exactly.
inline bool reaches_tpr95(std::size_t tp, std::size_t pos) noexcept { return 20 * tp >= 19 * pos; }

} // namespace detail

/// Sort once, sweep thresholds from the highest distinct score down.
inline EvalResult evaluate(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    auto samples = detail::collect(scores, labels);
    EvalResult r;
    detail::count_classes(samples, r.n_pos, r.n_neg);
    std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.score > b.score; });

    // AUROC numerator in integers: each tie group adds fp_g * (tp_before + tp_after),
    // i.e. twice its trapezoid in count units. One final division keeps
    // all-tie and perfectly separated inputs exact.
    std::uint64_t tp = 0, fp = 0, twice_area = 0;
    double ap_sum = 0.0; // sum of tp_g * precision; divided by n_pos at the end
    bool fpr_found = false;
    for (std::size_t i = 0; i < samples.size();) {
        const std::uint64_t tp0 = tp, fp0 = fp;
        const double s = samples[i].score;
        for (; i < samples.size() && samples[i].score == s; ++i) (samples[i].positive ? tp : fp)++;
        twice_area += (fp - fp0) * (tp + tp0);
        if (tp > tp0) ap_sum += static_cast<double>(tp - tp0) * (static_cast<double>(tp) / static_cast<double>(tp + fp));
        if (!fpr_found && detail::reaches_tpr95(tp, r.n_pos)) {
            r.fpr95 = static_cast<double>(fp) / static_cast<double>(r.n_neg);
            fpr_found = true;
        }
    }
    r.auroc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(r.n_pos) * static_cast<double>(r.n_neg));
    r.ap = ap_sum / static_cast<double>(r.n_pos);
    return r;
}

inline EvalResult evaluate(const ScoreMap& scores, const LabelMap& labels) {
    if (scores.height() != labels.height() || scores.width() != labels.width())
        throw SizeError("score map and label map dimensions differ");
    return evaluate(std::span<const double>(scores.scores()), std::span<const std::uint8_t>(labels.labels()));
}

/// Reference implementation: every distinct score is a threshold (predict
/// positive when score >= threshold) and each table row is counted from
/// scratch. AUROC is computed from the ROC trapezoid and cross-checked
/// against the pairwise-comparison definition. O(N * distinct + P * N).
inline EvalResult evaluate_bruteforce(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const auto samples = detail::collect(scores, labels);
    EvalResult r;
    detail::count_classes(samples, r.n_pos, r.n_neg);
    const double pos = static_cast<double>(r.n_pos), neg = static_cast<double>(r.n_neg);

    std::vector<double> thresholds;
    for (const auto& s : samples) thresholds.push_back(s.score);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    struct Row {
        std::size_t tp, fp;
    };
    std::vector<Row> table;
    for (double t : thresholds) {
        Row row{0, 0};
        for (const auto& s : samples)
            if (s.score >= t) (s.positive ? row.tp : row.fp)++;
        table.push_back(row);
    }

    double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0, prev_recall = 0.0, ap = 0.0;
    r.fpr95 = 1.0;
    bool fpr_found = false;
    for (const auto& row : table) {
        const double tpr = row.tp / pos, fpr = row.fp / neg;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        if (row.tp > 0) {
            const double precision = static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fp);
            ap += (tpr - prev_recall) * precision;
            prev_recall = tpr;
        }
        if (detail::reaches_tpr95(row.tp, r.n_pos)) {
            r.fpr95 = fpr_found ? std::min(r.fpr95, fpr) : fpr;
            fpr_found = true;
        }
        prev_tpr = tpr;
        prev_fpr = fpr;
    }

    double wins = 0.0;
    for (const auto& p : samples) {
        if (!p.positive) continue;
        for (const auto& q : samples) {
            if (q.positive) continue;
            wins += p.score > q.score ? 1.0 : (p.score == q.score ? 0.5 : 0.0);
        }
    }
    r.auroc = wins / (pos * neg);
    if (std::abs(r.auroc - area) > 1e-9)
        throw NumericalError("oracle AUROC mismatch between pairwise and trapezoid definitions");
    r.ap = ap;
    return r;
}

inline EvalResult evaluate_bruteforce(const ScoreMap& scores, const LabelMap& labels) {
    if (scores.height() != labels.height() || scores.width() != labels.width())
        throw SizeError("score map and label map dimensions differ");
    return evaluate_bruteforce(std::span<const double>(scores.scores()),
                               std::span<const std::uint8_t>(labels.labels()));
}

} // namespace rwpm
