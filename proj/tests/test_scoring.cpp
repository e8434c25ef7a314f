#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rwpm/scoring.hpp"
#include "test_util.hpp"

using namespace rwpm;

namespace {

std::vector<double> v(std::initializer_list<double> x) { return x; }

double naive_energy(const std::vector<double>& l) {
    long double s = 0;
    for (double x : l) s += std::exp(static_cast<long double>(x));
    return static_cast<double>(-std::log(s));
}

} // namespace

TEST(Logits, DotProducts) {
    const LinearClassifier c(Matrix(2, 3, {1, 0, 0, 0, 2, 1}), {0.5, -1.0});
    const Matrix m(2, 3, {1, 2, 3, -1, 0, 4});
    const Matrix l = compute_logits(m, c);
    EXPECT_DOUBLE_EQ(l(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(l(0, 1), 6.0);
    EXPECT_DOUBLE_EQ(l(1, 0), -0.5);
    EXPECT_DOUBLE_EQ(l(1, 1), 3.0);
}

TEST(Logits, DimMismatchIsSizeError) {
    const LinearClassifier c(Matrix(2, 3, 1.0));
    EXPECT_THROW(compute_logits(Matrix(4, 2, 1.0), c), SizeError);
    EXPECT_THROW(LinearClassifier(Matrix(2, 3, 1.0), {1.0}), SizeError);
}

TEST(Energy, KnownValues) {
    EXPECT_NEAR(energy_score(v({0, 0})), -std::log(2.0), 1e-15);
    EXPECT_NEAR(energy_score(v({1, 2})), -2.313261687518223, 1e-12);
}

TEST(Energy, OverflowSafe) {
    EXPECT_NEAR(energy_score(v({1000, 1000})), -(1000 + std::log(2.0)), 1e-9);
    EXPECT_NEAR(energy_score(v({-1000, -1000})), 1000 - std::log(2.0), 1e-9);
}

TEST(Energy, MatchesLongDoubleOracleProperty) {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> u(-30, 30);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> l(1 + rng() % 10);
        for (auto& x : l) x = u(rng);
        EXPECT_NEAR(energy_score(l), naive_energy(l), 1e-12);
    }
}

TEST(Rba, KnownValues) {
    EXPECT_DOUBLE_EQ(rba_score(v({0, 0})), -1.0);
    EXPECT_NEAR(rba_score(v({-50, -50})), 0.0, 1e-20);
    EXPECT_LT(rba_score(v({-50, -50})), 0.0);
}

TEST(OneMinusMax, KnownValues) {
    EXPECT_NEAR(one_minus_max_score(v({2, 0})), 0.11920292202211755, 1e-15);
    EXPECT_NEAR(one_minus_max_score(v({0, 0}), Activation::softmax), 0.5, 1e-15);
}

TEST(Scores, MonotoneInLogitsProperty) {
    // Raising any logit lowers every score (weakly for 1-max when not the max).
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> l(2 + rng() % 5);
        for (auto& x : l) x = u(rng);
        auto up = l;
        up[rng() % up.size()] += 0.5;
        EXPECT_LT(energy_score(up), energy_score(l));
        EXPECT_LT(rba_score(up), rba_score(l));
        EXPECT_LE(one_minus_max_score(up), one_minus_max_score(l));
    }
}

TEST(ScoreMapFn, LayoutAndKinds) {
    const LinearClassifier c(Matrix(2, 1, {1.0, -1.0}));
    const EmbeddingMap m(1, 1, 2, {0.0f, 2.0f});
    const auto e = score_map(m, c, {ScoreKind::energy, Activation::sigmoid});
    EXPECT_EQ(e.height(), 1u);
    EXPECT_EQ(e.width(), 2u);
    EXPECT_NEAR(e.at(0, 0), -std::log(2.0), 1e-15);
    EXPECT_NEAR(e.at(0, 1), naive_energy({2.0, -2.0}), 1e-12);
    const auto r = score_map(m, c, {ScoreKind::rba, Activation::sigmoid});
    EXPECT_NEAR(r.at(0, 1), -1.0, 1e-15); // sigmoid(2) + sigmoid(-2)
}

TEST(ScoreKinds, Parse) {
    EXPECT_EQ(parse_score_kind("1-max"), ScoreKind::one_minus_max);
    EXPECT_EQ(parse_score_kind("rba"), ScoreKind::rba);
    EXPECT_THROW(parse_score_kind("msp"), ParameterError);
    EXPECT_THROW(parse_activation("tanh"), ParameterError);
}

TEST(Classifier, TensorRoundTrip) {
    const LinearClassifier c(Matrix(2, 2, {0.5, 1.0, -2.0, 4.0}), {1.0, 0.25});
    const auto back = LinearClassifier::from_tensors(c.weights_tensor(), c.bias_tensor());
    EXPECT_EQ(back.weights, c.weights);
    EXPECT_EQ(back.bias, c.bias);
}

TEST(Energy, FiniteForHugeLogits) {
    EXPECT_TRUE(std::isfinite(energy_score(v({1e4, -1e4, 3.0}))));
    EXPECT_TRUE(std::isfinite(energy_score(v({-1e4, -1e4}))));
}

TEST(Logits, PrototypeAndZeroEmbedding) {
    const LinearClassifier c(Matrix(2, 3, {0.6, 0.8, 0, 0, 0, 1}), {0.25, -0.5});
    const Matrix l = compute_logits(Matrix(2, 3, {0.6, 0.8, 0, 0, 0, 0}), LinearClassifier(c.weights));
    EXPECT_NEAR(l(0, 0), 1.0, 1e-15);
    const Matrix z = compute_logits(Matrix(1, 3, 0.0), c);
    EXPECT_EQ(z(0, 0), 0.25);
    EXPECT_EQ(z(0, 1), -0.5);
}

TEST(Logits, MatchesTripleLoop) {
    std::mt19937_64 rng(53);
    const Matrix m = test::random_matrix(rng, 5, 3);
    const LinearClassifier c(test::random_matrix(rng, 4, 3), {0.1, 0.2, 0.3, 0.4});
    const Matrix l = compute_logits(m, c);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 4; ++k) {
            double e = c.bias[k];
            for (std::size_t j = 0; j < 3; ++j) e += m(i, j) * c.weights(k, j);
            EXPECT_NEAR(l(i, k), e, 1e-15);
        }
}

TEST(Energy, SingleZeroLogit) { EXPECT_EQ(energy_score(v({0})), 0.0); }

TEST(Rba, HandCases) {
    EXPECT_EQ(rba_score(std::vector<double>(19, 0.0)), -9.5);
    EXPECT_NEAR(rba_score(std::vector<double>(19, 50.0)), -19.0, 1e-9);
    EXPECT_EQ(rba_score(v({1, -1})), -1.0);
}

TEST(OneMinusMax, HandCases) {
    EXPECT_NEAR(one_minus_max_score(v({50})), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(one_minus_max_score(v({0.3, 0.3, 0.3, 0.3}), Activation::softmax), 0.75);
}

TEST(ScoreMapFn, ConstantMapGivesConstantScores) {
    const LinearClassifier c(Matrix(2, 2, {1, 0, 0, 1}));
    const EmbeddingMap m(2, 3, 3, std::vector<float>(18, 0.5f));
    for (auto kind : {ScoreKind::energy, ScoreKind::rba, ScoreKind::one_minus_max}) {
        const auto s = score_map(m, c, {kind, Activation::sigmoid});
        for (double x : s.scores()) EXPECT_EQ(x, s.scores()[0]);
    }
}

TEST(ScoreMapFn, TwoByTwoOracle) {
    const LinearClassifier c(Matrix(2, 2, {1, 0, 0, 1}), {0.0, 0.5});
    // d=2, H=W=2; pixel p embedding (a[p], b[p]).
    const std::vector<float> a{1, 0, 0.5f, -1}, b{0, 1, 0.5f, 2};
    std::vector<float> raw(a);
    raw.insert(raw.end(), b.begin(), b.end());
    const EmbeddingMap m(2, 2, 2, raw);
    const auto e = score_map(m, c, {ScoreKind::energy, Activation::sigmoid});
    const auto r = score_map(m, c, {ScoreKind::rba, Activation::sigmoid});
    for (std::size_t p = 0; p < 4; ++p) {
        const double l0 = a[p], l1 = b[p] + 0.5;
        EXPECT_NEAR(e.scores()[p], -std::log(std::exp(l0) + std::exp(l1)), 1e-12);
        EXPECT_NEAR(r.scores()[p], -(1 / (1 + std::exp(-l0)) + 1 / (1 + std::exp(-l1))), 1e-12);
        EXPECT_NE(e.scores()[p], r.scores()[p]);
    }
    EXPECT_EQ(e.height(), r.height());
    EXPECT_EQ(e.width(), r.width());
}
