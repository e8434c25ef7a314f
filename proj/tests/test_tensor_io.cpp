#include <gtest/gtest.h>

#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "rwpm/tensor_io.hpp"
#include "test_util.hpp"

using namespace rwpm;

namespace {

std::string bytes_of(const Tensor& t) {
    std::ostringstream os(std::ios::binary);
    write_tensor(t, os);
    return os.str();
}

Tensor from_bytes(const std::string& b) {
    std::istringstream is(b, std::ios::binary);
    return read_tensor(is);
}

} // namespace

TEST(TensorIo, ScalarLikeTensorIs28Bytes) {
    const auto b = bytes_of(Tensor::real32({1}, {0.0f}));
    ASSERT_EQ(b.size(), 28u);
    EXPECT_EQ(b.substr(0, 8), "RWTENSR1");
    // dtype 0, rank 1, extent 1, payload 0.0f
    const unsigned char expected[20] = {0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(std::memcmp(b.data() + 8, expected, 20), 0);
}

TEST(TensorIo, LabelPayloadBytes) {
    const auto b = bytes_of(LabelMap(2, 2, {0, 0, 0, 0}).to_tensor());
    ASSERT_EQ(b.size(), 8u + 4 + 4 + 2 * 8 + 4);
    EXPECT_EQ(static_cast<unsigned char>(b[8]), 1u); // dtype label8
    EXPECT_EQ(b.substr(b.size() - 4), std::string(4, '\0'));
}

TEST(TensorIo, LittleEndianFloatPayload) {
    const auto b = bytes_of(Tensor::real32({1}, {1.0f})); // 0x3F800000
    EXPECT_EQ(static_cast<unsigned char>(b[24]), 0x00);
    EXPECT_EQ(static_cast<unsigned char>(b[27]), 0x3F);
    EXPECT_EQ(static_cast<unsigned char>(b[26]), 0x80);
}

TEST(TensorIo, RoundTripIsBitExactProperty) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> rank_d(1, 4), ext_d(1, 5);
    std::normal_distribution<float> g(0.0f, 100.0f);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint64_t> dims(static_cast<std::size_t>(rank_d(rng)));
        std::size_t count = 1;
        for (auto& e : dims) count *= (e = static_cast<std::uint64_t>(ext_d(rng)));
        Tensor t;
        if (trial % 3 == 0) {
            std::vector<std::uint8_t> v(count);
            for (auto& x : v) x = static_cast<std::uint8_t>(rng());
            t = Tensor::label8(dims, v);
        } else {
            std::vector<float> v(count);
            for (auto& x : v) x = g(rng);
            if (trial % 5 == 1) v[0] = std::numeric_limits<float>::infinity();
            if (trial % 7 == 2) v[0] = -0.0f;
            t = Tensor::real32(dims, v);
        }
        const auto b1 = bytes_of(t);
        const Tensor back = from_bytes(b1);
        EXPECT_EQ(back, t);
        EXPECT_EQ(bytes_of(back), b1);
    }
}

TEST(TensorIo, BadMagicIsFormatError) {
    auto b = bytes_of(Tensor::real32({2}, {1.0f, 2.0f}));
    b[7] = '2';
    EXPECT_THROW(from_bytes(b), FormatError);
}

TEST(TensorIo, UnknownDtypeIsFormatError) {
    auto b = bytes_of(Tensor::real32({2}, {1.0f, 2.0f}));
    b[8] = 7;
    EXPECT_THROW(from_bytes(b), FormatError);
}

TEST(TensorIo, TruncatedPayloadIsLengthError) {
    auto b = bytes_of(Tensor::real32({4}, {1, 2, 3, 4}));
    b.resize(b.size() - 4); // 3 of 4 elements present
    try {
        from_bytes(b);
        FAIL() << "expected LengthError";
    } catch (const LengthError& e) {
        EXPECT_NE(std::string(e.what()).find("only 3 present"), std::string::npos);
    }
    EXPECT_THROW(from_bytes(b.substr(0, 10)), LengthError);
}

TEST(TensorIo, NaNIsDataError) {
    auto b = bytes_of(Tensor::real32({2}, {1.0f, 2.0f}));
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(b.data() + b.size() - 4, &nan, 4);
    EXPECT_THROW(from_bytes(b), DataError);
    EXPECT_THROW(Tensor::real32({1}, {nan}), DataError);
}

TEST(TensorIo, InvalidShapesRejected) {
    EXPECT_THROW(Tensor::real32({}, {}), FormatError);
    EXPECT_THROW(Tensor::real32({0}, {}), FormatError);
    EXPECT_THROW(Tensor::real32({3}, {1, 2}), LengthError);
    EXPECT_THROW(LabelMap(1, 2, {0, 7}), DataError);
}

TEST(PixelMatrix, LayoutDefinition) {
    // d=1, H=1, W=2, values [[a, b]]
    const EmbeddingMap m(1, 1, 2, {3.5f, -1.25f});
    const Matrix x = to_pixel_matrix(m);
    ASSERT_EQ(x.rows(), 2u);
    ASSERT_EQ(x.cols(), 1u);
    EXPECT_EQ(x(0, 0), 3.5);
    EXPECT_EQ(x(1, 0), -1.25);
}

TEST(PixelMatrix, MatchesIndependentIndexing) {
    // d=2, H=2, W=2: value at flat [c][y][x] read by hand.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-1, 1);
    std::vector<float> raw(8);
    for (auto& v : raw) v = u(rng);
    const EmbeddingMap m(2, 2, 2, raw);
    const Matrix x = to_pixel_matrix(m);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 2; ++c) {
            const std::size_t y = i / 2, xx = i % 2;
            EXPECT_EQ(x(i, c), static_cast<double>(raw[c * 4 + y * 2 + xx]));
        }
}

TEST(PixelMatrix, RoundTripBitExactProperty) {
    std::mt19937_64 rng(5);
    std::normal_distribution<float> g;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 1 + rng() % 5, h = 1 + rng() % 6, w = 1 + rng() % 6;
        std::vector<float> v(d * h * w);
        for (auto& x : v) x = g(rng);
        const EmbeddingMap m(d, h, w, v);
        EXPECT_EQ(from_pixel_matrix(to_pixel_matrix(m), h, w), m);
    }
}

TEST(Normalize, ThreeFourFive) {
    const Matrix x(1, 2, {3.0, 4.0});
    const Matrix n = l2_normalize_rows(x);
    EXPECT_NEAR(n(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(n(0, 1), 0.8, 1e-15);
}

TEST(Normalize, UnitRowUnchanged) {
    const Matrix x(1, 3, {0.0, 0.6, 0.8});
    const Matrix n = l2_normalize_rows(x);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(n(0, c), x(0, c), 1e-7);
}

TEST(Normalize, ZeroRowNamesPixel) {
    const Matrix x(3, 2, {1, 0, 0, 0, 0, 1});
    try {
        l2_normalize_rows(x);
        FAIL();
    } catch (const DegenerateRowError& e) {
        EXPECT_EQ(e.row(), 1u);
        EXPECT_NE(std::string(e.what()).find("pixel 1"), std::string::npos);
    }
}

TEST(Normalize, UnitNormProperty) {
    std::mt19937_64 rng(9);
    const Matrix x = test::random_matrix(rng, 200, 7, -1e3, 1e3);
    const Matrix n = l2_normalize_rows(x);
    for (std::size_t i = 0; i < n.rows(); ++i) EXPECT_LE(std::abs(norm2(n.row(i)) - 1.0), 1e-6);
}
