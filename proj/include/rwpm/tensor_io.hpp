#pragma once

// RWTENSR1 binary tensors and the dense map types built on them.
//
// Layout (all integers little-endian):
//   8 bytes   magic "RWTENSR1"
//   u32       dtype code (0 = IEEE-754 binary32, 1 = unsigned 8-bit)
//   u32       rank
//   rank x u64 extents
//   payload   row-major, last dimension fastest

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/matrix.hpp"

namespace rwpm {

enum class DType : std::uint32_t { real32 = 0, label8 = 1 };

inline constexpr std::array<char, 8> kTensorMagic{'R', 'W', 'T', 'E', 'N', 'S', 'R', '1'};

class Tensor {
public:
    Tensor() = default;

    static Tensor real32(std::vector<std::uint64_t> dims, std::vector<float> values) {
        Tensor t;
        t.dtype_ = DType::real32;
        t.dims_ = std::move(dims);
        t.real_ = std::move(values);
        t.validate();
        return t;
    }
    static Tensor label8(std::vector<std::uint64_t> dims, std::vector<std::uint8_t> values) {
        Tensor t;
        t.dtype_ = DType::label8;
        t.dims_ = std::move(dims);
        t.labels_ = std::move(values);
        t.validate();
        return t;
    }

    DType dtype() const noexcept { return dtype_; }
    const std::vector<std::uint64_t>& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::uint64_t element_count() const noexcept {
        return std::accumulate(dims_.begin(), dims_.end(), std::uint64_t{1},
                               std::multiplies<>{});
    }

    const std::vector<float>& real_values() const {
        if (dtype_ != DType::real32) throw FormatError("tensor is not real32");
        return real_;
    }
    const std::vector<std::uint8_t>& label_values() const {
        if (dtype_ != DType::label8) throw FormatError("tensor is not label8");
        return labels_;
    }

    bool operator==(const Tensor&) const = default;

private:
    void validate() const {
        if (dims_.empty()) throw FormatError("tensor rank must be >= 1");
        for (auto e : dims_)
            if (e == 0) throw FormatError("tensor extents must be >= 1");
        const std::uint64_t n = element_count();
        const std::size_t have = dtype_ == DType::real32 ? real_.size() : labels_.size();
        if (have != n)
            throw LengthError("tensor payload has " + std::to_string(have) +
                              " elements, dims require " + std::to_string(n));
        if (dtype_ == DType::real32)
            for (std::size_t i = 0; i < real_.size(); ++i)
                if (std::isnan(real_[i]))
                    throw DataError("tensor contains NaN at element " + std::to_string(i));
    }

    DType dtype_ = DType::real32;
    std::vector<std::uint64_t> dims_;
    std::vector<float> real_;
    std::vector<std::uint8_t> labels_;
};

namespace detail {

template <typename U>
void put_le(std::ostream& out, U value) {
    std::array<char, sizeof(U)> bytes{};
    for (std::size_t i = 0; i < sizeof(U); ++i)
        bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
    out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(U)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw LengthError(std::string("truncated tensor header while reading ") + what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

} // namespace detail

inline void write_tensor(const Tensor& t, std::ostream& out) {
    out.write(kTensorMagic.data(), kTensorMagic.size());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dtype()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.dims()) detail::put_le<std::uint64_t>(out, e);
    if (t.dtype() == DType::real32) {
        for (float v : t.real_values()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    } else {
        const auto& labels = t.label_values();
        out.write(reinterpret_cast<const char*>(labels.data()),
                  static_cast<std::streamsize>(labels.size()));
    }
    if (!out) throw IoError("failed to write tensor");
}

inline Tensor read_tensor(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != static_cast<std::streamsize>(magic.size()))
        throw LengthError("truncated tensor header while reading magic");
    if (magic != kTensorMagic)
        throw FormatError("bad tensor magic '" + std::string(magic.data(), magic.size()) +
                          "', expected RWTENSR1");
    const auto code = detail::get_le<std::uint32_t>(in, "dtype");
    if (code > 1) throw FormatError("unknown tensor dtype code " + std::to_string(code));
    const auto rank = detail::get_le<std::uint32_t>(in, "rank");
    if (rank == 0) throw FormatError("tensor rank must be >= 1");
    std::vector<std::uint64_t> dims(rank);
    std::uint64_t count = 1;
    for (auto& e : dims) {
        e = detail::get_le<std::uint64_t>(in, "extent");
        if (e == 0) throw FormatError("tensor extents must be >= 1");
        if (count > (std::uint64_t{1} << 40) / e) throw FormatError("tensor too large");
        count *= e;
    }
    const std::size_t elem = code == 0 ? 4 : 1;
    std::vector<char> raw(count * elem);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    const auto got = static_cast<std::uint64_t>(in.gcount());
    if (got != raw.size())
        throw LengthError("tensor declares " + std::to_string(count) + " elements, only " +
                          std::to_string(got / elem) + " present");
    if (code == 1) {
        std::vector<std::uint8_t> labels(raw.begin(), raw.end());
        return Tensor::label8(std::move(dims), std::move(labels));
    }
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (std::size_t b = 0; b < 4; ++b)
            bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * i + b])) << (8 * b);
        values[i] = std::bit_cast<float>(bits);
    }
    return Tensor::real32(std::move(dims), std::move(values));
}

inline void write_tensor_file(const Tensor& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_tensor(t, out);
}

/// Reads exactly one tensor; trailing bytes are a length error.
inline Tensor read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    Tensor t = read_tensor(in);
    if (in.peek() != std::ifstream::traits_type::eof())
        throw LengthError("trailing bytes after tensor in '" + path + "'");
    return t;
}

/// Pixel embeddings stored channel-major as [d, H, W].
class EmbeddingMap {
public:
    EmbeddingMap() = default;
    EmbeddingMap(std::size_t d, std::size_t h, std::size_t w, std::vector<float> values)
        : d_(d), h_(h), w_(w), values_(std::move(values)) {
        if (d_ == 0 || h_ == 0 || w_ == 0) throw SizeError("embedding map extents must be >= 1");
        if (values_.size() != d_ * h_ * w_) throw SizeError("embedding payload does not match d*H*W");
    }
    EmbeddingMap(std::size_t d, std::size_t h, std::size_t w)
        : EmbeddingMap(d, h, w, std::vector<float>(d * h * w, 0.0f)) {}

    static EmbeddingMap from_tensor(const Tensor& t) {
        if (t.dtype() != DType::real32 || t.rank() != 3)
            throw FormatError("embedding tensor must be real32 with dims [d, H, W]");
        return {t.dims()[0], t.dims()[1], t.dims()[2], t.real_values()};
    }
    Tensor to_tensor() const { return Tensor::real32({d_, h_, w_}, values_); }

    std::size_t channels() const noexcept { return d_; }
    std::size_t height() const noexcept { return h_; }
    std::size_t width() const noexcept { return w_; }

    float& at(std::size_t c, std::size_t y, std::size_t x) noexcept { return values_[(c * h_ + y) * w_ + x]; }
    float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return values_[(c * h_ + y) * w_ + x];
    }
    const std::vector<float>& values() const noexcept { return values_; }

    bool operator==(const EmbeddingMap&) const = default;

private:
    std::size_t d_ = 0, h_ = 0, w_ = 0;
    std::vector<float> values_;
};

/// Per-pixel anomaly scores. Held in binary64; serialized as real32.
class ScoreMap {
public:
    ScoreMap() = default;
    ScoreMap(std::size_t h, std::size_t w, std::vector<double> scores)
        : h_(h), w_(w), scores_(std::move(scores)) {
        if (h_ == 0 || w_ == 0) throw SizeError("score map extents must be >= 1");
        if (scores_.size() != h_ * w_) throw SizeError("score payload does not match H*W");
    }
    ScoreMap(std::size_t h, std::size_t w) : ScoreMap(h, w, std::vector<double>(h * w, 0.0)) {}

    static ScoreMap from_tensor(const Tensor& t) {
        if (t.dtype() != DType::real32 || t.rank() != 2)
            throw FormatError("score tensor must be real32 with dims [H, W]");
        const auto& v = t.real_values();
        for (float s : v)
            if (!std::isfinite(s)) throw DataError("score map contains a non-finite value");
        return {t.dims()[0], t.dims()[1], std::vector<double>(v.begin(), v.end())};
    }
    Tensor to_tensor() const {
        std::vector<float> v(scores_.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = static_cast<float>(scores_[i]);
            if (!std::isfinite(v[i])) throw DataError("score not representable as finite real32");
        }
        return Tensor::real32({h_, w_}, std::move(v));
    }

    std::size_t channels() const noexcept { return 1; }
    std::size_t height() const noexcept { return h_; }
    std::size_t width() const noexcept { return w_; }

    double& at(std::size_t y, std::size_t x) noexcept { return scores_[y * w_ + x]; }
    double at(std::size_t y, std::size_t x) const noexcept { return scores_[y * w_ + x]; }
    double& at(std::size_t, std::size_t y, std::size_t x) noexcept { return at(y, x); }
    double at(std::size_t, std::size_t y, std::size_t x) const noexcept { return at(y, x); }

    std::vector<double>& scores() noexcept { return scores_; }
    const std::vector<double>& scores() const noexcept { return scores_; }

    bool operator==(const ScoreMap&) const = default;

private:
    std::size_t h_ = 0, w_ = 0;
    std::vector<double> scores_;
};

enum Label : std::uint8_t { kInlier = 0, kOutlier = 1, kIgnore = 255 };

class LabelMap {
public:
    LabelMap() = default;
    LabelMap(std::size_t h, std::size_t w, std::vector<std::uint8_t> labels)
        : h_(h), w_(w), labels_(std::move(labels)) {
        if (h_ == 0 || w_ == 0) throw SizeError("label map extents must be >= 1");
        if (labels_.size() != h_ * w_) throw SizeError("label payload does not match H*W");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            const auto l = labels_[i];
            if (l != kInlier && l != kOutlier && l != kIgnore)
                throw DataError("label " + std::to_string(l) + " at pixel " + std::to_string(i) +
                                " is not one of 0, 1, 255");
        }
    }

    static LabelMap from_tensor(const Tensor& t) {
        if (t.dtype() != DType::label8 || t.rank() != 2)
            throw FormatError("label tensor must be label8 with dims [H, W]");
        return {t.dims()[0], t.dims()[1], t.label_values()};
    }
    Tensor to_tensor() const { return Tensor::label8({h_, w_}, labels_); }

    std::size_t height() const noexcept { return h_; }
    std::size_t width() const noexcept { return w_; }
    std::uint8_t at(std::size_t y, std::size_t x) const noexcept { return labels_[y * w_ + x]; }
    const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }

    bool operator==(const LabelMap&) const = default;

private:
    std::size_t h_ = 0, w_ = 0;
    std::vector<std::uint8_t> labels_;
};

/// Reshape [d, H, W] to the pixel-major [H*W, d] matrix; row i is pixel
/// (i / W, i % W).
inline Matrix to_pixel_matrix(const EmbeddingMap& m) {
    const std::size_t n = m.height() * m.width();
    Matrix out(n, m.channels());
    for (std::size_t c = 0; c < m.channels(); ++c)
        for (std::size_t y = 0; y < m.height(); ++y)
            for (std::size_t x = 0; x < m.width(); ++x) out(y * m.width() + x, c) = m.at(c, y, x);
    return out;
}

/// Inverse of to_pixel_matrix. Values are rounded to real32 storage.
inline EmbeddingMap from_pixel_matrix(const Matrix& x, std::size_t h, std::size_t w) {
    if (x.rows() != h * w)
        throw SizeError("pixel matrix has " + std::to_string(x.rows()) + " rows, expected H*W = " +
                        std::to_string(h * w));
    EmbeddingMap m(x.cols(), h, w);
    for (std::size_t c = 0; c < x.cols(); ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t xx = 0; xx < w; ++xx)
                m.at(c, y, xx) = static_cast<float>(x(y * w + xx, c));
    return m;
}

inline constexpr double kDegenerateRowNorm = 1e-12;

inline Matrix l2_normalize_rows(const Matrix& x) {
    Matrix out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double n = norm2(x.row(i));
        if (!(n >= kDegenerateRowNorm))
            throw DegenerateRowError(i, "pixel " + std::to_string(i) +
                                            " has a (near) zero embedding; cosine affinity undefined");
        for (double& v : out.row(i)) v /= n;
    }
    return out;
}

} // namespace rwpm
