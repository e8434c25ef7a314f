#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rwpm/errors.hpp"
#include "rwpm/matrix.hpp"

namespace rwpm {

/// LU factorization with partial (row) pivoting, PA = LU, stored in place.
/// Unit-diagonal L below the diagonal, U on and above it.
class LuFactorization {
public:
    explicit LuFactorization(Matrix a) : lu_(std::move(a)), perm_(lu_.rows()) {
        const std::size_t n = lu_.rows();
        if (lu_.cols() != n) throw SizeError("LU needs a square matrix");
        for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

        for (std::size_t k = 0; k < n; ++k) {
            std::size_t pivot = k;
            double best = std::abs(lu_(k, k));
            for (std::size_t i = k + 1; i < n; ++i) {
                const double v = std::abs(lu_(i, k));
                if (v > best) {
                    best = v;
                    pivot = i;
                }
            }
            if (!(best > 0.0) || !std::isfinite(best))
                throw NumericalError("singular matrix: no usable pivot in column " + std::to_string(k));
            if (pivot != k) {
                auto rk = lu_.row(k), rp = lu_.row(pivot);
                std::swap_ranges(rk.begin(), rk.end(), rp.begin());
                std::swap(perm_[k], perm_[pivot]);
            }
            const auto pivot_row = lu_.row(k);
            const double inv = 1.0 / pivot_row[k];
            for (std::size_t i = k + 1; i < n; ++i) {
                auto ri = lu_.row(i);
                const double l = ri[k] * inv;
                ri[k] = l;
                if (l == 0.0) continue;
                for (std::size_t j = k + 1; j < n; ++j) ri[j] -= l * pivot_row[j];
            }
        }
    }

    std::size_t size() const noexcept { return lu_.rows(); }

    /// Solves A X = B for every column of B at once.
    Matrix solve(const Matrix& b) const {
        const std::size_t n = size();
        if (b.rows() != n) throw SizeError("LU solve: right-hand side has wrong row count");
        const std::size_t m = b.cols();
        Matrix x(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = b.row(perm_[i]);
            std::copy(src.begin(), src.end(), x.row(i).begin());
        }
        // Forward substitution with unit L.
        for (std::size_t i = 0; i < n; ++i) {
            auto xi = x.row(i);
            const auto li = lu_.row(i);
            for (std::size_t j = 0; j < i; ++j) {
                const double l = li[j];
                if (l == 0.0) continue;
                const auto xj = x.row(j);
                for (std::size_t c = 0; c < m; ++c) xi[c] -= l * xj[c];
            }
        }
        // Back substitution with U.
        for (std::size_t ii = n; ii-- > 0;) {
            auto xi = x.row(ii);
            const auto ui = lu_.row(ii);
            for (std::size_t j = ii + 1; j < n; ++j) {
                const double u = ui[j];
                const auto xj = x.row(j);
                for (std::size_t c = 0; c < m; ++c) xi[c] -= u * xj[c];
            }
            const double inv = 1.0 / ui[ii];
            for (std::size_t c = 0; c < m; ++c) xi[c] *= inv;
        }
        return x;
    }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
};

} // namespace rwpm
