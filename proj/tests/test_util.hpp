#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rwpm/matrix.hpp"

namespace rwpm::test {

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = u(rng);
    return m;
}

inline Matrix random_unit_rows(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        double n = 0;
        for (auto& v : m.row(i)) {
            v = g(rng);
            n += v * v;
        }
        n = std::sqrt(n);
        for (auto& v : m.row(i)) v /= n;
    }
    return m;
}

} // namespace rwpm::test
