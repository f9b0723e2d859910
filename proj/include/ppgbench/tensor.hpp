#pragma once

#include <cstddef>
#include <vector>

namespace ppgbench {

// Dense (batch, channels, length) container, row-major, double precision.
struct Tensor1d {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t length = 0;
    std::vector<double> data;

    Tensor1d() = default;
    Tensor1d(std::size_t b, std::size_t c, std::size_t l) : batch(b), channels(c), length(l), data(b * c * l, 0.0) {}

    double* row(std::size_t b, std::size_t c) { return data.data() + (b * channels + c) * length; }
    const double* row(std::size_t b, std::size_t c) const {
        return data.data() + (b * channels + c) * length;
    }
};

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

}  // namespace ppgbench
