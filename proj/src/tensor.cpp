#include "framelab/tensor.hpp"

#include <algorithm>

namespace framelab {

void Matrix::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y,
            bool accumulate) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* ar = a + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += ar[c] * x[c];
        }
        y[r] = accumulate ? y[r] + acc : acc;
    }
}

void matvec_t_acc(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) {
            continue;
        }
        const double* ar = a + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            y[c] += ar[c] * xr;
        }
    }
}

void outer_acc(double* a, std::size_t rows, std::size_t cols, const double* x, const double* y,
               double s) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double xr = s * x[r];
        if (xr == 0.0) {
            continue;
        }
        double* ar = a + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            ar[c] += xr * y[c];
        }
    }
}

} // namespace framelab
