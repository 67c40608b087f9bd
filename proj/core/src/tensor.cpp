#include "tegdet/tensor.hpp"

#include <cmath>
#include <cstdio>

namespace tegdet {

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor Tensor::constant(std::size_t rows, std::size_t cols, double v) {
    Tensor t(rows, cols);
    for (auto& x : t.data_) x = v;
    return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Tensor t(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double v : row) t(i, j++) = v;
        ++i;
    }
    return t;
}

std::string Tensor::shape_str() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zux%zu", rows_, cols_);
    return buf;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

void matmul_acc(const Tensor& a, const Tensor& b, Tensor& out) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = out.row(i);
        const double* arow = a.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aval = arow[p];
            if (aval == 0.0) continue;
            const double* brow = b.row(p);
            for (std::size_t j = 0; j < n; ++j) orow[j] += aval * brow[j];
        }
    }
}

void matmul_at_acc(const Tensor& a, const Tensor& b, Tensor& out) {
    // out (k x n) += a^T (k x m) * b (m x n)
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        const double* brow = b.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aval = arow[p];
            if (aval == 0.0) continue;
            double* orow = out.row(p);
            for (std::size_t j = 0; j < n; ++j) orow[j] += aval * brow[j];
        }
    }
}

void matmul_bt_acc(const Tensor& a, const Tensor& b, Tensor& out) {
    // out (m x k) += a (m x n) * b^T (n x k), b is (k x n)
    const std::size_t m = a.rows(), n = a.cols(), k = b.rows();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double* brow = b.row(p);
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
            orow[p] += s;
        }
    }
}

}  // namespace tegdet
