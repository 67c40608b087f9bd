#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace tegdet {

// Dense row-major matrix of doubles. Vectors are represented as 1xN or Nx1.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static Tensor identity(std::size_t n);
    static Tensor constant(std::size_t rows, std::size_t cols, double v);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;

    bool all_finite() const;
    double max_abs() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// out += a * b. Shapes must already agree; callers validate.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& out);
// out += a^T * b
void matmul_at_acc(const Tensor& a, const Tensor& b, Tensor& out);
// out += a * b^T
void matmul_bt_acc(const Tensor& a, const Tensor& b, Tensor& out);

}  // namespace tegdet
