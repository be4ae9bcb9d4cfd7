#pragma once

#include <cstddef>
#include <vector>

#include "desgrada/errors.hpp"

namespace desgrada {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1 tensors. All
// training math is 64-bit; desk-scale sizes make that cheap and it keeps
// gradient checks honest.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, 0.0); }

    static Tensor row(std::vector<double> values) {
        Tensor t;
        t.rows_ = 1;
        t.cols_ = values.size();
        t.data_ = std::move(values);
        return t;
    }

    static Tensor column(std::vector<double> values) {
        Tensor t;
        t.rows_ = values.size();
        t.cols_ = 1;
        t.data_ = std::move(values);
        return t;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    void fill(double v) {
        for (double& x : data_) x = v;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

// C = A * B
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// A + row vector broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& r);
// Column means: [n x d] -> [1 x d].
Tensor mean_rows(const Tensor& a);
double mean_all(const Tensor& a);
bool all_finite(const Tensor& a);

} // namespace desgrada
