#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace beta {

// Dense row-major tensor of doubles. Rank is 0 (scalar), 1 or 2 in practice.
// Values are validated finite at construction; NaN/Inf raise numeric_error.
// Tensors are value types: copies are independent, const refs are safe to
// share across threads.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double fill);
    static Tensor scalar(double v);
    static Tensor vec(std::vector<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty() && shape_.empty(); }

    std::size_t rows() const;
    std::size_t cols() const;

    double item() const;                       // rank-0 or single-element
    double at(std::size_t i) const { return values_[i]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    // Throws numeric_error naming `what` if any value is NaN/Inf.
    void check_finite(const char* what) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

}  // namespace beta
