#include "beta/tensor.hpp"

#include <cmath>
#include <sstream>

#include "beta/errors.hpp"

namespace beta {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t p = 1;
    for (std::size_t d : shape) p *= d;
    return p;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_product(shape_) != values_.size())
        throw dim_error("tensor shape " + shape_str() + " does not match " +
                        std::to_string(values_.size()) + " values");
    check_finite("tensor construction");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.values_.assign(shape_product(t.shape_), 0.0);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill) {
    Tensor t = zeros(std::move(shape));
    for (double& v : t.values_) v = fill;
    t.check_finite("tensor fill");
    return t;
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::vec(std::vector<double> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw dim_error("rows() on tensor of shape " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw dim_error("cols() on tensor of shape " + shape_str());
    return shape_[1];
}

double Tensor::item() const {
    if (values_.size() != 1)
        throw dim_error("item() on tensor of shape " + shape_str());
    return values_[0];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << 'x';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

void Tensor::check_finite(const char* what) const {
    for (double v : values_) {
        if (!std::isfinite(v))
            throw numeric_error(std::string("non-finite value in ") + what);
    }
}

}  // namespace beta
