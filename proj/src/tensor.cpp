#include "hbnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hbnet {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto impl = std::make_shared<Impl>();
    i64 n = shape_numel(shape);
    check(n >= 0, "negative extent in shape " + shape_str(shape));
    impl->shape = std::move(shape);
    impl->data.assign(static_cast<size_t>(n), 0.0);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values, bool requires_grad) {
    i64 n = shape_numel(shape);
    check(static_cast<i64>(values.size()) == n,
          "data length " + std::to_string(values.size()) + " does not match shape " + shape_str(shape));
    auto impl = std::make_shared<Impl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    impl->requires_grad = requires_grad;
    return Tensor(std::move(impl));
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, u64 rng_key, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    auto d = t.data();
    for (i64 i = 0; i < t.numel(); ++i) d[static_cast<size_t>(i)] = lo + (hi - lo) * rng::uniform_at(rng_key, static_cast<u64>(i));
    return t;
}

double Tensor::scalar() const {
    check(numel() == 1, "scalar() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

void Tensor::set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (!on) impl_->grad.clear();
}

std::span<double> Tensor::grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
}

std::span<const double> Tensor::grad() const {
    check_internal(!impl_->grad.empty(), "grad read before any backward pass");
    return impl_->grad;
}

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    auto impl = std::make_shared<Impl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    impl->requires_grad = impl_->requires_grad;
    return Tensor(std::move(impl));
}

bool Tensor::all_finite() const {
    for (double v : impl_->data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace hbnet
