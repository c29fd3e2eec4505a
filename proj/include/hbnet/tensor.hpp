#pragma once

#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "hbnet/common.hpp"
#include "hbnet/rng.hpp"

namespace hbnet {

using Shape = std::vector<i64>;

inline i64 shape_numel(const Shape& shape) {
    i64 n = 1;
    for (i64 d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape);

// Dense row-major tensor of doubles. Copying a Tensor copies the handle;
// two copies alias the same storage. Data is immutable once a forward pass
// has consumed it; the grad buffer is the only mutable slot afterwards.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_data(Shape shape, std::vector<double> values, bool requires_grad = false);
    /// Uniform in [lo, hi), one stream draw per element.
    static Tensor uniform(Shape shape, double lo, double hi, u64 rng_key, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    i64 numel() const { return static_cast<i64>(impl_->data.size()); }
    i64 dim(size_t axis) const { return impl_->shape.at(axis); }
    size_t rank() const { return impl_->shape.size(); }

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }
    double scalar() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on);

    /// Grad buffer; allocated zero-filled on first access.
    std::span<double> grad();
    std::span<const double> grad() const;
    bool has_grad() const { return !impl_->grad.empty(); }
    void zero_grad();

    /// Deep copy of data (gradient state is not copied).
    Tensor clone() const;

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    /// True when all elements are finite.
    bool all_finite() const;

    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
        bool tape_output = false;  // produced by a taped op
    };

    const std::shared_ptr<Impl>& impl() const { return impl_; }

  private:
    explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

    std::shared_ptr<Impl> impl_;
};

}  // namespace hbnet
