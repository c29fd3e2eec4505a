#pragma once

#include <memory>
#include <vector>

#include "hbnet/tensor.hpp"

namespace hbnet {

// Ordered record of executed operations. backward() replays adjoints in
// exact reverse execution order; a tensor consumed by several operations
// receives the sum of their contributions. One tape per logical thread.
class Tape {
  public:
    struct Node {
        virtual ~Node() = default;
        virtual void backward() = 0;
        std::shared_ptr<Tensor::Impl> output;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(std::unique_ptr<Node> node) {
        node->output->tape_output = true;
        nodes_.push_back(std::move(node));
    }

    /// Populate grad buffers of every requires_grad tensor reachable from
    /// `loss`. Repeated calls without zero_grad() accumulate on leaves.
    void backward(const Tensor& loss);

    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

  private:
    std::vector<std::unique_ptr<Node>> nodes_;
};

namespace detail {

/// Adjoint buffer of a tensor impl, allocated zeroed on first use.
inline std::span<double> grad_of(const std::shared_ptr<Tensor::Impl>& impl) {
    if (impl->grad.empty()) impl->grad.assign(impl->data.size(), 0.0);
    return impl->grad;
}

/// True when backward should write into this tensor's grad at all.
inline bool wants_grad(const std::shared_ptr<Tensor::Impl>& impl) {
    return impl->requires_grad || impl->tape_output;
}

}  // namespace detail

}  // namespace hbnet
