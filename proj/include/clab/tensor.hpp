#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace clab {

// Dense fp64 tensor in row-major layout. Gradients live alongside the values;
// `grad` is lazily allocated by ensure_grad() and always matches `values` in
// size once allocated.
class Tensor {
  public:
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape_, bool requires_grad_ = false)
        : shape(std::move(shape_)), requires_grad(requires_grad_) {
        values.assign(numel(), 0.0);
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::size_t d : shape) {
            n *= d;
        }
        return n;
    }

    void ensure_grad() {
        if (grad.size() != values.size()) {
            grad.assign(values.size(), 0.0);
        }
    }

    void zero_grad() {
        if (!grad.empty()) {
            grad.assign(grad.size(), 0.0);
        }
    }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(std::vector<std::size_t> shape, bool requires_grad = false) {
    return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

// Records one backward closure per differentiable op, in execution order.
// Execution order is a topological order of the forward graph, so running the
// closures in reverse propagates gradients correctly. A tape lives for one
// forward/backward pass; ops called with a null tape skip recording entirely.
class Tape {
  public:
    void record(std::function<void()> backward_fn) {
        nodes_.push_back(std::move(backward_fn));
    }

    // Seeds d(loss)/d(loss) = 1 and runs all recorded closures in reverse.
    void backward(const TensorPtr& loss) {
        loss->ensure_grad();
        for (double& g : loss->grad) {
            g = 1.0;
        }
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            (*it)();
        }
    }

    std::size_t size() const { return nodes_.size(); }

  private:
    std::vector<std::function<void()>> nodes_;
};

} // namespace clab
