#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "slr/common.hpp"

namespace slr {

struct TensorShape {
    int d[4] = {1, 1, 1, 1};
    int ndim = 0;
    size_t numel() const {
        size_t n = 1;
        for (int i = 0; i < ndim; ++i) n *= static_cast<size_t>(d[i]);
        return n;
    }
    bool operator==(const TensorShape&) const = default;
};

inline TensorShape make_shape(std::initializer_list<int> dims) {
    TensorShape s;
    s.ndim = static_cast<int>(dims.size());
    int i = 0;
    for (int v : dims) s.d[i++] = v;
    return s;
}

// Shared value/gradient payload. Tensors are cheap handles; ops capture them
// by value inside backward closures.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const TensorShape& shape, bool requires_grad = false);

    const TensorShape& shape() const { return d_->shape; }
    size_t numel() const { return d_->val.size(); }
    std::vector<double>& val() { return d_->val; }
    const std::vector<double>& val() const { return d_->val; }
    std::vector<double>& grad() { return d_->grad; }
    const std::vector<double>& grad() const { return d_->grad; }
    bool requires_grad() const { return d_ && d_->requires_grad; }
    bool defined() const { return static_cast<bool>(d_); }

    void zero_grad() {
        if (d_) std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
    }

    double scalar() const {
        require(numel() == 1, ErrorCategory::shape, "tensor is not a scalar");
        return d_->val[0];
    }

    bool same_node(const Tensor& o) const { return d_ == o.d_; }

private:
    struct Data {
        TensorShape shape;
        std::vector<double> val;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Data> d_;
};

// Records one op per node; backward() zeroes non-leaf gradients, seeds the
// loss with 1 and replays closures in reverse creation order. Leaf gradients
// accumulate across repeated backward() calls.
class Tape {
public:
    // Output-node factory for ops and fused losses.
    Tensor node(const TensorShape& shape, bool track);
    void record(std::function<void()> backward_fn);

    Tensor conv2d(Tensor x, Tensor w, Tensor b);
    Tensor relu(Tensor x);
    Tensor avgpool2(Tensor x);
    Tensor resize_bilinear(Tensor x, int hout, int wout);
    Tensor softmax_channels(Tensor x);  // over dim 0 of (c, h, w)
    Tensor slice_channel(Tensor x, int c);
    Tensor add(Tensor a, Tensor b);
    Tensor scale(Tensor a, double s);
    Tensor sum(Tensor x);

    void backward(const Tensor& loss);
    void clear();
    size_t size() const { return steps_.size(); }

private:
    std::vector<std::function<void()>> steps_;
    std::vector<Tensor> outputs_;
};

}  // namespace slr
