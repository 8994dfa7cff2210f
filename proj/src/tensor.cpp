#include "slr/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "slr/kernels.hpp"

namespace slr {

Tensor Tensor::zeros(const TensorShape& shape, bool requires_grad) {
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->shape = shape;
    t.d_->val.assign(shape.numel(), 0.0);
    t.d_->grad.assign(shape.numel(), 0.0);
    t.d_->requires_grad = requires_grad;
    return t;
}

Tensor Tape::node(const TensorShape& shape, bool track) {
    Tensor t = Tensor::zeros(shape, track);
    if (track) outputs_.push_back(t);
    return t;
}

void Tape::record(std::function<void()> backward_fn) { steps_.push_back(std::move(backward_fn)); }

Tensor Tape::conv2d(Tensor x, Tensor w, Tensor b) {
    require(x.shape().ndim == 3 && w.shape().ndim == 4 && b.shape().ndim == 1,
            ErrorCategory::shape, "conv2d expects (c,h,w) input, (co,ci,k,k) weights");
    const int cin = x.shape().d[0], h = x.shape().d[1], wid = x.shape().d[2];
    const int cout = w.shape().d[0], k = w.shape().d[2];
    require(w.shape().d[1] == cin && w.shape().d[3] == k && b.shape().d[0] == cout,
            ErrorCategory::shape, "conv2d shape mismatch");
    require(k == 1 || k == 3, ErrorCategory::shape, "conv2d supports k in {1,3}");

    bool track = x.requires_grad() || w.requires_grad() || b.requires_grad();
    Tensor y = node(make_shape({cout, h, wid}), track);
    kern::conv2d_fwd(x.val().data(), w.val().data(), b.val().data(), y.val().data(), cin, cout, k,
                     h, wid);
    if (track)
        record([x, w, b, y, cin, cout, k, h, wid]() mutable {
            if (x.requires_grad())
                kern::conv2d_bwd_input(w.val().data(), y.grad().data(), x.grad().data(), cin,
                                       cout, k, h, wid);
            if (w.requires_grad() || b.requires_grad())
                kern::conv2d_bwd_params(x.val().data(), y.grad().data(), w.grad().data(),
                                        b.grad().data(), cin, cout, k, h, wid);
        });
    return y;
}

Tensor Tape::relu(Tensor x) {
    Tensor y = node(x.shape(), x.requires_grad());
    kern::relu_fwd(x.val().data(), y.val().data(), x.numel());
    if (x.requires_grad())
        record([x, y]() mutable {
            kern::relu_bwd(x.val().data(), y.grad().data(), x.grad().data(), x.numel());
        });
    return y;
}

Tensor Tape::avgpool2(Tensor x) {
    require(x.shape().ndim == 3, ErrorCategory::shape, "avgpool2 expects (c,h,w)");
    const int c = x.shape().d[0], h = x.shape().d[1], w = x.shape().d[2];
    Tensor y = node(make_shape({c, h / 2, w / 2}), x.requires_grad());
    kern::avgpool2_fwd(x.val().data(), y.val().data(), c, h, w);
    if (x.requires_grad())
        record([x, y, c, h, w]() mutable {
            kern::avgpool2_bwd(y.grad().data(), x.grad().data(), c, h, w);
        });
    return y;
}

Tensor Tape::resize_bilinear(Tensor x, int hout, int wout) {
    require(x.shape().ndim == 3, ErrorCategory::shape, "resize expects (c,h,w)");
    const int c = x.shape().d[0], hin = x.shape().d[1], win = x.shape().d[2];
    Tensor y = node(make_shape({c, hout, wout}), x.requires_grad());
    kern::resize_bilinear_fwd(x.val().data(), y.val().data(), c, hin, win, hout, wout);
    if (x.requires_grad())
        record([x, y, c, hin, win, hout, wout]() mutable {
            kern::resize_bilinear_bwd(y.grad().data(), x.grad().data(), c, hin, win, hout, wout);
        });
    return y;
}

Tensor Tape::softmax_channels(Tensor x) {
    require(x.shape().ndim == 3, ErrorCategory::shape, "softmax expects (c,h,w)");
    const int c = x.shape().d[0], h = x.shape().d[1], w = x.shape().d[2];
    const size_t plane = static_cast<size_t>(h) * w;
    Tensor y = node(x.shape(), x.requires_grad());
    for (size_t i = 0; i < plane; ++i) {
        double mx = x.val()[i];
        for (int ch = 1; ch < c; ++ch) mx = std::max(mx, x.val()[ch * plane + i]);
        double z = 0.0;
        for (int ch = 0; ch < c; ++ch) {
            double e = std::exp(x.val()[ch * plane + i] - mx);
            y.val()[ch * plane + i] = e;
            z += e;
        }
        for (int ch = 0; ch < c; ++ch) y.val()[ch * plane + i] /= z;
    }
    if (x.requires_grad())
        record([x, y, c, plane]() mutable {
            for (size_t i = 0; i < plane; ++i) {
                double dot = 0.0;
                for (int ch = 0; ch < c; ++ch)
                    dot += y.grad()[ch * plane + i] * y.val()[ch * plane + i];
                for (int ch = 0; ch < c; ++ch)
                    x.grad()[ch * plane + i] +=
                        y.val()[ch * plane + i] * (y.grad()[ch * plane + i] - dot);
            }
        });
    return y;
}

Tensor Tape::slice_channel(Tensor x, int c) {
    require(x.shape().ndim == 3 && c >= 0 && c < x.shape().d[0], ErrorCategory::shape,
            "bad channel slice");
    const int h = x.shape().d[1], w = x.shape().d[2];
    const size_t plane = static_cast<size_t>(h) * w;
    Tensor y = node(make_shape({1, h, w}), x.requires_grad());
    std::copy_n(x.val().data() + c * plane, plane, y.val().data());
    if (x.requires_grad())
        record([x, y, c, plane]() mutable {
            for (size_t i = 0; i < plane; ++i) x.grad()[c * plane + i] += y.grad()[i];
        });
    return y;
}

Tensor Tape::add(Tensor a, Tensor b) {
    require(a.shape() == b.shape(), ErrorCategory::shape, "add shape mismatch");
    Tensor y = node(a.shape(), a.requires_grad() || b.requires_grad());
    for (size_t i = 0; i < y.numel(); ++i) y.val()[i] = a.val()[i] + b.val()[i];
    if (y.requires_grad())
        record([a, b, y]() mutable {
            if (a.requires_grad())
                for (size_t i = 0; i < y.numel(); ++i) a.grad()[i] += y.grad()[i];
            if (b.requires_grad())
                for (size_t i = 0; i < y.numel(); ++i) b.grad()[i] += y.grad()[i];
        });
    return y;
}

Tensor Tape::scale(Tensor a, double s) {
    Tensor y = node(a.shape(), a.requires_grad());
    for (size_t i = 0; i < y.numel(); ++i) y.val()[i] = a.val()[i] * s;
    if (a.requires_grad())
        record([a, y, s]() mutable {
            for (size_t i = 0; i < y.numel(); ++i) a.grad()[i] += s * y.grad()[i];
        });
    return y;
}

Tensor Tape::sum(Tensor x) {
    Tensor y = node(make_shape({1}), x.requires_grad());
    double acc = 0.0;
    for (double v : x.val()) acc += v;
    y.val()[0] = acc;
    if (x.requires_grad())
        record([x, y]() mutable {
            double g = y.grad()[0];
            for (size_t i = 0; i < x.numel(); ++i) x.grad()[i] += g;
        });
    return y;
}

void Tape::backward(const Tensor& loss) {
    require(loss.defined() && loss.numel() == 1, ErrorCategory::shape,
            "backward needs a scalar loss");
    if (!loss.requires_grad()) return;
    for (Tensor& t : outputs_) t.zero_grad();
    Tensor seed = loss;
    seed.grad()[0] = 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

void Tape::clear() {
    steps_.clear();
    outputs_.clear();
}

}  // namespace slr
