#pragma once

#include <string>
#include <vector>

#include "slr/common.hpp"
#include "slr/scenegen.hpp"
#include "slr/tensor.hpp"

namespace slr {

struct ToyNetConfig {
    int c1 = 8;
    int c2 = 16;
    int c3 = 32;
};

// Small encoder-decoder segmentation network. Three encoder stages of
// (conv3x3, relu, 2x mean-pool); the stage-2 output is the feature tap used
// for prototype pooling. Two decoder stages of (bilinear 2x, conv3x3, relu),
// a 1x1 head, and a final bilinear resize back to input resolution.
class ToyNet {
public:
    explicit ToyNet(ToyNetConfig cfg = {});

    void init(uint64_t seed);

    struct Forward {
        Tensor features;  // (c2, h/4, w/4)
        Tensor logits;    // (3, h, w)
        Tensor probs;     // (3, h, w), rows sum to 1
    };
    Forward forward(Tape& tape, const Tensor& image) const;

    struct Inference {
        Planes features;
        Field3 probs;
    };
    // Tape-free forward pass over the same kernels.
    Inference infer(const Field3& image) const;

    std::vector<Tensor> params() const;
    std::vector<std::string> param_names() const;
    void zero_grad();

    void save(const std::string& path) const;
    void load(const std::string& path);

    ToyNet clone() const;
    const ToyNetConfig& config() const { return cfg_; }
    int feature_channels() const { return cfg_.c2; }

private:
    ToyNetConfig cfg_;
    Tensor e1w_, e1b_, e2w_, e2b_, e3w_, e3b_;
    Tensor d1w_, d1b_, d2w_, d2b_;
    Tensor hw_, hb_;
};

Tensor image_to_tensor(const Field3& image);
Field3 tensor_to_field3(const Tensor& t);

}  // namespace slr
