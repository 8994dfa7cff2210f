#pragma once

#include <vector>

#include "slr/tensor.hpp"

namespace slr {

// RMSProp with momentum and a polynomial learning-rate decay:
//   sq   <- rho * sq + (1 - rho) * g^2
//   mom  <- momentum * mom + g / sqrt(sq + eps)
//   p    <- p - lr(step) * mom,  lr(step) = lr0 * (1 - step/total_steps)^power
struct RmsPropConfig {
    double lr0 = 1e-3;  // desk-scale default; full-scale runs use 1e-6
    double rho = 0.99;
    double eps = 1e-8;
    double momentum = 0.9;
    double power = 0.9;
    long total_steps = 1;
};

class RmsProp {
public:
    RmsProp(std::vector<Tensor> params, const RmsPropConfig& cfg);

    double current_lr() const;
    void step();
    void zero_grad();
    long step_count() const { return step_; }

private:
    std::vector<Tensor> params_;
    RmsPropConfig cfg_;
    std::vector<std::vector<double>> sq_;
    std::vector<std::vector<double>> mom_;
    long step_ = 0;
};

}  // namespace slr
