#include "slr/optim.hpp"

#include <cmath>

namespace slr {

RmsProp::RmsProp(std::vector<Tensor> params, const RmsPropConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
    require(cfg_.total_steps >= 1, ErrorCategory::config, "total_steps must be >= 1");
    for (const Tensor& p : params_) {
        sq_.emplace_back(p.numel(), 0.0);
        mom_.emplace_back(p.numel(), 0.0);
    }
}

double RmsProp::current_lr() const {
    double frac = 1.0 - static_cast<double>(step_) / static_cast<double>(cfg_.total_steps);
    if (frac < 0.0) frac = 0.0;
    return cfg_.lr0 * std::pow(frac, cfg_.power);
}

void RmsProp::step() {
    const double lr = current_lr();
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = params_[i].val();
        const auto& g = params_[i].grad();
        auto& sq = sq_[i];
        auto& mom = mom_[i];
        for (size_t j = 0; j < p.size(); ++j) {
            sq[j] = cfg_.rho * sq[j] + (1.0 - cfg_.rho) * g[j] * g[j];
            mom[j] = cfg_.momentum * mom[j] + g[j] / std::sqrt(sq[j] + cfg_.eps);
            p[j] -= lr * mom[j];
        }
    }
    ++step_;
}

void RmsProp::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace slr
