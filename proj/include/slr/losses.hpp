#pragma once

#include <vector>

#include "slr/common.hpp"
#include "slr/partial_labels.hpp"
#include "slr/scenegen.hpp"
#include "slr/tensor.hpp"

namespace slr {

// Per-object segmentation prior. The mask is box-local; the prior is zero
// everywhere outside the box.
struct ObjectPrior {
    Box box;
    Grid<double> mask;  // foreground probability in [0,1]

    double at_image(int x, int y) const {
        return box.contains(x, y) ? mask(x - box.x0, y - box.y0) : 0.0;
    }
};

enum class PriorMode { oracle_corrupt, ellipse };

// oracle_corrupt derives the prior from the scene's ground-truth obstacle
// mask with boundary erosion/dilation noise; ellipse is the box-inscribed
// indicator fallback.
ObjectPrior make_object_prior(const Scene* scene, const Box& box, PriorMode mode,
                              double corrupt = 0.0, uint64_t seed = 0);

struct LossConfig {
    double gamma = 2.0;
    double tau = 0.9;
    double sigma_col = 0.1;
    double lambda_ws = 0.01;
    // Per-term weights; unit by default.
    double w_foc = 1.0;
    double w_pair = 1.0;
    double w_proj = 1.0;
    double w_aux = 1.0;
};

// Weighted focal loss, mean over pixels with w > 0; soft targets allowed.
// Returns 0 with zero gradient when nothing is labeled.
Tensor focal_loss(Tape& tape, Tensor probs, const Field3& target,
                  const Grid<double>& weights, double gamma = 2.0);

// Dice of the in-box row/column max projections of the obstacle channel
// against all-ones vectors. Gradients flow through the argmax elements.
Tensor projection_loss(Tape& tape, Tensor probs, const Box& box);

// -log P(same label) over 8-neighborhood pairs whose color affinity
// exp(-||dI||^2 / sigma_col^2) reaches tau; mean over qualifying pairs.
Tensor pairwise_loss(Tape& tape, Tensor probs, const Field3& image, double tau = 0.9,
                     double sigma_col = 0.1);

// Binary focal loss between the obstacle channel and a per-object prior,
// restricted to the prior's box.
Tensor aux_loss(Tape& tape, Tensor probs, const ObjectPrior& prior, double gamma = 2.0);

// Variance-ratio surrogate for water/obstacle feature separation:
// lambda * sum_ch (vw + vo) / ((mw - mo)^2 + vw + vo + eps).
// Masks are at feature resolution; empty masks give 0.
Tensor water_separation_loss(Tape& tape, Tensor features, const Mask& water_mask,
                             const Mask& obstacle_mask, double lambda_ws = 0.01,
                             double eps = 1e-8);

struct LossTerms {
    double foc = 0, pair = 0, proj = 0, aux = 0, ws = 0, total = 0;
};

// Warm-up objective: focal on partial labels + pairwise + per-object
// (projection + prior focal).
Tensor warmup_loss(Tape& tape, Tensor probs, const PartialLabels& partial,
                   const std::vector<ObjectPrior>& priors, const Field3& image,
                   const LossConfig& cfg, LossTerms* breakdown = nullptr);

// Fine-tuning objective: focal on dense soft labels + pairwise + water
// separation, with water/obstacle masks from the label argmax.
Tensor finetune_loss(Tape& tape, Tensor probs, Tensor features,
                     const Field3& target, const Grid<double>& weights, const Field3& image,
                     const LossConfig& cfg, LossTerms* breakdown = nullptr);

// Feature-resolution class masks from a label distribution's argmax
// (majority over each 4x4 block).
void argmax_class_masks(const Field3& labels, int fh, int fw, Mask& water, Mask& obstacle);

}  // namespace slr
