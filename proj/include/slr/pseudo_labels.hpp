#pragma once

#include <optional>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/common.hpp"
#include "slr/net.hpp"
#include "slr/partial_labels.hpp"

namespace slr {

// One feature vector per class; dynamic obstacles get one prototype each,
// static obstacles a shared one. A prototype built from zero mass is absent
// and its similarity map is -1 everywhere.
struct Prototypes {
    std::vector<double> water, sky, stat;
    std::vector<std::vector<double>> dyn;
    bool water_present = false, sky_present = false, static_present = false;
    std::vector<bool> dyn_present;
};

// Dense soft labels with weights: labeled pixels keep their partial-label
// entry, estimated pixels carry weight omega_r.
struct PseudoLabels {
    Field3 y;
    Grid<double> w;
};

// Class probabilities at feature resolution (area-averaged).
struct ProbPlanes {
    Grid<double> ch[3];
    int width() const { return ch[0].width(); }
    int height() const { return ch[0].height(); }
};

// r(.): zero each class on its constraint set, renormalize per pixel.
// A pixel with all three classes constrained is a data error.
Field3 constrain(const Field3& probs, const ConstraintSets& cs);

ProbPlanes area_downsample4(const Field3& probs);

// Maps an image box to the feature cells it overlaps.
Box box_to_feature_grid(const Box& box, int fw, int fh);

Prototypes compute_prototypes(const Planes& features, const ProbPlanes& r_feat,
                              const std::vector<Box>& boxes_feat);

// Cosine similarity of every cell against one prototype; zero-norm guard.
Grid<double> similarity_map(const Planes& features, const std::vector<double>& proto,
                            bool present);

// Dynamic-obstacle similarities inside their boxes (elementwise max where
// boxes overlap), the static-obstacle similarity elsewhere.
Grid<double> merge_obstacle_similarity(const Grid<double>& s_static,
                                       const std::vector<Grid<double>>& s_dyn,
                                       const std::vector<Box>& boxes_feat);

// Softmax over class similarities with inverse temperature beta,
// max-subtracted for stability. Inputs at image resolution.
Field3 soft_assign(const Grid<double>& s_water, const Grid<double>& s_sky,
                   const Grid<double>& s_obstacle, double beta = 20.0);

PseudoLabels compose_pseudo_labels(const Field3& p_est, const PartialLabels& partial,
                                   const ConstraintSets& cs, double omega_r = 0.5,
                                   bool apply_constraints = true);

struct EstimateConfig {
    double beta = 20.0;
    double omega_r = 0.5;
    double theta = 11.0;
    double omega_min = 0.005;
    bool constraints_r = true;
    bool feature_clustering = true;
    bool edge_heuristic = true;
};

// End-to-end estimation for one image: forward, constrain, prototypes,
// similarities, merge, soft assign, compose. `feature_override` replaces the
// encoder tap (synthetic-feature experiments).
PseudoLabels estimate_pseudo_labels(const ToyNet& net, const Field3& image,
                                    const WeakAnnotations& ann, const EstimateConfig& cfg,
                                    const Planes* feature_override = nullptr);

Grid<double> upsample_bilinear4(const Grid<double>& m, int out_w, int out_h);

}  // namespace slr
