#pragma once

#include "slr/annotations.hpp"
#include "slr/common.hpp"

namespace slr {

// Per-class forbidden regions. c_water = H^ | W^, c_sky = Hv | Wv,
// c_obstacle = complement(O) minus W^.
struct ConstraintSets {
    Mask c_water, c_sky, c_obstacle;
    const Mask& for_class(int c) const {
        return c == kWater ? c_water : (c == kSky ? c_sky : c_obstacle);
    }
};

// Per-pixel label distributions with training weights. At every pixel either
// y is one-hot and w > 0, or y is all-zero and w = 0.
struct PartialLabels {
    Field3 y;
    Grid<double> w;
};

ConstraintSets constraint_sets(const RegionMasks& regions);

// Euclidean distance (pixels) from each pixel above the water edge to the
// nearest pixel at or below it; +inf outside W^. Exact (integer squared
// distances via a two-pass transform).
Grid<double> edge_distance(const RegionMasks& regions);

// Unambiguous pixels get their forced class at weight 1. Remaining pixels
// above the water edge within theta of it get the obstacle class at weight
// exp(-alpha d), alpha = -ln(omega_min)/theta. Everything else is unlabeled.
PartialLabels build_partial_labels(const RegionMasks& regions, double theta = 11.0,
                                   double omega_min = 0.005, bool edge_band = true);

// 0 water, 1 sky, 2 obstacle, 3 unlabeled (debug dumps).
LabelMap partial_class_map(const PartialLabels& labels);

}  // namespace slr
