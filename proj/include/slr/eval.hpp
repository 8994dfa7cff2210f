#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/common.hpp"
#include "slr/net.hpp"
#include "slr/scenegen.hpp"

namespace slr {

// One 4-connected obstacle component below the annotated water edge.
struct Detection {
    std::vector<int> pixels;  // flat y*W+x indices
    Box bbox;
    long area = 0;
    double cx = 0.0, cy = 0.0;  // centroid
};

struct MatchCounts {
    long tp = 0, fp = 0, fn = 0;
    long tp_d = 0, fp_d = 0, fn_d = 0;
};

struct DetectionReport {
    std::string protocol = "desk-1";  // micro-averaged counts
    long tp = 0, fp = 0, fn = 0;
    long tp_d = 0, fp_d = 0, fn_d = 0;
    double pr = 0, re = 0, f1 = 0;
    double pr_d = 0, re_d = 0, f1_d = 0;
    double mu_r = 0;
    double iou_water = 0, iou_sky = 0, iou_obstacle = 0, miou = 0;
};

// Fraction of covered columns whose predicted water boundary lies within
// tol_px of the ground-truth edge. The predicted boundary of a column is the
// top of the water run that contains the bottommost water pixel; columns
// without predicted water count as incorrect. `excluded_cols`, when present,
// removes columns (those occluded by dynamic obstacles) from the count.
double water_edge_robustness(const LabelMap& pred, const std::vector<Polyline>& gt_edges,
                             double tol_px = 20.0,
                             const std::vector<uint8_t>* excluded_cols = nullptr);

std::vector<Detection> extract_detections(const LabelMap& pred, const RegionMasks& regions,
                                          long min_det_area = 25);

// Greedy one-to-one matching by descending intersection; a pair matches when
// intersection >= 0.5 * min(detection area, box area). Danger-zone counts use
// box centers and detection centroids.
MatchCounts match_detections(const std::vector<Detection>& dets, const std::vector<Box>& gt_boxes,
                             const Mask& danger_mask);

struct IouResult {
    double iou[3];
    bool present[3];
    double miou;
};
IouResult miou(const LabelMap& pred, const LabelMap& gt);

struct FrameScore {
    MatchCounts counts;
    std::optional<double> mu_r;
    long inter[3] = {0, 0, 0};
    long uni[3] = {0, 0, 0};
};

// Per-frame scoring against scene ground truth (annotation-free evaluation
// uses the exact gt edge/boxes).
FrameScore score_frame(const LabelMap& pred, const Scene& scene, double tol_px,
                       long min_det_area);

DetectionReport aggregate(const std::vector<FrameScore>& frames);

DetectionReport evaluate(const ToyNet& net, const std::vector<Scene>& testset,
                         double tol_px = 20.0, long min_det_area = 25);

LabelMap argmax_labels(const Field3& probs);

}  // namespace slr
