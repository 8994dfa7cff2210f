#pragma once

#include <cstdint>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/common.hpp"

namespace slr {

// Flat-water pinhole camera. The horizon is a horizontal line; pitching
// down moves it up in the image.
struct CameraModel {
    double height_m = 2.0;
    double pitch_rad = 0.19;
    double focal_px = 70.0;
    int width = 48;
    int height = 48;

    double horizon_row() const;
    // Forward ground range of an image row on the water plane, +inf at or
    // above the horizon. d = height_m * focal_px / (y - y_horizon).
    double ground_distance(double y) const;
    void validate() const;
};

struct SceneConfig {
    int width = 48;
    int height = 48;
    int n_obstacles_min = 2;
    int n_obstacles_max = 5;

    double cam_height_m = 2.0;
    double cam_pitch_rad = 0.19;
    double cam_focal_px = 70.0;
    double danger_radius_m = 15.0;

    double shore_dist_min_m = 30.0;
    double shore_dist_max_m = 110.0;
    double shore_height_min_m = 3.5;
    double shore_height_max_m = 12.0;
    double obstacle_dist_min_m = 4.5;
    double obstacle_dist_max_m = 26.0;

    // Texture amplitudes, all in [0,1].
    double wave_amp = 0.25;
    double reflection_amp = 0.55;
    double glitter_amp = 0.30;
    double cloud_amp = 0.50;
    double tex_noise = 0.12;

    bool multi_edge = false;    // two disjoint water-edge polylines
    bool grid_aligned = false;  // snap all boundaries to the feature grid (4 px)

    void validate() const;
    CameraModel camera() const;
};

struct ObstacleGt {
    Box box;       // tight bounding box
    Mask mask;     // box-local, 1 on obstacle pixels
    double dist_m = 0.0;
};

struct Scene {
    Field3 image;                          // RGB in [0,1]
    LabelMap gt_labels;                    // 0 water, 1 sky, 2 obstacle
    Vec2 horizon_gt_a, horizon_gt_b;       // endpoints at x = 0 and x = W-1
    std::vector<Polyline> water_edges_gt;  // single polyline unless multi_edge
    std::vector<ObstacleGt> obstacles_gt;
    Mask danger_mask;
    CameraModel camera;
    uint64_t seed = 0;

    int width() const { return gt_labels.width(); }
    int height() const { return gt_labels.height(); }
};

// Per-vertex / per-side annotation corruption; zero everywhere reproduces
// the ground truth exactly.
struct AnnotationNoise {
    double edge_jitter_px = 0.0;     // vertical, uniform in [-j, j]
    double horizon_jitter_px = 0.0;  // per-endpoint vertical
    int box_dilate_px = 0;           // uniform outward growth
    int box_jitter_px = 0;           // per-side, <= dilate keeps masks inside
};

struct AugmentConfig {
    double flip_prob = 0.5;
    double color_amp = 0.15;
    // Scaling/rotation are accepted in config but not applied.
    bool enable_scale = false;
    bool enable_rotation = false;
};

Scene generate_scene(uint64_t seed, const SceneConfig& cfg);

Mask danger_zone_mask(const CameraModel& camera, double radius_m = 15.0);

WeakAnnotations gt_annotations(const Scene& scene);
WeakAnnotations derive_weak_annotations(const Scene& scene, const AnnotationNoise& noise);

Scene augment(const Scene& scene, uint64_t seed, const AugmentConfig& cfg);

// Feature planes in channel-major layout (used for the encoder tap and for
// synthetic feature injection).
struct Planes {
    int channels = 0, h = 0, w = 0;
    std::vector<double> v;
    Planes() = default;
    Planes(int c_, int h_, int w_)
        : channels(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, 0.0) {}
    double& at(int c, int y, int x) {
        return v[(static_cast<size_t>(c) * h + y) * w + x];
    }
    double at(int c, int y, int x) const {
        return v[(static_cast<size_t>(c) * h + y) * w + x];
    }
};

// Synthetic encoder tap: one near-orthogonal embedding per class at each
// feature cell (majority class of its 4x4 block) plus Gaussian noise.
Planes planted_features(const Scene& scene, int channels, double sigma, uint64_t seed);

}  // namespace slr
