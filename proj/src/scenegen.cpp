#include "slr/scenegen.hpp"

#include <algorithm>
#include <cmath>

#include "slr/rng.hpp"

namespace slr {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double clamp01(double v) { return std::max(0.0, std::min(1.0, v)); }

int snap4(double v) {
    int s = static_cast<int>(std::lround(v / 4.0)) * 4;
    return s < 0 ? 0 : s;
}

// Position-keyed uniform in [0,1); render passes use this instead of a
// sequential stream so pixel evaluation order never matters.
double hash_uniform(uint64_t seed, int x, int y, uint64_t salt) {
    uint64_t k = mix_seed(seed ^ (salt * 0x9ddfea08eb382d69ULL),
                          (static_cast<uint64_t>(y) << 20) ^ static_cast<uint64_t>(x));
    return static_cast<double>(k >> 11) * 0x1.0p-53;
}

struct Rgb {
    double r, g, b;
};

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// Smooth 1-D profile: base level plus a few sine components.
struct SmoothProfile {
    double base = 0.0;
    double amp[3] = {0, 0, 0};
    double freq[3] = {0, 0, 0};
    double phase[3] = {0, 0, 0};

    static SmoothProfile make(Rng& rng, double lo, double hi, double rel_amp) {
        SmoothProfile p;
        double span = hi - lo;
        p.base = rng.uniform(lo + 0.2 * span, hi - 0.2 * span);
        for (int i = 0; i < 3; ++i) {
            p.amp[i] = rng.uniform(0.2, 1.0) * rel_amp * span / (i + 1);
            p.freq[i] = rng.uniform(0.5, 2.0) * (i + 1);
            p.phase[i] = rng.uniform(0.0, kTwoPi);
        }
        return p;
    }

    double eval(double t, double lo, double hi) const {
        double v = base;
        for (int i = 0; i < 3; ++i) v += amp[i] * std::sin(kTwoPi * freq[i] * t + phase[i]);
        return std::max(lo, std::min(hi, v));
    }
};

const Rgb kObstaclePalette[] = {
    {0.13, 0.13, 0.15},  // dark hull
    {0.86, 0.87, 0.90},  // white
    {0.62, 0.12, 0.10},  // red
    {0.82, 0.42, 0.10},  // orange
    {0.10, 0.18, 0.48},  // navy
    {0.76, 0.70, 0.18},  // yellow
};

struct ObstacleDraft {
    Box box;
    Mask mask;
    double dist_m;
    double waterline_row;
    Rgb color;
    Rgb accent;
};

}  // namespace

double CameraModel::horizon_row() const {
    return (height - 1) / 2.0 - focal_px * std::tan(pitch_rad);
}

double CameraModel::ground_distance(double y) const {
    double dy = y - horizon_row();
    if (dy <= 0.0) return kInf;
    return height_m * focal_px / dy;
}

void CameraModel::validate() const {
    require(height_m > 0, ErrorCategory::config, "camera height must be positive");
    require(focal_px > 0, ErrorCategory::config, "camera focal length must be positive");
    require(width > 0 && height > 0, ErrorCategory::config, "camera image size must be positive");
    require(horizon_row() < height, ErrorCategory::config,
            "camera pitch puts the horizon below the image");
}

void SceneConfig::validate() const {
    require(width >= 32 && height >= 32, ErrorCategory::config, "scene size must be >= 32");
    require(n_obstacles_min >= 0 && n_obstacles_max <= 8 && n_obstacles_min <= n_obstacles_max,
            ErrorCategory::config, "obstacle count must lie in 0..8");
    for (double a : {wave_amp, reflection_amp, glitter_amp, cloud_amp, tex_noise})
        require(a >= 0.0 && a <= 1.0, ErrorCategory::config, "texture amplitudes must be in [0,1]");
    require(shore_dist_min_m > 0 && shore_dist_min_m < shore_dist_max_m, ErrorCategory::config,
            "bad shore distance range");
    require(obstacle_dist_min_m > 0 && obstacle_dist_min_m < obstacle_dist_max_m,
            ErrorCategory::config, "bad obstacle distance range");
    camera().validate();
}

CameraModel SceneConfig::camera() const {
    CameraModel cam;
    cam.height_m = cam_height_m;
    cam.pitch_rad = cam_pitch_rad;
    cam.focal_px = cam_focal_px;
    cam.width = width;
    cam.height = height;
    if (grid_aligned) {
        // Snap the horizon to the feature grid by adjusting pitch.
        double target = snap4(cam.horizon_row());
        cam.pitch_rad = std::atan(((height - 1) / 2.0 - target) / cam.focal_px);
    }
    return cam;
}

Mask danger_zone_mask(const CameraModel& camera, double radius_m) {
    camera.validate();
    Mask m(camera.width, camera.height, 0);
    for (int y = 0; y < camera.height; ++y) {
        double d = camera.ground_distance(y);
        if (d < radius_m) {
            for (int x = 0; x < camera.width; ++x) m(x, y) = 1;
        }
    }
    return m;
}

WeakAnnotations gt_annotations(const Scene& scene) {
    WeakAnnotations ann;
    ann.water_edges = scene.water_edges_gt;
    ann.horizon_a = scene.horizon_gt_a;
    ann.horizon_b = scene.horizon_gt_b;
    for (const ObstacleGt& o : scene.obstacles_gt) ann.obstacles.push_back(o.box);
    return ann;
}

Scene generate_scene(uint64_t seed, const SceneConfig& cfg) {
    cfg.validate();
    const int W = cfg.width, H = cfg.height;
    CameraModel cam = cfg.camera();
    const double yh = cam.horizon_row();
    const double fpx = cam.focal_px;
    const double hcam = cam.height_m;

    Rng shore_rng = Rng(seed).fork(1);
    Rng obst_rng = Rng(seed).fork(2);
    Rng palette_rng = Rng(seed).fork(4);
    const uint64_t tex_seed = Rng(seed).fork(3).next_u64();

    Scene scene;
    scene.seed = seed;
    scene.camera = cam;
    scene.horizon_gt_a = {0.0, yh};
    scene.horizon_gt_b = {static_cast<double>(W - 1), yh};

    // Shore distance and height profiles along x.
    SmoothProfile dist_prof =
        SmoothProfile::make(shore_rng, cfg.shore_dist_min_m, cfg.shore_dist_max_m, 0.4);
    SmoothProfile height_prof =
        SmoothProfile::make(shore_rng, cfg.shore_height_min_m, cfg.shore_height_max_m, 0.5);
    bool split_shore = cfg.multi_edge;
    int split_a = W / 3, split_b = 2 * W / 3;

    auto shore_dist = [&](int x) {
        return dist_prof.eval(static_cast<double>(x) / W, cfg.shore_dist_min_m,
                              cfg.shore_dist_max_m);
    };
    auto shore_height = [&](int x) {
        double s = height_prof.eval(static_cast<double>(x) / W, cfg.shore_height_min_m,
                                    cfg.shore_height_max_m);
        return std::max(s, hcam + 1.0);  // keeps every shore top above the horizon
    };

    // Water-edge polylines. Vertices sample the smooth profile; the label
    // raster uses the polyline interpolation itself so the two agree exactly.
    int aligned_edge_row = snap4(yh + 8.0);
    auto edge_at_vertex = [&](int x) -> double {
        if (cfg.grid_aligned) return aligned_edge_row;
        return yh + hcam * fpx / shore_dist(x);
    };
    auto make_polyline = [&](int x_from, int x_to) {
        Polyline p;
        for (int x = x_from; x < x_to; x += 6) p.push_back({static_cast<double>(x), edge_at_vertex(x)});
        if (p.back().x < x_to) p.push_back({static_cast<double>(x_to), edge_at_vertex(x_to)});
        return p;
    };
    if (split_shore) {
        scene.water_edges_gt.push_back(make_polyline(0, split_a));
        scene.water_edges_gt.push_back(make_polyline(split_b, W - 1));
    } else {
        scene.water_edges_gt.push_back(make_polyline(0, W - 1));
    }

    std::vector<double> edge_row(W), top_row(W);
    for (int x = 0; x < W; ++x) {
        edge_row[x] = edge_elevation(scene.water_edges_gt, x);
        double d = shore_dist(x);
        double t = yh - fpx * (shore_height(x) - hcam) / d;
        if (cfg.grid_aligned) {
            int block = x / 4 * 4;
            double db = shore_dist(block);
            t = snap4(yh - fpx * (shore_height(block) - hcam) / db);
        }
        top_row[x] = std::max(0.0, t);
    }

    // Base labels: sky above the shore top, obstacle (shore) down to the
    // water edge, water below. Ties on a boundary row go to the lower class.
    scene.gt_labels = LabelMap(W, H, kWater);
    for (int x = 0; x < W; ++x)
        for (int y = 0; y < H; ++y) {
            if (y < edge_row[x])
                scene.gt_labels(x, y) = (y < top_row[x]) ? kSky : kObstacle;
        }

    // Dynamic obstacles.
    Grid<int> instance(W, H, -1);
    std::vector<ObstacleDraft> drafts;
    int n_obstacles =
        cfg.n_obstacles_min +
        static_cast<int>(obst_rng.index(cfg.n_obstacles_max - cfg.n_obstacles_min + 1));
    for (int n = 0; n < n_obstacles; ++n) {
        for (int attempt = 0; attempt < 40; ++attempt) {
            double u = std::pow(obst_rng.uniform(), 1.3);  // skew toward the near field
            double dist = cfg.obstacle_dist_min_m +
                          u * (cfg.obstacle_dist_max_m - cfg.obstacle_dist_min_m);
            double waterline = yh + hcam * fpx / dist;
            int w_px = 6 + static_cast<int>(obst_rng.index(8));
            int h_px = 5 + static_cast<int>(obst_rng.index(8));
            int hull_below = 1 + static_cast<int>(obst_rng.index(2));
            int shape = static_cast<int>(obst_rng.index(3));
            int xc = 2 + static_cast<int>(obst_rng.index(std::max(1, W - w_px - 4))) + w_px / 2;

            if (cfg.grid_aligned) {
                w_px = (obst_rng.index(2) ? 8 : 12);
                h_px = (obst_rng.index(2) ? 8 : 12);
                hull_below = 0;
                shape = -1;  // full rectangle
                xc = snap4(xc) + w_px / 2;
                waterline = snap4(waterline);
                if (waterline < aligned_edge_row + 4) waterline = aligned_edge_row + 4;
            }

            int x0 = xc - w_px / 2;
            int x1 = x0 + w_px;
            int ytop = static_cast<int>(std::lround(waterline)) - h_px;
            int y1 = static_cast<int>(std::lround(waterline)) + hull_below;
            if (cfg.grid_aligned) {
                y1 = static_cast<int>(waterline);
                ytop = y1 - h_px;
            }
            Box box{x0, ytop, x1, y1};
            if (box.x0 < 1 || box.x1 > W - 1 || box.y0 < 1 || box.y1 > H - 1) continue;

            // Stay below the shore edge over the whole span.
            double max_edge = 0.0;
            for (int x = box.x0; x < box.x1; ++x) max_edge = std::max(max_edge, edge_row[x]);
            if (waterline < max_edge + 2.0 && !cfg.grid_aligned) continue;
            if (cfg.grid_aligned && box.y0 < aligned_edge_row + 1) continue;

            bool overlaps = false;
            for (const ObstacleDraft& d : drafts) {
                const Box& o = d.box;
                if (box.x0 < o.x1 + 1 && o.x0 < box.x1 + 1 && box.y0 < o.y1 + 1 &&
                    o.y0 < box.y1 + 1) {
                    overlaps = true;
                    break;
                }
            }
            if (overlaps) continue;

            Mask mask(box.width(), box.height(), 0);
            int bw = box.width(), bh = box.height();
            if (shape < 0) {
                for (size_t i = 0; i < mask.size(); ++i) mask[i] = 1;
            } else if (shape == 0) {  // hull + cabin
                int hull_h = std::max(2, bh / 3);
                for (int y = bh - hull_h - hull_below; y < bh; ++y)
                    for (int x = 0; x < bw; ++x) mask(x, y) = 1;
                int cw = std::max(2, bw / 2);
                int cx = (bw - cw) / 2;
                for (int y = 0; y < bh - hull_h - hull_below; ++y)
                    for (int x = cx; x < cx + cw; ++x) mask(x, y) = 1;
            } else if (shape == 1) {  // buoy: inscribed ellipse
                double rx = bw / 2.0, ry = bh / 2.0;
                for (int y = 0; y < bh; ++y)
                    for (int x = 0; x < bw; ++x) {
                        double dx = (x + 0.5 - rx) / rx, dy = (y + 0.5 - ry) / ry;
                        if (dx * dx + dy * dy <= 1.0) mask(x, y) = 1;
                    }
            } else {  // sail + hull
                int hull_h = std::max(1, bh / 4 + hull_below);
                for (int y = bh - hull_h; y < bh; ++y)
                    for (int x = 0; x < bw; ++x) mask(x, y) = 1;
                double apex = 0.25 + 0.5 * obst_rng.uniform();
                for (int y = 0; y < bh - hull_h; ++y) {
                    double t = static_cast<double>(y) / std::max(1, bh - hull_h);
                    int half = std::max(1, static_cast<int>(std::lround(t * bw / 2)));
                    int cx = static_cast<int>(apex * bw);
                    for (int x = std::max(0, cx - half); x < std::min(bw, cx + half); ++x)
                        mask(x, y) = 1;
                }
            }

            // Tighten the box around the mask.
            int mx0 = bw, my0 = bh, mx1 = 0, my1 = 0;
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x)
                    if (mask(x, y)) {
                        mx0 = std::min(mx0, x);
                        my0 = std::min(my0, y);
                        mx1 = std::max(mx1, x + 1);
                        my1 = std::max(my1, y + 1);
                    }
            if (mx1 <= mx0) continue;
            Box tight{box.x0 + mx0, box.y0 + my0, box.x0 + mx1, box.y0 + my1};
            Mask tight_mask(tight.width(), tight.height(), 0);
            for (int y = 0; y < tight.height(); ++y)
                for (int x = 0; x < tight.width(); ++x)
                    tight_mask(x, y) = mask(x + mx0, y + my0);

            ObstacleDraft draft;
            draft.box = tight;
            draft.mask = std::move(tight_mask);
            draft.dist_m = dist;
            draft.waterline_row = waterline;
            int ci = static_cast<int>(palette_rng.index(std::size(kObstaclePalette)));
            draft.color = kObstaclePalette[ci];
            draft.accent = kObstaclePalette[(ci + 1 + palette_rng.index(4)) %
                                            std::size(kObstaclePalette)];
            drafts.push_back(std::move(draft));
            break;
        }
    }
    for (size_t i = 0; i < drafts.size(); ++i) {
        const ObstacleDraft& d = drafts[i];
        for (int y = 0; y < d.box.height(); ++y)
            for (int x = 0; x < d.box.width(); ++x)
                if (d.mask(x, y)) {
                    scene.gt_labels(d.box.x0 + x, d.box.y0 + y) = kObstacle;
                    instance(d.box.x0 + x, d.box.y0 + y) = static_cast<int>(i);
                }
        scene.obstacles_gt.push_back({d.box, d.mask, d.dist_m});
    }

    // Palette for the backdrop.
    Rgb sky_top{palette_rng.uniform(0.42, 0.58), palette_rng.uniform(0.60, 0.72),
                palette_rng.uniform(0.80, 0.92)};
    Rgb sky_low{palette_rng.uniform(0.74, 0.86), palette_rng.uniform(0.78, 0.88),
                palette_rng.uniform(0.86, 0.95)};
    Rgb water_near{palette_rng.uniform(0.06, 0.16), palette_rng.uniform(0.22, 0.34),
                   palette_rng.uniform(0.34, 0.50)};
    Rgb water_far = lerp(sky_low, water_near, 0.35);
    Rgb shore_base;
    switch (palette_rng.index(3)) {
        case 0: shore_base = {palette_rng.uniform(0.14, 0.26), palette_rng.uniform(0.30, 0.44),
                              palette_rng.uniform(0.10, 0.20)}; break;
        case 1: shore_base = {palette_rng.uniform(0.34, 0.50), palette_rng.uniform(0.26, 0.38),
                              palette_rng.uniform(0.14, 0.24)}; break;
        default: shore_base = {palette_rng.uniform(0.38, 0.52), palette_rng.uniform(0.38, 0.52),
                               palette_rng.uniform(0.40, 0.54)}; break;
    }

    struct Cloud {
        double cx, cy, rx, ry, amp;
    };
    std::vector<Cloud> clouds;
    int n_clouds = 2 + static_cast<int>(palette_rng.index(3));
    for (int i = 0; i < n_clouds; ++i)
        clouds.push_back({palette_rng.uniform(0, W), palette_rng.uniform(0, std::max(2.0, yh * 0.8)),
                          palette_rng.uniform(4, 12), palette_rng.uniform(1.5, 4),
                          palette_rng.uniform(0.3, 0.8)});

    double wave_phase1 = palette_rng.uniform(0, kTwoPi);
    double wave_phase2 = palette_rng.uniform(0, kTwoPi);

    auto sky_color = [&](int x, int y) {
        double t = yh > 1 ? clamp01(y / std::max(1.0, yh)) : 0.0;
        Rgb c = lerp(sky_top, sky_low, t);
        double cl = 0.0;
        for (const Cloud& cd : clouds) {
            double dx = (x - cd.cx) / cd.rx, dy = (y - cd.cy) / cd.ry;
            cl += cd.amp * std::exp(-(dx * dx + dy * dy));
        }
        cl *= cfg.cloud_amp;
        return lerp(c, {0.98, 0.98, 0.99}, clamp01(cl));
    };
    auto shore_color = [&](int x, int y) {
        double v = 0.12 * std::sin(x * 0.37 + y * 0.11) +
                   0.25 * (hash_uniform(tex_seed, x, y, 11) - 0.5);
        double depth = clamp01((edge_row[x] - y) / std::max(1.0, edge_row[x] - top_row[x]));
        Rgb c = shore_base;
        double s = 1.0 + v + 0.25 * depth;
        return Rgb{clamp01(c.r * s), clamp01(c.g * s), clamp01(c.b * s)};
    };
    auto water_base = [&](int x, int y) {
        double t = clamp01((y - yh) / std::max(1.0, H - 1 - yh));
        Rgb c = lerp(water_far, water_near, t);
        double m = cfg.wave_amp * (0.07 * std::sin(kTwoPi * (0.13 * y + 0.021 * x) + wave_phase1) +
                                   0.05 * std::sin(kTwoPi * (0.31 * y - 0.043 * x) + wave_phase2));
        m += cfg.tex_noise * 0.20 * (hash_uniform(tex_seed, x, y, 23) - 0.5);
        return Rgb{clamp01(c.r + m), clamp01(c.g + m), clamp01(c.b + m)};
    };

    scene.image = Field3(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            Rgb c;
            int inst = instance(x, y);
            if (inst >= 0) {
                const ObstacleDraft& d = drafts[inst];
                bool upper = y < d.waterline_row - d.box.height() / 3.0;
                c = upper ? d.accent : d.color;
                double shade = 0.18 * (hash_uniform(tex_seed, x, y, 31 + inst) - 0.5);
                c = {clamp01(c.r + shade), clamp01(c.g + shade), clamp01(c.b + shade)};
            } else if (scene.gt_labels(x, y) == kSky) {
                c = sky_color(x, y);
            } else if (scene.gt_labels(x, y) == kObstacle) {
                c = shore_color(x, y);
            } else {
                c = water_base(x, y);
                // Shore reflection band just below the edge.
                double dy = y - edge_row[x];
                if (dy > 0 && dy <= 6.0) {
                    int wob = static_cast<int>(std::lround(1.2 * std::sin(0.8 * x + wave_phase1)));
                    int ys = static_cast<int>(std::lround(edge_row[x] - dy)) + wob;
                    if (ys >= 0 && ys < H && ys >= top_row[x] && ys < edge_row[x]) {
                        double alpha = cfg.reflection_amp * 0.5 * (1.0 - dy / 6.0);
                        c = lerp(c, shore_color(x, ys), clamp01(alpha));
                    }
                }
                // Glitter.
                double g = hash_uniform(tex_seed, x, y, 47);
                if (g < 0.012) {
                    double b = cfg.glitter_amp * (0.45 + 0.55 * hash_uniform(tex_seed, x, y, 53));
                    c = lerp(c, {1.0, 0.98, 0.92}, clamp01(b));
                }
            }
            double n = cfg.tex_noise * 0.08;
            c.r = clamp01(c.r + n * (hash_uniform(tex_seed, x, y, 61) - 0.5));
            c.g = clamp01(c.g + n * (hash_uniform(tex_seed, x, y, 67) - 0.5));
            c.b = clamp01(c.b + n * (hash_uniform(tex_seed, x, y, 71) - 0.5));
            scene.image.ch[0](x, y) = c.r;
            scene.image.ch[1](x, y) = c.g;
            scene.image.ch[2](x, y) = c.b;
        }

    // Obstacle reflections and wakes on water pixels.
    for (size_t i = 0; i < drafts.size(); ++i) {
        const ObstacleDraft& d = drafts[i];
        double phase = wave_phase2 + static_cast<double>(i);
        for (int mx = 0; mx < d.box.width(); ++mx) {
            int x = d.box.x0 + mx;
            for (int my = 0; my < d.box.height(); ++my) {
                if (!d.mask(mx, my)) continue;
                int ys = d.box.y0 + my;
                if (ys >= d.waterline_row) continue;
                double depth = (d.waterline_row - ys) * 0.85;
                int wob = static_cast<int>(std::lround(1.3 * std::sin(0.9 * x + phase)));
                int yr = static_cast<int>(std::lround(d.waterline_row + depth)) + wob;
                if (yr < 0 || yr >= H || scene.gt_labels(x, yr) != kWater) continue;
                double alpha = cfg.reflection_amp * 0.62 * std::exp(-0.10 * depth);
                Rgb cur{scene.image.ch[0](x, yr), scene.image.ch[1](x, yr),
                        scene.image.ch[2](x, yr)};
                bool upper = ys < d.waterline_row - d.box.height() / 3.0;
                Rgb src = upper ? d.accent : d.color;
                Rgb out = lerp(cur, src, clamp01(alpha));
                scene.image.ch[0](x, yr) = out.r;
                scene.image.ch[1](x, yr) = out.g;
                scene.image.ch[2](x, yr) = out.b;
            }
        }
        // Wake: two diverging streaks below the waterline.
        int xc = (d.box.x0 + d.box.x1) / 2;
        for (int y = static_cast<int>(d.waterline_row) + 1; y < H; ++y) {
            double dy = y - d.waterline_row;
            if (dy > 14) break;
            for (int sgn : {-1, 1}) {
                int x = xc + static_cast<int>(std::lround(sgn * dy * 0.6));
                if (x < 0 || x >= W || scene.gt_labels(x, y) != kWater) continue;
                double alpha = cfg.wave_amp * 0.45 * std::exp(-0.12 * dy);
                for (int c = 0; c < 3; ++c)
                    scene.image.ch[c](x, y) =
                        clamp01(scene.image.ch[c](x, y) + alpha * (0.9 - scene.image.ch[c](x, y)));
            }
        }
    }

    scene.danger_mask = danger_zone_mask(cam, cfg.danger_radius_m);
    return scene;
}

WeakAnnotations derive_weak_annotations(const Scene& scene, const AnnotationNoise& noise) {
    const int W = scene.width(), H = scene.height();
    Rng rng(mix_seed(scene.seed, 0xA1107A7E));

    WeakAnnotations ann;
    ann.horizon_a = scene.horizon_gt_a;
    ann.horizon_b = scene.horizon_gt_b;
    ann.horizon_a.y =
        std::clamp(ann.horizon_a.y + rng.uniform(-noise.horizon_jitter_px, noise.horizon_jitter_px),
                   0.0, H - 1.0);
    ann.horizon_b.y =
        std::clamp(ann.horizon_b.y + rng.uniform(-noise.horizon_jitter_px, noise.horizon_jitter_px),
                   0.0, H - 1.0);

    for (const Polyline& gt : scene.water_edges_gt) {
        Polyline p = gt;
        for (Vec2& v : p) {
            v.y += rng.uniform(-noise.edge_jitter_px, noise.edge_jitter_px);
            // The water edge may never rise above the annotated horizon;
            // otherwise the three constraint sets would cover some pixel
            // completely.
            double hline = ann.horizon_a.y + (ann.horizon_b.y - ann.horizon_a.y) *
                                                 ((v.x - ann.horizon_a.x) /
                                                  (ann.horizon_b.x - ann.horizon_a.x));
            v.y = std::clamp(std::max(v.y, hline), 0.0, H - 1.0);
        }
        ann.water_edges.push_back(std::move(p));
    }

    for (const ObstacleGt& o : scene.obstacles_gt) {
        auto side = [&](int v, int sign) {
            int j = noise.box_jitter_px > 0
                        ? static_cast<int>(rng.index(2 * noise.box_jitter_px + 1)) -
                              noise.box_jitter_px
                        : 0;
            return v + sign * noise.box_dilate_px + j;
        };
        Box b{side(o.box.x0, -1), side(o.box.y0, -1), side(o.box.x1, +1), side(o.box.y1, +1)};
        b.x0 = std::clamp(b.x0, 0, W - 1);
        b.y0 = std::clamp(b.y0, 0, H - 1);
        b.x1 = std::clamp(b.x1, b.x0 + 1, W);
        b.y1 = std::clamp(b.y1, b.y0 + 1, H);
        ann.obstacles.push_back(b);
    }
    return ann;
}

Scene augment(const Scene& scene, uint64_t seed, const AugmentConfig& cfg) {
    Rng rng(mix_seed(seed, 0xA46));
    bool flip = rng.chance(cfg.flip_prob);
    double gain[3], bias[3];
    for (int c = 0; c < 3; ++c) {
        gain[c] = 1.0 + rng.uniform(-cfg.color_amp, cfg.color_amp);
        bias[c] = rng.uniform(-cfg.color_amp, cfg.color_amp) * 0.25;
    }

    const int W = scene.width(), H = scene.height();
    Scene out = scene;
    auto sx = [&](int x) { return flip ? W - 1 - x : x; };

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = scene.image.ch[c](sx(x), y) * gain[c] + bias[c];
                out.image.ch[c](x, y) = std::max(0.0, std::min(1.0, v));
            }
            out.gt_labels(x, y) = scene.gt_labels(sx(x), y);
            out.danger_mask(x, y) = scene.danger_mask(sx(x), y);
        }

    if (flip) {
        out.water_edges_gt.clear();
        for (auto it = scene.water_edges_gt.rbegin(); it != scene.water_edges_gt.rend(); ++it) {
            Polyline p;
            for (auto v = it->rbegin(); v != it->rend(); ++v) p.push_back({W - 1 - v->x, v->y});
            out.water_edges_gt.push_back(std::move(p));
        }
        out.horizon_gt_a = {0.0, scene.horizon_gt_b.y};
        out.horizon_gt_b = {static_cast<double>(W - 1), scene.horizon_gt_a.y};
        out.obstacles_gt.clear();
        for (const ObstacleGt& o : scene.obstacles_gt) {
            ObstacleGt f;
            f.box = {W - o.box.x1, o.box.y0, W - o.box.x0, o.box.y1};
            f.dist_m = o.dist_m;
            f.mask = Mask(o.mask.width(), o.mask.height());
            for (int y = 0; y < o.mask.height(); ++y)
                for (int x = 0; x < o.mask.width(); ++x)
                    f.mask(x, y) = o.mask(o.mask.width() - 1 - x, y);
            out.obstacles_gt.push_back(std::move(f));
        }
    }
    return out;
}

Planes planted_features(const Scene& scene, int channels, double sigma, uint64_t seed) {
    require(channels >= kNumClasses, ErrorCategory::config,
            "planted features need at least one channel per class");
    const int W = scene.width(), H = scene.height();
    require(W % 4 == 0 && H % 4 == 0, ErrorCategory::shape,
            "planted features need sizes divisible by 4");
    Planes f(channels, H / 4, W / 4);
    for (int cy = 0; cy < H / 4; ++cy)
        for (int cx = 0; cx < W / 4; ++cx) {
            int counts[kNumClasses] = {0, 0, 0};
            for (int y = cy * 4; y < cy * 4 + 4; ++y)
                for (int x = cx * 4; x < cx * 4 + 4; ++x) ++counts[scene.gt_labels(x, y)];
            int cls = 0;
            for (int c = 1; c < kNumClasses; ++c)
                if (counts[c] > counts[cls]) cls = c;
            Rng rng(mix_seed(seed, (static_cast<uint64_t>(cy) << 24) ^ cx));
            for (int c = 0; c < channels; ++c)
                f.at(c, cy, cx) = (c == cls ? 1.0 : 0.0) + sigma * rng.normal();
        }
    return f;
}

}  // namespace slr
