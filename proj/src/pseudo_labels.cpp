#include "slr/pseudo_labels.hpp"

#include <algorithm>
#include <cmath>

#include "slr/kernels.hpp"

namespace slr {

Field3 constrain(const Field3& probs, const ConstraintSets& cs) {
    const int W = probs.width(), H = probs.height();
    require(cs.c_water.width() == W && cs.c_water.height() == H, ErrorCategory::shape,
            "constraint masks do not match probabilities");
    Field3 out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double v[3];
            double sum = 0.0;
            for (int c = 0; c < kNumClasses; ++c) {
                v[c] = cs.for_class(c)(x, y) ? 0.0 : probs.ch[c](x, y);
                sum += v[c];
            }
            if (sum <= 0.0)
                fail(ErrorCategory::data, "constraint-consistency error: all classes zeroed at (" +
                                              std::to_string(x) + "," + std::to_string(y) + ")");
            for (int c = 0; c < kNumClasses; ++c) out.ch[c](x, y) = v[c] / sum;
        }
    return out;
}

ProbPlanes area_downsample4(const Field3& probs) {
    const int W = probs.width(), H = probs.height();
    require(W % 4 == 0 && H % 4 == 0, ErrorCategory::shape, "size must be divisible by 4");
    ProbPlanes out;
    for (int c = 0; c < kNumClasses; ++c) {
        out.ch[c] = Grid<double>(W / 4, H / 4, 0.0);
        for (int cy = 0; cy < H / 4; ++cy)
            for (int cx = 0; cx < W / 4; ++cx) {
                double acc = 0.0;
                for (int y = cy * 4; y < cy * 4 + 4; ++y)
                    for (int x = cx * 4; x < cx * 4 + 4; ++x) acc += probs.ch[c](x, y);
                out.ch[c](cx, cy) = acc / 16.0;
            }
    }
    return out;
}

Box box_to_feature_grid(const Box& box, int fw, int fh) {
    Box b;
    b.x0 = std::clamp(box.x0 / 4, 0, fw - 1);
    b.y0 = std::clamp(box.y0 / 4, 0, fh - 1);
    b.x1 = std::clamp((box.x1 + 3) / 4, b.x0 + 1, fw);
    b.y1 = std::clamp((box.y1 + 3) / 4, b.y0 + 1, fh);
    return b;
}

namespace {

// Masked average pooling: sum(mass * F) / sum(mass) over the given cells.
bool pool_prototype(const Planes& features, const Grid<double>& mass,
                    const std::function<bool(int, int)>& cell_ok, std::vector<double>& out) {
    const int C = features.channels, fh = features.h, fw = features.w;
    out.assign(C, 0.0);
    double total = 0.0;
    for (int y = 0; y < fh; ++y)
        for (int x = 0; x < fw; ++x) {
            if (!cell_ok(x, y)) continue;
            double m = mass(x, y);
            if (m <= 0.0) continue;
            total += m;
            for (int c = 0; c < C; ++c) out[c] += m * features.at(c, y, x);
        }
    if (total <= 1e-12) return false;
    for (double& v : out) v /= total;
    return true;
}

}  // namespace

Prototypes compute_prototypes(const Planes& features, const ProbPlanes& r_feat,
                              const std::vector<Box>& boxes_feat) {
    require(features.h == r_feat.height() && features.w == r_feat.width(), ErrorCategory::shape,
            "features and constrained probabilities must share a resolution");
    auto anywhere = [](int, int) { return true; };
    auto outside_boxes = [&boxes_feat](int x, int y) {
        for (const Box& b : boxes_feat)
            if (b.contains(x, y)) return false;
        return true;
    };

    Prototypes p;
    p.water_present = pool_prototype(features, r_feat.ch[kWater], anywhere, p.water);
    p.sky_present = pool_prototype(features, r_feat.ch[kSky], anywhere, p.sky);
    p.static_present = pool_prototype(features, r_feat.ch[kObstacle], outside_boxes, p.stat);
    for (const Box& b : boxes_feat) {
        std::vector<double> proto;
        bool ok = pool_prototype(features, r_feat.ch[kObstacle],
                                 [&b](int x, int y) { return b.contains(x, y); }, proto);
        p.dyn.push_back(std::move(proto));
        p.dyn_present.push_back(ok);
    }
    return p;
}

Grid<double> similarity_map(const Planes& features, const std::vector<double>& proto,
                            bool present) {
    const int C = features.channels, fh = features.h, fw = features.w;
    Grid<double> s(fw, fh, -1.0);
    if (!present) return s;
    double pn = 0.0;
    for (double v : proto) pn += v * v;
    pn = std::sqrt(pn);
    for (int y = 0; y < fh; ++y)
        for (int x = 0; x < fw; ++x) {
            double dot = 0.0, fn = 0.0;
            for (int c = 0; c < C; ++c) {
                double f = features.at(c, y, x);
                dot += f * proto[c];
                fn += f * f;
            }
            fn = std::sqrt(fn);
            s(x, y) = (fn < 1e-12 || pn < 1e-12) ? 0.0 : dot / (fn * pn);
        }
    return s;
}

Grid<double> merge_obstacle_similarity(const Grid<double>& s_static,
                                       const std::vector<Grid<double>>& s_dyn,
                                       const std::vector<Box>& boxes_feat) {
    require(s_dyn.size() == boxes_feat.size(), ErrorCategory::shape,
            "one dynamic similarity map per box expected");
    Grid<double> out = s_static;
    Grid<uint8_t> covered(s_static.width(), s_static.height(), 0);
    for (size_t n = 0; n < boxes_feat.size(); ++n) {
        const Box& b = boxes_feat[n];
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) {
                double v = s_dyn[n](x, y);
                if (!covered(x, y) || v > out(x, y)) out(x, y) = v;
                covered(x, y) = 1;
            }
    }
    return out;
}

Field3 soft_assign(const Grid<double>& s_water, const Grid<double>& s_sky,
                   const Grid<double>& s_obstacle, double beta) {
    const int W = s_water.width(), H = s_water.height();
    Field3 out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double s[3] = {beta * s_water(x, y), beta * s_sky(x, y), beta * s_obstacle(x, y)};
            double mx = std::max({s[0], s[1], s[2]});
            double z = 0.0;
            double e[3];
            for (int c = 0; c < kNumClasses; ++c) {
                e[c] = std::exp(s[c] - mx);
                z += e[c];
            }
            for (int c = 0; c < kNumClasses; ++c) out.ch[c](x, y) = e[c] / z;
        }
    return out;
}

PseudoLabels compose_pseudo_labels(const Field3& p_est, const PartialLabels& partial,
                                   const ConstraintSets& cs, double omega_r,
                                   bool apply_constraints) {
    const int W = p_est.width(), H = p_est.height();
    require(partial.w.width() == W && partial.w.height() == H, ErrorCategory::shape,
            "partial labels do not match estimated probabilities");

    Field3 est = apply_constraints ? constrain(p_est, cs) : p_est;
    PseudoLabels out;
    out.y = Field3(W, H);
    out.w = Grid<double>(W, H, 0.0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (partial.w(x, y) > 0.0) {
                for (int c = 0; c < kNumClasses; ++c) out.y.ch[c](x, y) = partial.y.ch[c](x, y);
                out.w(x, y) = partial.w(x, y);
            } else {
                for (int c = 0; c < kNumClasses; ++c) out.y.ch[c](x, y) = est.ch[c](x, y);
                out.w(x, y) = omega_r;
            }
        }
    return out;
}

Grid<double> upsample_bilinear4(const Grid<double>& m, int out_w, int out_h) {
    Grid<double> out(out_w, out_h, 0.0);
    // Grid layout matches the kernel's plane layout (y*w + x).
    kern::resize_bilinear_fwd(m.data(), out.data(), 1, m.height(), m.width(), out_h, out_w);
    return out;
}

PseudoLabels estimate_pseudo_labels(const ToyNet& net, const Field3& image,
                                    const WeakAnnotations& ann, const EstimateConfig& cfg,
                                    const Planes* feature_override) {
    const int W = image.width(), H = image.height();
    RegionMasks regions = rasterize_regions(ann, W, H);
    ConstraintSets cs = constraint_sets(regions);
    PartialLabels partial =
        build_partial_labels(regions, cfg.theta, cfg.omega_min, cfg.edge_heuristic);

    ToyNet::Inference inf = net.infer(image);
    const Planes& features = feature_override ? *feature_override : inf.features;
    require(features.w * 4 == W && features.h * 4 == H, ErrorCategory::shape,
            "features must be at 1/4 image resolution");

    if (!cfg.feature_clustering)
        return compose_pseudo_labels(inf.probs, partial, cs, cfg.omega_r, cfg.constraints_r);

    Field3 r_img = cfg.constraints_r ? constrain(inf.probs, cs) : inf.probs;
    ProbPlanes r_feat = area_downsample4(r_img);
    std::vector<Box> boxes_feat;
    for (const Box& b : ann.obstacles)
        boxes_feat.push_back(box_to_feature_grid(b, features.w, features.h));

    Prototypes protos = compute_prototypes(features, r_feat, boxes_feat);
    Grid<double> s_water = similarity_map(features, protos.water, protos.water_present);
    Grid<double> s_sky = similarity_map(features, protos.sky, protos.sky_present);
    Grid<double> s_static = similarity_map(features, protos.stat, protos.static_present);
    std::vector<Grid<double>> s_dyn;
    for (size_t n = 0; n < boxes_feat.size(); ++n)
        s_dyn.push_back(similarity_map(features, protos.dyn[n], protos.dyn_present[n]));
    Grid<double> s_obstacle = merge_obstacle_similarity(s_static, s_dyn, boxes_feat);

    Field3 p_est = soft_assign(upsample_bilinear4(s_water, W, H),
                               upsample_bilinear4(s_sky, W, H),
                               upsample_bilinear4(s_obstacle, W, H), cfg.beta);
    return compose_pseudo_labels(p_est, partial, cs, cfg.omega_r, cfg.constraints_r);
}

}  // namespace slr
