#include "slr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace slr {

LabelMap argmax_labels(const Field3& probs) {
    const int W = probs.width(), H = probs.height();
    LabelMap m(W, H, 0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            int best = 0;
            for (int c = 1; c < kNumClasses; ++c)
                if (probs.ch[c](x, y) > probs.ch[best](x, y)) best = c;
            m(x, y) = static_cast<uint8_t>(best);
        }
    return m;
}

double water_edge_robustness(const LabelMap& pred, const std::vector<Polyline>& gt_edges,
                             double tol_px, const std::vector<uint8_t>* excluded_cols) {
    const int W = pred.width(), H = pred.height();
    long covered = 0, correct = 0;
    for (int x = 0; x < W; ++x) {
        if (excluded_cols && (*excluded_cols)[x]) continue;
        double row_gt = edge_elevation(gt_edges, x);
        if (row_gt < 0.0 || row_gt >= H) continue;
        ++covered;

        int bottom = -1;
        for (int y = H - 1; y >= 0; --y)
            if (pred(x, y) == kWater) {
                bottom = y;
                break;
            }
        if (bottom < 0) continue;  // no water: incorrect
        int top = bottom;
        while (top > 0 && pred(x, top - 1) == kWater) --top;
        if (std::abs(top - row_gt) <= tol_px) ++correct;
    }
    if (covered == 0) return 1.0;
    return static_cast<double>(correct) / static_cast<double>(covered);
}

std::vector<Detection> extract_detections(const LabelMap& pred, const RegionMasks& regions,
                                          long min_det_area) {
    const int W = pred.width(), H = pred.height();
    require(regions.width() == W && regions.height() == H, ErrorCategory::shape,
            "regions do not match predictions");

    Grid<int> comp(W, H, -1);
    std::vector<Detection> dets;
    auto eligible = [&](int x, int y) {
        return pred(x, y) == kObstacle && regions.w_below(x, y);
    };
    for (int y0 = 0; y0 < H; ++y0)
        for (int x0 = 0; x0 < W; ++x0) {
            if (!eligible(x0, y0) || comp(x0, y0) >= 0) continue;
            int id = static_cast<int>(dets.size());
            Detection d;
            d.bbox = {x0, y0, x0 + 1, y0 + 1};
            std::queue<std::pair<int, int>> q;
            q.push({x0, y0});
            comp(x0, y0) = id;
            double sx = 0, sy = 0;
            while (!q.empty()) {
                auto [x, y] = q.front();
                q.pop();
                d.pixels.push_back(y * W + x);
                sx += x;
                sy += y;
                d.bbox.x0 = std::min(d.bbox.x0, x);
                d.bbox.y0 = std::min(d.bbox.y0, y);
                d.bbox.x1 = std::max(d.bbox.x1, x + 1);
                d.bbox.y1 = std::max(d.bbox.y1, y + 1);
                static constexpr int off[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (auto& o : off) {
                    int nx = x + o[0], ny = y + o[1];
                    if (nx < 0 || nx >= W || ny < 0 || ny >= H) continue;
                    if (comp(nx, ny) >= 0 || !eligible(nx, ny)) continue;
                    comp(nx, ny) = id;
                    q.push({nx, ny});
                }
            }
            d.area = static_cast<long>(d.pixels.size());
            d.cx = sx / d.area;
            d.cy = sy / d.area;
            dets.push_back(std::move(d));
        }

    std::vector<Detection> kept;
    for (Detection& d : dets)
        if (d.area >= min_det_area) kept.push_back(std::move(d));
    return kept;
}

MatchCounts match_detections(const std::vector<Detection>& dets, const std::vector<Box>& gt_boxes,
                             const Mask& danger_mask) {
    const int W = danger_mask.width();

    struct Pair {
        long inter;
        int det, box;
    };
    std::vector<Pair> pairs;
    for (size_t di = 0; di < dets.size(); ++di)
        for (size_t bi = 0; bi < gt_boxes.size(); ++bi) {
            const Box& b = gt_boxes[bi];
            long inter = 0;
            for (int idx : dets[di].pixels) {
                int x = idx % W, y = idx / W;
                if (b.contains(x, y)) ++inter;
            }
            long need = static_cast<long>(
                std::ceil(0.5 * static_cast<double>(std::min(dets[di].area, b.area()))));
            if (inter >= need && inter > 0)
                pairs.push_back({inter, static_cast<int>(di), static_cast<int>(bi)});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.inter != b.inter) return a.inter > b.inter;
        if (a.det != b.det) return a.det < b.det;
        return a.box < b.box;
    });

    std::vector<uint8_t> det_used(dets.size(), 0), box_used(gt_boxes.size(), 0);
    std::vector<int> det_match(dets.size(), -1);
    for (const Pair& p : pairs) {
        if (det_used[p.det] || box_used[p.box]) continue;
        det_used[p.det] = box_used[p.box] = 1;
        det_match[p.det] = p.box;
    }

    auto box_in_zone = [&](const Box& b) {
        int cx = std::clamp((b.x0 + b.x1) / 2, 0, danger_mask.width() - 1);
        int cy = std::clamp((b.y0 + b.y1) / 2, 0, danger_mask.height() - 1);
        return danger_mask(cx, cy) != 0;
    };
    auto det_in_zone = [&](const Detection& d) {
        int cx = std::clamp(static_cast<int>(std::lround(d.cx)), 0, danger_mask.width() - 1);
        int cy = std::clamp(static_cast<int>(std::lround(d.cy)), 0, danger_mask.height() - 1);
        return danger_mask(cx, cy) != 0;
    };

    MatchCounts mc;
    for (size_t bi = 0; bi < gt_boxes.size(); ++bi) {
        bool matched = box_used[bi];
        bool zone = box_in_zone(gt_boxes[bi]);
        if (matched) {
            ++mc.tp;
            if (zone) ++mc.tp_d;
        } else {
            ++mc.fn;
            if (zone) ++mc.fn_d;
        }
    }
    for (size_t di = 0; di < dets.size(); ++di) {
        if (det_match[di] >= 0) continue;
        ++mc.fp;
        if (det_in_zone(dets[di])) ++mc.fp_d;
    }
    return mc;
}

IouResult miou(const LabelMap& pred, const LabelMap& gt) {
    require(pred.width() == gt.width() && pred.height() == gt.height(), ErrorCategory::shape,
            "label maps differ in size");
    long inter[3] = {0, 0, 0}, uni[3] = {0, 0, 0};
    for (size_t i = 0; i < pred.size(); ++i)
        for (int c = 0; c < kNumClasses; ++c) {
            bool p = pred[i] == c, g = gt[i] == c;
            inter[c] += (p && g) ? 1 : 0;
            uni[c] += (p || g) ? 1 : 0;
        }
    IouResult r{};
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        r.present[c] = uni[c] > 0;
        r.iou[c] = r.present[c] ? static_cast<double>(inter[c]) / uni[c] : 0.0;
        if (r.present[c]) {
            sum += r.iou[c];
            ++n;
        }
    }
    r.miou = n > 0 ? sum / n : 0.0;
    return r;
}

FrameScore score_frame(const LabelMap& pred, const Scene& scene, double tol_px,
                       long min_det_area) {
    const int W = scene.width();
    WeakAnnotations ann = gt_annotations(scene);
    RegionMasks regions = rasterize_regions(ann, W, scene.height());

    // Columns occluded by a dynamic obstacle do not define a visible edge.
    std::vector<uint8_t> excluded(W, 0);
    for (const ObstacleGt& o : scene.obstacles_gt)
        for (int x = std::max(0, o.box.x0); x < std::min(W, o.box.x1); ++x) excluded[x] = 1;

    FrameScore fs;
    fs.mu_r = water_edge_robustness(pred, scene.water_edges_gt, tol_px, &excluded);

    std::vector<Detection> dets = extract_detections(pred, regions, min_det_area);
    std::vector<Box> boxes;
    for (const ObstacleGt& o : scene.obstacles_gt) boxes.push_back(o.box);
    fs.counts = match_detections(dets, boxes, scene.danger_mask);

    for (size_t i = 0; i < pred.size(); ++i)
        for (int c = 0; c < kNumClasses; ++c) {
            bool p = pred[i] == c, g = scene.gt_labels[i] == c;
            fs.inter[c] += (p && g) ? 1 : 0;
            fs.uni[c] += (p || g) ? 1 : 0;
        }
    return fs;
}

DetectionReport aggregate(const std::vector<FrameScore>& frames) {
    require(!frames.empty(), ErrorCategory::data, "cannot evaluate an empty test set");
    DetectionReport r;
    double mu_sum = 0.0;
    long mu_n = 0;
    long inter[3] = {0, 0, 0}, uni[3] = {0, 0, 0};
    for (const FrameScore& f : frames) {
        r.tp += f.counts.tp;
        r.fp += f.counts.fp;
        r.fn += f.counts.fn;
        r.tp_d += f.counts.tp_d;
        r.fp_d += f.counts.fp_d;
        r.fn_d += f.counts.fn_d;
        if (f.mu_r) {
            mu_sum += *f.mu_r;
            ++mu_n;
        }
        for (int c = 0; c < 3; ++c) {
            inter[c] += f.inter[c];
            uni[c] += f.uni[c];
        }
    }
    auto rate = [](long num, long den) {
        return den > 0 ? static_cast<double>(num) / den : 0.0;
    };
    r.pr = rate(r.tp, r.tp + r.fp);
    r.re = rate(r.tp, r.tp + r.fn);
    r.f1 = (r.pr + r.re) > 0 ? 2 * r.pr * r.re / (r.pr + r.re) : 0.0;
    r.pr_d = rate(r.tp_d, r.tp_d + r.fp_d);
    r.re_d = rate(r.tp_d, r.tp_d + r.fn_d);
    r.f1_d = (r.pr_d + r.re_d) > 0 ? 2 * r.pr_d * r.re_d / (r.pr_d + r.re_d) : 0.0;
    r.mu_r = mu_n > 0 ? mu_sum / mu_n : 0.0;
    r.iou_water = rate(inter[kWater], uni[kWater]);
    r.iou_sky = rate(inter[kSky], uni[kSky]);
    r.iou_obstacle = rate(inter[kObstacle], uni[kObstacle]);
    int present = 0;
    double sum = 0.0;
    for (int c = 0; c < 3; ++c)
        if (uni[c] > 0) {
            sum += rate(inter[c], uni[c]);
            ++present;
        }
    r.miou = present > 0 ? sum / present : 0.0;
    return r;
}

DetectionReport evaluate(const ToyNet& net, const std::vector<Scene>& testset, double tol_px,
                         long min_det_area) {
    require(!testset.empty(), ErrorCategory::data, "cannot evaluate an empty test set");
    std::vector<FrameScore> frames(testset.size());
    for (size_t i = 0; i < testset.size(); ++i) {
        ToyNet::Inference inf = net.infer(testset[i].image);
        frames[i] = score_frame(argmax_labels(inf.probs), testset[i], tol_px, min_det_area);
    }
    return aggregate(frames);
}

}  // namespace slr
