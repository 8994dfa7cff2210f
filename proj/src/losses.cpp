#include "slr/losses.hpp"

#include <algorithm>
#include <cmath>

#include "slr/rng.hpp"

namespace slr {

namespace {

constexpr double kProbLo = 1e-7;
constexpr double kProbHi = 1.0 - 1e-7;

double clamp_prob(double p) { return std::max(kProbLo, std::min(kProbHi, p)); }

// d/dp of t*(1-p)^g*(-ln p), zero where clamping is active.
double focal_term_grad(double p_raw, double t, double g) {
    if (t == 0.0 || p_raw <= kProbLo || p_raw >= kProbHi) return 0.0;
    double p = p_raw;
    double mlnp = -std::log(p);
    double term1 = g > 0.0 ? -g * std::pow(1.0 - p, g - 1.0) * mlnp : 0.0;
    double term2 = -std::pow(1.0 - p, g) / p;
    return t * (term1 + term2);
}

double focal_term(double p_raw, double t, double g) {
    if (t == 0.0) return 0.0;
    double p = clamp_prob(p_raw);
    return t * std::pow(1.0 - p, g) * (-std::log(p));
}

}  // namespace

ObjectPrior make_object_prior(const Scene* scene, const Box& box, PriorMode mode, double corrupt,
                              uint64_t seed) {
    require(box.x1 > box.x0 && box.y1 > box.y0, ErrorCategory::validation,
            "prior box must have positive area");
    ObjectPrior prior;
    prior.box = box;
    prior.mask = Grid<double>(box.width(), box.height(), 0.0);

    if (mode == PriorMode::ellipse) {
        double cx = box.width() / 2.0, cy = box.height() / 2.0;
        for (int y = 0; y < box.height(); ++y)
            for (int x = 0; x < box.width(); ++x) {
                double dx = (x + 0.5 - cx) / cx, dy = (y + 0.5 - cy) / cy;
                if (dx * dx + dy * dy <= 1.0) prior.mask(x, y) = 1.0;
            }
        return prior;
    }

    require(scene != nullptr, ErrorCategory::config,
            "oracle_corrupt prior needs a scene with ground truth");
    const int W = scene->width(), H = scene->height();
    require(box.x0 >= 0 && box.y0 >= 0 && box.x1 <= W && box.y1 <= H, ErrorCategory::validation,
            "prior box outside the image");
    Mask m(box.width(), box.height(), 0);
    for (int y = 0; y < box.height(); ++y)
        for (int x = 0; x < box.width(); ++x)
            m(x, y) = scene->gt_labels(box.x0 + x, box.y0 + y) == kObstacle;

    if (corrupt > 0.0) {
        Rng rng(mix_seed(seed, 0xB0C5));
        int rounds = static_cast<int>(std::lround(corrupt * 3.0));
        for (int r = 0; r < rounds; ++r) {
            bool dilate = rng.chance(0.5);
            Mask next = m;
            for (int y = 0; y < m.height(); ++y)
                for (int x = 0; x < m.width(); ++x) {
                    bool edge = false;
                    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                        int nx = x + dx, ny = y + dy;
                        bool nb = m.in_bounds(nx, ny) ? m(nx, ny) != 0 : false;
                        if (nb != (m(x, y) != 0)) edge = true;
                    }
                    if (!edge) continue;
                    if (dilate && !m(x, y) && rng.chance(0.7)) next(x, y) = 1;
                    if (!dilate && m(x, y) && rng.chance(0.7)) next(x, y) = 0;
                }
            m = next;
        }
        // Sparse speckle flips near the boundary.
        for (int y = 0; y < m.height(); ++y)
            for (int x = 0; x < m.width(); ++x)
                if (rng.chance(corrupt * 0.08)) m(x, y) = !m(x, y);
    }
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) prior.mask(x, y) = m(x, y) ? 1.0 : 0.0;
    return prior;
}

Tensor focal_loss(Tape& tape, Tensor probs, const Field3& target,
                  const Grid<double>& weights, double gamma) {
    require(probs.shape().ndim == 3 && probs.shape().d[0] == kNumClasses, ErrorCategory::shape,
            "focal loss expects (3,h,w) probabilities");
    const int h = probs.shape().d[1], w = probs.shape().d[2];
    require(target.width() == w && target.height() == h && weights.width() == w &&
                weights.height() == h,
            ErrorCategory::shape, "focal loss target shape mismatch");
    const size_t plane = static_cast<size_t>(h) * w;

    long n_labeled = 0;
    for (size_t i = 0; i < weights.size(); ++i)
        if (weights[i] > 0.0) ++n_labeled;

    Tensor out = tape.node(make_shape({1}), probs.requires_grad());
    if (n_labeled == 0) return out;

    double acc = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double wi = weights(x, y);
            if (wi <= 0.0) continue;
            size_t i = static_cast<size_t>(y) * w + x;
            double px_loss = 0.0;
            for (int c = 0; c < kNumClasses; ++c)
                px_loss += focal_term(probs.val()[c * plane + i], target.ch[c](x, y), gamma);
            acc += wi * px_loss;
        }
    out.val()[0] = acc / static_cast<double>(n_labeled);

    if (probs.requires_grad())
        tape.record([probs, out, target, weights, gamma, n_labeled, h, w, plane]() mutable {
            double g = out.grad()[0] / static_cast<double>(n_labeled);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double wi = weights(x, y);
                    if (wi <= 0.0) continue;
                    size_t i = static_cast<size_t>(y) * w + x;
                    for (int c = 0; c < kNumClasses; ++c) {
                        double d = focal_term_grad(probs.val()[c * plane + i],
                                                   target.ch[c](x, y), gamma);
                        if (d != 0.0) probs.grad()[c * plane + i] += g * wi * d;
                    }
                }
        });
    return out;
}

Tensor projection_loss(Tape& tape, Tensor probs, const Box& box) {
    require(probs.shape().ndim == 3 && probs.shape().d[0] == kNumClasses, ErrorCategory::shape,
            "projection loss expects (3,h,w) probabilities");
    const int h = probs.shape().d[1], w = probs.shape().d[2];
    require(box.x1 > box.x0 && box.y1 > box.y0, ErrorCategory::validation,
            "projection box must have positive area");
    require(box.x0 >= 0 && box.y0 >= 0 && box.x1 <= w && box.y1 <= h, ErrorCategory::validation,
            "projection box outside the image");
    const size_t plane = static_cast<size_t>(h) * w;
    const double* p = probs.val().data() + kObstacle * plane;

    const int rows = box.height(), cols = box.width();
    std::vector<double> q_row(rows), q_col(cols);
    std::vector<int> arg_row(rows), arg_col(cols);
    for (int r = 0; r < rows; ++r) {
        double best = -1.0;
        int arg = box.x0;
        for (int x = box.x0; x < box.x1; ++x) {
            double v = p[static_cast<size_t>(box.y0 + r) * w + x];
            if (v > best) {
                best = v;
                arg = x;
            }
        }
        q_row[r] = best;
        arg_row[r] = arg;
    }
    for (int c = 0; c < cols; ++c) {
        double best = -1.0;
        int arg = box.y0;
        for (int y = box.y0; y < box.y1; ++y) {
            double v = p[static_cast<size_t>(y) * w + box.x0 + c];
            if (v > best) {
                best = v;
                arg = y;
            }
        }
        q_col[c] = best;
        arg_col[c] = arg;
    }

    auto dice = [](const std::vector<double>& q) {
        double s = 0.0, s2 = 0.0;
        for (double v : q) {
            s += v;
            s2 += v * v;
        }
        double den = s2 + static_cast<double>(q.size());
        return std::pair{2.0 * s / den, den};
    };
    auto [dice_r, den_r] = dice(q_row);
    auto [dice_c, den_c] = dice(q_col);

    Tensor out = tape.node(make_shape({1}), probs.requires_grad());
    out.val()[0] = (1.0 - dice_r) + (1.0 - dice_c);

    if (probs.requires_grad())
        tape.record([probs, out, box, w, plane, q_row, q_col, arg_row, arg_col, dice_r, dice_c,
                     den_r, den_c]() mutable {
            double g = out.grad()[0];
            // dice = 2*sum(q)/den, den = sum(q^2) + n;
            // d(dice)/dq_j = 2*(den - 2*sum(q)*q_j)/den^2, routed to the argmax.
            for (size_t r = 0; r < q_row.size(); ++r) {
                double sum_q = dice_r * den_r / 2.0;
                double ddice_dq = 2.0 * (den_r - 2.0 * sum_q * q_row[r]) / (den_r * den_r);
                probs.grad()[kObstacle * plane + static_cast<size_t>(box.y0 + r) * w +
                             arg_row[r]] += g * (-ddice_dq);
            }
            for (size_t c = 0; c < q_col.size(); ++c) {
                double sum_q = dice_c * den_c / 2.0;
                double ddice_dq = 2.0 * (den_c - 2.0 * sum_q * q_col[c]) / (den_c * den_c);
                probs.grad()[kObstacle * plane + static_cast<size_t>(arg_col[c]) * w + box.x0 +
                             c] += g * (-ddice_dq);
            }
        });
    return out;
}

Tensor pairwise_loss(Tape& tape, Tensor probs, const Field3& image, double tau,
                     double sigma_col) {
    require(tau > 0.0 && tau < 1.0, ErrorCategory::config, "tau must be in (0,1)");
    require(probs.shape().ndim == 3 && probs.shape().d[0] == kNumClasses, ErrorCategory::shape,
            "pairwise loss expects (3,h,w) probabilities");
    const int h = probs.shape().d[1], w = probs.shape().d[2];
    require(image.width() == w && image.height() == h, ErrorCategory::shape,
            "pairwise loss image shape mismatch");
    const size_t plane = static_cast<size_t>(h) * w;
    const double inv_s2 = 1.0 / (sigma_col * sigma_col);

    // Each undirected 8-neighborhood edge once: E, S, SE, SW offsets.
    static constexpr int offs[4][2] = {{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
    std::vector<std::pair<int, int>> edges;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (auto& o : offs) {
                int nx = x + o[0], ny = y + o[1];
                if (nx < 0 || nx >= w || ny >= h) continue;
                double d2 = 0.0;
                for (int c = 0; c < 3; ++c) {
                    double d = image.ch[c](x, y) - image.ch[c](nx, ny);
                    d2 += d * d;
                }
                if (std::exp(-d2 * inv_s2) >= tau)
                    edges.emplace_back(y * w + x, ny * w + nx);
            }

    Tensor out = tape.node(make_shape({1}), probs.requires_grad());
    if (edges.empty()) return out;

    double acc = 0.0;
    for (auto [i, j] : edges) {
        double ps = 0.0;
        for (int c = 0; c < kNumClasses; ++c)
            ps += probs.val()[c * plane + i] * probs.val()[c * plane + j];
        acc += -std::log(std::max(ps, kProbLo));
    }
    out.val()[0] = acc / static_cast<double>(edges.size());

    if (probs.requires_grad())
        tape.record([probs, out, edges = std::move(edges), plane]() mutable {
            double g = out.grad()[0] / static_cast<double>(edges.size());
            for (auto [i, j] : edges) {
                double ps = 0.0;
                for (int c = 0; c < kNumClasses; ++c)
                    ps += probs.val()[c * plane + i] * probs.val()[c * plane + j];
                if (ps <= kProbLo) continue;
                double f = -g / ps;
                for (int c = 0; c < kNumClasses; ++c) {
                    probs.grad()[c * plane + i] += f * probs.val()[c * plane + j];
                    probs.grad()[c * plane + j] += f * probs.val()[c * plane + i];
                }
            }
        });
    return out;
}

Tensor aux_loss(Tape& tape, Tensor probs, const ObjectPrior& prior, double gamma) {
    require(probs.shape().ndim == 3 && probs.shape().d[0] == kNumClasses, ErrorCategory::shape,
            "aux loss expects (3,h,w) probabilities");
    const int h = probs.shape().d[1], w = probs.shape().d[2];
    const Box& box = prior.box;
    require(box.x0 >= 0 && box.y0 >= 0 && box.x1 <= w && box.y1 <= h, ErrorCategory::validation,
            "prior box outside the image");
    const size_t plane = static_cast<size_t>(h) * w;
    const double inv_n = 1.0 / static_cast<double>(box.area());

    double acc = 0.0;
    for (int y = box.y0; y < box.y1; ++y)
        for (int x = box.x0; x < box.x1; ++x) {
            double t = prior.mask(x - box.x0, y - box.y0);
            double p = probs.val()[kObstacle * plane + static_cast<size_t>(y) * w + x];
            acc += focal_term(p, t, gamma) + focal_term(1.0 - p, 1.0 - t, gamma);
        }

    Tensor out = tape.node(make_shape({1}), probs.requires_grad());
    out.val()[0] = acc * inv_n;

    if (probs.requires_grad())
        tape.record([probs, out, prior, box, w, plane, gamma, inv_n]() mutable {
            double g = out.grad()[0] * inv_n;
            for (int y = box.y0; y < box.y1; ++y)
                for (int x = box.x0; x < box.x1; ++x) {
                    double t = prior.mask(x - box.x0, y - box.y0);
                    size_t idx = kObstacle * plane + static_cast<size_t>(y) * w + x;
                    double p = probs.val()[idx];
                    double d = focal_term_grad(p, t, gamma) -
                               focal_term_grad(1.0 - p, 1.0 - t, gamma);
                    probs.grad()[idx] += g * d;
                }
        });
    return out;
}

Tensor water_separation_loss(Tape& tape, Tensor features, const Mask& water_mask,
                             const Mask& obstacle_mask, double lambda_ws, double eps) {
    require(features.shape().ndim == 3, ErrorCategory::shape, "features must be (c,h,w)");
    const int c = features.shape().d[0], fh = features.shape().d[1], fw = features.shape().d[2];
    require(water_mask.width() == fw && water_mask.height() == fh &&
                obstacle_mask.width() == fw && obstacle_mask.height() == fh,
            ErrorCategory::shape, "water separation masks must match feature resolution");
    const size_t plane = static_cast<size_t>(fh) * fw;

    long nw = 0, no = 0;
    for (size_t i = 0; i < water_mask.size(); ++i) {
        require(!(water_mask[i] && obstacle_mask[i]), ErrorCategory::validation,
                "water/obstacle masks must be disjoint");
        nw += water_mask[i] ? 1 : 0;
        no += obstacle_mask[i] ? 1 : 0;
    }
    Tensor out = tape.node(make_shape({1}), features.requires_grad());
    if (nw == 0 || no == 0 || lambda_ws == 0.0) return out;

    // Mask and feature planes share the y*w+x layout, so flat indices agree.
    auto mask_at = [](const Mask& m, size_t i) { return m[i] != 0; };

    std::vector<double> mw(c), mo(c), vw(c), vo(c);
    for (int ch = 0; ch < c; ++ch) {
        const double* f = features.val().data() + ch * plane;
        double sw = 0.0, so = 0.0;
        for (size_t i = 0; i < plane; ++i) {
            if (mask_at(water_mask, i)) sw += f[i];
            if (mask_at(obstacle_mask, i)) so += f[i];
        }
        mw[ch] = sw / nw;
        mo[ch] = so / no;
        double qw = 0.0, qo = 0.0;
        for (size_t i = 0; i < plane; ++i) {
            if (mask_at(water_mask, i)) qw += (f[i] - mw[ch]) * (f[i] - mw[ch]);
            if (mask_at(obstacle_mask, i)) qo += (f[i] - mo[ch]) * (f[i] - mo[ch]);
        }
        vw[ch] = qw / nw;
        vo[ch] = qo / no;
    }

    double total = 0.0;
    for (int ch = 0; ch < c; ++ch) {
        double dmu = mw[ch] - mo[ch];
        double num = vw[ch] + vo[ch];
        double den = dmu * dmu + num + eps;
        total += num / den;
    }
    out.val()[0] = lambda_ws * total;

    if (features.requires_grad())
        tape.record([features, out, water_mask, obstacle_mask, lambda_ws, eps, mw, mo, vw, vo,
                     nw, no, c, plane]() mutable {
            double gup = out.grad()[0] * lambda_ws;
            for (int ch = 0; ch < c; ++ch) {
                double dmu = mw[ch] - mo[ch];
                double num = vw[ch] + vo[ch];
                double den = dmu * dmu + num + eps;
                double dL_dv = gup * (den - num) / (den * den);
                double dL_dmw = gup * num * (-2.0 * dmu) / (den * den);
                double dL_dmo = gup * num * (2.0 * dmu) / (den * den);
                const double* f = features.val().data() + ch * plane;
                double* gf = features.grad().data() + ch * plane;
                for (size_t i = 0; i < plane; ++i) {
                    if (water_mask[i])
                        gf[i] += dL_dv * 2.0 * (f[i] - mw[ch]) / nw + dL_dmw / nw;
                    if (obstacle_mask[i])
                        gf[i] += dL_dv * 2.0 * (f[i] - mo[ch]) / no + dL_dmo / no;
                }
            }
        });
    return out;
}

void argmax_class_masks(const Field3& labels, int fh, int fw, Mask& water, Mask& obstacle) {
    const int w = labels.width(), h = labels.height();
    require(w == fw * 4 && h == fh * 4, ErrorCategory::shape,
            "labels must be 4x the feature resolution");
    water = Mask(fw, fh, 0);
    obstacle = Mask(fw, fh, 0);
    for (int cy = 0; cy < fh; ++cy)
        for (int cx = 0; cx < fw; ++cx) {
            int nw = 0, no = 0;
            for (int y = cy * 4; y < cy * 4 + 4; ++y)
                for (int x = cx * 4; x < cx * 4 + 4; ++x) {
                    int best = 0;
                    for (int c = 1; c < kNumClasses; ++c)
                        if (labels.ch[c](x, y) > labels.ch[best](x, y)) best = c;
                    if (best == kWater) ++nw;
                    if (best == kObstacle) ++no;
                }
            if (nw > 8) water(cx, cy) = 1;
            if (no > 8) obstacle(cx, cy) = 1;
        }
}

Tensor warmup_loss(Tape& tape, Tensor probs, const PartialLabels& partial,
                   const std::vector<ObjectPrior>& priors, const Field3& image,
                   const LossConfig& cfg, LossTerms* breakdown) {
    Tensor foc = tape.scale(focal_loss(tape, probs, partial.y, partial.w, cfg.gamma), cfg.w_foc);
    Tensor pair = tape.scale(pairwise_loss(tape, probs, image, cfg.tau, cfg.sigma_col),
                             cfg.w_pair);
    Tensor total = tape.add(foc, pair);
    double proj_sum = 0.0, aux_sum = 0.0;
    for (const ObjectPrior& prior : priors) {
        Tensor proj = tape.scale(projection_loss(tape, probs, prior.box), cfg.w_proj);
        Tensor aux = tape.scale(aux_loss(tape, probs, prior, cfg.gamma), cfg.w_aux);
        proj_sum += proj.scalar();
        aux_sum += aux.scalar();
        total = tape.add(total, tape.add(proj, aux));
    }
    if (breakdown) {
        breakdown->foc = foc.scalar();
        breakdown->pair = pair.scalar();
        breakdown->proj = proj_sum;
        breakdown->aux = aux_sum;
        breakdown->ws = 0.0;
        breakdown->total = total.scalar();
    }
    return total;
}

Tensor finetune_loss(Tape& tape, Tensor probs, Tensor features,
                     const Field3& target, const Grid<double>& weights, const Field3& image,
                     const LossConfig& cfg, LossTerms* breakdown) {
    Tensor foc = tape.scale(focal_loss(tape, probs, target, weights, cfg.gamma), cfg.w_foc);
    Tensor pair = tape.scale(pairwise_loss(tape, probs, image, cfg.tau, cfg.sigma_col),
                             cfg.w_pair);
    Mask water, obstacle;
    argmax_class_masks(target, features.shape().d[1], features.shape().d[2], water, obstacle);
    Tensor ws = water_separation_loss(tape, features, water, obstacle, cfg.lambda_ws);
    Tensor total = tape.add(tape.add(foc, pair), ws);
    if (breakdown) {
        breakdown->foc = foc.scalar();
        breakdown->pair = pair.scalar();
        breakdown->proj = 0.0;
        breakdown->aux = 0.0;
        breakdown->ws = ws.scalar();
        breakdown->total = total.scalar();
    }
    return total;
}

}  // namespace slr
