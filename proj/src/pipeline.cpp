#include "slr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "slr/image_io.hpp"
#include "slr/optim.hpp"
#include "slr/rng.hpp"
#include "slr/threads.hpp"

namespace slr {

namespace {

constexpr uint64_t kWarmupTag = 0x11;
constexpr uint64_t kFinetuneTag = 0x22;
constexpr uint64_t kSmoothTag = 0x33;

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// One augmented training view: horizontally flipped with probability
// flip_prob, channel-wise color jitter on the image only.
struct AugSample {
    Field3 image;
    Field3 y;
    Grid<double> w;
    std::vector<Box> boxes;
    std::vector<ObjectPrior> priors;
};

AugSample make_aug_sample(const Field3& image, const Field3& y, const Grid<double>& w,
                          const std::vector<Box>& boxes, const std::vector<ObjectPrior>& priors,
                          uint64_t seed, const AugmentConfig& acfg) {
    Rng rng(mix_seed(seed, 0xA46));
    bool flip = rng.chance(acfg.flip_prob);
    double gain[3], bias[3];
    for (int c = 0; c < 3; ++c) {
        gain[c] = 1.0 + rng.uniform(-acfg.color_amp, acfg.color_amp);
        bias[c] = rng.uniform(-acfg.color_amp, acfg.color_amp) * 0.25;
    }

    const int W = image.width(), H = image.height();
    AugSample s;
    s.image = Field3(W, H);
    s.y = Field3(W, H);
    s.w = Grid<double>(W, H);
    auto sx = [&](int x) { return flip ? W - 1 - x : x; };
    for (int yy = 0; yy < H; ++yy)
        for (int x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = image.ch[c](sx(x), yy) * gain[c] + bias[c];
                s.image.ch[c](x, yy) = std::max(0.0, std::min(1.0, v));
                s.y.ch[c](x, yy) = y.ch[c](sx(x), yy);
            }
            s.w(x, yy) = w(sx(x), yy);
        }
    for (const Box& b : boxes)
        s.boxes.push_back(flip ? Box{W - b.x1, b.y0, W - b.x0, b.y1} : b);
    for (const ObjectPrior& p : priors) {
        if (!flip) {
            s.priors.push_back(p);
            continue;
        }
        ObjectPrior q;
        q.box = {W - p.box.x1, p.box.y0, W - p.box.x0, p.box.y1};
        q.mask = Grid<double>(p.mask.width(), p.mask.height());
        for (int yy = 0; yy < p.mask.height(); ++yy)
            for (int x = 0; x < p.mask.width(); ++x)
                q.mask(x, yy) = p.mask(p.mask.width() - 1 - x, yy);
        s.priors.push_back(std::move(q));
    }
    return s;
}

enum class StageKind { warmup, finetune, focal_only };

LossConfig loss_config(const SlrConfig& cfg) {
    LossConfig lc;
    lc.gamma = cfg.gamma;
    lc.tau = cfg.tau;
    lc.sigma_col = cfg.sigma_col;
    lc.lambda_ws = cfg.lambda_ws;
    lc.w_aux = cfg.aux_loss ? 1.0 : 0.0;
    return lc;
}

// Per-scene label source for one stage.
struct StageLabels {
    const Field3* y;
    const Grid<double>* w;
};

void train_stage(ToyNet& net, const std::vector<TrainItem>& items,
                 const std::vector<StageLabels>& labels, StageKind kind, int epochs,
                 uint64_t stage_tag, const SlrConfig& cfg, RunRecord* rec,
                 const std::string& stage_name, RmsProp* persistent_opt) {
    if (epochs <= 0 || items.empty()) return;
    const LossConfig lc = loss_config(cfg);
    const AugmentConfig acfg{cfg.aug_flip_prob, cfg.aug_color_amp};
    const int n = static_cast<int>(items.size());
    const int batch = std::min(cfg.batch_size, n);
    const long steps_per_epoch = (n + batch - 1) / batch;

    RmsPropConfig oc;
    oc.lr0 = cfg.lr0;
    oc.rho = cfg.rho;
    oc.eps = cfg.eps;
    oc.momentum = cfg.momentum;
    oc.power = cfg.power;
    oc.total_steps = steps_per_epoch * epochs;
    RmsProp local_opt(net.params(), oc);
    RmsProp& opt = persistent_opt ? *persistent_opt : local_opt;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle_rng(mix_seed(cfg.master_seed, stage_tag * 1000003 + epoch));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.index(static_cast<uint64_t>(i) + 1)]);

        LossTerms epoch_sum;
        for (int b0 = 0; b0 < n; b0 += batch) {
            const int bn = std::min(batch, n - b0);
            opt.zero_grad();
            for (int bi = 0; bi < bn; ++bi) {
                const int idx = order[b0 + bi];
                const TrainItem& item = items[idx];
                uint64_t aug_seed =
                    mix_seed(cfg.master_seed, stage_tag * 0x9e3779b9ULL + epoch * 100003 + idx);
                AugSample sample = make_aug_sample(
                    item.scene->image, *labels[idx].y, *labels[idx].w,
                    kind == StageKind::warmup ? [&] {
                        std::vector<Box> bs;
                        for (const ObjectPrior& p : item.priors) bs.push_back(p.box);
                        return bs;
                    }() : std::vector<Box>{},
                    kind == StageKind::warmup ? item.priors : std::vector<ObjectPrior>{},
                    aug_seed, acfg);

                Tape tape;
                Tensor x = image_to_tensor(sample.image);
                ToyNet::Forward fwd = net.forward(tape, x);
                LossTerms terms;
                Tensor loss;
                if (kind == StageKind::warmup) {
                    PartialLabels pl{sample.y, sample.w};
                    loss = warmup_loss(tape, fwd.probs, pl, sample.priors, sample.image, lc,
                                       &terms);
                } else if (kind == StageKind::finetune) {
                    loss = finetune_loss(tape, fwd.probs, fwd.features, sample.y, sample.w,
                                         sample.image, lc, &terms);
                } else {
                    loss = focal_loss(tape, fwd.probs, sample.y, sample.w, lc.gamma);
                    terms.foc = terms.total = loss.scalar();
                }
                Tensor scaled = tape.scale(loss, 1.0 / bn);
                tape.backward(scaled);
                tape.clear();

                epoch_sum.foc += terms.foc;
                epoch_sum.pair += terms.pair;
                epoch_sum.proj += terms.proj;
                epoch_sum.aux += terms.aux;
                epoch_sum.ws += terms.ws;
                epoch_sum.total += terms.total;
            }
            opt.step();
        }

        if (rec) {
            LossTerms mean;
            mean.foc = epoch_sum.foc / n;
            mean.pair = epoch_sum.pair / n;
            mean.proj = epoch_sum.proj / n;
            mean.aux = epoch_sum.aux / n;
            mean.ws = epoch_sum.ws / n;
            mean.total = epoch_sum.total / n;
            rec->losses.push_back({stage_name, epoch, mean});
        }
    }
}

PriorMode prior_mode_of(const SlrConfig& cfg) {
    return cfg.prior_mode == "ellipse" ? PriorMode::ellipse : PriorMode::oracle_corrupt;
}

}  // namespace

std::vector<TrainItem> prepare_train_items(const Dataset& ds, const SlrConfig& cfg) {
    require(!ds.train.empty(), ErrorCategory::config, "training split is empty");
    require(ds.train.size() == ds.train_ann.size(), ErrorCategory::data,
            "annotation count does not match training scenes");
    std::vector<TrainItem> items(ds.train.size());
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (size_t i = 0; i < ds.train.size(); ++i) {
        const Scene& scene = ds.train[i];
        TrainItem it;
        it.scene = &scene;
        it.ann = ds.train_ann[i];
        it.regions = rasterize_regions(it.ann, scene.width(), scene.height());
        it.cs = constraint_sets(it.regions);
        it.partial =
            build_partial_labels(it.regions, cfg.theta, cfg.omega_min, cfg.edge_heuristic);
        for (size_t bi = 0; bi < it.ann.obstacles.size(); ++bi)
            it.priors.push_back(make_object_prior(
                &scene, it.ann.obstacles[bi], prior_mode_of(cfg), cfg.prior_corrupt,
                mix_seed(scene.seed, 0x9000 + bi)));
        items[i] = std::move(it);
    }
    return items;
}

ToyNet warmup(const Dataset& ds, const SlrConfig& cfg, RunRecord* rec) {
    std::vector<TrainItem> items = prepare_train_items(ds, cfg);
    ToyNet net;
    net.init(mix_seed(cfg.master_seed, kWarmupTag));
    std::vector<StageLabels> labels;
    for (const TrainItem& it : items) labels.push_back({&it.partial.y, &it.partial.w});
    train_stage(net, items, labels, StageKind::warmup, cfg.warmup_epochs, kWarmupTag, cfg, rec,
                "warmup", nullptr);
    return net;
}

void finetune(ToyNet& net, const Dataset& ds, const std::vector<PseudoLabels>& pseudo,
              const SlrConfig& cfg, RunRecord* rec, const std::string& stage) {
    require(pseudo.size() == ds.train.size(), ErrorCategory::data,
            "pseudo labels missing for some scenes");
    std::vector<TrainItem> items = prepare_train_items(ds, cfg);
    std::vector<StageLabels> labels;
    for (size_t i = 0; i < pseudo.size(); ++i) labels.push_back({&pseudo[i].y, &pseudo[i].w});
    train_stage(net, items, labels, StageKind::finetune, cfg.finetune_epochs,
                kFinetuneTag + std::hash<std::string>{}(stage) % 997, cfg, rec, stage, nullptr);
}

std::vector<PseudoLabels> estimate_dataset(const ToyNet& net, const Dataset& ds,
                                           const SlrConfig& cfg) {
    EstimateConfig ec;
    ec.beta = cfg.beta;
    ec.omega_r = cfg.omega_r;
    ec.theta = cfg.theta;
    ec.omega_min = cfg.omega_min;
    ec.constraints_r = cfg.constraints_r;
    ec.feature_clustering = cfg.feature_clustering;
    ec.edge_heuristic = cfg.edge_heuristic;

    std::vector<PseudoLabels> out(ds.train.size());
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (size_t i = 0; i < ds.train.size(); ++i)
        out[i] = estimate_pseudo_labels(net, ds.train[i].image, ds.train_ann[i], ec);
    return out;
}

std::pair<ToyNet, RunRecord> run_slr(const Dataset& ds, const SlrConfig& cfg,
                                     const std::string& out_dir) {
    cfg.validate();
    require(!ds.test.empty(), ErrorCategory::config, "test split is empty");
    auto t0 = std::chrono::steady_clock::now();

    RunRecord rec;
    rec.config_snapshot = cfg.snapshot();

    ToyNet net = warmup(ds, cfg, &rec);
    rec.metrics.push_back({"warmup", evaluate(net, ds.test, cfg.tol_px, cfg.min_det_area)});
    if (!out_dir.empty()) {
        std::string path = out_dir + "/warmup.ckpt";
        net.save(path);
        rec.checkpoints.push_back(path);
    }

    if (cfg.finetuning) {
        for (int it = 1; it <= cfg.iterations; ++it) {
            std::vector<PseudoLabels> pseudo = estimate_dataset(net, ds, cfg);
            if (cfg.dump_pseudo && !out_dir.empty()) {
                for (size_t i = 0; i < pseudo.size(); ++i) {
                    char stem[32];
                    std::snprintf(stem, sizeof stem, "%04zu_it%d", i, it);
                    const Field3& y = pseudo[i].y;
                    std::vector<double> flat;
                    for (int c = 0; c < 3; ++c)
                        flat.insert(flat.end(), y.ch[c].data(), y.ch[c].data() + y.ch[c].size());
                    io::write_tensor(out_dir + "/" + stem + "_pseudo.bin",
                                     {3, y.height(), y.width()}, flat);
                    io::write_png_weights(out_dir + "/" + stem + "_pw.png", pseudo[i].w);
                }
            }
            std::string stage = "iter" + std::to_string(it);
            finetune(net, ds, pseudo, cfg, &rec, stage);
            rec.metrics.push_back({stage, evaluate(net, ds.test, cfg.tol_px, cfg.min_det_area)});
            if (!out_dir.empty()) {
                std::string path = out_dir + "/" + stage + ".ckpt";
                net.save(path);
                rec.checkpoints.push_back(path);
            }
        }
    }

    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    return {std::move(net), std::move(rec)};
}

Field3 smooth_gt_labels(const LabelMap& gt, double alpha, double sigma) {
    require(alpha >= 0.0 && alpha < 1.0, ErrorCategory::config, "alpha must be in [0,1)");
    require(sigma >= 0.0, ErrorCategory::config, "sigma must be non-negative");
    const int W = gt.width(), H = gt.height();
    Field3 labels(W, H, 0.0);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < kNumClasses; ++c)
                labels.ch[c](x, y) =
                    (gt(x, y) == c ? 1.0 : 0.0) * (1.0 - alpha) + alpha / kNumClasses;

    if (sigma > 0.0) {
        int r = static_cast<int>(std::ceil(3.0 * sigma));
        std::vector<double> k(2 * r + 1);
        for (int i = -r; i <= r; ++i) k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        auto blur_axis = [&](const Grid<double>& src, bool horizontal) {
            Grid<double> dst(W, H, 0.0);
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    double acc = 0.0, wsum = 0.0;
                    for (int i = -r; i <= r; ++i) {
                        int xx = horizontal ? x + i : x;
                        int yy = horizontal ? y : y + i;
                        if (xx < 0 || xx >= W || yy < 0 || yy >= H) continue;
                        acc += k[i + r] * src(xx, yy);
                        wsum += k[i + r];
                    }
                    dst(x, y) = acc / wsum;
                }
            return dst;
        };
        for (int c = 0; c < kNumClasses; ++c)
            labels.ch[c] = blur_axis(blur_axis(labels.ch[c], true), false);
    }

    // Per-pixel renormalization keeps every label a distribution.
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double s = 0.0;
            for (int c = 0; c < kNumClasses; ++c) s += labels.ch[c](x, y);
            for (int c = 0; c < kNumClasses; ++c) labels.ch[c](x, y) /= s;
        }
    return labels;
}

ToyNet smoothing_baseline(const Dataset& ds, double alpha, double sigma, const SlrConfig& cfg,
                          RunRecord* rec) {
    require(!ds.train.empty(), ErrorCategory::config, "training split is empty");
    std::vector<TrainItem> items = prepare_train_items(ds, cfg);

    std::vector<Field3> smoothed(ds.train.size());
    std::vector<Grid<double>> weights(ds.train.size());
    for (size_t i = 0; i < ds.train.size(); ++i) {
        smoothed[i] = smooth_gt_labels(ds.train[i].gt_labels, alpha, sigma);
        weights[i] = Grid<double>(ds.train[i].width(), ds.train[i].height(), 1.0);
    }
    std::vector<StageLabels> labels;
    for (size_t i = 0; i < smoothed.size(); ++i) labels.push_back({&smoothed[i], &weights[i]});

    ToyNet net;
    net.init(mix_seed(cfg.master_seed, kSmoothTag));
    train_stage(net, items, labels, StageKind::focal_only,
                cfg.warmup_epochs + cfg.finetune_epochs, kSmoothTag, cfg, rec, "smooth", nullptr);
    return net;
}

std::string RunRecord::metrics_csv() const {
    std::string out = "stage,mu_r,pr,re,f1,pr_d,re_d,f1_d,iou_water,iou_sky,iou_obstacle,miou\n";
    for (const MetricRow& m : metrics) {
        const DetectionReport& r = m.report;
        out += m.stage + "," + fmt(r.mu_r) + "," + fmt(r.pr) + "," + fmt(r.re) + "," + fmt(r.f1) +
               "," + fmt(r.pr_d) + "," + fmt(r.re_d) + "," + fmt(r.f1_d) + "," +
               fmt(r.iou_water) + "," + fmt(r.iou_sky) + "," + fmt(r.iou_obstacle) + "," +
               fmt(r.miou) + "\n";
    }
    return out;
}

std::string RunRecord::losses_csv() const {
    std::string out = "stage,epoch,foc,pair,proj,aux,ws,total\n";
    for (const LossRow& l : losses)
        out += l.stage + "," + std::to_string(l.epoch) + "," + fmt(l.terms.foc) + "," +
               fmt(l.terms.pair) + "," + fmt(l.terms.proj) + "," + fmt(l.terms.aux) + "," +
               fmt(l.terms.ws) + "," + fmt(l.terms.total) + "\n";
    return out;
}

void RunRecord::write(const std::string& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    require(!ec, ErrorCategory::io, "cannot create run directory " + dir);

    nlohmann::json j;
    j["protocol"] = "desk-1";
    j["averaging"] = "micro";
    j["config"] = config_snapshot;
    j["checkpoints"] = checkpoints;
    j["wall_ms"] = wall_ms;
    j["metrics"] = nlohmann::json::array();
    for (const MetricRow& m : metrics) {
        nlohmann::json row;
        row["stage"] = m.stage;
        row["mu_r"] = m.report.mu_r;
        row["f1"] = m.report.f1;
        row["f1_d"] = m.report.f1_d;
        row["miou"] = m.report.miou;
        row["tp"] = m.report.tp;
        row["fp"] = m.report.fp;
        row["fn"] = m.report.fn;
        j["metrics"].push_back(row);
    }
    std::ofstream f(dir + "/run.json");
    require(f.good(), ErrorCategory::io, "cannot write run.json in " + dir);
    f << j.dump(2) << "\n";

    std::ofstream fm(dir + "/metrics.csv");
    fm << metrics_csv();
    std::ofstream fl(dir + "/losses.csv");
    fl << losses_csv();
}

}  // namespace slr
