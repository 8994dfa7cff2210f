#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "slr/config.hpp"
#include "slr/dataset.hpp"
#include "slr/eval.hpp"
#include "slr/losses.hpp"
#include "slr/net.hpp"
#include "slr/pseudo_labels.hpp"

namespace slr {

struct LossRow {
    std::string stage;
    int epoch = 0;
    LossTerms terms;
};

struct MetricRow {
    std::string stage;
    DetectionReport report;
};

// Append-only run log; written as run.json + losses.csv + metrics.csv.
struct RunRecord {
    std::vector<LossRow> losses;
    std::vector<MetricRow> metrics;
    std::map<std::string, std::string> config_snapshot;
    std::vector<std::string> checkpoints;
    double wall_ms = 0.0;

    std::string metrics_csv() const;
    std::string losses_csv() const;
    void write(const std::string& dir) const;
};

// Precomputed per-scene training inputs (unaugmented).
struct TrainItem {
    const Scene* scene = nullptr;
    WeakAnnotations ann;
    RegionMasks regions;
    ConstraintSets cs;
    PartialLabels partial;
    std::vector<ObjectPrior> priors;
};

std::vector<TrainItem> prepare_train_items(const Dataset& ds, const SlrConfig& cfg);

// Trains a freshly initialized network on the partial labels (Eq.-3-style
// composite: focal + pairwise + per-object projection/prior terms).
ToyNet warmup(const Dataset& ds, const SlrConfig& cfg, RunRecord* rec = nullptr);

// Continues training the given network on dense pseudo labels (focal +
// pairwise + water separation).
void finetune(ToyNet& net, const Dataset& ds, const std::vector<PseudoLabels>& pseudo,
              const SlrConfig& cfg, RunRecord* rec = nullptr,
              const std::string& stage = "finetune");

std::vector<PseudoLabels> estimate_dataset(const ToyNet& net, const Dataset& ds,
                                           const SlrConfig& cfg);

// Full regime: warm-up, then `iterations` rounds of estimation and
// fine-tuning, evaluating after every stage. Checkpoints are written when
// out_dir is non-empty.
std::pair<ToyNet, RunRecord> run_slr(const Dataset& ds, const SlrConfig& cfg,
                                     const std::string& out_dir = "");

// Dense ground-truth baseline: per-pixel smoothing p' = p(1-alpha) + alpha/N
// followed by per-channel Gaussian blur (sigma), renormalized per pixel;
// trained with the focal loss only for warmup+finetune epochs.
ToyNet smoothing_baseline(const Dataset& ds, double alpha, double sigma, const SlrConfig& cfg,
                          RunRecord* rec = nullptr);

Field3 smooth_gt_labels(const LabelMap& gt, double alpha, double sigma);

}  // namespace slr
