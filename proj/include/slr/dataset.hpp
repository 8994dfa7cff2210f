#pragma once

#include <string>
#include <vector>

#include "slr/annotations.hpp"
#include "slr/config.hpp"
#include "slr/scenegen.hpp"

namespace slr {

// On-disk layout: scenes/NNNN_img.png (RGB), NNNN_gt.png (0 water, 1 sky,
// 2 obstacle), NNNN_ann.json, NNNN_danger.png (0/255), plus manifest.json.
// Scenes 0..n_train-1 are the training split; the rest are the test split.
// Training annotations carry the configured noise; test annotations are
// exact ground truth.
struct Dataset {
    std::vector<Scene> train;
    std::vector<WeakAnnotations> train_ann;
    std::vector<Scene> test;
};

void generate_dataset(const std::string& dir, const DatasetConfig& cfg, uint64_t master_seed);

Dataset load_dataset(const std::string& dir);

bool dataset_exists(const std::string& dir);

}  // namespace slr
