#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "slr/scenegen.hpp"

namespace slr {

// key=value config file; '#' starts a comment.
class ConfigMap {
public:
    static ConfigMap load(const std::string& path);
    static ConfigMap from_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    double get(const std::string& key, double def) const;
    int get(const std::string& key, int def) const;
    long get(const std::string& key, long def) const;
    bool get(const std::string& key, bool def) const;
    uint64_t get(const std::string& key, uint64_t def) const;
    std::string get(const std::string& key, const std::string& def) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }
    void set(const std::string& key, const std::string& value) { kv_[key] = value; }

private:
    std::map<std::string, std::string> kv_;
};

// Training-regime parameters; defaults are the published hyperparameters
// (theta 11, omega_min 0.005, beta 20, omega_r 0.5, gamma 2, lambda_ws 0.01,
// 25/50 epochs, one iteration).
struct SlrConfig {
    double theta = 11.0;
    double omega_min = 0.005;
    double beta = 20.0;
    double omega_r = 0.5;
    double gamma = 2.0;
    double lambda_ws = 0.01;
    double tau = 0.9;
    double sigma_col = 0.1;

    int warmup_epochs = 25;
    int finetune_epochs = 50;
    int iterations = 1;

    bool edge_heuristic = true;
    bool finetuning = true;
    bool constraints_r = true;
    bool feature_clustering = true;
    bool aux_loss = true;

    // Optimizer. lr0 is the desk-scale default; the full-scale setting is
    // 1e-6 with the same schedule shape.
    double lr0 = 1e-3;
    double rho = 0.99;
    double eps = 1e-8;
    double momentum = 0.9;
    double power = 0.9;
    int batch_size = 4;
    bool restart_schedule = true;  // restart the decay at each stage

    uint64_t master_seed = 1234;

    double aug_flip_prob = 0.5;
    double aug_color_amp = 0.15;

    std::string prior_mode = "oracle_corrupt";  // or "ellipse"
    double prior_corrupt = 0.5;

    double tol_px = 20.0;
    long min_det_area = 25;

    bool dump_pseudo = false;

    static SlrConfig from(const ConfigMap& m);
    std::map<std::string, std::string> snapshot() const;
    void validate() const;
};

struct DatasetConfig {
    int n_train = 200;
    int n_test = 50;
    SceneConfig scene;
    AnnotationNoise noise{1.0, 1.0, 2, 1};  // train-split annotation noise

    static DatasetConfig from(const ConfigMap& m);
};

}  // namespace slr
