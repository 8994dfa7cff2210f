#include "slr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace slr {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap ConfigMap::from_string(const std::string& text) {
    ConfigMap m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        require(eq != std::string::npos, ErrorCategory::parse,
                "config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        require(!key.empty(), ErrorCategory::parse,
                "config line " + std::to_string(lineno) + ": empty key");
        m.kv_[key] = val;
    }
    return m;
}

ConfigMap ConfigMap::load(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorCategory::io, "cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_string(ss.str());
}

double ConfigMap::get(const std::string& key, double def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        return std::stod(it->second);
    } catch (...) {
        fail(ErrorCategory::parse, "config key " + key + ": not a number: " + it->second);
    }
}

int ConfigMap::get(const std::string& key, int def) const {
    return static_cast<int>(get(key, static_cast<long>(def)));
}

long ConfigMap::get(const std::string& key, long def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        return std::stol(it->second);
    } catch (...) {
        fail(ErrorCategory::parse, "config key " + key + ": not an integer: " + it->second);
    }
}

uint64_t ConfigMap::get(const std::string& key, uint64_t def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        return std::stoull(it->second);
    } catch (...) {
        fail(ErrorCategory::parse, "config key " + key + ": not an integer: " + it->second);
    }
}

bool ConfigMap::get(const std::string& key, bool def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    fail(ErrorCategory::parse, "config key " + key + ": not a boolean: " + it->second);
}

std::string ConfigMap::get(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
}

SlrConfig SlrConfig::from(const ConfigMap& m) {
    SlrConfig c;
    c.theta = m.get("theta", c.theta);
    c.omega_min = m.get("omega_min", c.omega_min);
    c.beta = m.get("beta", c.beta);
    c.omega_r = m.get("omega_r", c.omega_r);
    c.gamma = m.get("gamma", c.gamma);
    c.lambda_ws = m.get("lambda_ws", c.lambda_ws);
    c.tau = m.get("tau", c.tau);
    c.sigma_col = m.get("sigma_col", c.sigma_col);
    c.warmup_epochs = m.get("warmup_epochs", c.warmup_epochs);
    c.finetune_epochs = m.get("finetune_epochs", c.finetune_epochs);
    c.iterations = m.get("iterations", c.iterations);
    c.edge_heuristic = m.get("edge_heuristic", c.edge_heuristic);
    c.finetuning = m.get("finetuning", c.finetuning);
    c.constraints_r = m.get("constraints_r", c.constraints_r);
    c.feature_clustering = m.get("feature_clustering", c.feature_clustering);
    c.aux_loss = m.get("aux_loss", c.aux_loss);
    c.lr0 = m.get("lr0", c.lr0);
    c.rho = m.get("rho", c.rho);
    c.eps = m.get("eps", c.eps);
    c.momentum = m.get("momentum", c.momentum);
    c.power = m.get("power", c.power);
    c.batch_size = m.get("batch_size", c.batch_size);
    c.restart_schedule = m.get("restart_schedule", c.restart_schedule);
    c.master_seed = m.get("master_seed", c.master_seed);
    c.aug_flip_prob = m.get("aug_flip_prob", c.aug_flip_prob);
    c.aug_color_amp = m.get("aug_color_amp", c.aug_color_amp);
    c.prior_mode = m.get("prior_mode", c.prior_mode);
    c.prior_corrupt = m.get("prior_corrupt", c.prior_corrupt);
    c.tol_px = m.get("tol_px", c.tol_px);
    c.min_det_area = m.get("min_det_area", c.min_det_area);
    c.dump_pseudo = m.get("dump_pseudo", c.dump_pseudo);
    c.validate();
    return c;
}

void SlrConfig::validate() const {
    require(theta > 0, ErrorCategory::config, "theta must be positive");
    require(omega_min > 0 && omega_min < 1, ErrorCategory::config, "omega_min must be in (0,1)");
    require(omega_r > 0 && omega_r <= 1, ErrorCategory::config, "omega_r must be in (0,1]");
    require(tau > 0 && tau < 1, ErrorCategory::config, "tau must be in (0,1)");
    require(warmup_epochs >= 0 && finetune_epochs >= 0 && iterations >= 0, ErrorCategory::config,
            "epoch/iteration counts must be non-negative");
    require(batch_size >= 1, ErrorCategory::config, "batch_size must be >= 1");
    require(prior_mode == "oracle_corrupt" || prior_mode == "ellipse", ErrorCategory::config,
            "prior_mode must be oracle_corrupt or ellipse");
}

std::map<std::string, std::string> SlrConfig::snapshot() const {
    auto fmt = [](double v) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return std::string(buf);
    };
    std::map<std::string, std::string> s;
    s["theta"] = fmt(theta);
    s["omega_min"] = fmt(omega_min);
    s["beta"] = fmt(beta);
    s["omega_r"] = fmt(omega_r);
    s["gamma"] = fmt(gamma);
    s["lambda_ws"] = fmt(lambda_ws);
    s["tau"] = fmt(tau);
    s["sigma_col"] = fmt(sigma_col);
    s["warmup_epochs"] = std::to_string(warmup_epochs);
    s["finetune_epochs"] = std::to_string(finetune_epochs);
    s["iterations"] = std::to_string(iterations);
    s["edge_heuristic"] = edge_heuristic ? "1" : "0";
    s["finetuning"] = finetuning ? "1" : "0";
    s["constraints_r"] = constraints_r ? "1" : "0";
    s["feature_clustering"] = feature_clustering ? "1" : "0";
    s["aux_loss"] = aux_loss ? "1" : "0";
    s["lr0"] = fmt(lr0);
    s["rho"] = fmt(rho);
    s["eps"] = fmt(eps);
    s["momentum"] = fmt(momentum);
    s["power"] = fmt(power);
    s["batch_size"] = std::to_string(batch_size);
    s["restart_schedule"] = restart_schedule ? "1" : "0";
    s["master_seed"] = std::to_string(master_seed);
    s["aug_flip_prob"] = fmt(aug_flip_prob);
    s["aug_color_amp"] = fmt(aug_color_amp);
    s["prior_mode"] = prior_mode;
    s["prior_corrupt"] = fmt(prior_corrupt);
    s["tol_px"] = fmt(tol_px);
    s["min_det_area"] = std::to_string(min_det_area);
    return s;
}

DatasetConfig DatasetConfig::from(const ConfigMap& m) {
    DatasetConfig d;
    d.n_train = m.get("n_train", d.n_train);
    d.n_test = m.get("n_test", d.n_test);
    d.scene.width = m.get("scene.width", d.scene.width);
    d.scene.height = m.get("scene.height", d.scene.height);
    d.scene.n_obstacles_min = m.get("scene.n_obstacles_min", d.scene.n_obstacles_min);
    d.scene.n_obstacles_max = m.get("scene.n_obstacles_max", d.scene.n_obstacles_max);
    d.scene.cam_height_m = m.get("scene.cam_height_m", d.scene.cam_height_m);
    d.scene.cam_pitch_rad = m.get("scene.cam_pitch_rad", d.scene.cam_pitch_rad);
    d.scene.cam_focal_px = m.get("scene.cam_focal_px", d.scene.cam_focal_px);
    d.scene.danger_radius_m = m.get("scene.danger_radius_m", d.scene.danger_radius_m);
    d.scene.shore_dist_min_m = m.get("scene.shore_dist_min_m", d.scene.shore_dist_min_m);
    d.scene.shore_dist_max_m = m.get("scene.shore_dist_max_m", d.scene.shore_dist_max_m);
    d.scene.shore_height_min_m = m.get("scene.shore_height_min_m", d.scene.shore_height_min_m);
    d.scene.shore_height_max_m = m.get("scene.shore_height_max_m", d.scene.shore_height_max_m);
    d.scene.obstacle_dist_min_m = m.get("scene.obstacle_dist_min_m", d.scene.obstacle_dist_min_m);
    d.scene.obstacle_dist_max_m = m.get("scene.obstacle_dist_max_m", d.scene.obstacle_dist_max_m);
    d.scene.wave_amp = m.get("scene.wave_amp", d.scene.wave_amp);
    d.scene.reflection_amp = m.get("scene.reflection_amp", d.scene.reflection_amp);
    d.scene.glitter_amp = m.get("scene.glitter_amp", d.scene.glitter_amp);
    d.scene.cloud_amp = m.get("scene.cloud_amp", d.scene.cloud_amp);
    d.scene.tex_noise = m.get("scene.tex_noise", d.scene.tex_noise);
    d.scene.multi_edge = m.get("scene.multi_edge", d.scene.multi_edge);
    d.scene.grid_aligned = m.get("scene.grid_aligned", d.scene.grid_aligned);
    d.noise.edge_jitter_px = m.get("noise.edge_jitter_px", d.noise.edge_jitter_px);
    d.noise.horizon_jitter_px = m.get("noise.horizon_jitter_px", d.noise.horizon_jitter_px);
    d.noise.box_dilate_px = m.get("noise.box_dilate_px", d.noise.box_dilate_px);
    d.noise.box_jitter_px = m.get("noise.box_jitter_px", d.noise.box_jitter_px);
    return d;
}

}  // namespace slr
