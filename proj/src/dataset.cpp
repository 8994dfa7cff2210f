#include "slr/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "slr/image_io.hpp"
#include "slr/rng.hpp"

namespace slr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string scene_stem(const std::string& dir, int idx) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", idx);
    return dir + "/scenes/" + buf;
}

void write_scene(const std::string& dir, int idx, const Scene& scene,
                 const WeakAnnotations& ann) {
    std::string stem = scene_stem(dir, idx);
    io::write_png_rgb(stem + "_img.png", scene.image);
    io::write_png_gray(stem + "_gt.png", scene.gt_labels);
    Mask danger(scene.danger_mask.width(), scene.danger_mask.height());
    for (size_t i = 0; i < danger.size(); ++i) danger[i] = scene.danger_mask[i] ? 255 : 0;
    io::write_png_gray(stem + "_danger.png", danger);
    write_annotations(ann, stem + "_ann.json");
}

Scene read_scene(const std::string& dir, int idx, uint64_t seed, bool gt_annotated) {
    std::string stem = scene_stem(dir, idx);
    Scene s;
    s.seed = seed;
    s.image = io::read_png_rgb(stem + "_img.png");
    s.gt_labels = io::read_png_gray(stem + "_gt.png");
    Mask danger = io::read_png_gray(stem + "_danger.png");
    s.danger_mask = Mask(danger.width(), danger.height());
    for (size_t i = 0; i < danger.size(); ++i) s.danger_mask[i] = danger[i] ? 1 : 0;

    WeakAnnotations ann = read_annotations(stem + "_ann.json");
    if (gt_annotated) {
        // Test split: annotations are exact, so they double as ground truth.
        s.water_edges_gt = ann.water_edges;
        s.horizon_gt_a = ann.horizon_a;
        s.horizon_gt_b = ann.horizon_b;
        for (const Box& b : ann.obstacles) {
            ObstacleGt o;
            o.box = b;
            o.mask = Mask(b.width(), b.height(), 0);
            for (int y = 0; y < b.height(); ++y)
                for (int x = 0; x < b.width(); ++x)
                    o.mask(x, y) = s.gt_labels(b.x0 + x, b.y0 + y) == kObstacle;
            s.obstacles_gt.push_back(std::move(o));
        }
    }
    return s;
}

}  // namespace

bool dataset_exists(const std::string& dir) {
    return fs::exists(fs::path(dir) / "manifest.json");
}

void generate_dataset(const std::string& dir, const DatasetConfig& cfg, uint64_t master_seed) {
    cfg.scene.validate();
    require(cfg.n_train >= 0 && cfg.n_test >= 0, ErrorCategory::config,
            "split sizes must be non-negative");
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "scenes", ec);
    require(!ec, ErrorCategory::io, "cannot create dataset directory " + dir);

    json manifest;
    manifest["n_train"] = cfg.n_train;
    manifest["n_test"] = cfg.n_test;
    manifest["master_seed"] = master_seed;
    manifest["width"] = cfg.scene.width;
    manifest["height"] = cfg.scene.height;
    manifest["scene_seeds"] = json::array();

    const int total = cfg.n_train + cfg.n_test;
    for (int i = 0; i < total; ++i) {
        uint64_t seed = mix_seed(master_seed, static_cast<uint64_t>(i));
        manifest["scene_seeds"].push_back(seed);
        Scene scene = generate_scene(seed, cfg.scene);
        WeakAnnotations ann = (i < cfg.n_train) ? derive_weak_annotations(scene, cfg.noise)
                                                : gt_annotations(scene);
        write_scene(dir, i, scene, ann);
    }

    std::ofstream f(dir + "/manifest.json");
    require(f.good(), ErrorCategory::io, "cannot write manifest in " + dir);
    f << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    require(f.good(), ErrorCategory::data, "no dataset manifest in " + dir);
    json manifest;
    try {
        f >> manifest;
    } catch (const json::exception& e) {
        fail(ErrorCategory::parse, std::string("bad manifest: ") + e.what());
    }
    const int n_train = manifest["n_train"].get<int>();
    const int n_test = manifest["n_test"].get<int>();
    std::vector<uint64_t> seeds;
    for (const auto& s : manifest["scene_seeds"]) seeds.push_back(s.get<uint64_t>());

    Dataset ds;
    for (int i = 0; i < n_train; ++i) {
        uint64_t seed = i < static_cast<int>(seeds.size()) ? seeds[i] : 0;
        ds.train.push_back(read_scene(dir, i, seed, false));
        ds.train_ann.push_back(read_annotations(scene_stem(dir, i) + "_ann.json"));
    }
    for (int i = n_train; i < n_train + n_test; ++i) {
        uint64_t seed = i < static_cast<int>(seeds.size()) ? seeds[i] : 0;
        ds.test.push_back(read_scene(dir, i, seed, true));
    }
    return ds;
}

}  // namespace slr
