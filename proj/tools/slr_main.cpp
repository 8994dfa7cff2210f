#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slr/config.hpp"
#include "slr/dataset.hpp"
#include "slr/eval.hpp"
#include "slr/pipeline.hpp"
#include "slr/threads.hpp"

namespace fs = std::filesystem;
using namespace slr;

namespace {

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::validation: return 3;
        case ErrorCategory::parse: return 4;
        case ErrorCategory::data: return 5;
        case ErrorCategory::shape: return 6;
        case ErrorCategory::io: return 7;
        case ErrorCategory::internal: return 8;
    }
    return 8;
}

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    long seed = -1;
    int threads = 0;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool need_out = true) {
    cmd->add_option("--config", a.config_path, "config file (key=value)");
    auto* out = cmd->add_option("--out", a.out_dir, "output directory");
    if (need_out) out->required();
    cmd->add_option("--seed", a.seed, "master seed override");
    cmd->add_option("--threads", a.threads, "worker threads (SLR_THREADS fallback)");
    cmd->add_flag("--force", a.force, "overwrite a completed output directory");
}

ConfigMap load_config(const CommonArgs& a) {
    ConfigMap m = a.config_path.empty() ? ConfigMap{} : ConfigMap::load(a.config_path);
    if (a.seed >= 0) m.set("master_seed", std::to_string(a.seed));
    if (a.threads > 0) threads::set_count(a.threads);
    return m;
}

void ensure_out(const std::string& dir, const std::string& marker, bool force) {
    if (!force && fs::exists(fs::path(dir) / marker))
        fail(ErrorCategory::io,
             dir + " already holds a completed run (" + marker + "); use --force to overwrite");
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorCategory::io, "cannot create output directory " + dir);
}

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::vector<double> parse_list(const std::string& s, std::vector<double> def) {
    if (s.empty()) return def;
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

int cmd_gen(const CommonArgs& a) {
    ConfigMap m = load_config(a);
    ensure_out(a.out_dir, "manifest.json", a.force);
    DatasetConfig dc = DatasetConfig::from(m);
    uint64_t seed = m.get("master_seed", static_cast<uint64_t>(1234));
    generate_dataset(a.out_dir, dc, seed);
    std::printf("dataset: %d train + %d test scenes in %s\n", dc.n_train, dc.n_test,
                a.out_dir.c_str());
    return 0;
}

Dataset load_ds(const ConfigMap& m) {
    std::string dir = m.get("dataset_dir", std::string("dataset"));
    require(dataset_exists(dir), ErrorCategory::data, "no dataset at " + dir + " (run gen)");
    return load_dataset(dir);
}

int cmd_train(const CommonArgs& a) {
    ConfigMap m = load_config(a);
    ensure_out(a.out_dir, "run.json", a.force);
    SlrConfig cfg = SlrConfig::from(m);
    Dataset ds = load_ds(m);
    auto [net, rec] = run_slr(ds, cfg, a.out_dir);
    rec.write(a.out_dir);
    std::printf("%s", rec.metrics_csv().c_str());
    return 0;
}

int cmd_eval(const CommonArgs& a) {
    ConfigMap m = load_config(a);
    ensure_out(a.out_dir, "metrics.csv", a.force);
    SlrConfig cfg = SlrConfig::from(m);
    Dataset ds = load_ds(m);
    std::string ckpt = m.get("checkpoint", std::string(""));
    require(!ckpt.empty(), ErrorCategory::config, "eval needs a checkpoint= config entry");
    ToyNet net;
    net.load(ckpt);
    RunRecord rec;
    rec.config_snapshot = cfg.snapshot();
    rec.metrics.push_back({"eval", evaluate(net, ds.test, cfg.tol_px, cfg.min_det_area)});
    std::ofstream f(a.out_dir + "/metrics.csv");
    require(f.good(), ErrorCategory::io, "cannot write metrics.csv");
    f << rec.metrics_csv();
    std::printf("%s", rec.metrics_csv().c_str());
    return 0;
}

// Flag matrix rows in the published ablation order: water-edge heuristic,
// fine-tuning, constraints r(.), feature clustering, auxiliary loss.
const bool kAblationRows[7][5] = {
    {false, false, false, false, false}, {true, false, false, false, false},
    {true, true, false, false, false},   {true, true, true, false, false},
    {true, true, false, true, false},    {true, true, true, true, false},
    {true, true, true, true, true},
};

int cmd_ablate(const CommonArgs& a) {
    ConfigMap m = load_config(a);
    ensure_out(a.out_dir, "ablation.csv", a.force);
    Dataset ds = load_ds(m);

    std::string csv =
        "edge_heuristic,finetuning,constraints_r,feature_clustering,aux_loss,miou,f1,f1_d\n";
    for (int row = 0; row < 7; ++row) {
        SlrConfig cfg = SlrConfig::from(m);
        cfg.edge_heuristic = kAblationRows[row][0];
        cfg.finetuning = kAblationRows[row][1];
        cfg.constraints_r = kAblationRows[row][2];
        cfg.feature_clustering = kAblationRows[row][3];
        cfg.aux_loss = kAblationRows[row][4];
        std::string row_dir = a.out_dir + "/row" + std::to_string(row + 1);
        fs::create_directories(row_dir);
        auto [net, rec] = run_slr(ds, cfg, row_dir);
        rec.write(row_dir);
        const DetectionReport& r = rec.metrics.back().report;
        for (int f = 0; f < 5; ++f) csv += std::string(kAblationRows[row][f] ? "1" : "0") + ",";
        csv += fmt6(r.miou) + "," + fmt6(r.f1) + "," + fmt6(r.f1_d) + "\n";
        std::printf("ablation row %d done (f1_d=%s)\n", row + 1, fmt6(r.f1_d).c_str());
    }
    std::ofstream f(a.out_dir + "/ablation.csv");
    require(f.good(), ErrorCategory::io, "cannot write ablation.csv");
    f << csv;
    return 0;
}

int cmd_smooth_grid(const CommonArgs& a) {
    ConfigMap m = load_config(a);
    ensure_out(a.out_dir, "smoothing.csv", a.force);
    Dataset ds = load_ds(m);
    SlrConfig base = SlrConfig::from(m);

    std::vector<double> alphas =
        parse_list(m.get("smooth.alphas", std::string("")), {0.0, 0.1, 0.2, 0.3});
    std::vector<double> sigmas = parse_list(m.get("smooth.sigmas", std::string("")), {0.0, 1.0, 2.0});

    std::string csv = "kind,alpha,sigma,mu_r,f1,f1_d,miou\n";
    for (double alpha : alphas)
        for (double sigma : sigmas) {
            ToyNet net = smoothing_baseline(ds, alpha, sigma, base);
            DetectionReport r = evaluate(net, ds.test, base.tol_px, base.min_det_area);
            csv += "smooth," + fmt6(alpha) + "," + fmt6(sigma) + "," + fmt6(r.mu_r) + "," +
                   fmt6(r.f1) + "," + fmt6(r.f1_d) + "," + fmt6(r.miou) + "\n";
            std::printf("smoothing alpha=%.2f sigma=%.2f f1_d=%s\n", alpha, sigma,
                        fmt6(r.f1_d).c_str());
        }

    // Reference row: reuse an existing run when configured, else train one.
    std::string slr_run = m.get("smooth.slr_run", std::string(""));
    DetectionReport ref;
    if (!slr_run.empty()) {
        std::ifstream f(slr_run + "/metrics.csv");
        require(f.good(), ErrorCategory::data, "no metrics.csv in " + slr_run);
        std::string line, last;
        std::getline(f, line);  // header
        while (std::getline(f, line))
            if (!line.empty()) last = line;
        require(!last.empty(), ErrorCategory::data, "empty metrics in " + slr_run);
        std::stringstream ss(last);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        require(cols.size() >= 12, ErrorCategory::parse, "malformed metrics row in " + slr_run);
        ref.mu_r = std::stod(cols[1]);
        ref.f1 = std::stod(cols[4]);
        ref.f1_d = std::stod(cols[7]);
        ref.miou = std::stod(cols[11]);
    } else {
        auto [net, rec] = run_slr(ds, base, "");
        ref = rec.metrics.back().report;
    }
    csv += "slr,,," + fmt6(ref.mu_r) + "," + fmt6(ref.f1) + "," + fmt6(ref.f1_d) + "," +
           fmt6(ref.miou) + "\n";

    std::ofstream f(a.out_dir + "/smoothing.csv");
    require(f.good(), ErrorCategory::io, "cannot write smoothing.csv");
    f << csv;
    return 0;
}

int cmd_report(const CommonArgs& a, const std::vector<std::string>& run_dirs) {
    require(!run_dirs.empty(), ErrorCategory::config, "report needs at least one run directory");
    ensure_out(a.out_dir, "merged.csv", a.force);

    std::vector<std::string> header_cols;
    std::string merged = "run,stage,mu_r,pr,re,f1,pr_d,re_d,f1_d,iou_water,iou_sky,iou_obstacle,miou\n";
    std::map<std::string, std::string> series;  // metric -> csv body
    const char* metric_names[] = {"mu_r", "pr", "re", "f1", "pr_d", "re_d",
                                  "f1_d", "iou_water", "iou_sky", "iou_obstacle", "miou"};

    for (const std::string& dir : run_dirs) {
        std::ifstream f(dir + "/metrics.csv");
        require(f.good(), ErrorCategory::data, "malformed run dir (no metrics.csv): " + dir);
        std::string line;
        require(static_cast<bool>(std::getline(f, line)), ErrorCategory::parse,
                "empty metrics.csv in " + dir);
        std::string run = fs::path(dir).filename().string();
        if (run.empty()) run = dir;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            merged += run + "," + line + "\n";
            std::stringstream ss(line);
            std::vector<std::string> cols;
            std::string tok;
            while (std::getline(ss, tok, ',')) cols.push_back(tok);
            require(cols.size() == 12, ErrorCategory::parse,
                    "malformed metrics row in " + dir + "/metrics.csv");
            for (size_t mi = 0; mi < 11; ++mi)
                series[metric_names[mi]] += run + "," + cols[0] + "," + cols[mi + 1] + "\n";
        }
    }

    std::ofstream fm(a.out_dir + "/merged.csv");
    require(fm.good(), ErrorCategory::io, "cannot write merged.csv");
    fm << merged;
    for (auto& [metric, body] : series) {
        std::ofstream fs_(a.out_dir + "/series_" + metric + ".csv");
        fs_ << "run,stage,value\n" << body;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scaffolded weak-supervision training for maritime obstacle segmentation"};
    app.require_subcommand(1);

    CommonArgs gen_a, train_a, eval_a, ablate_a, smooth_a, report_a;
    std::vector<std::string> report_dirs;

    add_common(app.add_subcommand("gen", "generate the synthetic dataset"), gen_a);
    add_common(app.add_subcommand("train", "run the full training regime"), train_a);
    add_common(app.add_subcommand("eval", "evaluate a checkpoint on the test split"), eval_a);
    add_common(app.add_subcommand("ablate", "run the 7-row component ablation"), ablate_a);
    add_common(app.add_subcommand("smooth-grid", "label-smoothing baseline grid"), smooth_a);
    auto* rep = app.add_subcommand("report", "merge run metrics into comparison tables");
    add_common(rep, report_a);
    rep->add_option("dirs", report_dirs, "run directories to merge");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand("gen")) return cmd_gen(gen_a);
        if (app.got_subcommand("train")) return cmd_train(train_a);
        if (app.got_subcommand("eval")) return cmd_eval(eval_a);
        if (app.got_subcommand("ablate")) return cmd_ablate(ablate_a);
        if (app.got_subcommand("smooth-grid")) return cmd_smooth_grid(smooth_a);
        if (app.got_subcommand("report")) return cmd_report(report_a, report_dirs);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", to_string(e.category), e.what());
        return exit_code(e.category);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error [internal]: %s\n", e.what());
        return exit_code(ErrorCategory::internal);
    }
    return 0;
}
