#include "slr/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace slr {

namespace {

using nlohmann::json;

// Elevation of one polyline at x, or nullopt-style miss via `covered`.
double polyline_elevation(const Polyline& p, double x, bool& covered) {
    covered = x >= p.front().x && x <= p.back().x;
    if (!covered) return 0.0;
    for (size_t i = 1; i < p.size(); ++i) {
        if (x <= p[i].x) {
            const Vec2& a = p[i - 1];
            const Vec2& b = p[i];
            double t = (b.x == a.x) ? 0.0 : (x - a.x) / (b.x - a.x);
            return a.y + t * (b.y - a.y);
        }
    }
    return p.back().y;
}

}  // namespace

void WeakAnnotations::validate() const {
    for (const Polyline& p : water_edges) {
        require(p.size() >= 2, ErrorCategory::validation, "water edge needs >= 2 vertices");
        for (size_t i = 1; i < p.size(); ++i)
            require(p[i].x > p[i - 1].x, ErrorCategory::validation,
                    "water edge vertices must have strictly increasing x");
    }
    for (const Box& b : obstacles)
        require(b.x1 > b.x0 && b.y1 > b.y0, ErrorCategory::validation,
                "obstacle box must have positive area");
    require(horizon_a.x != horizon_b.x, ErrorCategory::validation,
            "horizon endpoints must span distinct columns");
}

double edge_elevation(const std::vector<Polyline>& edges, double x) {
    double best = -kInf;
    bool any = false;
    for (const Polyline& p : edges) {
        bool covered = false;
        double e = polyline_elevation(p, x, covered);
        if (covered) {
            best = std::max(best, e);
            any = true;
        }
    }
    if (any) return best;

    // Nearest endpoint across all polylines.
    double best_dist = kInf;
    double elev = 0.0;
    for (const Polyline& p : edges) {
        for (const Vec2& v : {p.front(), p.back()}) {
            double d = std::abs(v.x - x);
            if (d < best_dist) {
                best_dist = d;
                elev = v.y;
            }
        }
    }
    return elev;
}

double horizon_elevation(const WeakAnnotations& ann, double x) {
    const Vec2& a = ann.horizon_a;
    const Vec2& b = ann.horizon_b;
    double t = (x - a.x) / (b.x - a.x);
    return a.y + t * (b.y - a.y);
}

RegionMasks rasterize_regions(const WeakAnnotations& ann, int width, int height) {
    ann.validate();
    require(!ann.water_edges.empty(), ErrorCategory::validation, "no water edge annotated");
    for (const Box& b : ann.obstacles)
        require(b.x0 >= 0 && b.y0 >= 0 && b.x1 <= width && b.y1 <= height,
                ErrorCategory::validation, "obstacle box outside the image");

    RegionMasks m;
    m.h_above = m.h_below = m.w_above = m.w_below = m.o = Mask(width, height, 0);

    for (int x = 0; x < width; ++x) {
        double eh = horizon_elevation(ann, x);
        double ew = edge_elevation(ann.water_edges, x);
        for (int y = 0; y < height; ++y) {
            bool above_h = y < eh;  // ties fall below
            bool above_w = y < ew;
            m.h_above(x, y) = above_h;
            m.h_below(x, y) = !above_h;
            m.w_above(x, y) = above_w;
            m.w_below(x, y) = !above_w;
        }
    }
    for (const Box& b : ann.obstacles)
        for (int y = b.y0; y < b.y1; ++y)
            for (int x = b.x0; x < b.x1; ++x) m.o(x, y) = 1;
    return m;
}

WeakAnnotations read_annotations(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorCategory::io, "cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        fail(ErrorCategory::parse, path + ": " + e.what());
    }

    WeakAnnotations ann;
    for (const char* field : {"water_edges", "obstacles", "horizon"})
        require(j.contains(field), ErrorCategory::parse,
                path + ": missing required field \"" + field + "\"");
    try {
        for (const auto& poly : j["water_edges"]) {
            Polyline p;
            for (const auto& v : poly) p.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
            ann.water_edges.push_back(std::move(p));
        }
        for (const auto& b : j["obstacles"])
            ann.obstacles.push_back({b.at(0).get<int>(), b.at(1).get<int>(),
                                     b.at(2).get<int>(), b.at(3).get<int>()});
        const auto& hz = j["horizon"];
        ann.horizon_a = {hz.at(0).at(0).get<double>(), hz.at(0).at(1).get<double>()};
        ann.horizon_b = {hz.at(1).at(0).get<double>(), hz.at(1).at(1).get<double>()};
    } catch (const json::exception& e) {
        fail(ErrorCategory::parse, path + ": " + e.what());
    }
    ann.validate();
    return ann;
}

void write_annotations(const WeakAnnotations& ann, const std::string& path) {
    ann.validate();
    json j;
    j["water_edges"] = json::array();
    for (const Polyline& p : ann.water_edges) {
        json poly = json::array();
        for (const Vec2& v : p) poly.push_back({v.x, v.y});
        j["water_edges"].push_back(poly);
    }
    j["obstacles"] = json::array();
    for (const Box& b : ann.obstacles) j["obstacles"].push_back({b.x0, b.y0, b.x1, b.y1});
    j["horizon"] = {{ann.horizon_a.x, ann.horizon_a.y}, {ann.horizon_b.x, ann.horizon_b.y}};

    std::ofstream f(path);
    require(f.good(), ErrorCategory::io, "cannot write " + path);
    f << j.dump(2) << "\n";
}

}  // namespace slr
