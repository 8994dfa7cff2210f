#include "slr/partial_labels.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace slr {

ConstraintSets constraint_sets(const RegionMasks& regions) {
    const int W = regions.width(), H = regions.height();
    ConstraintSets cs;
    cs.c_water = cs.c_sky = cs.c_obstacle = Mask(W, H, 0);
    for (size_t i = 0; i < cs.c_water.size(); ++i) {
        cs.c_water[i] = regions.h_above[i] || regions.w_above[i];
        cs.c_sky[i] = regions.h_below[i] || regions.w_below[i];
        cs.c_obstacle[i] = !regions.o[i] && !regions.w_above[i];
    }
    return cs;
}

namespace {

// Meijster squared EDT, integer-exact. Seeds are the w_below pixels.
Grid<int64_t> squared_edt(const Mask& seeds) {
    const int W = seeds.width(), H = seeds.height();
    const int64_t big = static_cast<int64_t>(W) + H + 1;

    // Column pass: vertical distance to the nearest seed.
    Grid<int64_t> g(W, H, big);
    for (int x = 0; x < W; ++x) {
        if (seeds(x, 0)) g(x, 0) = 0;
        for (int y = 1; y < H; ++y)
            g(x, y) = seeds(x, y) ? 0 : (g(x, y - 1) < big ? g(x, y - 1) + 1 : big);
        for (int y = H - 2; y >= 0; --y)
            if (g(x, y + 1) + 1 < g(x, y)) g(x, y) = g(x, y + 1) + 1;
    }

    // Row pass: lower envelope of parabolas i -> (x-i)^2 + g(i)^2.
    Grid<int64_t> dt(W, H, 0);
    std::vector<int> s(W), t(W);
    auto f = [&](int x, int i, int y) {
        int64_t dx = x - i;
        return dx * dx + g(i, y) * g(i, y);
    };
    auto sep = [&](int i, int u, int y) {
        return (static_cast<int64_t>(u) * u - static_cast<int64_t>(i) * i + g(u, y) * g(u, y) -
                g(i, y) * g(i, y)) /
               (2 * static_cast<int64_t>(u - i));
    };
    for (int y = 0; y < H; ++y) {
        int q = 0;
        s[0] = 0;
        t[0] = 0;
        for (int u = 1; u < W; ++u) {
            while (q >= 0 && f(t[q], s[q], y) > f(t[q], u, y)) --q;
            if (q < 0) {
                q = 0;
                s[0] = u;
                t[0] = 0;
            } else {
                int64_t w = 1 + sep(s[q], u, y);
                if (w < W) {
                    ++q;
                    s[q] = u;
                    t[q] = static_cast<int>(w);
                }
            }
        }
        for (int u = W - 1; u >= 0; --u) {
            dt(u, y) = f(u, s[q], y);
            if (u == t[q]) --q;
        }
    }
    return dt;
}

}  // namespace

Grid<double> edge_distance(const RegionMasks& regions) {
    const int W = regions.width(), H = regions.height();
    Grid<double> d(W, H, kInf);
    bool any_seed = false;
    for (size_t i = 0; i < regions.w_below.size(); ++i)
        if (regions.w_below[i]) {
            any_seed = true;
            break;
        }
    if (!any_seed) return d;

    Grid<int64_t> sq = squared_edt(regions.w_below);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (regions.w_above(x, y)) d(x, y) = std::sqrt(static_cast<double>(sq(x, y)));
    return d;
}

PartialLabels build_partial_labels(const RegionMasks& regions, double theta, double omega_min,
                                   bool edge_band) {
    require(theta > 0, ErrorCategory::config, "theta must be positive");
    require(omega_min > 0 && omega_min < 1, ErrorCategory::config, "omega_min must be in (0,1)");

    const int W = regions.width(), H = regions.height();
    ConstraintSets cs = constraint_sets(regions);
    Grid<double> dist = edge_band ? edge_distance(regions) : Grid<double>();
    const double alpha = -std::log(omega_min) / theta;

    PartialLabels out;
    out.y = Field3(W, H, 0.0);
    out.w = Grid<double>(W, H, 0.0);

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            int admissible = -1;
            int n_admissible = 0;
            for (int c = 0; c < kNumClasses; ++c)
                if (!cs.for_class(c)(x, y)) {
                    admissible = c;
                    ++n_admissible;
                }
            if (n_admissible == 1) {
                out.y.ch[admissible](x, y) = 1.0;
                out.w(x, y) = 1.0;
            } else if (edge_band && regions.w_above(x, y) && dist(x, y) < theta) {
                double wgt = std::exp(-alpha * dist(x, y));
                if (wgt >= omega_min) {
                    out.y.ch[kObstacle](x, y) = 1.0;
                    out.w(x, y) = wgt;
                }
            }
        }
    return out;
}

LabelMap partial_class_map(const PartialLabels& labels) {
    const int W = labels.y.width(), H = labels.y.height();
    LabelMap m(W, H, 3);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (labels.w(x, y) <= 0.0) continue;
            int best = 0;
            for (int c = 1; c < kNumClasses; ++c)
                if (labels.y.ch[c](x, y) > labels.y.ch[best](x, y)) best = c;
            m(x, y) = static_cast<uint8_t>(best);
        }
    return m;
}

}  // namespace slr
