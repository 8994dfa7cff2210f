#pragma once

#include <string>
#include <vector>

#include "slr/common.hpp"

namespace slr {

// The three weak-annotation kinds: water-edge polylines, dynamic-obstacle
// boxes, and the externally estimated horizon line.
struct WeakAnnotations {
    std::vector<Polyline> water_edges;  // each x-monotone, >= 2 vertices
    std::vector<Box> obstacles;         // half-open pixel boxes
    Vec2 horizon_a, horizon_b;          // endpoints on the image border

    void validate() const;  // structural invariants only (no image size)
};

// Boolean rasters of the five regions the label constraints are built from.
// h_above/h_below and w_above/w_below partition the image; o is the union
// of box interiors.
struct RegionMasks {
    Mask h_above, h_below, w_above, w_below, o;
    int width() const { return o.width(); }
    int height() const { return o.height(); }
};

// Piecewise-linear elevation of the water edge at column x. Columns outside
// every polyline's x-span take the nearest endpoint's elevation; where
// polylines overlap, the lower (larger-y) elevation wins.
double edge_elevation(const std::vector<Polyline>& edges, double x);

// Elevation of the horizon line at column x.
double horizon_elevation(const WeakAnnotations& ann, double x);

// A pixel exactly on a line belongs to the "below" set.
RegionMasks rasterize_regions(const WeakAnnotations& ann, int width, int height);

WeakAnnotations read_annotations(const std::string& path);
void write_annotations(const WeakAnnotations& ann, const std::string& path);

}  // namespace slr
