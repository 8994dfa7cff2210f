#pragma once

#include <string>
#include <vector>

#include "slr/common.hpp"

namespace slr::io {

// 8-bit PNG codecs. Values round-trip exactly; encoder settings are fixed
// so identical inputs produce identical files.
void write_png_rgb(const std::string& path, const Field3& image);   // [0,1] -> 8-bit
void write_png_gray(const std::string& path, const Mask& values);   // raw bytes
Field3 read_png_rgb(const std::string& path);
Mask read_png_gray(const std::string& path);

// Scales w in [0,1] to 8-bit grayscale (weight visualizations).
void write_png_weights(const std::string& path, const Grid<double>& w);

// Flat tensor dump: magic "SLRT", uint8 ndim, int32 dims[], float32 data,
// all little-endian.
void write_tensor(const std::string& path, const std::vector<int>& dims,
                  const std::vector<double>& values);
std::vector<double> read_tensor(const std::string& path, std::vector<int>& dims);

}  // namespace slr::io
