#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace slr {

// Error taxonomy shared across the library. The CLI maps categories to
// exit codes, so category names are part of the interface.
enum class ErrorCategory {
    config,
    validation,
    parse,
    data,
    shape,
    io,
    internal,
};

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::parse: return "parse";
        case ErrorCategory::data: return "data";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::io: return "io";
        case ErrorCategory::internal: return "internal";
    }
    return "internal";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category(cat) {}
    ErrorCategory category;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

inline void require(bool cond, ErrorCategory cat, const std::string& msg) {
    if (!cond) fail(cat, msg);
}

// Dense row-major W x H raster. (x, y) indexing with y*width + x layout;
// all image-space data in the project lives in these.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : w_(width), h_(height), data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return w_; }
    int height() const { return h_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) { return data_[static_cast<size_t>(y) * w_ + x]; }
    const T& operator()(int x, int y) const { return data_[static_cast<size_t>(y) * w_ + x]; }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool in_bounds(int x, int y) const { return x >= 0 && x < w_ && y >= 0 && y < h_; }

    bool operator==(const Grid&) const = default;

private:
    int w_ = 0;
    int h_ = 0;
    std::vector<T> data_;
};

using Mask = Grid<uint8_t>;
using LabelMap = Grid<uint8_t>;  // 0 water, 1 sky, 2 obstacle

// Class ids, fixed by the dataset file format.
inline constexpr int kWater = 0;
inline constexpr int kSky = 1;
inline constexpr int kObstacle = 2;
inline constexpr int kNumClasses = 3;

// 3-channel per-pixel field (class probabilities, label distributions, RGB).
struct Field3 {
    Field3() = default;
    Field3(int width, int height, double fill = 0.0) {
        for (auto& c : ch) c = Grid<double>(width, height, fill);
    }
    Grid<double> ch[3];
    int width() const { return ch[0].width(); }
    int height() const { return ch[0].height(); }
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Vec2&) const = default;
};

using Polyline = std::vector<Vec2>;

// Axis-aligned box over pixel indices, half-open: covers x0 <= x < x1.
struct Box {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long area() const { return static_cast<long>(width()) * height(); }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    bool operator==(const Box&) const = default;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace slr
