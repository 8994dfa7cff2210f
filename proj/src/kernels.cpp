#include "slr/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "slr/threads.hpp"

namespace slr::kern {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Source coordinate of an output sample (half-pixel centers).
inline double src_coord(int out, int nin, int nout) {
    return (out + 0.5) * static_cast<double>(nin) / nout - 0.5;
}

}  // namespace

void conv2d_fwd(const double* x, const double* w, const double* b, double* y, int cin, int cout,
                int k, int h, int wid) {
    const int p = k / 2;
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int co = 0; co < cout; ++co) {
        for (int oy = 0; oy < h; ++oy) {
            double* out = y + (static_cast<size_t>(co) * h + oy) * wid;
            for (int ox = 0; ox < wid; ++ox) out[ox] = b[co];
            for (int ci = 0; ci < cin; ++ci)
                for (int ky = 0; ky < k; ++ky) {
                    int iy = oy + ky - p;
                    if (iy < 0 || iy >= h) continue;
                    const double* xrow = x + (static_cast<size_t>(ci) * h + iy) * wid;
                    for (int kx = 0; kx < k; ++kx) {
                        double wv = w[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx];
                        int lo = std::max(0, p - kx);
                        int hi = std::min(wid, wid + p - kx);
                        for (int ox = lo; ox < hi; ++ox) out[ox] += wv * xrow[ox + kx - p];
                    }
                }
        }
    }
}

void conv2d_bwd_input(const double* w, const double* gy, double* gx, int cin, int cout, int k,
                      int h, int wid) {
    const int p = k / 2;
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int ci = 0; ci < cin; ++ci) {
        for (int iy = 0; iy < h; ++iy) {
            double* gxrow = gx + (static_cast<size_t>(ci) * h + iy) * wid;
            for (int co = 0; co < cout; ++co)
                for (int ky = 0; ky < k; ++ky) {
                    int oy = iy - ky + p;
                    if (oy < 0 || oy >= h) continue;
                    const double* gyrow = gy + (static_cast<size_t>(co) * h + oy) * wid;
                    for (int kx = 0; kx < k; ++kx) {
                        double wv = w[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx];
                        int lo = std::max(0, kx - p);
                        int hi = std::min(wid, wid + kx - p);
                        for (int ix = lo; ix < hi; ++ix) gxrow[ix] += wv * gyrow[ix - kx + p];
                    }
                }
        }
    }
}

void conv2d_bwd_params(const double* x, const double* gy, double* gw, double* gb, int cin,
                       int cout, int k, int h, int wid) {
    const int p = k / 2;
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int co = 0; co < cout; ++co) {
        double gbacc = 0.0;
        const double* gyp = gy + static_cast<size_t>(co) * h * wid;
        for (int i = 0; i < h * wid; ++i) gbacc += gyp[i];
        gb[co] += gbacc;
        for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    double acc = 0.0;
                    for (int oy = 0; oy < h; ++oy) {
                        int iy = oy + ky - p;
                        if (iy < 0 || iy >= h) continue;
                        const double* gyrow = gyp + static_cast<size_t>(oy) * wid;
                        const double* xrow = x + (static_cast<size_t>(ci) * h + iy) * wid;
                        int lo = std::max(0, p - kx);
                        int hi = std::min(wid, wid + p - kx);
                        for (int ox = lo; ox < hi; ++ox) acc += gyrow[ox] * xrow[ox + kx - p];
                    }
                    gw[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx] += acc;
                }
    }
}

void avgpool2_fwd(const double* x, double* y, int c, int h, int w) {
    const int ho = h / 2, wo = w / 2;
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                const double* base = x + (static_cast<size_t>(ch) * h + 2 * oy) * w + 2 * ox;
                y[(static_cast<size_t>(ch) * ho + oy) * wo + ox] =
                    0.25 * (base[0] + base[1] + base[w] + base[w + 1]);
            }
}

void avgpool2_bwd(const double* gy, double* gx, int c, int h, int w) {
    const int ho = h / 2, wo = w / 2;
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int ch = 0; ch < c; ++ch)
        for (int iy = 0; iy < h; ++iy) {
            if (iy / 2 >= ho) continue;
            for (int ix = 0; ix < w; ++ix) {
                if (ix / 2 >= wo) continue;
                gx[(static_cast<size_t>(ch) * h + iy) * w + ix] +=
                    0.25 * gy[(static_cast<size_t>(ch) * ho + iy / 2) * wo + ix / 2];
            }
        }
}

void resize_bilinear_fwd(const double* x, double* y, int c, int hin, int win, int hout,
                         int wout) {
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int ch = 0; ch < c; ++ch) {
        const double* xp = x + static_cast<size_t>(ch) * hin * win;
        double* yp = y + static_cast<size_t>(ch) * hout * wout;
        for (int oy = 0; oy < hout; ++oy) {
            double sy = src_coord(oy, hin, hout);
            int y0 = static_cast<int>(std::floor(sy));
            double ty = sy - y0;
            int y0c = clampi(y0, 0, hin - 1), y1c = clampi(y0 + 1, 0, hin - 1);
            for (int ox = 0; ox < wout; ++ox) {
                double sx = src_coord(ox, win, wout);
                int x0 = static_cast<int>(std::floor(sx));
                double tx = sx - x0;
                int x0c = clampi(x0, 0, win - 1), x1c = clampi(x0 + 1, 0, win - 1);
                yp[static_cast<size_t>(oy) * wout + ox] =
                    (1 - ty) * ((1 - tx) * xp[static_cast<size_t>(y0c) * win + x0c] +
                                tx * xp[static_cast<size_t>(y0c) * win + x1c]) +
                    ty * ((1 - tx) * xp[static_cast<size_t>(y1c) * win + x0c] +
                          tx * xp[static_cast<size_t>(y1c) * win + x1c]);
            }
        }
    }
}

void resize_bilinear_bwd(const double* gy, double* gx, int c, int hin, int win, int hout,
                         int wout) {
    // Gather form: each input cell sums the weights of every output sample
    // that references it, in ascending output order.
    const double ry = static_cast<double>(hout) / hin;
    const double rx = static_cast<double>(wout) / win;
    const int nthreads = threads::count();
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
    for (int ch = 0; ch < c; ++ch) {
        const double* gyp = gy + static_cast<size_t>(ch) * hout * wout;
        double* gxp = gx + static_cast<size_t>(ch) * hin * win;
        for (int iy = 0; iy < hin; ++iy) {
            int oy_lo = (iy == 0) ? 0 : std::max(0, static_cast<int>(std::floor((iy - 1) * ry)));
            int oy_hi = (iy == hin - 1) ? hout - 1
                                        : std::min(hout - 1,
                                                   static_cast<int>(std::ceil((iy + 2) * ry)));
            for (int ix = 0; ix < win; ++ix) {
                int ox_lo =
                    (ix == 0) ? 0 : std::max(0, static_cast<int>(std::floor((ix - 1) * rx)));
                int ox_hi = (ix == win - 1)
                                ? wout - 1
                                : std::min(wout - 1, static_cast<int>(std::ceil((ix + 2) * rx)));
                double acc = 0.0;
                for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                    double sy = src_coord(oy, hin, hout);
                    int y0 = static_cast<int>(std::floor(sy));
                    double ty = sy - y0;
                    int y0c = clampi(y0, 0, hin - 1), y1c = clampi(y0 + 1, 0, hin - 1);
                    double wy = (y0c == iy ? 1 - ty : 0.0) + (y1c == iy ? ty : 0.0);
                    if (wy == 0.0) continue;
                    for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                        double sx = src_coord(ox, win, wout);
                        int x0 = static_cast<int>(std::floor(sx));
                        double tx = sx - x0;
                        int x0c = clampi(x0, 0, win - 1), x1c = clampi(x0 + 1, 0, win - 1);
                        double wx = (x0c == ix ? 1 - tx : 0.0) + (x1c == ix ? tx : 0.0);
                        if (wx == 0.0) continue;
                        acc += wy * wx * gyp[static_cast<size_t>(oy) * wout + ox];
                    }
                }
                gxp[static_cast<size_t>(iy) * win + ix] += acc;
            }
        }
    }
}

void relu_fwd(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd(const double* x, const double* gy, double* gx, size_t n) {
    for (size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) gx[i] += gy[i];
}

namespace ref {

void conv2d_fwd(const double* x, const double* w, const double* b, double* y, int cin, int cout,
                int k, int h, int wid) {
    const int p = k / 2;
    for (int co = 0; co < cout; ++co)
        for (int oy = 0; oy < h; ++oy)
            for (int ox = 0; ox < wid; ++ox) {
                double acc = b[co];
                for (int ci = 0; ci < cin; ++ci)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            int iy = oy + ky - p, ix = ox + kx - p;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= wid) continue;
                            acc += w[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx] *
                                   x[(static_cast<size_t>(ci) * h + iy) * wid + ix];
                        }
                y[(static_cast<size_t>(co) * h + oy) * wid + ox] = acc;
            }
}

void conv2d_bwd_input(const double* w, const double* gy, double* gx, int cin, int cout, int k,
                      int h, int wid) {
    const int p = k / 2;
    for (int ci = 0; ci < cin; ++ci)
        for (int iy = 0; iy < h; ++iy)
            for (int ix = 0; ix < wid; ++ix) {
                double acc = 0.0;
                for (int co = 0; co < cout; ++co)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            int oy = iy - ky + p, ox = ix - kx + p;
                            if (oy < 0 || oy >= h || ox < 0 || ox >= wid) continue;
                            acc += w[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx] *
                                   gy[(static_cast<size_t>(co) * h + oy) * wid + ox];
                        }
                gx[(static_cast<size_t>(ci) * h + iy) * wid + ix] += acc;
            }
}

void conv2d_bwd_params(const double* x, const double* gy, double* gw, double* gb, int cin,
                       int cout, int k, int h, int wid) {
    const int p = k / 2;
    for (int co = 0; co < cout; ++co) {
        double acc = 0.0;
        for (int i = 0; i < h * wid; ++i) acc += gy[static_cast<size_t>(co) * h * wid + i];
        gb[co] += acc;
    }
    for (int co = 0; co < cout; ++co)
        for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    double acc = 0.0;
                    for (int oy = 0; oy < h; ++oy)
                        for (int ox = 0; ox < wid; ++ox) {
                            int iy = oy + ky - p, ix = ox + kx - p;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= wid) continue;
                            acc += gy[(static_cast<size_t>(co) * h + oy) * wid + ox] *
                                   x[(static_cast<size_t>(ci) * h + iy) * wid + ix];
                        }
                    gw[((static_cast<size_t>(co) * cin + ci) * k + ky) * k + kx] += acc;
                }
}

void avgpool2_fwd(const double* x, double* y, int c, int h, int w) {
    const int ho = h / 2, wo = w / 2;
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < ho; ++oy)
            for (int ox = 0; ox < wo; ++ox) {
                double acc = 0.0;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        acc += x[(static_cast<size_t>(ch) * h + 2 * oy + dy) * w + 2 * ox + dx];
                y[(static_cast<size_t>(ch) * ho + oy) * wo + ox] = acc * 0.25;
            }
}

void resize_bilinear_fwd(const double* x, double* y, int c, int hin, int win, int hout,
                         int wout) {
    for (int ch = 0; ch < c; ++ch)
        for (int oy = 0; oy < hout; ++oy)
            for (int ox = 0; ox < wout; ++ox) {
                double sy = src_coord(oy, hin, hout);
                double sx = src_coord(ox, win, wout);
                int y0 = static_cast<int>(std::floor(sy));
                int x0 = static_cast<int>(std::floor(sx));
                double ty = sy - y0, tx = sx - x0;
                int y0c = clampi(y0, 0, hin - 1), y1c = clampi(y0 + 1, 0, hin - 1);
                int x0c = clampi(x0, 0, win - 1), x1c = clampi(x0 + 1, 0, win - 1);
                const double* xp = x + static_cast<size_t>(ch) * hin * win;
                y[(static_cast<size_t>(ch) * hout + oy) * wout + ox] =
                    (1 - ty) * ((1 - tx) * xp[static_cast<size_t>(y0c) * win + x0c] +
                                tx * xp[static_cast<size_t>(y0c) * win + x1c]) +
                    ty * ((1 - tx) * xp[static_cast<size_t>(y1c) * win + x0c] +
                          tx * xp[static_cast<size_t>(y1c) * win + x1c]);
            }
}

}  // namespace ref

}  // namespace slr::kern
