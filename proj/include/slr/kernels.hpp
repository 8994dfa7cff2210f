#pragma once

#include <cstddef>

namespace slr::kern {

// Dense kernels on channel-major planes (c, y, x). Every kernel owns each
// output element on exactly one thread and keeps a fixed accumulation order,
// so results are bit-identical for any thread count. Backward variants
// accumulate (+=) into the gradient buffers.

// 2-D convolution, stride 1, zero padding k/2, k in {1, 3}.
void conv2d_fwd(const double* x, const double* w, const double* b, double* y, int cin, int cout,
                int k, int h, int wid);
void conv2d_bwd_input(const double* w, const double* gy, double* gx, int cin, int cout, int k,
                      int h, int wid);
void conv2d_bwd_params(const double* x, const double* gy, double* gw, double* gb, int cin,
                       int cout, int k, int h, int wid);

// 2x2 mean pooling, floor semantics on odd sizes.
void avgpool2_fwd(const double* x, double* y, int c, int h, int w);
void avgpool2_bwd(const double* gy, double* gx, int c, int h, int w);

// Bilinear resize with half-pixel centers. Backward uses a gather so the
// result does not depend on the parallel schedule.
void resize_bilinear_fwd(const double* x, double* y, int c, int hin, int win, int hout, int wout);
void resize_bilinear_bwd(const double* gy, double* gx, int c, int hin, int win, int hout,
                         int wout);

void relu_fwd(const double* x, double* y, size_t n);
void relu_bwd(const double* x, const double* gy, double* gx, size_t n);

// Naive single-threaded reference implementations, kept for equivalence
// tests and the kernel benchmark.
namespace ref {
void conv2d_fwd(const double* x, const double* w, const double* b, double* y, int cin, int cout,
                int k, int h, int wid);
void conv2d_bwd_input(const double* w, const double* gy, double* gx, int cin, int cout, int k,
                      int h, int wid);
void conv2d_bwd_params(const double* x, const double* gy, double* gw, double* gb, int cin,
                       int cout, int k, int h, int wid);
void avgpool2_fwd(const double* x, double* y, int c, int h, int w);
void resize_bilinear_fwd(const double* x, double* y, int c, int hin, int win, int hout, int wout);
}  // namespace ref

}  // namespace slr::kern
