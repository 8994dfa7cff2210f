// Times the OpenMP kernels against their naive serial references and checks
// they agree bitwise. Usage: kernel_bench [threads]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "slr/kernels.hpp"
#include "slr/rng.hpp"
#include "slr/threads.hpp"

using namespace slr;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<double> randu(size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <typename F>
double time_ms(F&& fn, int reps) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * 8) == 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) threads::set_count(std::atoi(argv[1]));
    std::printf("threads: %d\n", threads::count());
    Rng rng(42);

    const int cin = 16, cout = 32, k = 3, h = 96, w = 96;
    auto x = randu(static_cast<size_t>(cin) * h * w, rng);
    auto wt = randu(static_cast<size_t>(cout) * cin * k * k, rng);
    auto b = randu(cout, rng);
    std::vector<double> y_omp(static_cast<size_t>(cout) * h * w),
        y_ref(static_cast<size_t>(cout) * h * w);

    double t_omp = time_ms(
        [&] { kern::conv2d_fwd(x.data(), wt.data(), b.data(), y_omp.data(), cin, cout, k, h, w); },
        5);
    double t_ref = time_ms(
        [&] {
            kern::ref::conv2d_fwd(x.data(), wt.data(), b.data(), y_ref.data(), cin, cout, k, h,
                                  w);
        },
        5);
    std::printf("conv2d_fwd   %3dx%3dx%2d->%2d  omp %8.3f ms   ref %8.3f ms   %s\n", h, w, cin,
                cout, t_omp, t_ref, bit_equal(y_omp, y_ref) ? "bit-equal" : "MISMATCH");

    std::vector<double> gy = randu(static_cast<size_t>(cout) * h * w, rng);
    std::vector<double> gx_omp(x.size()), gx_ref(x.size());
    t_omp = time_ms(
        [&] {
            std::fill(gx_omp.begin(), gx_omp.end(), 0.0);
            kern::conv2d_bwd_input(wt.data(), gy.data(), gx_omp.data(), cin, cout, k, h, w);
        },
        5);
    t_ref = time_ms(
        [&] {
            std::fill(gx_ref.begin(), gx_ref.end(), 0.0);
            kern::ref::conv2d_bwd_input(wt.data(), gy.data(), gx_ref.data(), cin, cout, k, h, w);
        },
        5);
    std::printf("conv2d_bwd_x %3dx%3dx%2d->%2d  omp %8.3f ms   ref %8.3f ms   %s\n", h, w, cin,
                cout, t_omp, t_ref, bit_equal(gx_omp, gx_ref) ? "bit-equal" : "MISMATCH");

    std::vector<double> gw_omp(wt.size()), gw_ref(wt.size()), gb_omp(cout), gb_ref(cout);
    t_omp = time_ms(
        [&] {
            std::fill(gw_omp.begin(), gw_omp.end(), 0.0);
            std::fill(gb_omp.begin(), gb_omp.end(), 0.0);
            kern::conv2d_bwd_params(x.data(), gy.data(), gw_omp.data(), gb_omp.data(), cin, cout,
                                    k, h, w);
        },
        5);
    t_ref = time_ms(
        [&] {
            std::fill(gw_ref.begin(), gw_ref.end(), 0.0);
            std::fill(gb_ref.begin(), gb_ref.end(), 0.0);
            kern::ref::conv2d_bwd_params(x.data(), gy.data(), gw_ref.data(), gb_ref.data(), cin,
                                         cout, k, h, w);
        },
        5);
    std::printf("conv2d_bwd_w %3dx%3dx%2d->%2d  omp %8.3f ms   ref %8.3f ms   %s\n", h, w, cin,
                cout, t_omp, t_ref,
                bit_equal(gw_omp, gw_ref) && bit_equal(gb_omp, gb_ref) ? "bit-equal"
                                                                       : "MISMATCH");

    const int c = 32;
    std::vector<double> pool_y_omp(static_cast<size_t>(c) * (h / 2) * (w / 2)),
        pool_y_ref(pool_y_omp.size());
    auto px = randu(static_cast<size_t>(c) * h * w, rng);
    t_omp = time_ms([&] { kern::avgpool2_fwd(px.data(), pool_y_omp.data(), c, h, w); }, 20);
    t_ref = time_ms([&] { kern::ref::avgpool2_fwd(px.data(), pool_y_ref.data(), c, h, w); }, 20);
    std::printf("avgpool2     %3dx%3dx%2d      omp %8.3f ms   ref %8.3f ms   %s\n", h, w, c, t_omp,
                t_ref, bit_equal(pool_y_omp, pool_y_ref) ? "bit-equal" : "MISMATCH");

    std::vector<double> up_omp(static_cast<size_t>(c) * h * w * 4),
        up_ref(static_cast<size_t>(c) * h * w * 4);
    t_omp = time_ms(
        [&] { kern::resize_bilinear_fwd(px.data(), up_omp.data(), c, h, w, 2 * h, 2 * w); }, 10);
    t_ref = time_ms(
        [&] { kern::ref::resize_bilinear_fwd(px.data(), up_ref.data(), c, h, w, 2 * h, 2 * w); },
        10);
    std::printf("resize x2    %3dx%3dx%2d      omp %8.3f ms   ref %8.3f ms   %s\n", h, w, c, t_omp,
                t_ref, bit_equal(up_omp, up_ref) ? "bit-equal" : "MISMATCH");
    return 0;
}
