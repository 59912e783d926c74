#include <doctest.h>

#include "gazefield/kernels.hpp"
#include "oracles.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace gazefield;

namespace {

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(tol));
}

kernels::Conv2dGeometry geometry(std::size_t n, std::size_t c, std::size_t h, std::size_t o, std::size_t k,
                                 std::size_t stride, std::size_t pad) {
    kernels::Conv2dGeometry g;
    g.batch = n;
    g.in_channels = c;
    g.in_h = h;
    g.in_w = h;
    g.out_channels = o;
    g.kernel = k;
    g.stride = stride;
    g.pad = pad;
    return g;
}

}  // namespace

TEST_CASE("parallel gemm variants agree with the serial reference") {
    std::mt19937_64 rng(1);
    const std::size_t m = 13, n = 17, k = 9;
    const auto a = random_values(rng, m * k), b = random_values(rng, k * n);
    std::vector<double> fast(m * n), slow(m * n);
    kernels::gemm(m, n, k, a, b, fast);
    kernels::reference::gemm(m, n, k, a, b, slow);
    check_close(fast, slow, 1e-12);

    // Aᵀ·B with A stored [K×M], and A·Bᵀ with B stored [N×K].
    std::vector<double> at(k * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
    std::vector<double> tn(m * n, 0.0);
    kernels::gemm_tn_acc(m, n, k, at, b, tn);
    check_close(tn, slow, 1e-12);
    std::vector<double> bt(n * k);
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    std::vector<double> nt(m * n, 0.0);
    kernels::gemm_nt_acc(m, n, k, a, bt, nt);
    check_close(nt, slow, 1e-12);
}

TEST_CASE("conv2d forward and backward agree with the serial reference") {
    std::mt19937_64 rng(2);
    for (auto g : {geometry(3, 2, 7, 4, 3, 1, 1), geometry(2, 3, 8, 5, 3, 2, 1), geometry(2, 4, 8, 3, 4, 4, 0),
                   geometry(2, 3, 5, 2, 1, 1, 0)}) {
        const auto x = random_values(rng, g.batch * g.in_channels * g.in_h * g.in_w);
        const auto w = random_values(rng, g.out_channels * g.patch());
        const auto b = random_values(rng, g.out_channels);
        const std::size_t ny = g.batch * g.out_channels * g.out_h() * g.out_w();
        std::vector<double> y1(ny), y2(ny);
        kernels::conv2d_forward(g, x, w, b, y1);
        kernels::reference::conv2d_forward(g, x, w, b, y2);
        check_close(y1, y2, 1e-12);
        check_close(y2, oracle::conv2d(x, w, b, g.batch, g.in_channels, g.in_h, g.in_w, g.out_channels, g.kernel,
                                       g.stride, g.pad),
                    1e-12);

        const auto dy = random_values(rng, ny);
        std::vector<double> dx1(x.size()), dw1(w.size()), db1(b.size());
        std::vector<double> dx2(x.size()), dw2(w.size()), db2(b.size());
        kernels::conv2d_backward(g, x, w, dy, dx1, dw1, db1);
        kernels::reference::conv2d_backward(g, x, w, dy, dx2, dw2, db2);
        check_close(dx1, dx2, 1e-12);
        check_close(dw1, dw2, 1e-12);
        check_close(db1, db2, 1e-12);
    }
}

TEST_CASE("nearest upsampling agrees with the serial reference and its adjoint") {
    std::mt19937_64 rng(3);
    const std::size_t planes = 5, h = 3, w = 4, f = 2;
    const auto x = random_values(rng, planes * h * w);
    std::vector<double> y1(planes * h * w * f * f), y2(y1.size());
    kernels::upsample_nearest_forward(planes, h, w, f, x, y1);
    kernels::reference::upsample_nearest_forward(planes, h, w, f, x, y2);
    CHECK(y1 == y2);
    // <up(x), dy> == <x, up*(dy)>
    const auto dy = random_values(rng, y1.size());
    std::vector<double> dx(x.size(), 0.0);
    kernels::upsample_nearest_backward(planes, h, w, f, dy, dx);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y1.size(); ++i) lhs += y1[i] * dy[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * dx[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("conv2d results do not depend on the thread count") {
#ifdef _OPENMP
    std::mt19937_64 rng(4);
    const auto g = geometry(6, 3, 9, 4, 3, 1, 1);
    const auto x = random_values(rng, g.batch * g.in_channels * g.in_h * g.in_w);
    const auto w = random_values(rng, g.out_channels * g.patch());
    const auto dy = random_values(rng, g.batch * g.out_channels * g.out_h() * g.out_w());
    auto run = [&](int threads) {
        omp_set_num_threads(threads);
        std::vector<double> dx(x.size()), dw(w.size()), db(g.out_channels);
        kernels::conv2d_backward(g, x, w, dy, dx, dw, db);
        dx.insert(dx.end(), dw.begin(), dw.end());
        dx.insert(dx.end(), db.begin(), db.end());
        return dx;
    };
    const int saved = omp_get_max_threads();
    const auto one = run(1);
    const auto four = run(4);
    omp_set_num_threads(saved);
    CHECK(one == four);
#endif
}
