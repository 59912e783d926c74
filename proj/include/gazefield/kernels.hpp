#pragma once

// Numeric kernels behind the differentiable ops.
//
// The top-level namespace holds the OpenMP versions used in training. Every
// parallel loop partitions outputs so that each value is produced by exactly
// one thread in a fixed summation order, which keeps results bit-identical
// for any thread count. `reference` holds plain serial loops with no tiling
// or im2col; tests and the benchmark compare the two.

#include <cstddef>
#include <span>

namespace gazefield::kernels {

struct Conv2dGeometry {
    std::size_t batch = 1;
    std::size_t in_channels = 1;
    std::size_t in_h = 1;
    std::size_t in_w = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t pad = 0;

    std::size_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
    std::size_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
    std::size_t patch() const { return in_channels * kernel * kernel; }
    bool valid() const { return kernel >= 1 && stride >= 1 && in_h + 2 * pad >= kernel && in_w + 2 * pad >= kernel; }
};

/// C[M×N] = A[M×K]·B[K×N], or C += A·B when `accumulate`.
void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate = false);
/// C[M×N] += A[K×M]ᵀ·B[K×N].
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
                 std::span<const double> b, std::span<double> c);
/// C[M×N] += A[M×K]·B[N×K]ᵀ.
void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
                 std::span<const double> b, std::span<double> c);

/// x: [N,C,H,W], w: [O,C,K,K], bias: [O] or empty, y: [N,O,OH,OW].
void conv2d_forward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);
/// Accumulates into dx (skipped when empty), dw and db (skipped when empty).
void conv2d_backward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);

/// Nearest-neighbour upsampling of [N·C, H, W] planes by an integer factor.
void upsample_nearest_forward(std::size_t planes, std::size_t h, std::size_t w, std::size_t factor,
                              std::span<const double> x, std::span<double> y);
void upsample_nearest_backward(std::size_t planes, std::size_t h, std::size_t w, std::size_t factor,
                               std::span<const double> dy, std::span<double> dx);

namespace reference {

void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c);
void conv2d_forward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y);
void conv2d_backward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db);
void upsample_nearest_forward(std::size_t planes, std::size_t h, std::size_t w, std::size_t factor,
                              std::span<const double> x, std::span<double> y);

}  // namespace reference

/// Threads OpenMP will use (1 when built without OpenMP).
int max_threads();

}  // namespace gazefield::kernels
