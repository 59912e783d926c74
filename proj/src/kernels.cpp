#include "gazefield/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gazefield::kernels {

namespace {

using Index = std::ptrdiff_t;

// col[(c·K + kh)·K + kw][oh·OW + ow], zero outside the padded image.
void im2col(const Conv2dGeometry& g, const double* x, double* col) {
    const std::size_t oh_n = g.out_h(), ow_n = g.out_w(), k = g.kernel;
    const Index pad = static_cast<Index>(g.pad);
    for (std::size_t c = 0; c < g.in_channels; ++c) {
        const double* plane = x + c * g.in_h * g.in_w;
        for (std::size_t kh = 0; kh < k; ++kh) {
            for (std::size_t kw = 0; kw < k; ++kw) {
                double* row = col + ((c * k + kh) * k + kw) * oh_n * ow_n;
                for (std::size_t oh = 0; oh < oh_n; ++oh) {
                    const Index ih = static_cast<Index>(oh * g.stride + kh) - pad;
                    double* out = row + oh * ow_n;
                    if (ih < 0 || ih >= static_cast<Index>(g.in_h)) {
                        std::fill(out, out + ow_n, 0.0);
                        continue;
                    }
                    const double* src = plane + ih * g.in_w;
                    for (std::size_t ow = 0; ow < ow_n; ++ow) {
                        const Index iw = static_cast<Index>(ow * g.stride + kw) - pad;
                        out[ow] = (iw < 0 || iw >= static_cast<Index>(g.in_w)) ? 0.0 : src[iw];
                    }
                }
            }
        }
    }
}

void col2im_acc(const Conv2dGeometry& g, const double* col, double* dx) {
    const std::size_t oh_n = g.out_h(), ow_n = g.out_w(), k = g.kernel;
    const Index pad = static_cast<Index>(g.pad);
    for (std::size_t c = 0; c < g.in_channels; ++c) {
        double* plane = dx + c * g.in_h * g.in_w;
        for (std::size_t kh = 0; kh < k; ++kh) {
            for (std::size_t kw = 0; kw < k; ++kw) {
                const double* row = col + ((c * k + kh) * k + kw) * oh_n * ow_n;
                for (std::size_t oh = 0; oh < oh_n; ++oh) {
                    const Index ih = static_cast<Index>(oh * g.stride + kh) - pad;
                    if (ih < 0 || ih >= static_cast<Index>(g.in_h)) continue;
                    double* dst = plane + ih * g.in_w;
                    const double* in = row + oh * ow_n;
                    for (std::size_t ow = 0; ow < ow_n; ++ow) {
                        const Index iw = static_cast<Index>(ow * g.stride + kw) - pad;
                        if (iw >= 0 && iw < static_cast<Index>(g.in_w)) dst[iw] += in[ow];
                    }
                }
            }
        }
    }
}

// Serial GEMM bodies shared by the per-sample conv loops.
void gemm_nn_serial(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* __restrict crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* __restrict brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_tn_serial(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* __restrict brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = a[p * m + i];
            double* __restrict crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_serial(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            c[i * n + j] += acc;
        }
    }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c, bool accumulate) {
    if (!accumulate) std::fill(c.begin(), c.begin() + static_cast<Index>(m * n), 0.0);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > (1u << 16))
    for (Index i = 0; i < static_cast<Index>(m); ++i) {
        gemm_nn_serial(1, n, k, pa + i * k, pb, pc + i * n);
    }
}

void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
                 std::span<const double> b, std::span<double> c) {
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    // Each thread owns whole rows of C; the sum over k runs in order.
#pragma omp parallel for schedule(static) if (m * n * k > (1u << 16))
    for (Index i = 0; i < static_cast<Index>(m); ++i) {
        double* __restrict crow = pc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[p * m + i];
            const double* __restrict brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_acc(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a,
                 std::span<const double> b, std::span<double> c) {
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
#pragma omp parallel for schedule(static) if (m * n * k > (1u << 16))
    for (Index i = 0; i < static_cast<Index>(m); ++i) {
        gemm_nt_serial(1, n, k, pa + i * k, pb, pc + i * n);
    }
}

void conv2d_forward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
    const std::size_t spatial = g.out_h() * g.out_w();
    const std::size_t in_stride = g.in_channels * g.in_h * g.in_w;
    const std::size_t out_stride = g.out_channels * spatial;
    const bool is_pointwise = g.kernel == 1 && g.stride == 1 && g.pad == 0;
#pragma omp parallel
    {
        std::vector<double> col(is_pointwise ? 0 : g.patch() * spatial);
#pragma omp for schedule(static)
        for (Index n = 0; n < static_cast<Index>(g.batch); ++n) {
            const double* xn = x.data() + n * in_stride;
            double* yn = y.data() + n * out_stride;
            for (std::size_t o = 0; o < g.out_channels; ++o) {
                const double b0 = bias.empty() ? 0.0 : bias[o];
                std::fill(yn + o * spatial, yn + (o + 1) * spatial, b0);
            }
            const double* src = xn;
            if (!is_pointwise) {
                im2col(g, xn, col.data());
                src = col.data();
            }
            gemm_nn_serial(g.out_channels, spatial, g.patch(), w.data(), src, yn);
        }
    }
}

void conv2d_backward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
    const std::size_t spatial = g.out_h() * g.out_w();
    const std::size_t patch = g.patch();
    const std::size_t in_stride = g.in_channels * g.in_h * g.in_w;
    const std::size_t out_stride = g.out_channels * spatial;
    const std::size_t wsize = g.out_channels * patch;
    const bool is_pointwise = g.kernel == 1 && g.stride == 1 && g.pad == 0;

    // Per-sample weight gradients are reduced serially afterwards so the sum
    // order over the batch never depends on scheduling.
    std::vector<double> dw_parts(dw.empty() ? 0 : g.batch * wsize, 0.0);

#pragma omp parallel
    {
        std::vector<double> col(is_pointwise ? 0 : patch * spatial);
        std::vector<double> dcol(is_pointwise ? 0 : patch * spatial);
#pragma omp for schedule(static)
        for (Index n = 0; n < static_cast<Index>(g.batch); ++n) {
            const double* xn = x.data() + n * in_stride;
            const double* dyn = dy.data() + n * out_stride;
            const double* src = xn;
            if (!dw.empty()) {
                if (!is_pointwise) {
                    im2col(g, xn, col.data());
                    src = col.data();
                }
                gemm_nt_serial(g.out_channels, patch, spatial, dyn, src, dw_parts.data() + n * wsize);
            }
            if (!dx.empty()) {
                double* dxn = dx.data() + n * in_stride;
                if (is_pointwise) {
                    gemm_tn_serial(patch, spatial, g.out_channels, w.data(), dyn, dxn);
                } else {
                    std::fill(dcol.begin(), dcol.end(), 0.0);
                    gemm_tn_serial(patch, spatial, g.out_channels, w.data(), dyn, dcol.data());
                    col2im_acc(g, dcol.data(), dxn);
                }
            }
        }
    }

    if (!dw.empty()) {
        for (std::size_t n = 0; n < g.batch; ++n) {
            const double* part = dw_parts.data() + n * wsize;
            for (std::size_t i = 0; i < wsize; ++i) dw[i] += part[i];
        }
    }
    if (!db.empty()) {
        for (std::size_t n = 0; n < g.batch; ++n) {
            for (std::size_t o = 0; o < g.out_channels; ++o) {
                const double* row = dy.data() + n * out_stride + o * spatial;
                double acc = 0.0;
                for (std::size_t p = 0; p < spatial; ++p) acc += row[p];
                db[o] += acc;
            }
        }
    }
}

void upsample_nearest_forward(std::size_t planes, std::size_t h, std::size_t w, std::size_t factor,
                              std::span<const double> x, std::span<double> y) {
    const std::size_t oh = h * factor, ow = w * factor;
#pragma omp parallel for schedule(static) if (planes * oh * ow > (1u << 15))
    for (Index p = 0; p < static_cast<Index>(planes); ++p) {
        const double* src = x.data() + p * h * w;
        double* dst = y.data() + p * oh * ow;
        for (std::size_t i = 0; i < oh; ++i) {
            const double* srow = src + (i / factor) * w;
            double* drow = dst + i * ow;
            for (std::size_t j = 0; j < ow; ++j) drow[j] = srow[j / factor];
        }
    }
}

void upsample_nearest_backward(std::size_t planes, std::size_t h, std::size_t w, std::size_t factor,
                               std::span<const double> dy, std::span<double> dx) {
    const std::size_t oh = h * factor, ow = w * factor;
#pragma omp parallel for schedule(static) if (planes * oh * ow > (1u << 15))
    for (Index p = 0; p < static_cast<Index>(planes); ++p) {
        const double* src = dy.data() + p * oh * ow;
        double* dst = dx.data() + p * h * w;
        for (std::size_t i = 0; i < oh; ++i) {
            const double* srow = src + i * ow;
            double* drow = dst + (i / factor) * w;
            for (std::size_t j = 0; j < ow; ++j) drow[j / factor] += srow[j];
        }
    }
}

namespace reference {

void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const double> a, std::span<const double> b,
          std::span<double> c) {
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
    }
}

void conv2d_forward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> y) {
    const Index oh_n = static_cast<Index>(g.out_h()), ow_n = static_cast<Index>(g.out_w());
    const Index k = static_cast<Index>(g.kernel), pad = static_cast<Index>(g.pad);
    const Index stride = static_cast<Index>(g.stride);
    const Index ih_n = static_cast<Index>(g.in_h), iw_n = static_cast<Index>(g.in_w);
    const Index cin = static_cast<Index>(g.in_channels), cout = static_cast<Index>(g.out_channels);
    for (Index n = 0; n < static_cast<Index>(g.batch); ++n) {
        for (Index o = 0; o < cout; ++o) {
            for (Index oh = 0; oh < oh_n; ++oh) {
                for (Index ow = 0; ow < ow_n; ++ow) {
                    double acc = bias.empty() ? 0.0 : bias[o];
                    for (Index c = 0; c < cin; ++c) {
                        for (Index kh = 0; kh < k; ++kh) {
                            for (Index kw = 0; kw < k; ++kw) {
                                const Index ih = oh * stride + kh - pad;
                                const Index iw = ow * stride + kw - pad;
                                if (ih < 0 || ih >= ih_n || iw < 0 || iw >= iw_n) continue;
                                acc += x[((n * cin + c) * ih_n + ih) * iw_n + iw] *
                                       w[((o * cin + c) * k + kh) * k + kw];
                            }
                        }
                    }
                    y[((n * cout + o) * oh_n + oh) * ow_n + ow] = acc;
                }
            }
        }
    }
}

void conv2d_backward(const Conv2dGeometry& g, std::span<const double> x, std::span<const double> w,
                     std::span<const double> dy, std::span<double> dx, std::span<double> dw,
                     std::span<double> db) {
    const Index oh_n = static_cast<Index>(g.out_h()), ow_n = static_cast<Index>(g.out_w());
    const Index k = static_cast<Index>(g.kernel), pad = static_cast<Index>(g.pad);
    const Index stride = static_cast<Index>(g.stride);
    const Index ih_n = static_cast<Index>(g.in_h), iw_n = static_cast<Index>(g.in_w);
    const Index cin = static_cast<Index>(g.in_channels), cout = static_cast<Index>(g.out_channels);
    for (Index n = 0; n < static_cast<Index>(g.batch); ++n) {
        for (Index o = 0; o < cout; ++o) {
            for (Index oh = 0; oh < oh_n; ++oh) {
                for (Index ow = 0; ow < ow_n; ++ow) {
                    const double go = dy[((n * cout + o) * oh_n + oh) * ow_n + ow];
                    if (!db.empty()) db[o] += go;
                    for (Index c = 0; c < cin; ++c) {
                        for (Index kh = 0; kh < k; ++kh) {
                            for (Index kw = 0; kw < k; ++kw) {
                                const Index ih = oh * stride + kh - pad;
                                const Index iw = ow * stride + kw - pad;
                                if (ih < 0 || ih >= ih_n || iw < 0 || iw >= iw_n) continue;
                                const Index xi = ((n * cin + c) * ih_n + ih) * iw_n + iw;
                                const Index wi = ((o * cin + c) * k + kh) * k + kw;
                                if (!dw.empty()) dw[wi] += go * x[xi];
                                if (!dx.empty()) dx[xi] += go * w[wi];
                            }
                        }
                    }
                }
            }
        }
    }
}

void upsample_nearest_forward(std::size_t planes, std::size_t h, std::size_t w, std::size_t factor,
                              std::span<const double> x, std::span<double> y) {
    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t i = 0; i < h * factor; ++i) {
            for (std::size_t j = 0; j < w * factor; ++j) {
                y[(p * h * factor + i) * w * factor + j] = x[(p * h + i / factor) * w + j / factor];
            }
        }
    }
}

}  // namespace reference

}  // namespace gazefield::kernels
