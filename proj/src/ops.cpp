#include "gazefield/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gazefield/direction_field.hpp"
#include "gazefield/error.hpp"
#include "gazefield/kernels.hpp"

namespace gazefield::ops {

namespace {

using Index = std::ptrdiff_t;
constexpr std::size_t kParallelMin = 1u << 15;

std::string name_of(OpKind kind) { return std::string(op_name(kind)); }

void require_defined(OpKind kind, const Tensor& t) {
    if (!t.defined()) throw ShapeError(name_of(kind) + ": undefined input tensor");
}

void require_same_shape(OpKind kind, const Tensor& a, const Tensor& b) {
    require_defined(kind, a);
    require_defined(kind, b);
    if (a.shape() != b.shape()) {
        throw ShapeError(name_of(kind) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

void require_rank(OpKind kind, const Tensor& t, std::size_t rank) {
    require_defined(kind, t);
    if (t.rank() != rank) {
        throw ShapeError(name_of(kind) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
    }
}

// Validates the forward result and records the op when any input tracks grad.
Tensor finish(Tape& tape, OpKind kind, std::vector<Tensor> inputs, Tensor out, std::function<void()> backward) {
    require_finite(out.values(), op_name(kind).data());
    if (tape.tracks(inputs)) tape.record(kind, std::move(inputs), out, std::move(backward));
    return out;
}

bool wants_grad(const Tensor& t) { return t.defined() && t.requires_grad(); }

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_rank(OpKind::MatMul, a, 2);
    require_rank(OpKind::MatMul, b, 2);
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw ShapeError("matmul: inner extents differ, " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    Tensor out = Tensor::zeros({m, n});
    kernels::gemm(m, n, k, a.values(), b.values(), out.values());
    return finish(tape, OpKind::MatMul, {a, b}, out, [a, b, out, m, n, k]() mutable {
        if (wants_grad(a)) kernels::gemm_nt_acc(m, k, n, out.grad(), b.values(), a.grad());
        if (wants_grad(b)) kernels::gemm_tn_acc(k, n, m, a.values(), out.grad(), b.grad());
    });
}

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t stride, std::size_t pad) {
    require_rank(OpKind::Conv2d, x, 4);
    require_rank(OpKind::Conv2d, w, 4);
    kernels::Conv2dGeometry g;
    g.batch = x.dim(0);
    g.in_channels = x.dim(1);
    g.in_h = x.dim(2);
    g.in_w = x.dim(3);
    g.out_channels = w.dim(0);
    g.kernel = w.dim(2);
    g.stride = stride;
    g.pad = pad;
    if (w.dim(1) != g.in_channels || w.dim(3) != g.kernel) {
        throw ShapeError("conv2d: kernel " + shape_str(w.shape()) + " does not fit input " + shape_str(x.shape()));
    }
    if (!g.valid()) throw ShapeError("conv2d: kernel/stride/padding invalid for input " + shape_str(x.shape()));
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != g.out_channels)) {
        throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match kernel");
    }
    Tensor out = Tensor::zeros({g.batch, g.out_channels, g.out_h(), g.out_w()});
    kernels::conv2d_forward(g, x.values(), w.values(), bias.defined() ? bias.values() : std::span<const double>{},
                            out.values());
    std::vector<Tensor> inputs{x, w};
    if (bias.defined()) inputs.push_back(bias);
    return finish(tape, OpKind::Conv2d, std::move(inputs), out, [x, w, bias, out, g]() mutable {
        kernels::conv2d_backward(g, x.values(), w.values(), out.grad(),
                                 wants_grad(x) ? x.grad() : std::span<double>{},
                                 wants_grad(w) ? w.grad() : std::span<double>{},
                                 wants_grad(bias) ? bias.grad() : std::span<double>{});
    });
}

Tensor upsample(Tape& tape, const Tensor& x, std::size_t factor) {
    require_rank(OpKind::Upsample, x, 4);
    if (factor < 1) throw ShapeError("upsample: factor must be >= 1");
    const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor out = Tensor::zeros({x.dim(0), x.dim(1), h * factor, w * factor});
    kernels::upsample_nearest_forward(planes, h, w, factor, x.values(), out.values());
    return finish(tape, OpKind::Upsample, {x}, out, [x, out, planes, h, w, factor]() mutable {
        kernels::upsample_nearest_backward(planes, h, w, factor, out.grad(), x.grad());
    });
}

namespace {

// max(x, lo) with zero gradient at exactly lo.
Tensor clamp_impl(Tape& tape, OpKind kind, const Tensor& x, double lo) {
    require_defined(kind, x);
    Tensor out = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    const std::size_t n = xv.size();
#pragma omp parallel for schedule(static) if (n > kParallelMin)
    for (Index i = 0; i < static_cast<Index>(n); ++i) ov[i] = xv[i] > lo ? xv[i] : lo;
    return finish(tape, kind, {x}, out, [x, out, lo]() mutable {
        auto gx = x.grad();
        auto go = out.grad();
        auto xv = x.values();
        const std::size_t n = xv.size();
#pragma omp parallel for schedule(static) if (n > kParallelMin)
        for (Index i = 0; i < static_cast<Index>(n); ++i) {
            if (xv[i] > lo) gx[i] += go[i];
        }
    });
}

}  // namespace

Tensor relu(Tape& tape, const Tensor& x) { return clamp_impl(tape, OpKind::Relu, x, 0.0); }

Tensor clamp_min(Tape& tape, const Tensor& x, double lo) { return clamp_impl(tape, OpKind::ClampMin, x, lo); }

Tensor sigmoid(Tape& tape, const Tensor& x) {
    require_defined(OpKind::Sigmoid, x);
    Tensor out = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    const std::size_t n = xv.size();
#pragma omp parallel for schedule(static) if (n > kParallelMin)
    for (Index i = 0; i < static_cast<Index>(n); ++i) {
        const double v = xv[i];
        if (v >= 0.0) {
            ov[i] = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            ov[i] = e / (1.0 + e);
        }
    }
    return finish(tape, OpKind::Sigmoid, {x}, out, [x, out]() mutable {
        auto gx = x.grad();
        auto go = out.grad();
        auto ov = out.values();
        const std::size_t n = ov.size();
#pragma omp parallel for schedule(static) if (n > kParallelMin)
        for (Index i = 0; i < static_cast<Index>(n); ++i) gx[i] += go[i] * ov[i] * (1.0 - ov[i]);
    });
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    for (const auto& p : parts) require_defined(OpKind::Concat, p);
    const Shape& first = parts.front().shape();
    if (first.size() < 2) throw ShapeError("concat: inputs need rank >= 2");
    std::size_t channels = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == first.size() && s[0] == first[0];
        for (std::size_t a = 2; ok && a < s.size(); ++a) ok = s[a] == first[a];
        if (!ok) throw ShapeError("concat: " + shape_str(s) + " incompatible with " + shape_str(first));
        channels += s[1];
    }
    const std::size_t batch = first[0];
    std::size_t inner = 1;
    for (std::size_t a = 2; a < first.size(); ++a) inner *= first[a];
    Shape shape = first;
    shape[1] = channels;
    Tensor out = Tensor::zeros(shape);
    auto ov = out.values();
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t chunk = p.dim(1) * inner;
        auto pv = p.values();
        for (std::size_t n = 0; n < batch; ++n) {
            std::copy_n(pv.begin() + static_cast<Index>(n * chunk), chunk,
                        ov.begin() + static_cast<Index>(n * channels * inner + offset));
        }
        offset += chunk;
    }
    return finish(tape, OpKind::Concat, parts, out, [parts, out, batch, channels, inner]() mutable {
        auto go = out.grad();
        std::size_t offset = 0;
        for (auto& p : parts) {
            const std::size_t chunk = p.dim(1) * inner;
            if (wants_grad(p)) {
                auto gp = p.grad();
                for (std::size_t n = 0; n < batch; ++n) {
                    const double* src = go.data() + n * channels * inner + offset;
                    double* dst = gp.data() + n * chunk;
                    for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
                }
            }
            offset += chunk;
        }
    });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(OpKind::Add, a, b);
    Tensor out = Tensor::zeros(a.shape());
    auto av = a.values();
    auto bv = b.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    return finish(tape, OpKind::Add, {a, b}, out, [a, b, out]() mutable {
        auto go = out.grad();
        for (const Tensor* t : {&a, &b}) {
            if (!wants_grad(*t)) continue;
            auto g = t->grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
        }
    });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    require_same_shape(OpKind::Mul, a, b);
    Tensor out = Tensor::zeros(a.shape());
    auto av = a.values();
    auto bv = b.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    return finish(tape, OpKind::Mul, {a, b}, out, [a, b, out]() mutable {
        auto go = out.grad();
        auto av = a.values();
        auto bv = b.values();
        if (wants_grad(a)) {
            auto g = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * bv[i];
        }
        if (wants_grad(b)) {
            auto g = b.grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * av[i];
        }
    });
}

Tensor pow(Tape& tape, const Tensor& x, double exponent) {
    require_defined(OpKind::Pow, x);
    Tensor out = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::pow(xv[i], exponent);
    return finish(tape, OpKind::Pow, {x}, out, [x, out, exponent]() mutable {
        auto go = out.grad();
        auto xv = x.values();
        auto g = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (go[i] != 0.0) g[i] += go[i] * exponent * std::pow(xv[i], exponent - 1.0);
        }
    });
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
    require_defined(OpKind::Scale, x);
    Tensor out = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = factor * xv[i];
    return finish(tape, OpKind::Scale, {x}, out, [x, out, factor]() mutable {
        auto go = out.grad();
        auto g = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * go[i];
    });
}

Tensor bias_add(Tape& tape, const Tensor& x, const Tensor& bias) {
    require_defined(OpKind::BiasAdd, x);
    require_rank(OpKind::BiasAdd, bias, 1);
    if (x.rank() < 2 || x.dim(1) != bias.dim(0)) {
        throw ShapeError("bias_add: bias " + shape_str(bias.shape()) + " does not match axis 1 of " +
                         shape_str(x.shape()));
    }
    const std::size_t batch = x.dim(0), channels = x.dim(1);
    const std::size_t inner = x.size() / (batch * channels);
    Tensor out = Tensor::zeros(x.shape());
    auto xv = x.values();
    auto bv = bias.values();
    auto ov = out.values();
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (n * channels + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) ov[base + i] = xv[base + i] + bv[c];
        }
    }
    return finish(tape, OpKind::BiasAdd, {x, bias}, out, [x, bias, out, batch, channels, inner]() mutable {
        auto go = out.grad();
        if (wants_grad(x)) {
            auto g = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
        }
        if (wants_grad(bias)) {
            auto g = bias.grad();
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t base = (n * channels + c) * inner;
                    double acc = 0.0;
                    for (std::size_t i = 0; i < inner; ++i) acc += go[base + i];
                    g[c] += acc;
                }
            }
        }
    });
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
    require_defined(OpKind::Reshape, x);
    if (numel(shape) != x.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    Tensor out(std::move(shape), std::vector<double>(x.values().begin(), x.values().end()));
    return finish(tape, OpKind::Reshape, {x}, out, [x, out]() mutable {
        auto go = out.grad();
        auto g = x.grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
    });
}

Tensor l2_normalize(Tape& tape, const Tensor& x, double eps) {
    require_rank(OpKind::L2Normalize, x, 2);
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    Tensor out = Tensor::zeros(x.shape());
    std::vector<double> norms(rows);
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t r = 0; r < rows; ++r) {
        double ss = eps;
        for (std::size_t c = 0; c < cols; ++c) ss += xv[r * cols + c] * xv[r * cols + c];
        norms[r] = std::sqrt(ss);
        for (std::size_t c = 0; c < cols; ++c) ov[r * cols + c] = xv[r * cols + c] / norms[r];
    }
    return finish(tape, OpKind::L2Normalize, {x}, out, [x, out, norms, rows, cols]() mutable {
        // dx = (g − y·⟨g, y⟩) / s
        auto go = out.grad();
        auto ov = out.values();
        auto g = x.grad();
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += go[r * cols + c] * ov[r * cols + c];
            for (std::size_t c = 0; c < cols; ++c) {
                g[r * cols + c] += (go[r * cols + c] - ov[r * cols + c] * dot) / norms[r];
            }
        }
    });
}

Tensor mean(Tape& tape, const Tensor& x) {
    require_defined(OpKind::Mean, x);
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    const double n = static_cast<double>(x.size());
    Tensor out = Tensor::scalar(acc / n);
    return finish(tape, OpKind::Mean, {x}, out, [x, out, n]() mutable {
        const double go = out.grad()[0] / n;
        for (double& g : x.grad()) g += go;
    });
}

Tensor sum(Tape& tape, const Tensor& x) {
    require_defined(OpKind::Sum, x);
    double acc = 0.0;
    for (double v : x.values()) acc += v;
    Tensor out = Tensor::scalar(acc);
    return finish(tape, OpKind::Sum, {x}, out, [x, out]() mutable {
        const double go = out.grad()[0];
        for (double& g : x.grad()) g += go;
    });
}

Tensor direction_field(Tape& tape, const Tensor& dir, const Tensor& heads, std::size_t width, std::size_t height,
                       std::span<const double> gammas) {
    require_rank(OpKind::DirectionField, dir, 2);
    require_rank(OpKind::DirectionField, heads, 2);
    if (dir.dim(1) != 2 || heads.shape() != dir.shape()) {
        throw ShapeError("direction_field: dir " + shape_str(dir.shape()) + " and heads " +
                         shape_str(heads.shape()) + " must both be [N,2]");
    }
    if (heads.requires_grad()) throw ShapeError("direction_field: head positions are constants");
    if (width < 2 || height < 2) throw ShapeError("direction_field: extents must be >= 2");
    field::validate_gammas(gammas);
    const std::size_t batch = dir.dim(0);
    std::vector<double> gv(gammas.begin(), gammas.end());
    Tensor out = Tensor::zeros({batch, gv.size(), height, width});
    field::field_forward(dir.values(), heads.values(), batch, width, height, gv, out.values());
    return finish(tape, OpKind::DirectionField, {dir, heads}, out,
                  [dir, heads, out, batch, width, height, gv]() mutable {
                      field::field_backward(dir.values(), heads.values(), batch, width, height, gv, out.grad(),
                                            dir.grad());
                  });
}

Tensor cosine_loss(Tape& tape, const Tensor& pred, const Tensor& target) {
    require_rank(OpKind::CosineLoss, pred, 2);
    require_same_shape(OpKind::CosineLoss, pred, target);
    const std::size_t rows = pred.dim(0), cols = pred.dim(1);
    auto pv = pred.values();
    auto tv = target.values();
    std::vector<double> cosines(rows), pn(rows), tn(rows);
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0, pp = 0.0, tt = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            dot += pv[r * cols + c] * tv[r * cols + c];
            pp += pv[r * cols + c] * pv[r * cols + c];
            tt += tv[r * cols + c] * tv[r * cols + c];
        }
        if (pp == 0.0 || tt == 0.0) throw NumericError("cosine_loss: zero direction vector");
        pn[r] = std::sqrt(pp);
        tn[r] = std::sqrt(tt);
        cosines[r] = dot / (pn[r] * tn[r]);
        acc += 1.0 - cosines[r];
    }
    Tensor out = Tensor::scalar(acc / static_cast<double>(rows));
    return finish(tape, OpKind::CosineLoss, {pred, target}, out,
                  [pred, target, out, cosines, pn, tn, rows, cols]() mutable {
                      // d cos(a,b)/da = (b̂ − cos·â) / |a|
                      const double go = -out.grad()[0] / static_cast<double>(rows);
                      auto pv = pred.values();
                      auto tv = target.values();
                      for (std::size_t r = 0; r < rows; ++r) {
                          for (std::size_t c = 0; c < cols; ++c) {
                              const double ph = pv[r * cols + c] / pn[r];
                              const double th = tv[r * cols + c] / tn[r];
                              if (wants_grad(pred)) pred.grad()[r * cols + c] += go * (th - cosines[r] * ph) / pn[r];
                              if (wants_grad(target)) {
                                  target.grad()[r * cols + c] += go * (ph - cosines[r] * th) / tn[r];
                              }
                          }
                      }
                  });
}

Tensor binary_cross_entropy(Tape& tape, const Tensor& pred, const Tensor& target) {
    require_same_shape(OpKind::BinaryCrossEntropy, pred, target);
    auto pv = pred.values();
    auto tv = target.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        if (!(pv[i] >= 0.0 && pv[i] <= 1.0)) {
            throw NumericError("binary_cross_entropy: prediction outside [0,1]: " + std::to_string(pv[i]));
        }
        const double p = std::clamp(pv[i], kBceClamp, 1.0 - kBceClamp);
        acc -= tv[i] * std::log(p) + (1.0 - tv[i]) * std::log(1.0 - p);
    }
    const double n = static_cast<double>(pv.size());
    Tensor out = Tensor::scalar(acc / n);
    return finish(tape, OpKind::BinaryCrossEntropy, {pred, target}, out, [pred, target, out, n]() mutable {
        const double go = out.grad()[0] / n;
        auto pv = pred.values();
        auto tv = target.values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const double p = std::clamp(pv[i], kBceClamp, 1.0 - kBceClamp);
            if (wants_grad(pred)) pred.grad()[i] += go * (p - tv[i]) / (p * (1.0 - p));
            if (wants_grad(target)) target.grad()[i] += go * (std::log(1.0 - p) - std::log(p));
        }
    });
}

}  // namespace gazefield::ops
