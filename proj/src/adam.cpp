#include "gazefield/adam.hpp"

#include <cmath>
#include <string>

#include "gazefield/error.hpp"

namespace gazefield {

AdamState::AdamState(std::span<const Tensor> params, AdamOptions options) : options_(options) {
    for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void adam_step(std::span<Tensor> params, AdamState& state) {
    if (params.size() != state.m_.size()) {
        throw ShapeError("adam_step: state tracks " + std::to_string(state.m_.size()) + " params, got " +
                         std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].has_grad()) throw Error("adam_step: parameter " + std::to_string(i) + " has no gradient");
        if (params[i].size() != state.m_[i].size()) throw ShapeError("adam_step: parameter size changed");
    }
    const AdamOptions& o = state.options_;
    const std::uint64_t t = state.t_ + 1;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));

    // Compute every update before touching any parameter so a non-finite
    // step leaves the model unchanged.
    std::vector<std::vector<double>> updates(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].values();
        auto g = params[i].grad();
        auto& m = state.m_[i];
        auto& v = state.v_[i];
        auto& u = updates[i];
        u.resize(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = g[k] + o.weight_decay * p[k];
            m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * gk;
            v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * gk * gk;
            u[k] = o.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + o.eps);
        }
        require_finite(u, "adam update");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].values();
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= updates[i][k];
    }
    state.t_ = t;
}

}  // namespace gazefield
