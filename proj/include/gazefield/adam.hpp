#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gazefield/tensor.hpp"

namespace gazefield {

struct AdamOptions {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Classic L2 decay: grad += weight_decay·param before the moment updates.
    double weight_decay = 0.0005;
};

/// First/second moments per parameter plus the step counter.
class AdamState {
   public:
    AdamState(std::span<const Tensor> params, AdamOptions options = {});

    const AdamOptions& options() const { return options_; }
    AdamOptions& options() { return options_; }
    std::uint64_t step() const { return t_; }
    std::span<const double> first_moment(std::size_t i) const { return m_.at(i); }
    std::span<const double> second_moment(std::size_t i) const { return v_.at(i); }

   private:
    friend void adam_step(std::span<Tensor> params, AdamState& state);

    AdamOptions options_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t t_ = 0;
};

/// One bias-corrected Adam update, in place. Every param needs a gradient.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace gazefield
