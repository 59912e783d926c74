#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gazefield/tape.hpp"
#include "gazefield/tensor.hpp"

namespace gazefield::gradcheck {

struct Options {
    /// Central-difference step.
    double step = 1e-5;
    /// At most this many coordinates are probed per tensor (chosen at random).
    std::size_t max_coords = 32;
    std::uint64_t seed = 0;
    /// Test hook: scales the backward contribution of one op kind.
    std::optional<std::pair<OpKind, double>> fault;
};

/// ‖analytic − numeric‖₂ / max(‖analytic‖₂, ‖numeric‖₂, 1e-12) over the probed coordinates.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Compares the tape gradient of `loss` with respect to each of `wrt` against
/// central finite differences. `loss` must rebuild the graph on the tape it is given.
double check(const std::function<Tensor(Tape&)>& loss, std::vector<Tensor> wrt, const Options& options);

struct Result {
    std::string name;
    double rel_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Every op kind once (named as op_name), then "field_stack" and "end_to_end".
std::vector<Result> run_suite(const Options& options = {});

/// Tolerances of the suite.
inline constexpr double kOpTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;

}  // namespace gazefield::gradcheck
