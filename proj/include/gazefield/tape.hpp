#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gazefield/tensor.hpp"

namespace gazefield {

enum class OpKind {
    MatMul,
    Conv2d,
    Upsample,
    Relu,
    ClampMin,
    Sigmoid,
    Concat,
    Add,
    Mul,
    Pow,
    Scale,
    BiasAdd,
    Reshape,
    L2Normalize,
    Mean,
    Sum,
    DirectionField,
    CosineLoss,
    BinaryCrossEntropy,
};

std::string_view op_name(OpKind kind);
std::optional<OpKind> op_from_name(std::string_view name);
/// Every differentiable op kind, in declaration order.
std::span<const OpKind> all_op_kinds();

/// Named op attributes: scalars (stride, exponent, eps, ...) and lists (shape, gammas).
class Attrs {
   public:
    using Value = std::variant<double, std::vector<double>>;

    Attrs() = default;
    Attrs(std::initializer_list<std::pair<const std::string, Value>> init) : values_(init) {}

    Attrs& set(const std::string& key, double value);
    Attrs& set(const std::string& key, std::vector<double> value);

    bool has(const std::string& key) const { return values_.contains(key); }
    /// Throws ShapeError when the attribute is missing or is a list.
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    const std::vector<double>& list(const std::string& key) const;

   private:
    std::map<std::string, Value> values_;
};

/// Ordered record of applied ops for one reverse pass.
///
/// Ops append an entry whenever the tape is recording and at least one
/// input requires grad. backward() walks the entries in exact reverse order
/// and then releases them; a tape is single-use.
class Tape {
   public:
    enum class Mode { Record, Inference };

    explicit Tape(Mode mode = Mode::Record) : mode_(mode) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return mode_ == Mode::Record && !consumed_; }
    bool consumed() const { return consumed_; }
    std::size_t size() const { return entries_.size(); }
    std::vector<OpKind> kinds() const;

    /// Whether an op over `inputs` must be recorded.
    bool tracks(std::span<const Tensor> inputs) const;

    /// Appends an entry. `backward` reads output.grad() and accumulates into
    /// the grads of inputs that require grad (their buffers already exist).
    void record(OpKind kind, std::vector<Tensor> inputs, Tensor output, std::function<void()> backward);

    /// Seeds d(loss)/d(loss) = 1 and runs the reverse pass. Leaves that
    /// require grad keep any gradient they already hold and accumulate;
    /// leaves the loss does not depend on end up with a zero gradient.
    void backward(Tensor loss);

    /// Fault injection for gradient-check tests: scales the input-gradient
    /// contribution of every entry of `kind` by `factor`.
    void scale_gradients_of(OpKind kind, double factor) { fault_ = {kind, factor}; }

   private:
    struct Entry {
        OpKind kind;
        std::vector<Tensor> inputs;
        Tensor output;
        std::function<void()> backward;
    };

    Mode mode_;
    bool consumed_ = false;
    std::vector<Entry> entries_;
    std::optional<std::pair<OpKind, double>> fault_;
};

/// Generic entry point: applies op `kind` to `inputs`.
///
/// Required attributes per kind: Conv2d {stride, pad}; Upsample {factor};
/// ClampMin {min}; Pow {exponent}; Scale {factor}; Reshape {shape};
/// L2Normalize {eps, optional}; DirectionField {width, height, gammas}.
Tensor op_forward(Tape& tape, OpKind kind, std::span<const Tensor> inputs, const Attrs& attrs = {});

}  // namespace gazefield
