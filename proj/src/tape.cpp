#include "gazefield/tape.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "gazefield/error.hpp"
#include "gazefield/ops.hpp"

namespace gazefield {

namespace {

constexpr std::array kAllKinds{
    OpKind::MatMul,   OpKind::Conv2d,      OpKind::Upsample, OpKind::Relu,           OpKind::ClampMin,
    OpKind::Sigmoid,  OpKind::Concat,      OpKind::Add,      OpKind::Mul,            OpKind::Pow,
    OpKind::Scale,    OpKind::BiasAdd,     OpKind::Reshape,  OpKind::L2Normalize,    OpKind::Mean,
    OpKind::Sum,      OpKind::DirectionField, OpKind::CosineLoss, OpKind::BinaryCrossEntropy,
};

constexpr std::array<std::string_view, kAllKinds.size()> kNames{
    "matmul", "conv2d", "upsample", "relu", "clamp_min", "sigmoid", "concat", "add", "mul", "pow",
    "scale", "bias_add", "reshape", "l2_normalize", "mean", "sum", "direction_field", "cosine_loss",
    "binary_cross_entropy",
};

void require_arity(OpKind kind, std::span<const Tensor> inputs, std::size_t lo, std::size_t hi) {
    if (inputs.size() < lo || inputs.size() > hi) {
        throw ShapeError(std::string(op_name(kind)) + ": expected " + std::to_string(lo) +
                         (lo == hi ? "" : ".." + std::to_string(hi)) + " inputs, got " +
                         std::to_string(inputs.size()));
    }
}

std::size_t as_extent(double v, const char* what) {
    if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw ShapeError(std::string("attribute ") + what + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

}  // namespace

std::string_view op_name(OpKind kind) { return kNames.at(static_cast<std::size_t>(kind)); }

std::optional<OpKind> op_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return kAllKinds[i];
    }
    return std::nullopt;
}

std::span<const OpKind> all_op_kinds() { return kAllKinds; }

Attrs& Attrs::set(const std::string& key, double value) {
    values_[key] = value;
    return *this;
}

Attrs& Attrs::set(const std::string& key, std::vector<double> value) {
    values_[key] = std::move(value);
    return *this;
}

double Attrs::number(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ShapeError("missing attribute '" + key + "'");
    if (const auto* v = std::get_if<double>(&it->second)) return *v;
    throw ShapeError("attribute '" + key + "' is a list, expected a number");
}

double Attrs::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

const std::vector<double>& Attrs::list(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ShapeError("missing attribute '" + key + "'");
    if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
    throw ShapeError("attribute '" + key + "' is a number, expected a list");
}

std::vector<OpKind> Tape::kinds() const {
    std::vector<OpKind> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.kind);
    return out;
}

bool Tape::tracks(std::span<const Tensor> inputs) const {
    return recording() &&
           std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.defined() && t.requires_grad(); });
}

void Tape::record(OpKind kind, std::vector<Tensor> inputs, Tensor output, std::function<void()> backward) {
    if (consumed_) throw Error("tape already consumed");
    output.set_requires_grad(true);
    entries_.push_back({kind, std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(Tensor loss) {
    if (consumed_) throw Error("tape already consumed");
    if (!loss.defined() || loss.size() != 1) {
        throw ShapeError("backward needs a scalar loss");
    }
    auto last = std::find_if(entries_.rbegin(), entries_.rend(),
                             [&](const Entry& e) { return e.output.same_storage(loss); });
    if (last == entries_.rend()) throw Error("backward: loss was not produced on this tape");
    const std::size_t end = entries_.size() - static_cast<std::size_t>(last - entries_.rbegin());

    // Intermediates start from zero; leaves keep (and accumulate into) any
    // gradient they already carry.
    std::unordered_set<const void*> produced;
    for (std::size_t i = 0; i < end; ++i) {
        entries_[i].output.zero_grad();
        produced.insert(entries_[i].output.values().data());
    }
    for (std::size_t i = 0; i < end; ++i) {
        for (auto& in : entries_[i].inputs) {
            if (in.defined() && in.requires_grad() && !produced.contains(in.values().data())) in.ensure_grad();
        }
    }
    loss.grad()[0] = 1.0;

    std::vector<std::vector<double>> before;
    for (std::size_t i = end; i-- > 0;) {
        Entry& e = entries_[i];
        const bool faulty = fault_ && fault_->first == e.kind;
        if (faulty) {
            before.clear();
            for (auto& in : e.inputs) {
                before.emplace_back(in.defined() && in.requires_grad()
                                        ? std::vector<double>(in.grad().begin(), in.grad().end())
                                        : std::vector<double>{});
            }
        }
        e.backward();
        if (faulty) {
            for (std::size_t j = 0; j < e.inputs.size(); ++j) {
                if (before[j].empty()) continue;
                auto g = e.inputs[j].grad();
                for (std::size_t k = 0; k < g.size(); ++k) g[k] = before[j][k] + fault_->second * (g[k] - before[j][k]);
            }
        }
    }
    consumed_ = true;
    entries_.clear();
}

Tensor op_forward(Tape& tape, OpKind kind, std::span<const Tensor> inputs, const Attrs& attrs) {
    switch (kind) {
        case OpKind::MatMul:
            require_arity(kind, inputs, 2, 2);
            return ops::matmul(tape, inputs[0], inputs[1]);
        case OpKind::Conv2d:
            require_arity(kind, inputs, 2, 3);
            return ops::conv2d(tape, inputs[0], inputs[1], inputs.size() == 3 ? inputs[2] : Tensor{},
                               as_extent(attrs.number("stride"), "stride"), as_extent(attrs.number("pad"), "pad"));
        case OpKind::Upsample:
            require_arity(kind, inputs, 1, 1);
            return ops::upsample(tape, inputs[0], as_extent(attrs.number("factor"), "factor"));
        case OpKind::Relu:
            require_arity(kind, inputs, 1, 1);
            return ops::relu(tape, inputs[0]);
        case OpKind::ClampMin:
            require_arity(kind, inputs, 1, 1);
            return ops::clamp_min(tape, inputs[0], attrs.number("min"));
        case OpKind::Sigmoid:
            require_arity(kind, inputs, 1, 1);
            return ops::sigmoid(tape, inputs[0]);
        case OpKind::Concat:
            require_arity(kind, inputs, 1, inputs.size() + 1);
            return ops::concat(tape, std::vector<Tensor>(inputs.begin(), inputs.end()));
        case OpKind::Add:
            require_arity(kind, inputs, 2, 2);
            return ops::add(tape, inputs[0], inputs[1]);
        case OpKind::Mul:
            require_arity(kind, inputs, 2, 2);
            return ops::mul(tape, inputs[0], inputs[1]);
        case OpKind::Pow:
            require_arity(kind, inputs, 1, 1);
            return ops::pow(tape, inputs[0], attrs.number("exponent"));
        case OpKind::Scale:
            require_arity(kind, inputs, 1, 1);
            return ops::scale(tape, inputs[0], attrs.number("factor"));
        case OpKind::BiasAdd:
            require_arity(kind, inputs, 2, 2);
            return ops::bias_add(tape, inputs[0], inputs[1]);
        case OpKind::Reshape: {
            require_arity(kind, inputs, 1, 1);
            Shape shape;
            for (double v : attrs.list("shape")) shape.push_back(as_extent(v, "shape"));
            return ops::reshape(tape, inputs[0], std::move(shape));
        }
        case OpKind::L2Normalize:
            require_arity(kind, inputs, 1, 1);
            return ops::l2_normalize(tape, inputs[0], attrs.number_or("eps", ops::kNormalizeEps));
        case OpKind::Mean:
            require_arity(kind, inputs, 1, 1);
            return ops::mean(tape, inputs[0]);
        case OpKind::Sum:
            require_arity(kind, inputs, 1, 1);
            return ops::sum(tape, inputs[0]);
        case OpKind::DirectionField:
            require_arity(kind, inputs, 2, 2);
            return ops::direction_field(tape, inputs[0], inputs[1], as_extent(attrs.number("width"), "width"),
                                        as_extent(attrs.number("height"), "height"), attrs.list("gammas"));
        case OpKind::CosineLoss:
            require_arity(kind, inputs, 2, 2);
            return ops::cosine_loss(tape, inputs[0], inputs[1]);
        case OpKind::BinaryCrossEntropy:
            require_arity(kind, inputs, 2, 2);
            return ops::binary_cross_entropy(tape, inputs[0], inputs[1]);
    }
    throw Error("unknown op kind");
}

}  // namespace gazefield
