#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gazefield {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// A Tensor is a handle: copies share storage, the way parameters are
/// shared between a model, its optimizer and the tape that differentiates
/// through them. Use clone() for an independent copy.
class Tensor {
   public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    explicit operator bool() const { return defined(); }

    const Shape& shape() const { return impl_->shape; }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t size() const { return impl_->values.size(); }

    // Handle semantics: constness of the handle does not extend to the
    // shared storage, the same way a const shared_ptr hands out its pointee.
    std::span<double> values() const { return impl_->values; }
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on) { impl_->requires_grad = on; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<double> grad() const { return impl_->grad; }
    /// Allocates a zero gradient if none is present; keeps an existing one.
    void ensure_grad();
    void zero_grad();
    void clear_grad() { impl_->grad.clear(); }

    /// Deep copy of shape and values; the copy carries no gradient.
    Tensor clone() const;
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

   private:
    struct Impl {
        Shape shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

/// Throws NumericError naming `what` if any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

}  // namespace gazefield
