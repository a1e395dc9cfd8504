#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gemtl/error.hpp"
#include "gemtl/prng.hpp"

namespace gemtl {

/// Mode extents of a tensor. An empty extent list is an order-0 (scalar) shape.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> extents) : Shape(std::vector<std::size_t>(extents)) {}
    explicit Shape(std::vector<std::size_t> extents) : extents_(std::move(extents)) {
        for (std::size_t i = 0; i < extents_.size(); ++i) {
            if (extents_[i] == 0) {
                throw ShapeError("extent of mode " + std::to_string(i) + " must be >= 1");
            }
        }
    }

    [[nodiscard]] std::size_t order() const noexcept { return extents_.size(); }
    [[nodiscard]] std::size_t operator[](std::size_t mode) const { return extents_.at(mode); }
    [[nodiscard]] const std::vector<std::size_t>& extents() const noexcept { return extents_; }

    [[nodiscard]] std::size_t count() const noexcept {
        return std::accumulate(extents_.begin(), extents_.end(), std::size_t{1}, std::multiplies<>());
    }

    /// Row-major strides (last mode fastest).
    [[nodiscard]] std::vector<std::size_t> strides() const {
        std::vector<std::size_t> s(extents_.size(), 1);
        for (std::size_t i = extents_.size(); i-- > 1;) {
            s[i - 1] = s[i] * extents_[i];
        }
        return s;
    }

    /// Modes [first, first + n).
    [[nodiscard]] Shape slice(std::size_t first, std::size_t n) const {
        if (first + n > extents_.size()) {
            throw ShapeError("mode slice [" + std::to_string(first) + ", " + std::to_string(first + n) +
                             ") exceeds order " + std::to_string(extents_.size()));
        }
        return Shape(std::vector<std::size_t>(extents_.begin() + static_cast<std::ptrdiff_t>(first),
                                              extents_.begin() + static_cast<std::ptrdiff_t>(first + n)));
    }

    [[nodiscard]] Shape concat(const Shape& tail) const {
        std::vector<std::size_t> e = extents_;
        e.insert(e.end(), tail.extents_.begin(), tail.extents_.end());
        return Shape(std::move(e));
    }

    [[nodiscard]] std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < extents_.size(); ++i) {
            s += (i ? "," : "") + std::to_string(extents_[i]);
        }
        return s + ")";
    }

    friend bool operator==(const Shape&, const Shape&) = default;

private:
    std::vector<std::size_t> extents_;
};

/// Dense N-mode tensor of doubles in row-major order.
class Tensor {
public:
    Tensor() : data_(1, 0.0) {}
    explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)), data_(shape_.count(), fill) {}
    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_.count()) {
            throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_.str());
        }
    }

    static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t order() const noexcept { return shape_.order(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    double& operator[](std::size_t flat) noexcept { return data_[flat]; }
    double operator[](std::size_t flat) const noexcept { return data_[flat]; }

    /// Multi-index access; bounds checked.
    [[nodiscard]] double at(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    double& at(std::span<const std::size_t> index) { return data_[offset(index)]; }
    [[nodiscard]] double at(std::initializer_list<std::size_t> index) const {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }
    double& at(std::initializer_list<std::size_t> index) {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }

    /// Value of an order-0 tensor (or any single-element tensor).
    [[nodiscard]] double item() const {
        if (data_.size() != 1) {
            throw ShapeError("item() on tensor of shape " + shape_.str());
        }
        return data_[0];
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Tensor& operator+=(const Tensor& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] += o.data_[i];
        }
        return *this;
    }

    Tensor& operator-=(const Tensor& o) {
        require_same_shape(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] -= o.data_[i];
        }
        return *this;
    }

    Tensor& operator*=(double s) noexcept {
        for (double& v : data_) {
            v *= s;
        }
        return *this;
    }

    friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
    friend Tensor operator*(Tensor a, double s) { return a *= s; }
    friend Tensor operator*(double s, Tensor a) { return a *= s; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    [[nodiscard]] std::size_t offset(std::span<const std::size_t> index) const {
        if (index.size() != shape_.order()) {
            throw ShapeError("index of length " + std::to_string(index.size()) + " for tensor of order " +
                             std::to_string(shape_.order()));
        }
        std::size_t flat = 0;
        for (std::size_t i = 0; i < index.size(); ++i) {
            if (index[i] >= shape_[i]) {
                throw ShapeError("index " + std::to_string(index[i]) + " out of range for mode " +
                                 std::to_string(i) + " with extent " + std::to_string(shape_[i]));
            }
            flat = flat * shape_[i] + index[i];
        }
        return flat;
    }

    void require_same_shape(const Tensor& o, const char* op) const {
        if (shape_ != o.shape_) {
            throw ShapeError(std::string("operator") + op + ": shapes " + shape_.str() + " and " +
                             o.shape_.str() + " differ");
        }
    }

    Shape shape_;
    std::vector<double> data_;
};

namespace detail {

struct NoCount {
    void operator()(std::size_t) const noexcept {}
};

/// Multiply counter used by the cost model to instrument the canonical kernel.
struct MultiplyCounter {
    std::uint64_t mults = 0;
    void operator()(std::size_t n) noexcept { mults += n; }
};

inline void check_contractible(const Shape& xs, const Shape& ys, std::size_t m) {
    if (m > xs.order() || m > ys.order()) {
        throw ShapeError("contraction of " + std::to_string(m) + " modes exceeds operand orders " +
                         std::to_string(xs.order()) + " and " + std::to_string(ys.order()));
    }
    const std::size_t lead = xs.order() - m;
    for (std::size_t t = 0; t < m; ++t) {
        if (xs[lead + t] != ys[t]) {
            throw ShapeError("contracted extent mismatch: x mode " + std::to_string(lead + t) + " has extent " +
                             std::to_string(xs[lead + t]) + ", y mode " + std::to_string(t) + " has extent " +
                             std::to_string(ys[t]));
        }
    }
}

/// out[r, c] = sum_k x[r, k] * y[k, c] over the row-major flattening of the operands.
/// Each output entry accumulates its terms in ascending k (lexicographic contracted index),
/// starting from zero, so the result is bit-identical to a plain dot-product loop.
template <class Counter>
void contract_kernel(std::span<const double> x, std::span<const double> y, std::span<double> out, std::size_t rows,
                     std::size_t inner, std::size_t cols, Counter&& count) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double* orow = out.data() + r * cols;
        const double* xrow = x.data() + r * inner;
        for (std::size_t k = 0; k < inner; ++k) {
            const double a = xrow[k];
            const double* yrow = y.data() + k * cols;
            for (std::size_t c = 0; c < cols; ++c) {
                orow[c] += a * yrow[c];
            }
            count(cols);
        }
    }
}

template <class Counter>
Tensor einstein_product_counted(const Tensor& x, const Tensor& y, std::size_t m, Counter&& count) {
    check_contractible(x.shape(), y.shape(), m);
    const Shape lead = x.shape().slice(0, x.order() - m);
    const Shape trail = y.shape().slice(m, y.order() - m);
    const std::size_t inner = x.shape().slice(x.order() - m, m).count();
    Tensor out(lead.concat(trail));
    contract_kernel(x.data(), y.data(), out.data(), lead.count(), inner, trail.count(), count);
    return out;
}

}  // namespace detail

/// Einstein product x *_m y: contracts the last m modes of x with the first m modes of y.
/// Result shape is (leading modes of x) ++ (trailing modes of y); a full contraction yields an order-0 tensor.
inline Tensor einstein_product(const Tensor& x, const Tensor& y, std::size_t m) {
    return detail::einstein_product_counted(x, y, m, detail::NoCount{});
}

inline double frobenius_norm(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) {
        s += v * v;
    }
    return std::sqrt(s);
}

/// Mode permutation: result mode perm[i] is input mode i, i.e. result[σ(idx)] = x[idx].
inline Tensor permute_modes(const Tensor& x, std::span<const std::size_t> perm) {
    const std::size_t n = x.order();
    if (perm.size() != n) {
        throw ShapeError("permutation of length " + std::to_string(perm.size()) + " for tensor of order " +
                         std::to_string(n));
    }
    std::vector<bool> seen(n, false);
    for (std::size_t p : perm) {
        if (p >= n || seen[p]) {
            throw ShapeError("invalid mode permutation");
        }
        seen[p] = true;
    }
    std::vector<std::size_t> out_ext(n);
    for (std::size_t i = 0; i < n; ++i) {
        out_ext[perm[i]] = x.shape()[i];
    }
    Tensor out{Shape(out_ext)};
    const auto out_strides = out.shape().strides();
    // Stride in the output buffer for a unit step along input mode i.
    std::vector<std::size_t> step(n);
    for (std::size_t i = 0; i < n; ++i) {
        step[i] = out_strides[perm[i]];
    }
    std::vector<std::size_t> idx(n, 0);
    std::size_t dst = 0;
    for (std::size_t src = 0; src < x.size(); ++src) {
        out[dst] = x[src];
        for (std::size_t i = n; i-- > 0;) {
            if (++idx[i] < x.shape()[i]) {
                dst += step[i];
                break;
            }
            dst -= step[i] * (idx[i] - 1);
            idx[i] = 0;
        }
    }
    return out;
}

inline Tensor permute_modes(const Tensor& x, std::initializer_list<std::size_t> perm) {
    return permute_modes(x, std::span<const std::size_t>(perm.begin(), perm.size()));
}

/// Inverse of a mode permutation.
inline std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> perm) {
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        inv.at(perm[i]) = i;
    }
    return inv;
}

inline Tensor reshape(Tensor x, Shape new_shape) {
    if (new_shape.count() != x.size()) {
        throw ShapeError("cannot reshape " + x.shape().str() + " to " + new_shape.str() + ": element counts differ");
    }
    std::vector<double> buf(x.data().begin(), x.data().end());
    return Tensor(std::move(new_shape), std::move(buf));
}

/// I.i.d. uniform entries in [lo, hi), drawn in row-major order.
inline Tensor random_uniform(Shape shape, double lo, double hi, Prng& rng) {
    if (!(lo < hi)) {
        throw ConfigError("random_uniform requires lo < hi");
    }
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

inline Tensor random_normal(Shape shape, double mean, double stddev, Prng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = mean + stddev * rng.normal();
    }
    return t;
}

}  // namespace gemtl
