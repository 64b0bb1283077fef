#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "covqa/tensor.hpp"

namespace covqa {

namespace detail {

// c[p x r] += a[p x q] * b[q x r]. ikj order; rows of c are independent so
// the outer loop parallelizes without changing any per-element add order.
template <typename T>
void mm_acc(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
#pragma omp parallel for schedule(static) if (p * q * r > 65536 && p > 1)
    for (long long i = 0; i < static_cast<long long>(p); ++i) {
        T* crow = c + static_cast<std::size_t>(i) * r;
        const T* arow = a + static_cast<std::size_t>(i) * q;
        for (std::size_t k = 0; k < q; ++k) {
            const T aik = arow[k];
            const T* brow = b + k * r;
            for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
        }
    }
}

// c[p x r] += a[p x q] * bt[r x q]^T (row-by-row dot products).
template <typename T>
void mm_abt_acc(const T* a, const T* bt, T* c, std::size_t p, std::size_t q, std::size_t r) {
#pragma omp parallel for schedule(static) if (p * q * r > 65536 && p > 1)
    for (long long i = 0; i < static_cast<long long>(p); ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * q;
        T* crow = c + static_cast<std::size_t>(i) * r;
        for (std::size_t j = 0; j < r; ++j) {
            const T* brow = bt + j * q;
            T acc = T(0);
            for (std::size_t k = 0; k < q; ++k) acc += arow[k] * brow[k];
            crow[j] += acc;
        }
    }
}

// c[q x r] += a[p x q]^T * b[p x r]. Outer loop over rows of c keeps writes
// disjoint per thread; the i loop order is fixed, so sums are deterministic.
template <typename T>
void mm_atb_acc(const T* a, const T* b, T* c, std::size_t p, std::size_t q, std::size_t r) {
#pragma omp parallel for schedule(static) if (p * q * r > 65536 && q > 1)
    for (long long k = 0; k < static_cast<long long>(q); ++k) {
        T* crow = c + static_cast<std::size_t>(k) * r;
        for (std::size_t i = 0; i < p; ++i) {
            const T aik = a[i * q + static_cast<std::size_t>(k)];
            const T* brow = b + i * r;
            for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
        }
    }
}

template <typename T>
void require_2d(const Tensor<T>& t, const char* op) {
    if (t.rank() != 2)
        throw ShapeError(std::string(op) + ": expected a 2-d tensor, got " + shape_str(t.shape()));
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::require_2d(a, "matmul");
    detail::require_2d(b, "matmul");
    if (a.extent(1) != b.extent(0))
        throw ShapeError("matmul: inner extents differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    const std::size_t p = a.extent(0), q = a.extent(1), r = b.extent(1);
    std::vector<T> out(p * r, T(0));
    detail::mm_acc(a.data(), b.data(), out.data(), p, q, r);

    if (!a.requires_grad() && !b.requires_grad())
        return Tensor<T>::from({p, r}, std::move(out));

    auto an = a.node(), bn = b.node();
    Tensor<T> t = Tensor<T>::make_op("matmul", {p, r}, std::move(out), {an, bn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [an = an.get(), bn = bn.get(), on, p, q, r]() {
        if (an->requires_grad) {
            an->ensure_grad();
            detail::mm_abt_acc(on->grad.data(), bn->values.data(), an->grad.data(), p, r, q);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            detail::mm_atb_acc(an->values.data(), on->grad.data(), bn->grad.data(), p, q, r);
        }
    };
    return t;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
    detail::require_2d(x, "transpose");
    const std::size_t p = x.extent(0), q = x.extent(1);
    std::vector<T> out(p * q);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) out[j * p + i] = x.data()[i * q + j];
    if (!x.requires_grad()) return Tensor<T>::from({q, p}, std::move(out));

    auto xn = x.node();
    Tensor<T> t = Tensor<T>::make_op("transpose", {q, p}, std::move(out), {xn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [xn = xn.get(), on, p, q]() {
        xn->ensure_grad();
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < q; ++j) xn->grad[i * q + j] += on->grad[j * p + i];
    };
    return t;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("add: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    if (!a.requires_grad() && !b.requires_grad())
        return Tensor<T>::from(a.shape(), std::move(out));

    auto an = a.node(), bn = b.node();
    Tensor<T> t = Tensor<T>::make_op("add", a.shape(), std::move(out), {an, bn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [an = an.get(), bn = bn.get(), on]() {
        const std::size_t n = on->grad.size();
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) bn->grad[i] += on->grad[i];
        }
    };
    return t;
}

// x[t x d] + v[d] broadcast over rows (bias addition).
template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& v) {
    detail::require_2d(x, "add_rowvec");
    if (v.rank() != 1 || v.extent(0) != x.extent(1))
        throw ShapeError("add_rowvec: " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
    const std::size_t t = x.extent(0), d = x.extent(1);
    std::vector<T> out(t * d);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x.data()[i * d + j] + v.data()[j];
    if (!x.requires_grad() && !v.requires_grad())
        return Tensor<T>::from({t, d}, std::move(out));

    auto xn = x.node(), vn = v.node();
    Tensor<T> r = Tensor<T>::make_op("add_rowvec", {t, d}, std::move(out), {xn, vn}, nullptr);
    auto on = r.node().get();
    r.node()->backprop = [xn = xn.get(), vn = vn.get(), on, t, d]() {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < t * d; ++i) xn->grad[i] += on->grad[i];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (std::size_t j = 0; j < d; ++j) {
                T acc = T(0);
                for (std::size_t i = 0; i < t; ++i) acc += on->grad[i * d + j];
                vn->grad[j] += acc;
            }
        }
    };
    return r;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError("mul: shapes differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    if (!a.requires_grad() && !b.requires_grad())
        return Tensor<T>::from(a.shape(), std::move(out));

    auto an = a.node(), bn = b.node();
    Tensor<T> t = Tensor<T>::make_op("mul", a.shape(), std::move(out), {an, bn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [an = an.get(), bn = bn.get(), on]() {
        const std::size_t n = on->grad.size();
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) an->grad[i] += on->grad[i] * bn->values[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) bn->grad[i] += on->grad[i] * an->values[i];
        }
    };
    return t;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c) {
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * c;
    if (!x.requires_grad()) return Tensor<T>::from(x.shape(), std::move(out));

    auto xn = x.node();
    Tensor<T> t = Tensor<T>::make_op("scale", x.shape(), std::move(out), {xn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [xn = xn.get(), on, c]() {
        xn->ensure_grad();
        for (std::size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i] * c;
    };
    return t;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    T acc = T(0);
    for (std::size_t i = 0; i < x.size(); ++i) acc += x.data()[i];
    if (!x.requires_grad()) return Tensor<T>::scalar(acc);

    auto xn = x.node();
    Tensor<T> t = Tensor<T>::make_op("sum", {1}, {acc}, {xn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [xn = xn.get(), on]() {
        xn->ensure_grad();
        const T g = on->grad[0];
        for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g;
    };
    return t;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (shape_numel(shape) != x.size())
        throw ShapeError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
    std::vector<T> out(x.values());
    if (!x.requires_grad()) return Tensor<T>::from(std::move(shape), std::move(out));

    auto xn = x.node();
    Tensor<T> t = Tensor<T>::make_op("reshape", std::move(shape), std::move(out), {xn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [xn = xn.get(), on]() {
        xn->ensure_grad();
        for (std::size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += on->grad[i];
    };
    return t;
}

// Concatenate same-height matrices along the column axis.
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t t = parts[0].extent(0);
    std::size_t total = 0;
    bool needs_grad = false;
    for (const auto& p : parts) {
        detail::require_2d(p, "concat_cols");
        if (p.extent(0) != t)
            throw ShapeError("concat_cols: row counts differ, " + shape_str(parts[0].shape()) +
                             " vs " + shape_str(p.shape()));
        total += p.extent(1);
        needs_grad = needs_grad || p.requires_grad();
    }
    std::vector<T> out(t * total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t d = p.extent(1);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < d; ++j) out[i * total + off + j] = p.data()[i * d + j];
        off += d;
    }
    if (!needs_grad) return Tensor<T>::from({t, total}, std::move(out));

    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) parents.push_back(p.node());
    Tensor<T> r = Tensor<T>::make_op("concat_cols", {t, total}, std::move(out), parents, nullptr);
    auto on = r.node().get();
    r.node()->backprop = [parents, on, t, total]() {
        std::size_t off = 0;
        for (const auto& pn : parents) {
            const std::size_t d = pn->shape[1];
            if (pn->requires_grad) {
                pn->ensure_grad();
                for (std::size_t i = 0; i < t; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        pn->grad[i * d + j] += on->grad[i * total + off + j];
            }
            off += d;
        }
    };
    return r;
}

// Stack scalar tensors into a 1-d vector (answer scores into Tensor[5]).
template <typename T>
Tensor<T> stack_scalars(const std::vector<Tensor<T>>& xs) {
    if (xs.empty()) throw ContractError("stack_scalars: no inputs");
    std::vector<T> out(xs.size());
    bool needs_grad = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = xs[i].item();
        needs_grad = needs_grad || xs[i].requires_grad();
    }
    if (!needs_grad) return Tensor<T>::from({xs.size()}, std::move(out));

    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    parents.reserve(xs.size());
    for (const auto& x : xs) parents.push_back(x.node());
    Tensor<T> r =
        Tensor<T>::make_op("stack_scalars", {xs.size()}, std::move(out), parents, nullptr);
    auto on = r.node().get();
    r.node()->backprop = [parents, on]() {
        for (std::size_t i = 0; i < parents.size(); ++i) {
            if (!parents[i]->requires_grad) continue;
            parents[i]->ensure_grad();
            parents[i]->grad[0] += on->grad[i];
        }
    };
    return r;
}

// Gather rows of an embedding table. Backward scatter-adds into the table;
// it stays sequential because ids may repeat.
template <typename T>
Tensor<T> embedding_rows(const Tensor<T>& table, const std::vector<int>& ids) {
    detail::require_2d(table, "embedding_rows");
    const std::size_t v = table.extent(0), d = table.extent(1), n = ids.size();
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw IndexError("embedding_rows: id " + std::to_string(id) + " outside table of " +
                             std::to_string(v) + " rows");
    std::vector<T> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const T* src = table.data() + static_cast<std::size_t>(ids[i]) * d;
        std::copy(src, src + d, out.begin() + i * d);
    }
    if (!table.requires_grad()) return Tensor<T>::from({n, d}, std::move(out));

    auto tn = table.node();
    Tensor<T> r = Tensor<T>::make_op("embedding_rows", {n, d}, std::move(out), {tn}, nullptr);
    auto on = r.node().get();
    r.node()->backprop = [tn = tn.get(), on, ids, d]() {
        tn->ensure_grad();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            T* dst = tn->grad.data() + static_cast<std::size_t>(ids[i]) * d;
            const T* src = on->grad.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
        }
    };
    return r;
}

// Exact gaussian GELU; smooth everywhere, which keeps finite differences
// well behaved in the gradient suites.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    constexpr T kInvSqrt2 = T(0.70710678118654752440L);
    constexpr T kInvSqrt2Pi = T(0.39894228040143267794L);
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const T v = x.data()[i];
        out[i] = T(0.5) * v * (T(1) + std::erf(v * kInvSqrt2));
    }
    if (!x.requires_grad()) return Tensor<T>::from(x.shape(), std::move(out));

    auto xn = x.node();
    Tensor<T> t = Tensor<T>::make_op("gelu", x.shape(), std::move(out), {xn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [xn = xn.get(), on]() {
        xn->ensure_grad();
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
            const T v = xn->values[i];
            const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
            const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
            xn->grad[i] += on->grad[i] * (cdf + v * pdf);
        }
    };
    return t;
}

// Softmax along the last axis with a shared validity mask. Invalid positions
// are exactly zero; valid positions are exp-normalized after subtracting the
// row max over valid entries.
template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, const Mask& mask) {
    if (x.rank() == 0 || x.shape().back() != mask.length())
        throw ShapeError("masked_softmax: last extent of " + shape_str(x.shape()) +
                         " vs mask length " + std::to_string(mask.length()));
    if (!mask.any_valid()) throw MaskError("masked_softmax: mask has no valid position");
    const std::size_t k = mask.length();
    const std::size_t rows = x.size() / k;
    std::vector<T> out(x.size(), T(0));
    for (std::size_t row = 0; row < rows; ++row) {
        const T* in = x.data() + row * k;
        T* o = out.data() + row * k;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < k; ++j)
            if (mask.valid(j) && in[j] > mx) mx = in[j];
        T denom = T(0);
        for (std::size_t j = 0; j < k; ++j) {
            if (!mask.valid(j)) continue;
            o[j] = std::exp(in[j] - mx);
            denom += o[j];
        }
        for (std::size_t j = 0; j < k; ++j)
            if (mask.valid(j)) o[j] /= denom;
    }
    if (!x.requires_grad()) return Tensor<T>::from(x.shape(), std::move(out));

    auto xn = x.node();
    Tensor<T> t = Tensor<T>::make_op("masked_softmax", x.shape(), std::move(out), {xn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [xn = xn.get(), on, mask, k, rows]() {
        xn->ensure_grad();
        for (std::size_t row = 0; row < rows; ++row) {
            const T* y = on->values.data() + row * k;
            const T* dy = on->grad.data() + row * k;
            T* dx = xn->grad.data() + row * k;
            T dot = T(0);
            for (std::size_t j = 0; j < k; ++j)
                if (mask.valid(j)) dot += dy[j] * y[j];
            for (std::size_t j = 0; j < k; ++j)
                if (mask.valid(j)) dx[j] += y[j] * (dy[j] - dot);
        }
    };
    return t;
}

// Per last-axis slice: subtract mean, divide by sqrt(population variance +
// eps), then apply the affine gain/bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
    if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
    const std::size_t d = x.shape().back();
    if (gain.rank() != 1 || gain.extent(0) != d || bias.rank() != 1 || bias.extent(0) != d)
        throw ShapeError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " vs feature extent " + std::to_string(d));
    const std::size_t rows = x.size() / d;
    std::vector<T> out(x.size());
    std::vector<T> xhat(x.size());
    std::vector<T> inv_std(rows);
    for (std::size_t row = 0; row < rows; ++row) {
        const T* in = x.data() + row * d;
        T mu = T(0);
        for (std::size_t j = 0; j < d; ++j) mu += in[j];
        mu /= T(d);
        T var = T(0);
        for (std::size_t j = 0; j < d; ++j) {
            const T c = in[j] - mu;
            var += c * c;
        }
        var /= T(d);
        const T s = T(1) / std::sqrt(var + eps);
        inv_std[row] = s;
        T* xh = xhat.data() + row * d;
        T* o = out.data() + row * d;
        for (std::size_t j = 0; j < d; ++j) {
            xh[j] = (in[j] - mu) * s;
            o[j] = gain.data()[j] * xh[j] + bias.data()[j];
        }
    }
    if (!x.requires_grad() && !gain.requires_grad() && !bias.requires_grad())
        return Tensor<T>::from(x.shape(), std::move(out));

    auto xn = x.node(), gn = gain.node(), bn = bias.node();
    Tensor<T> t =
        Tensor<T>::make_op("layer_norm", x.shape(), std::move(out), {xn, gn, bn}, nullptr);
    auto on = t.node().get();
    t.node()->backprop = [xn = xn.get(), gn = gn.get(), bn = bn.get(), on, d, rows,
                          xhat = std::move(xhat), inv_std = std::move(inv_std)]() {
        for (std::size_t row = 0; row < rows; ++row) {
            const T* dy = on->grad.data() + row * d;
            const T* xh = xhat.data() + row * d;
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (std::size_t j = 0; j < d; ++j) gn->grad[j] += dy[j] * xh[j];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t j = 0; j < d; ++j) bn->grad[j] += dy[j];
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                T* dx = xn->grad.data() + row * d;
                T sum_dxh = T(0), sum_dxh_xh = T(0);
                for (std::size_t j = 0; j < d; ++j) {
                    const T dxh = dy[j] * gn->values[j];
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh[j];
                }
                const T s = inv_std[row];
                for (std::size_t j = 0; j < d; ++j) {
                    const T dxh = dy[j] * gn->values[j];
                    dx[j] += s * (dxh - sum_dxh / T(d) - xh[j] * sum_dxh_xh / T(d));
                }
            }
        }
    };
    return t;
}

// Per feature dimension, maximum over valid rows. Gradient routes to the
// first row attaining the maximum.
template <typename T>
Tensor<T> max_over_sequence(const Tensor<T>& x, const Mask& mask) {
    detail::require_2d(x, "max_over_sequence");
    const std::size_t t = x.extent(0), d = x.extent(1);
    if (mask.length() != t)
        throw ShapeError("max_over_sequence: " + shape_str(x.shape()) + " vs mask length " +
                         std::to_string(mask.length()));
    if (!mask.any_valid()) throw MaskError("max_over_sequence: mask has no valid position");
    std::vector<T> out(d);
    std::vector<std::size_t> argmax(d);
    bool first = true;
    for (std::size_t i = 0; i < t; ++i) {
        if (!mask.valid(i)) continue;
        const T* row = x.data() + i * d;
        if (first) {
            for (std::size_t j = 0; j < d; ++j) {
                out[j] = row[j];
                argmax[j] = i;
            }
            first = false;
        } else {
            for (std::size_t j = 0; j < d; ++j) {
                if (row[j] > out[j]) {
                    out[j] = row[j];
                    argmax[j] = i;
                }
            }
        }
    }
    if (!x.requires_grad()) return Tensor<T>::from({d}, std::move(out));

    auto xn = x.node();
    Tensor<T> r = Tensor<T>::make_op("max_over_sequence", {d}, std::move(out), {xn}, nullptr);
    auto on = r.node().get();
    r.node()->backprop = [xn = xn.get(), on, argmax = std::move(argmax), d]() {
        xn->ensure_grad();
        for (std::size_t j = 0; j < d; ++j) xn->grad[argmax[j] * d + j] += on->grad[j];
    };
    return r;
}

// -log(softmax(logits)[target]) via the log-sum-exp form.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, int target) {
    if (logits.rank() != 1)
        throw ShapeError("softmax_cross_entropy: expected 1-d logits, got " +
                         shape_str(logits.shape()));
    const std::size_t c = logits.extent(0);
    if (target < 0 || static_cast<std::size_t>(target) >= c)
        throw IndexError("softmax_cross_entropy: target " + std::to_string(target) +
                         " outside [0, " + std::to_string(c) + ")");
    T mx = logits.data()[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.data()[j]);
    T denom = T(0);
    std::vector<T> probs(c);
    for (std::size_t j = 0; j < c; ++j) {
        probs[j] = std::exp(logits.data()[j] - mx);
        denom += probs[j];
    }
    for (std::size_t j = 0; j < c; ++j) probs[j] /= denom;
    const T loss = std::log(denom) + mx - logits.data()[static_cast<std::size_t>(target)];
    if (!logits.requires_grad()) return Tensor<T>::scalar(loss);

    auto ln = logits.node();
    Tensor<T> r = Tensor<T>::make_op("softmax_cross_entropy", {1}, {loss}, {ln}, nullptr);
    auto on = r.node().get();
    r.node()->backprop = [ln = ln.get(), on, probs = std::move(probs), target]() {
        ln->ensure_grad();
        const T g = on->grad[0];
        for (std::size_t j = 0; j < probs.size(); ++j) {
            const T ind = (j == static_cast<std::size_t>(target)) ? T(1) : T(0);
            ln->grad[j] += g * (probs[j] - ind);
        }
    };
    return r;
}

// Affine map rows of x by w then add bias: x[t x in] * w[in x out] + b[out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    return add_rowvec(matmul(x, w), b);
}

}  // namespace covqa
