#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "gzgd/rng.hpp"
#include "gzgd/tensor.hpp"

namespace gzgd {

// Define-by-run reverse-mode engine. Each op computes its value eagerly and
// registers a closure that scatters the node's gradient into its parents.
// Convolutions use the cross-correlation convention (no kernel flip)
// throughout. Graphs are single-threaded; gradient accumulation order is
// fixed, so a fixed seed reproduces a training run bit for bit.
template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backprop;
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.data.size() != value.data.size()) {
            grad.shape = value.shape;
            grad.data.assign(value.data.size(), T(0));
        }
    }

    void zero_grad() {
        if (!grad.data.empty()) grad.data.assign(grad.data.size(), T(0));
    }
};

template <typename T>
using NodeP = std::shared_ptr<Node<T>>;

template <typename T>
NodeP<T> constant(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return n;
}

template <typename T>
NodeP<T> parameter(Tensor<T> value) {
    auto n = constant(std::move(value));
    n->requires_grad = true;
    n->ensure_grad();
    return n;
}

namespace addet {

template <typename T>
NodeP<T> make_op(Tensor<T> value, std::vector<NodeP<T>> parents, std::function<void()> backprop) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    if (needs) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return n;
}

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace addet

// ---- element-wise ----

template <typename T>
NodeP<T> add(NodeP<T> a, NodeP<T> b) {
    addet::require(a->value.same_shape(b->value), "add: shape mismatch");
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] + b->value.data[i];
    auto n = addet::make_op<T>(std::move(out), {a, b}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a, b]() {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                    a->grad.data[i] += np->grad.data[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                    b->grad.data[i] += np->grad.data[i];
            }
        };
    }
    return n;
}

template <typename T>
NodeP<T> sub(NodeP<T> a, NodeP<T> b) {
    addet::require(a->value.same_shape(b->value), "sub: shape mismatch");
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] - b->value.data[i];
    auto n = addet::make_op<T>(std::move(out), {a, b}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a, b]() {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                    a->grad.data[i] += np->grad.data[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                    b->grad.data[i] -= np->grad.data[i];
            }
        };
    }
    return n;
}

// element-wise product (the fusion op)
template <typename T>
NodeP<T> mul(NodeP<T> a, NodeP<T> b) {
    addet::require(a->value.same_shape(b->value), "mul: shape mismatch");
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] * b->value.data[i];
    auto n = addet::make_op<T>(std::move(out), {a, b}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a, b]() {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                    a->grad.data[i] += np->grad.data[i] * b->value.data[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                    b->grad.data[i] += np->grad.data[i] * a->value.data[i];
            }
        };
    }
    return n;
}

template <typename T>
NodeP<T> scale(NodeP<T> a, T c) {
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] * c;
    auto n = addet::make_op<T>(std::move(out), {a}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a, c]() {
            a->ensure_grad();
            for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                a->grad.data[i] += np->grad.data[i] * c;
        };
    }
    return n;
}

template <typename T>
NodeP<T> sum(NodeP<T> a) {
    T s = T(0);
    for (T v : a->value.data) s += v;
    Tensor<T> out({1});
    out.data[0] = s;
    auto n = addet::make_op<T>(std::move(out), {a}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a]() {
            a->ensure_grad();
            const T g = np->grad.data[0];
            for (std::size_t i = 0; i < a->grad.data.size(); ++i) a->grad.data[i] += g;
        };
    }
    return n;
}

template <typename T>
NodeP<T> relu(NodeP<T> a) {
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = a->value.data[i] > T(0) ? a->value.data[i] : T(0);
    auto n = addet::make_op<T>(std::move(out), {a}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a]() {
            a->ensure_grad();
            for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                if (a->value.data[i] > T(0)) a->grad.data[i] += np->grad.data[i];
        };
    }
    return n;
}

template <typename T>
NodeP<T> sigmoid(NodeP<T> a) {
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const T x = a->value.data[i];
        if (x >= T(0)) {
            out.data[i] = T(1) / (T(1) + std::exp(-x));
        } else {
            const T e = std::exp(x);
            out.data[i] = e / (T(1) + e);
        }
    }
    auto n = addet::make_op<T>(std::move(out), {a}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a]() {
            a->ensure_grad();
            for (std::size_t i = 0; i < np->grad.data.size(); ++i) {
                const T y = np->value.data[i];
                a->grad.data[i] += np->grad.data[i] * y * (T(1) - y);
            }
        };
    }
    return n;
}

// softmax over the last axis, shift-stable
template <typename T>
NodeP<T> softmax(NodeP<T> a) {
    const int k = a->value.shape.back();
    const std::size_t rows = a->value.numel() / static_cast<std::size_t>(k);
    Tensor<T> out(a->value.shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* x = a->value.ptr() + r * k;
        T* y = out.ptr() + r * k;
        T mx = x[0];
        for (int i = 1; i < k; ++i) mx = std::max(mx, x[i]);
        T s = T(0);
        for (int i = 0; i < k; ++i) {
            y[i] = std::exp(x[i] - mx);
            s += y[i];
        }
        for (int i = 0; i < k; ++i) y[i] /= s;
    }
    auto n = addet::make_op<T>(std::move(out), {a}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a, k, rows]() {
            a->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                const T* y = np->value.ptr() + r * k;
                const T* dy = np->grad.ptr() + r * k;
                T* dx = a->grad.ptr() + r * k;
                T dot = T(0);
                for (int i = 0; i < k; ++i) dot += dy[i] * y[i];
                for (int i = 0; i < k; ++i) dx[i] += (dy[i] - dot) * y[i];
            }
        };
    }
    return n;
}

// Inverted dropout: kept units are scaled by 1/(1-rate) so inference needs
// no rescale. rate 0 or eval mode returns the input node unchanged.
template <typename T>
NodeP<T> dropout(NodeP<T> a, double rate, bool training, Rng& rng) {
    if (!training || rate == 0.0) return a;
    addet::require(rate > 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    auto mask = std::make_shared<std::vector<T>>(a->value.numel());
    for (auto& m : *mask) m = rng.uniform() >= rate ? keep_scale : T(0);
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] * (*mask)[i];
    auto n = addet::make_op<T>(std::move(out), {a}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a, mask]() {
            a->ensure_grad();
            for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                a->grad.data[i] += np->grad.data[i] * (*mask)[i];
        };
    }
    return n;
}

template <typename T>
NodeP<T> reshape(NodeP<T> a, std::vector<int> new_shape) {
    addet::require(Tensor<T>::count(new_shape) == a->value.numel(), "reshape: element count mismatch");
    Tensor<T> out(new_shape, a->value.data);
    auto n = addet::make_op<T>(std::move(out), {a}, nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, a]() {
            a->ensure_grad();
            for (std::size_t i = 0; i < np->grad.data.size(); ++i)
                a->grad.data[i] += np->grad.data[i];
        };
    }
    return n;
}

// ---- dense ----

// x: {F} or {N,F}; w: {O,F}; optional bias {O}
template <typename T>
NodeP<T> dense(NodeP<T> x, NodeP<T> w, NodeP<T> b = nullptr) {
    addet::require(w->value.rank() == 2, "dense: weight must be rank 2");
    const int o = w->value.dim(0);
    const int f = w->value.dim(1);
    const bool batched = x->value.rank() == 2;
    const int n_rows = batched ? x->value.dim(0) : 1;
    addet::require((batched ? x->value.dim(1) : x->value.dim(0)) == f, "dense: input width mismatch");
    if (b) addet::require(b->value.rank() == 1 && b->value.dim(0) == o, "dense: bias shape mismatch");

    Tensor<T> out(batched ? std::vector<int>{n_rows, o} : std::vector<int>{o});
    for (int r = 0; r < n_rows; ++r) {
        const T* xr = x->value.ptr() + static_cast<std::size_t>(r) * f;
        T* yr = out.ptr() + static_cast<std::size_t>(r) * o;
        for (int j = 0; j < o; ++j) {
            const T* wr = w->value.ptr() + static_cast<std::size_t>(j) * f;
            T acc = b ? b->value.data[j] : T(0);
            for (int i = 0; i < f; ++i) acc += wr[i] * xr[i];
            yr[j] = acc;
        }
    }
    std::vector<NodeP<T>> parents = {x, w};
    if (b) parents.push_back(b);
    auto n = addet::make_op<T>(std::move(out), std::move(parents), nullptr);
    if (n->requires_grad) {
        auto* np = n.get();
        n->backprop = [np, x, w, b, n_rows, o, f]() {
            for (int r = 0; r < n_rows; ++r) {
                const T* dy = np->grad.ptr() + static_cast<std::size_t>(r) * o;
                const T* xr = x->value.ptr() + static_cast<std::size_t>(r) * f;
                if (x->requires_grad) {
                    x->ensure_grad();
                    T* dx = x->grad.ptr() + static_cast<std::size_t>(r) * f;
                    for (int j = 0; j < o; ++j) {
                        const T* wr = w->value.ptr() + static_cast<std::size_t>(j) * f;
                        const T g = dy[j];
                        for (int i = 0; i < f; ++i) dx[i] += g * wr[i];
                    }
                }
                if (w->requires_grad) {
                    w->ensure_grad();
                    for (int j = 0; j < o; ++j) {
                        T* dw = w->grad.ptr() + static_cast<std::size_t>(j) * f;
                        const T g = dy[j];
                        for (int i = 0; i < f; ++i) dw[i] += g * xr[i];
                    }
                }
                if (b && b->requires_grad) {
                    b->ensure_grad();
                    for (int j = 0; j < o; ++j) b->grad.data[j] += dy[j];
                }
            }
        };
    }
    return n;
}

// ---- convolutions ----

namespace addet {

inline int conv_out(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// valid output range so that 0 <= ox*stride + kx - pad < in_w
inline void ox_range(int in_w, int out_w, int kx, int stride, int pad, int& lo, int& hi) {
    lo = 0;
    const int num = pad - kx;
    if (num > 0) lo = (num + stride - 1) / stride;
    hi = out_w - 1;
    const int top = in_w - 1 - kx + pad;
    if (top < 0) {
        hi = -1;
        return;
    }
    hi = std::min(hi, top / stride);
}

}  // namespace addet

// x: {N,C,H,W}; w: {OC,IC,KH,KW}; optional bias {OC}
template <typename T>
NodeP<T> conv2d(NodeP<T> x, NodeP<T> w, NodeP<T> b, int stride, int pad) {
    addet::require(x->value.rank() == 4 && w->value.rank() == 4, "conv2d: need 4-d input and weight");
    const int n_batch = x->value.dim(0), ic = x->value.dim(1), ih = x->value.dim(2), iw = x->value.dim(3);
    const int oc = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
    addet::require(w->value.dim(1) == ic, "conv2d: channel mismatch");
    addet::require(kh <= ih + 2 * pad && kw <= iw + 2 * pad, "conv2d: kernel larger than padded input");
    addet::require(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
    if (b) addet::require(b->value.rank() == 1 && b->value.dim(0) == oc, "conv2d: bias shape mismatch");
    const int oh = addet::conv_out(ih, kh, stride, pad);
    const int ow = addet::conv_out(iw, kw, stride, pad);

    Tensor<T> out({n_batch, oc, oh, ow});
    for (int n = 0; n < n_batch; ++n) {
        for (int co = 0; co < oc; ++co) {
            T* oplane = out.ptr() + (static_cast<std::size_t>(n) * oc + co) * oh * ow;
            if (b) {
                const T bias = b->value.data[co];
                for (int i = 0; i < oh * ow; ++i) oplane[i] = bias;
            }
            for (int ci = 0; ci < ic; ++ci) {
                const T* iplane = x->value.ptr() + (static_cast<std::size_t>(n) * ic + ci) * ih * iw;
                const T* wplane = w->value.ptr() + (static_cast<std::size_t>(co) * ic + ci) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const T wv = wplane[ky * kw + kx];
                        int lo, hi;
                        addet::ox_range(iw, ow, kx, stride, pad, lo, hi);
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride + ky - pad;
                            if (iy < 0 || iy >= ih) continue;
                            const T* irow = iplane + static_cast<std::size_t>(iy) * iw + (kx - pad);
                            T* orow = oplane + static_cast<std::size_t>(oy) * ow;
                            for (int ox = lo; ox <= hi; ++ox) orow[ox] += wv * irow[ox * stride];
                        }
                    }
                }
            }
        }
    }
    std::vector<NodeP<T>> parents = {x, w};
    if (b) parents.push_back(b);
    auto node = addet::make_op<T>(std::move(out), std::move(parents), nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, x, w, b, n_batch, ic, ih, iw, oc, kh, kw, oh, ow, stride, pad]() {
            for (int n = 0; n < n_batch; ++n) {
                for (int co = 0; co < oc; ++co) {
                    const T* dplane = np->grad.ptr() + (static_cast<std::size_t>(n) * oc + co) * oh * ow;
                    if (b && b->requires_grad) {
                        b->ensure_grad();
                        T acc = T(0);
                        for (int i = 0; i < oh * ow; ++i) acc += dplane[i];
                        b->grad.data[co] += acc;
                    }
                    for (int ci = 0; ci < ic; ++ci) {
                        const T* iplane =
                            x->value.ptr() + (static_cast<std::size_t>(n) * ic + ci) * ih * iw;
                        const T* wplane =
                            w->value.ptr() + (static_cast<std::size_t>(co) * ic + ci) * kh * kw;
                        T* dwplane = nullptr;
                        if (w->requires_grad) {
                            w->ensure_grad();
                            dwplane = w->grad.ptr() + (static_cast<std::size_t>(co) * ic + ci) * kh * kw;
                        }
                        T* diplane = nullptr;
                        if (x->requires_grad) {
                            x->ensure_grad();
                            diplane = x->grad.ptr() + (static_cast<std::size_t>(n) * ic + ci) * ih * iw;
                        }
                        for (int ky = 0; ky < kh; ++ky) {
                            for (int kx = 0; kx < kw; ++kx) {
                                int lo, hi;
                                addet::ox_range(iw, ow, kx, stride, pad, lo, hi);
                                const T wv = wplane[ky * kw + kx];
                                T wacc = T(0);
                                for (int oy = 0; oy < oh; ++oy) {
                                    const int iy = oy * stride + ky - pad;
                                    if (iy < 0 || iy >= ih) continue;
                                    const T* drow = dplane + static_cast<std::size_t>(oy) * ow;
                                    const std::size_t ioff =
                                        static_cast<std::size_t>(iy) * iw + (kx - pad);
                                    if (dwplane) {
                                        const T* irow = iplane + ioff;
                                        for (int ox = lo; ox <= hi; ++ox)
                                            wacc += drow[ox] * irow[ox * stride];
                                    }
                                    if (diplane) {
                                        T* dirow = diplane + ioff;
                                        for (int ox = lo; ox <= hi; ++ox)
                                            dirow[ox * stride] += drow[ox] * wv;
                                    }
                                }
                                if (dwplane) dwplane[ky * kw + kx] += wacc;
                            }
                        }
                    }
                }
            }
        };
    }
    return node;
}

template <typename T>
NodeP<T> conv2d(NodeP<T> x, NodeP<T> w, int stride, int pad) {
    return conv2d(std::move(x), std::move(w), NodeP<T>(), stride, pad);
}

// x: {N,C,H,W}; w: {IC,OC,KH,KW}; out spatial (H-1)*stride - 2*pad + KH
template <typename T>
NodeP<T> conv2d_transpose(NodeP<T> x, NodeP<T> w, int stride, int pad) {
    addet::require(x->value.rank() == 4 && w->value.rank() == 4,
                   "conv2d_transpose: need 4-d input and weight");
    const int n_batch = x->value.dim(0), ic = x->value.dim(1), ih = x->value.dim(2), iw = x->value.dim(3);
    addet::require(w->value.dim(0) == ic, "conv2d_transpose: channel mismatch");
    const int oc = w->value.dim(1), kh = w->value.dim(2), kw = w->value.dim(3);
    const int oh = (ih - 1) * stride - 2 * pad + kh;
    const int ow = (iw - 1) * stride - 2 * pad + kw;
    addet::require(oh >= 1 && ow >= 1, "conv2d_transpose: empty output");

    Tensor<T> out({n_batch, oc, oh, ow});
    for (int n = 0; n < n_batch; ++n) {
        for (int ci = 0; ci < ic; ++ci) {
            const T* iplane = x->value.ptr() + (static_cast<std::size_t>(n) * ic + ci) * ih * iw;
            for (int co = 0; co < oc; ++co) {
                T* oplane = out.ptr() + (static_cast<std::size_t>(n) * oc + co) * oh * ow;
                const T* wplane = w->value.ptr() + (static_cast<std::size_t>(ci) * oc + co) * kh * kw;
                for (int iy = 0; iy < ih; ++iy) {
                    for (int ix = 0; ix < iw; ++ix) {
                        const T v = iplane[iy * iw + ix];
                        if (v == T(0)) continue;
                        for (int ky = 0; ky < kh; ++ky) {
                            const int oy = iy * stride + ky - pad;
                            if (oy < 0 || oy >= oh) continue;
                            T* orow = oplane + static_cast<std::size_t>(oy) * ow;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int ox = ix * stride + kx - pad;
                                if (ox < 0 || ox >= ow) continue;
                                orow[ox] += v * wplane[ky * kw + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    auto node = addet::make_op<T>(std::move(out), {x, w}, nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, x, w, n_batch, ic, ih, iw, oc, kh, kw, oh, ow, stride, pad]() {
            for (int n = 0; n < n_batch; ++n) {
                for (int ci = 0; ci < ic; ++ci) {
                    const T* iplane = x->value.ptr() + (static_cast<std::size_t>(n) * ic + ci) * ih * iw;
                    T* diplane = nullptr;
                    if (x->requires_grad) {
                        x->ensure_grad();
                        diplane = x->grad.ptr() + (static_cast<std::size_t>(n) * ic + ci) * ih * iw;
                    }
                    for (int co = 0; co < oc; ++co) {
                        const T* dplane =
                            np->grad.ptr() + (static_cast<std::size_t>(n) * oc + co) * oh * ow;
                        const T* wplane =
                            w->value.ptr() + (static_cast<std::size_t>(ci) * oc + co) * kh * kw;
                        T* dwplane = nullptr;
                        if (w->requires_grad) {
                            w->ensure_grad();
                            dwplane = w->grad.ptr() + (static_cast<std::size_t>(ci) * oc + co) * kh * kw;
                        }
                        for (int iy = 0; iy < ih; ++iy) {
                            for (int ix = 0; ix < iw; ++ix) {
                                const T v = iplane[iy * iw + ix];
                                T gacc = T(0);
                                for (int ky = 0; ky < kh; ++ky) {
                                    const int oy = iy * stride + ky - pad;
                                    if (oy < 0 || oy >= oh) continue;
                                    const T* drow = dplane + static_cast<std::size_t>(oy) * ow;
                                    for (int kx = 0; kx < kw; ++kx) {
                                        const int ox = ix * stride + kx - pad;
                                        if (ox < 0 || ox >= ow) continue;
                                        const T g = drow[ox];
                                        if (dwplane) dwplane[ky * kw + kx] += g * v;
                                        gacc += g * wplane[ky * kw + kx];
                                    }
                                }
                                if (diplane) diplane[iy * iw + ix] += gacc;
                            }
                        }
                    }
                }
            }
        };
    }
    return node;
}

// x: {C,L} or {N,C,L}; w: {OC,IC,K}. Bias omitted by design.
template <typename T>
NodeP<T> conv1d(NodeP<T> x, NodeP<T> w, int stride, int pad) {
    addet::require(w->value.rank() == 3, "conv1d: weight must be rank 3");
    const bool batched = x->value.rank() == 3;
    addet::require(batched || x->value.rank() == 2, "conv1d: input must be {C,L} or {N,C,L}");
    const int n_batch = batched ? x->value.dim(0) : 1;
    const int ic = batched ? x->value.dim(1) : x->value.dim(0);
    const int il = batched ? x->value.dim(2) : x->value.dim(1);
    const int oc = w->value.dim(0), k = w->value.dim(2);
    addet::require(w->value.dim(1) == ic, "conv1d: channel mismatch");
    addet::require(k <= il + 2 * pad, "conv1d: kernel larger than padded input");
    const int ol = addet::conv_out(il, k, stride, pad);

    Tensor<T> out(batched ? std::vector<int>{n_batch, oc, ol} : std::vector<int>{oc, ol});
    for (int n = 0; n < n_batch; ++n) {
        for (int co = 0; co < oc; ++co) {
            T* orow = out.ptr() + (static_cast<std::size_t>(n) * oc + co) * ol;
            for (int ci = 0; ci < ic; ++ci) {
                const T* irow = x->value.ptr() + (static_cast<std::size_t>(n) * ic + ci) * il;
                const T* wrow = w->value.ptr() + (static_cast<std::size_t>(co) * ic + ci) * k;
                for (int kx = 0; kx < k; ++kx) {
                    const T wv = wrow[kx];
                    int lo, hi;
                    addet::ox_range(il, ol, kx, stride, pad, lo, hi);
                    const T* ishift = irow + (kx - pad);
                    for (int ox = lo; ox <= hi; ++ox) orow[ox] += wv * ishift[ox * stride];
                }
            }
        }
    }
    auto node = addet::make_op<T>(std::move(out), {x, w}, nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, x, w, n_batch, ic, il, oc, k, ol, stride, pad]() {
            for (int n = 0; n < n_batch; ++n) {
                for (int co = 0; co < oc; ++co) {
                    const T* drow = np->grad.ptr() + (static_cast<std::size_t>(n) * oc + co) * ol;
                    for (int ci = 0; ci < ic; ++ci) {
                        const T* irow = x->value.ptr() + (static_cast<std::size_t>(n) * ic + ci) * il;
                        const T* wrow = w->value.ptr() + (static_cast<std::size_t>(co) * ic + ci) * k;
                        for (int kx = 0; kx < k; ++kx) {
                            int lo, hi;
                            addet::ox_range(il, ol, kx, stride, pad, lo, hi);
                            if (w->requires_grad) {
                                w->ensure_grad();
                                T* dw = w->grad.ptr() + (static_cast<std::size_t>(co) * ic + ci) * k;
                                const T* ishift = irow + (kx - pad);
                                T acc = T(0);
                                for (int ox = lo; ox <= hi; ++ox) acc += drow[ox] * ishift[ox * stride];
                                dw[kx] += acc;
                            }
                            if (x->requires_grad) {
                                x->ensure_grad();
                                T* di = x->grad.ptr() + (static_cast<std::size_t>(n) * ic + ci) * il +
                                        (kx - pad);
                                const T wv = wrow[kx];
                                for (int ox = lo; ox <= hi; ++ox) di[ox * stride] += drow[ox] * wv;
                            }
                        }
                    }
                }
            }
        };
    }
    return node;
}

// nearest-neighbour 2x upsample, {N,C,H,W} -> {N,C,2H,2W}
template <typename T>
NodeP<T> upsample2x(NodeP<T> x) {
    addet::require(x->value.rank() == 4, "upsample2x: need 4-d input");
    const int n_batch = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
    Tensor<T> out({n_batch, c, 2 * h, 2 * w});
    const std::size_t planes = static_cast<std::size_t>(n_batch) * c;
    for (std::size_t p = 0; p < planes; ++p) {
        const T* ip = x->value.ptr() + p * h * w;
        T* op = out.ptr() + p * 4 * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x2 = 0; x2 < w; ++x2) {
                const T v = ip[y * w + x2];
                T* o0 = op + (2 * y) * (2 * w) + 2 * x2;
                o0[0] = v;
                o0[1] = v;
                o0[2 * w] = v;
                o0[2 * w + 1] = v;
            }
        }
    }
    auto node = addet::make_op<T>(std::move(out), {x}, nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, x, planes, h, w]() {
            x->ensure_grad();
            for (std::size_t p = 0; p < planes; ++p) {
                const T* dp = np->grad.ptr() + p * 4 * h * w;
                T* dx = x->grad.ptr() + p * h * w;
                for (int y = 0; y < h; ++y) {
                    for (int x2 = 0; x2 < w; ++x2) {
                        const T* d0 = dp + (2 * y) * (2 * w) + 2 * x2;
                        dx[y * w + x2] += d0[0] + d0[1] + d0[2 * w] + d0[2 * w + 1];
                    }
                }
            }
        };
    }
    return node;
}

// global average pool over time: {C,L} -> {C}
template <typename T>
NodeP<T> global_avg_pool(NodeP<T> x) {
    addet::require(x->value.rank() == 2, "global_avg_pool: need {C,L} input");
    const int c = x->value.dim(0), l = x->value.dim(1);
    Tensor<T> out({c});
    const T inv = T(1) / static_cast<T>(l);
    for (int i = 0; i < c; ++i) {
        T acc = T(0);
        const T* row = x->value.ptr() + static_cast<std::size_t>(i) * l;
        for (int t = 0; t < l; ++t) acc += row[t];
        out.data[i] = acc * inv;
    }
    auto node = addet::make_op<T>(std::move(out), {x}, nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, x, c, l, inv]() {
            x->ensure_grad();
            for (int i = 0; i < c; ++i) {
                const T g = np->grad.data[i] * inv;
                T* row = x->grad.ptr() + static_cast<std::size_t>(i) * l;
                for (int t = 0; t < l; ++t) row[t] += g;
            }
        };
    }
    return node;
}

// channel-wise rescale: {C,L} * gate {C}
template <typename T>
NodeP<T> scale_channels(NodeP<T> x, NodeP<T> gate) {
    addet::require(x->value.rank() == 2 && gate->value.rank() == 1 &&
                       gate->value.dim(0) == x->value.dim(0),
                   "scale_channels: shape mismatch");
    const int c = x->value.dim(0), l = x->value.dim(1);
    Tensor<T> out(x->value.shape);
    for (int i = 0; i < c; ++i) {
        const T g = gate->value.data[i];
        const T* row = x->value.ptr() + static_cast<std::size_t>(i) * l;
        T* orow = out.ptr() + static_cast<std::size_t>(i) * l;
        for (int t = 0; t < l; ++t) orow[t] = row[t] * g;
    }
    auto node = addet::make_op<T>(std::move(out), {x, gate}, nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, x, gate, c, l]() {
            for (int i = 0; i < c; ++i) {
                const T* dy = np->grad.ptr() + static_cast<std::size_t>(i) * l;
                if (x->requires_grad) {
                    x->ensure_grad();
                    const T g = gate->value.data[i];
                    T* dx = x->grad.ptr() + static_cast<std::size_t>(i) * l;
                    for (int t = 0; t < l; ++t) dx[t] += dy[t] * g;
                }
                if (gate->requires_grad) {
                    gate->ensure_grad();
                    const T* row = x->value.ptr() + static_cast<std::size_t>(i) * l;
                    T acc = T(0);
                    for (int t = 0; t < l; ++t) acc += dy[t] * row[t];
                    gate->grad.data[i] += acc;
                }
            }
        };
    }
    return node;
}

// ---- losses ----

// (1/n) * sum_i ||x_i - y_i||^2 with n = leading dimension (sample count)
template <typename T>
NodeP<T> mse_loss(NodeP<T> x, NodeP<T> y) {
    addet::require(x->value.same_shape(y->value), "mse_loss: shape mismatch");
    const T inv_n = T(1) / static_cast<T>(x->value.dim(0));
    T acc = T(0);
    for (std::size_t i = 0; i < x->value.numel(); ++i) {
        const T d = x->value.data[i] - y->value.data[i];
        acc += d * d;
    }
    Tensor<T> out({1});
    out.data[0] = acc * inv_n;
    auto node = addet::make_op<T>(std::move(out), {x, y}, nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, x, y, inv_n]() {
            const T g = np->grad.data[0] * T(2) * inv_n;
            if (x->requires_grad) x->ensure_grad();
            if (y->requires_grad) y->ensure_grad();
            for (std::size_t i = 0; i < x->value.numel(); ++i) {
                const T d = x->value.data[i] - y->value.data[i];
                if (x->requires_grad) x->grad.data[i] += g * d;
                if (y->requires_grad) y->grad.data[i] -= g * d;
            }
        };
    }
    return node;
}

// -log softmax(logits)[label] for a logit vector, numerically stable
template <typename T>
NodeP<T> softmax_cross_entropy(NodeP<T> logits, int label) {
    addet::require(logits->value.rank() == 1, "softmax_cross_entropy: need a logit vector");
    const int k = logits->value.dim(0);
    addet::require(label >= 0 && label < k, "softmax_cross_entropy: label out of range");
    const T* x = logits->value.ptr();
    T mx = x[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, x[i]);
    T se = T(0);
    for (int i = 0; i < k; ++i) se += std::exp(x[i] - mx);
    const T logz = std::log(se) + mx;
    Tensor<T> out({1});
    out.data[0] = logz - x[label];
    auto node = addet::make_op<T>(std::move(out), {logits}, nullptr);
    if (node->requires_grad) {
        auto* np = node.get();
        node->backprop = [np, logits, label, k, logz]() {
            logits->ensure_grad();
            const T g = np->grad.data[0];
            for (int i = 0; i < k; ++i) {
                const T p = std::exp(logits->value.data[i] - logz);
                logits->grad.data[i] += g * (p - (i == label ? T(1) : T(0)));
            }
        };
    }
    return node;
}

// ---- backward pass ----

template <typename T>
void backward(const NodeP<T>& loss) {
    if (loss->value.numel() != 1)
        throw std::invalid_argument("backward: loss must be a scalar");
    // iterative post-order DFS
    std::vector<Node<T>*> topo;
    std::unordered_set<Node<T>*> visited;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        Node<T>* node = stack.back().first;
        const std::size_t idx = stack.back().second;
        if (idx < node->parents.size()) {
            stack.back().second = idx + 1;
            Node<T>* next = node->parents[idx].get();
            if (next->requires_grad && !visited.count(next)) {
                visited.insert(next);
                stack.emplace_back(next, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }
    loss->ensure_grad();
    loss->grad.data[0] = T(1);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node<T>* node = *it;
        if (node->backprop) {
            node->ensure_grad();
            node->backprop();
        }
    }
}

// He fan-in initialization for conv/dense weights
template <typename T>
Tensor<T> he_init(std::vector<int> shape, int fan_in, Rng& rng) {
    Tensor<T> t(std::move(shape));
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.normal(0.0, std_dev));
    return t;
}

}  // namespace gzgd
