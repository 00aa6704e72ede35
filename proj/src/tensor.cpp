#include "crossalarm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "crossalarm/kernels.hpp"

namespace crossalarm {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

namespace {

#ifdef NDEBUG
bool g_debug_checks = false;
#else
bool g_debug_checks = true;
#endif

thread_local Tape* t_active_tape = nullptr;

void check_finite(const char* op, const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x))
            throw NumericalError(std::string("non-finite value produced by op '") + op + "'");
    }
}

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape_numel(shape) != data.size())
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return n;
}

// Shared op-node factory: computes requires_grad from the active tape and the
// parents, records the node when it participates in differentiation, and
// screens for NaN/Inf when debug checks are on.
Tensor record_op(const char* op, Shape shape, std::vector<double> value,
                 std::vector<Tensor> parents,
                 std::function<void(detail::Node&)> backward) {
    if (g_debug_checks) check_finite(op, value);
    auto n = std::make_shared<detail::Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    Tape* tape = t_active_tape;
    bool needs_grad = false;
    if (tape) {
        for (const auto& p : parents)
            if (p.node_->requires_grad) { needs_grad = true; break; }
    }
    if (needs_grad) {
        n->requires_grad = true;
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(p.node_);
        n->backward = std::move(backward);
        tape->record(n);
    }
    return Tensor(std::move(n));
}

void axis_split(const Shape& s, std::size_t axis, std::size_t& outer,
                std::size_t& len, std::size_t& inner) {
    outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    len = s[axis];
    inner = 1;
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}

} // namespace

bool debug_checks() { return g_debug_checks; }
void set_debug_checks(bool on) { g_debug_checks = on; }

namespace detail {

double* Node::grad_buf() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    grad_live = true;
    return grad.data();
}

void Node::drop_grad() {
    grad.clear();
    grad.shrink_to_fit();
    grad_live = false;
}

} // namespace detail

// ---- Tape ------------------------------------------------------------------

Tape::Scope::Scope(Tape& t) : prev_(t_active_tape) { t_active_tape = &t; }
Tape::Scope::~Scope() { t_active_tape = prev_; }

Tape* Tape::active() { return t_active_tape; }

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1)
        throw UsageError("backward: loss must be a defined scalar tensor");
    if (!loss.node_->requires_grad)
        throw UsageError("backward: loss was not recorded on an active tape");
    loss.node_->grad_buf()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        detail::Node& n = **it;
        if (!n.grad_live || !n.backward) continue;
        n.backward(n);
        // Op-node grads are consumed; only leaves keep theirs so that
        // repeated backward calls accumulate cleanly.
        n.drop_grad();
    }
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape) {
    std::size_t n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0), false));
}

Tensor Tensor::full(Shape shape, double v) {
    std::size_t n = shape_numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(n, v), false));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
    return Tensor(make_leaf(std::move(shape), std::move(data), false));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::param(Shape shape, std::vector<double> data) {
    return Tensor(make_leaf(std::move(shape), std::move(data), true));
}

double Tensor::item() const {
    if (numel() != 1) throw UsageError("item(): tensor is not scalar, shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
    const Shape& s = node_->shape;
    if (idx.size() != s.size()) throw DimensionError("at(): rank mismatch");
    std::size_t flat = 0, i = 0;
    for (std::size_t v : idx) {
        if (v >= s[i]) throw DimensionError("at(): index out of range");
        flat = flat * s[i] + v;
        ++i;
    }
    return node_->value[flat];
}

const std::vector<double>& Tensor::grad() const {
    if (!node_ || node_->grad.empty())
        throw UsageError("grad(): no gradient present (run backward first)");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) {
        node_->grad.clear();
        node_->grad_live = false;
    }
}

Tensor Tensor::clone_detached() const {
    return Tensor::from(node_->shape, node_->value);
}

// ---- ops -------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2)
        throw DimensionError("matmul: expects 2-D operands, got " + shape_str(a.shape()) +
                             " and " + shape_str(b.shape()));
    const std::size_t m = a.extent(0), k = a.extent(1), k2 = b.extent(0), n = b.extent(1);
    if (k != k2)
        throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    std::vector<double> out(m * n);
    kernels::matmul_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
    return record_op("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
        const double* dc = self.grad.data();
        detail::Node& pa = *self.parents[0];
        detail::Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            std::vector<double> da(m * k);
            kernels::matmul_nt(dc, pb.value.data(), da.data(), m, n, k);
            double* g = pa.grad_buf();
            for (std::size_t i = 0; i < da.size(); ++i) g[i] += da[i];
        }
        if (pb.requires_grad) {
            std::vector<double> db(k * n);
            kernels::matmul_tn(pa.value.data(), dc, db.data(), m, k, n);
            double* g = pb.grad_buf();
            for (std::size_t i = 0; i < db.size(); ++i) g[i] += db[i];
        }
    });
}

namespace {

enum class AddMode { Equal, RowVector, Scalar };

AddMode add_mode(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return AddMode::Equal;
    if (b.numel() == 1) return AddMode::Scalar;
    if (b.ndim() == 1 && a.ndim() >= 1 && b.extent(0) == a.shape().back())
        return AddMode::RowVector;
    throw DimensionError("add: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    AddMode mode = add_mode(a, b);
    std::vector<double> out(a.data());
    const std::vector<double>& bv = b.data();
    switch (mode) {
    case AddMode::Equal:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
        break;
    case AddMode::Scalar:
        for (double& x : out) x += bv[0];
        break;
    case AddMode::RowVector: {
        const std::size_t w = bv.size();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % w];
        break;
    }
    }
    return record_op("add", a.shape(), std::move(out), {a, b}, [mode](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        detail::Node& pb = *self.parents[1];
        const double* dc = self.grad.data();
        const std::size_t n = self.numel();
        if (pa.requires_grad) {
            double* g = pa.grad_buf();
            for (std::size_t i = 0; i < n; ++i) g[i] += dc[i];
        }
        if (pb.requires_grad) {
            double* g = pb.grad_buf();
            switch (mode) {
            case AddMode::Equal:
                for (std::size_t i = 0; i < n; ++i) g[i] += dc[i];
                break;
            case AddMode::Scalar: {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) acc += dc[i];
                g[0] += acc;
                break;
            }
            case AddMode::RowVector: {
                const std::size_t w = pb.numel();
                for (std::size_t i = 0; i < n; ++i) g[i % w] += dc[i];
                break;
            }
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("sub: shapes differ, " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    std::vector<double> out(a.data());
    const std::vector<double>& bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return record_op("sub", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        detail::Node& pb = *self.parents[1];
        const double* dc = self.grad.data();
        const std::size_t n = self.numel();
        if (pa.requires_grad) {
            double* g = pa.grad_buf();
            for (std::size_t i = 0; i < n; ++i) g[i] += dc[i];
        }
        if (pb.requires_grad) {
            double* g = pb.grad_buf();
            for (std::size_t i = 0; i < n; ++i) g[i] -= dc[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError("mul: shapes differ, " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    std::vector<double> out(a.data());
    const std::vector<double>& bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return record_op("mul", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        detail::Node& pb = *self.parents[1];
        const double* dc = self.grad.data();
        const std::size_t n = self.numel();
        if (pa.requires_grad) {
            double* g = pa.grad_buf();
            for (std::size_t i = 0; i < n; ++i) g[i] += dc[i] * pb.value[i];
        }
        if (pb.requires_grad) {
            double* g = pb.grad_buf();
            for (std::size_t i = 0; i < n; ++i) g[i] += dc[i] * pa.value[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.data());
    for (double& x : out) x *= s;
    return record_op("scale", a.shape(), std::move(out), {a}, [s](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        double* g = pa.grad_buf();
        const double* dc = self.grad.data();
        for (std::size_t i = 0; i < self.numel(); ++i) g[i] += s * dc[i];
    });
}

Tensor mean(const Tensor& a) {
    const std::size_t n = a.numel();
    if (n == 0) throw DimensionError("mean: empty tensor");
    double acc = 0.0;
    for (double x : a.data()) acc += x;
    return record_op("mean", {1}, {acc / static_cast<double>(n)}, {a}, [n](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        const double d = self.grad[0] / static_cast<double>(n);
        double* g = pa.grad_buf();
        for (std::size_t i = 0; i < n; ++i) g[i] += d;
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    const Shape& s0 = parts[0].shape();
    if (axis >= s0.size()) throw DimensionError("concat: axis out of range");
    Shape out_shape = s0;
    std::size_t total = s0[axis];
    for (std::size_t p = 1; p < parts.size(); ++p) {
        const Shape& sp = parts[p].shape();
        if (sp.size() != s0.size())
            throw DimensionError("concat: rank mismatch");
        for (std::size_t i = 0; i < sp.size(); ++i)
            if (i != axis && sp[i] != s0[i])
                throw DimensionError("concat: extent mismatch off the concat axis");
        total += sp[axis];
    }
    out_shape[axis] = total;

    std::size_t outer, len0, inner;
    axis_split(s0, axis, outer, len0, inner);
    std::vector<double> out(shape_numel(out_shape));
    std::vector<std::size_t> lens(parts.size());
    for (std::size_t p = 0; p < parts.size(); ++p) lens[p] = parts[p].extent(axis);

    for (std::size_t o = 0; o < outer; ++o) {
        std::size_t off = o * total * inner;
        for (std::size_t p = 0; p < parts.size(); ++p) {
            const double* src = parts[p].data().data() + o * lens[p] * inner;
            std::copy(src, src + lens[p] * inner, out.begin() + off);
            off += lens[p] * inner;
        }
    }
    return record_op("concat", std::move(out_shape), std::move(out), parts,
                     [outer, inner, lens, total](detail::Node& self) {
                         const double* dc = self.grad.data();
                         for (std::size_t o = 0; o < outer; ++o) {
                             std::size_t off = o * total * inner;
                             for (std::size_t p = 0; p < self.parents.size(); ++p) {
                                 detail::Node& pp = *self.parents[p];
                                 const std::size_t chunk = lens[p] * inner;
                                 if (pp.requires_grad) {
                                     double* g = pp.grad_buf() + o * chunk;
                                     for (std::size_t i = 0; i < chunk; ++i)
                                         g[i] += dc[off + i];
                                 }
                                 off += chunk;
                             }
                         }
                     });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = a.shape();
    if (axis >= s.size()) throw DimensionError("slice: axis out of range");
    if (begin > end || end > s[axis])
        throw DimensionError("slice: range [" + std::to_string(begin) + "," +
                             std::to_string(end) + ") invalid for extent " +
                             std::to_string(s[axis]));
    Shape out_shape = s;
    out_shape[axis] = end - begin;
    std::size_t outer, len, inner;
    axis_split(s, axis, outer, len, inner);
    const std::size_t span = (end - begin) * inner;
    std::vector<double> out(outer * span);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = a.data().data() + (o * len + begin) * inner;
        std::copy(src, src + span, out.begin() + o * span);
    }
    return record_op("slice", std::move(out_shape), std::move(out), {a},
                     [outer, len, inner, begin, span](detail::Node& self) {
                         detail::Node& pa = *self.parents[0];
                         if (!pa.requires_grad) return;
                         double* g = pa.grad_buf();
                         const double* dc = self.grad.data();
                         for (std::size_t o = 0; o < outer; ++o) {
                             double* dst = g + (o * len + begin) * inner;
                             const double* src = dc + o * span;
                             for (std::size_t i = 0; i < span; ++i) dst[i] += src[i];
                         }
                     });
}

Tensor transpose(const Tensor& a) {
    if (a.ndim() != 2) throw DimensionError("transpose: expects 2-D, got " + shape_str(a.shape()));
    const std::size_t m = a.extent(0), n = a.extent(1);
    std::vector<double> out(m * n);
    const double* src = a.data().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
    return record_op("transpose", {n, m}, std::move(out), {a}, [m, n](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        double* g = pa.grad_buf();
        const double* dc = self.grad.data();
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < m; ++i) g[i * n + j] += dc[j * m + i];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel())
        throw DimensionError("reshape: element count changes from " + shape_str(a.shape()) +
                             " to " + shape_str(shape));
    std::vector<double> out(a.data());
    return record_op("reshape", std::move(shape), std::move(out), {a}, [](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        double* g = pa.grad_buf();
        const double* dc = self.grad.data();
        for (std::size_t i = 0; i < self.numel(); ++i) g[i] += dc[i];
    });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
    const Shape& s = a.shape();
    if (axis >= s.size()) throw DimensionError("softmax: axis out of range");
    std::size_t outer, len, inner;
    axis_split(s, axis, outer, len, inner);
    std::vector<double> out(a.data());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            double* base = out.data() + o * len * inner + in;
            double mx = base[0];
            for (std::size_t t = 1; t < len; ++t) mx = std::max(mx, base[t * inner]);
            double denom = 0.0;
            for (std::size_t t = 0; t < len; ++t) {
                const double e = std::exp(base[t * inner] - mx);
                base[t * inner] = e;
                denom += e;
            }
            for (std::size_t t = 0; t < len; ++t) base[t * inner] /= denom;
        }
    }
    return record_op("softmax", s, std::move(out), {a},
                     [outer, len, inner](detail::Node& self) {
                         detail::Node& pa = *self.parents[0];
                         if (!pa.requires_grad) return;
                         double* g = pa.grad_buf();
                         const double* y = self.value.data();
                         const double* dy = self.grad.data();
                         for (std::size_t o = 0; o < outer; ++o) {
                             for (std::size_t in = 0; in < inner; ++in) {
                                 const std::size_t base = o * len * inner + in;
                                 double dot = 0.0;
                                 for (std::size_t t = 0; t < len; ++t) {
                                     const std::size_t i = base + t * inner;
                                     dot += dy[i] * y[i];
                                 }
                                 for (std::size_t t = 0; t < len; ++t) {
                                     const std::size_t i = base + t * inner;
                                     g[i] += y[i] * (dy[i] - dot);
                                 }
                             }
                         }
                     });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  std::size_t axis, double eps) {
    const Shape& s = x.shape();
    if (axis >= s.size()) throw DimensionError("layer_norm: axis out of range");
    const std::size_t len = s[axis];
    if (gain.numel() != len || bias.numel() != len)
        throw DimensionError("layer_norm: gain/bias length " + std::to_string(gain.numel()) +
                             "/" + std::to_string(bias.numel()) + " vs axis extent " +
                             std::to_string(len));
    std::size_t outer, len_, inner;
    axis_split(s, axis, outer, len_, inner);
    std::vector<double> out(x.numel());
    const double* xv = x.data().data();
    const double* gv = gain.data().data();
    const double* bv = bias.data().data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double mu = 0.0;
            for (std::size_t t = 0; t < len; ++t) mu += xv[base + t * inner];
            mu /= static_cast<double>(len);
            double var = 0.0;
            for (std::size_t t = 0; t < len; ++t) {
                const double d = xv[base + t * inner] - mu;
                var += d * d;
            }
            var /= static_cast<double>(len);
            const double inv = 1.0 / std::sqrt(var + eps);
            for (std::size_t t = 0; t < len; ++t) {
                const double xhat = (xv[base + t * inner] - mu) * inv;
                out[base + t * inner] = xhat * gv[t] + bv[t];
            }
        }
    }
    return record_op(
        "layer_norm", s, std::move(out), {x, gain, bias},
        [outer, len, inner, eps](detail::Node& self) {
            detail::Node& px = *self.parents[0];
            detail::Node& pg = *self.parents[1];
            detail::Node& pb = *self.parents[2];
            const double* xv = px.value.data();
            const double* gv = pg.value.data();
            const double* dy = self.grad.data();
            double* dx = px.requires_grad ? px.grad_buf() : nullptr;
            double* dg = pg.requires_grad ? pg.grad_buf() : nullptr;
            double* db = pb.requires_grad ? pb.grad_buf() : nullptr;
            std::vector<double> xhat(len);
            for (std::size_t o = 0; o < outer; ++o) {
                for (std::size_t in = 0; in < inner; ++in) {
                    const std::size_t base = o * len * inner + in;
                    double mu = 0.0;
                    for (std::size_t t = 0; t < len; ++t) mu += xv[base + t * inner];
                    mu /= static_cast<double>(len);
                    double var = 0.0;
                    for (std::size_t t = 0; t < len; ++t) {
                        const double d = xv[base + t * inner] - mu;
                        var += d * d;
                    }
                    var /= static_cast<double>(len);
                    const double inv = 1.0 / std::sqrt(var + eps);
                    double mean_g = 0.0, mean_gx = 0.0;
                    for (std::size_t t = 0; t < len; ++t) {
                        const std::size_t i = base + t * inner;
                        xhat[t] = (xv[i] - mu) * inv;
                        const double gterm = dy[i] * gv[t];
                        mean_g += gterm;
                        mean_gx += gterm * xhat[t];
                    }
                    mean_g /= static_cast<double>(len);
                    mean_gx /= static_cast<double>(len);
                    for (std::size_t t = 0; t < len; ++t) {
                        const std::size_t i = base + t * inner;
                        if (dx)
                            dx[i] += (dy[i] * gv[t] - mean_g - xhat[t] * mean_gx) * inv;
                        if (dg) dg[t] += dy[i] * xhat[t];
                        if (db) db[t] += dy[i];
                    }
                }
            }
        });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.data());
    for (double& x : out) x = x > 0.0 ? x : 0.0;
    return record_op("relu", a.shape(), std::move(out), {a}, [](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        double* g = pa.grad_buf();
        const double* dc = self.grad.data();
        for (std::size_t i = 0; i < self.numel(); ++i)
            if (pa.value[i] > 0.0) g[i] += dc[i];
    });
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
} // namespace

Tensor gelu(const Tensor& a) {
    std::vector<double> out(a.data());
    for (double& x : out) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    return record_op("gelu", a.shape(), std::move(out), {a}, [](detail::Node& self) {
        detail::Node& pa = *self.parents[0];
        if (!pa.requires_grad) return;
        double* g = pa.grad_buf();
        const double* dc = self.grad.data();
        for (std::size_t i = 0; i < self.numel(); ++i) {
            const double x = pa.value[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            g[i] += dc[i] * (cdf + x * pdf);
        }
    });
}

Tensor segment_series(const Tensor& x, std::size_t l_seg) {
    if (x.ndim() != 2) throw DimensionError("segment_series: expects T x D input");
    const std::size_t T = x.extent(0), D = x.extent(1);
    if (l_seg == 0 || T % l_seg != 0)
        throw DimensionError("segment_series: T=" + std::to_string(T) +
                             " is not divisible by L_seg=" + std::to_string(l_seg) +
                             "; pad the window or choose T as a multiple of L_seg");
    const std::size_t n_seg = T / l_seg;
    std::vector<double> out(T * D);
    const double* xv = x.data().data();
    for (std::size_t i = 0; i < n_seg; ++i)
        for (std::size_t d = 0; d < D; ++d)
            for (std::size_t t = 0; t < l_seg; ++t)
                out[(i * D + d) * l_seg + t] = xv[(i * l_seg + t) * D + d];
    return record_op("segment_series", {n_seg, D, l_seg}, std::move(out), {x},
                     [n_seg, D, l_seg](detail::Node& self) {
                         detail::Node& pa = *self.parents[0];
                         if (!pa.requires_grad) return;
                         double* g = pa.grad_buf();
                         const double* dc = self.grad.data();
                         for (std::size_t i = 0; i < n_seg; ++i)
                             for (std::size_t d = 0; d < D; ++d)
                                 for (std::size_t t = 0; t < l_seg; ++t)
                                     g[(i * l_seg + t) * D + d] +=
                                         dc[(i * D + d) * l_seg + t];
                     });
}

Tensor pair_concat(const Tensor& z) {
    if (z.ndim() != 3) throw DimensionError("pair_concat: expects L x D x d input");
    const std::size_t L = z.extent(0), D = z.extent(1), dm = z.extent(2);
    const std::size_t half = L / 2;
    if (half == 0) throw DimensionError("pair_concat: needs at least 2 segments");
    std::vector<double> out(half * D * 2 * dm);
    const double* zv = z.data().data();
    for (std::size_t p = 0; p < half; ++p) {
        for (std::size_t d = 0; d < D; ++d) {
            const double* a = zv + ((2 * p) * D + d) * dm;
            const double* b = zv + ((2 * p + 1) * D + d) * dm;
            double* dst = out.data() + (p * D + d) * 2 * dm;
            std::copy(a, a + dm, dst);
            std::copy(b, b + dm, dst + dm);
        }
    }
    return record_op("pair_concat", {half, D, 2 * dm}, std::move(out), {z},
                     [half, D, dm](detail::Node& self) {
                         detail::Node& pa = *self.parents[0];
                         if (!pa.requires_grad) return;
                         double* g = pa.grad_buf();
                         const double* dc = self.grad.data();
                         for (std::size_t p = 0; p < half; ++p) {
                             for (std::size_t d = 0; d < D; ++d) {
                                 const double* src = dc + (p * D + d) * 2 * dm;
                                 double* ga = g + ((2 * p) * D + d) * dm;
                                 double* gb = g + ((2 * p + 1) * D + d) * dm;
                                 for (std::size_t t = 0; t < dm; ++t) {
                                     ga[t] += src[t];
                                     gb[t] += src[dm + t];
                                 }
                             }
                         }
                     });
}

Tensor assemble_segments(const Tensor& x, std::size_t n_seg, std::size_t d_channels,
                         std::size_t l_seg) {
    if (x.ndim() != 2 || x.extent(0) != n_seg * d_channels || x.extent(1) != l_seg)
        throw DimensionError("assemble_segments: expects (n_seg*D) x L_seg input, got " +
                             shape_str(x.shape()));
    std::vector<double> out(n_seg * l_seg * d_channels);
    const double* xv = x.data().data();
    for (std::size_t i = 0; i < n_seg; ++i)
        for (std::size_t d = 0; d < d_channels; ++d)
            for (std::size_t t = 0; t < l_seg; ++t)
                out[(i * l_seg + t) * d_channels + d] = xv[(i * d_channels + d) * l_seg + t];
    return record_op("assemble_segments", {n_seg * l_seg, d_channels}, std::move(out), {x},
                     [n_seg, d_channels, l_seg](detail::Node& self) {
                         detail::Node& pa = *self.parents[0];
                         if (!pa.requires_grad) return;
                         double* g = pa.grad_buf();
                         const double* dc = self.grad.data();
                         for (std::size_t i = 0; i < n_seg; ++i)
                             for (std::size_t d = 0; d < d_channels; ++d)
                                 for (std::size_t t = 0; t < l_seg; ++t)
                                     g[(i * d_channels + d) * l_seg + t] +=
                                         dc[(i * l_seg + t) * d_channels + d];
                     });
}

} // namespace crossalarm
