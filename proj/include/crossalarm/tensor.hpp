#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "crossalarm/errors.hpp"

// Minimal dense tensor with tape-based reverse-mode autodiff. 64-bit floats,
// row-major contiguous storage, copy-on-slice. Ops record onto the thread's
// active Tape when one is in scope; outside a tape scope they compute values
// only and retain no graph. Reductions use a fixed left-to-right order so the
// forward pass is bit-deterministic.

namespace crossalarm {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// NaN/Inf screening of op outputs. Defaults to on in debug builds.
bool debug_checks();
void set_debug_checks(bool on);

class Tensor;

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;   // empty until touched by a backward pass
    bool requires_grad = false;
    bool grad_live = false;     // received contributions in the current pass
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;     // pushes this->grad into parents
    const char* op = "leaf";

    std::size_t numel() const { return value.size(); }
    // Returns the grad buffer, zero-initialised on first touch this pass.
    double* grad_buf();
    void drop_grad();
};

} // namespace detail

// Ordered record of op nodes; inputs always precede the ops that consume
// them, so one reverse sweep from a scalar loss computes all gradients.
// One tape is active per thread at a time (Tape::Scope); independent tapes
// on different threads share no state.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    class Scope {
    public:
        explicit Scope(Tape& t);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* prev_;
    };

    static Tape* active();

    // Reverse sweep from `loss` (scalar). Gradients accumulate into every
    // reachable requires_grad leaf; calling backward again without zeroing
    // the leaves adds another full contribution.
    void backward(const Tensor& loss);

    void record(std::shared_ptr<detail::Node> n) { nodes_.push_back(std::move(n)); }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    std::vector<std::shared_ptr<detail::Node>> nodes_;
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor from(Shape shape, std::vector<double> data);
    static Tensor scalar(double v);
    // Leaf that participates in autodiff (model parameter).
    static Tensor param(Shape shape, std::vector<double> data);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t numel() const { return node_->value.size(); }

    const std::vector<double>& data() const { return node_->value; }
    // Direct mutation is for leaf setup and optimizer steps; mutating an op
    // output invalidates any recorded graph that consumed it.
    std::vector<double>& mutable_data() { return node_->value; }

    double item() const;
    double at(std::initializer_list<std::size_t> idx) const;

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return node_ && !node_->grad.empty(); }
    const std::vector<double>& grad() const;
    void zero_grad();

    // Deep copy of values (no graph participation).
    Tensor clone_detached() const;

    // Internal: shared graph node. Exposed for ops and the optimizer.
    std::shared_ptr<detail::Node> node_;

    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
};

// ---- op surface -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

// add supports equal shapes, a row-broadcast vector matching the last axis,
// or a scalar on the right; sub/mul require equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor mean(const Tensor& a);   // full reduction to a scalar

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
Tensor transpose(const Tensor& a);                    // 2-D
Tensor reshape(const Tensor& a, Shape shape);

Tensor softmax(const Tensor& a, std::size_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  std::size_t axis, double eps = 1e-5);

Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a);

// Structural ops used by the model.
//   segment_series: T x D -> n_seg x D x L_seg, out[i,d,t] = x[i*L_seg+t, d]
//   pair_concat:    L x D x d -> floor(L/2) x D x 2d, adjacent segment pairs
//   assemble_segments: (n_seg*D) x L_seg -> (n_seg*L_seg) x D, time-major
Tensor segment_series(const Tensor& x, std::size_t l_seg);
Tensor pair_concat(const Tensor& z);
Tensor assemble_segments(const Tensor& x, std::size_t n_seg,
                         std::size_t d_channels, std::size_t l_seg);

} // namespace crossalarm
