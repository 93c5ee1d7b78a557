#pragma once

// Dense tensors and a tape-based reverse-mode autodiff covering the
// operations the separator network needs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepsep {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class GraphError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class Tape;

using NodeId = std::int64_t;
inline constexpr NodeId kNoNode = -1;

/// Shared handle to a value buffer plus (optionally) its gradient.
/// Copying a Tensor aliases the same storage; use clone() for a deep copy.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const;
    std::size_t dim(std::size_t axis) const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;

    std::span<double> data();
    std::span<const double> data() const;
    const std::vector<double>& values() const;

    bool requires_grad() const;
    bool has_grad() const;
    std::span<double> grad();
    std::span<const double> grad() const;
    /// Allocates a zeroed gradient buffer when absent.
    std::span<double> ensure_grad();
    void zero_grad();
    void drop_grad();

    NodeId node_id() const;
    double item() const;

    Tensor clone() const;
    Tensor detach() const;

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Storage {
        Shape shape;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
        NodeId node = kNoNode;
        std::uint64_t tape = 0;
    };

    explicit Tensor(std::shared_ptr<Storage> impl) : impl_(std::move(impl)) {}
    Storage& storage() const;

    std::shared_ptr<Storage> impl_;

    friend class Tape;
};

enum class OpTag : std::uint8_t {
    Conv1dSame,
    Concat,
    Relu,
    Sigmoid,
    Mul,
    SubAbs,
    Add,
    Mse,
};

const char* op_name(OpTag tag);

/// Append-only record of a forward pass. Backward walks the nodes in exact
/// reverse order and may run once per recorded forward.
class Tape {
public:
    struct Node {
        OpTag tag;
        std::vector<NodeId> inputs;
        std::function<void()> backward;
    };

    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// A tape that records nothing; forward ops run but no graph is kept.
    static Tape inference() {
        Tape t;
        t.recording_ = false;
        return t;
    }
    Tape(Tape&&) = default;

    bool recording() const { return recording_; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(std::size_t i) const { return nodes_.at(i); }
    bool consumed() const { return consumed_; }

    /// Records an op producing `output`. `inputs` are the operand tensors;
    /// the node is skipped when none of them requires a gradient.
    void record(OpTag tag, std::initializer_list<const Tensor*> inputs, Tensor& output,
                std::function<void()> backward);
    void record(OpTag tag, std::span<const Tensor> inputs, Tensor& output,
                std::function<void()> backward);

    /// Seeds d(loss)/d(loss) = 1 and propagates to every leaf that requires
    /// a gradient. Gradients accumulate into existing buffers.
    void backward(const Tensor& loss);

    /// Visit order of the most recent backward pass (node ids).
    const std::vector<NodeId>& last_backward_order() const { return visit_order_; }

    /// Receives the inputs of non-smooth ops (ReLU) as they run.
    using Observer = std::function<void(OpTag, std::span<const double>)>;
    void set_observer(Observer observer) { observer_ = std::move(observer); }
    void observe(OpTag tag, std::span<const double> values) const {
        if (observer_) observer_(tag, values);
    }

private:
    std::uint64_t id_;
    std::vector<Node> nodes_;
    std::vector<NodeId> visit_order_;
    bool recording_ = true;
    bool consumed_ = false;
    Observer observer_;
};

// ---- differentiable operations -------------------------------------------

/// Same-length 1D cross-correlation with zero padding (K-1)/2 on each side.
/// input [B,Cin,L], weight [Cout,Cin,K] with K odd, bias [Cout].
Tensor conv1d_same(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias);

/// Concatenates [B,Ci,L] tensors along the channel axis in argument order.
Tensor concat_channels(Tape& tape, std::span<const Tensor> inputs);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor elementwise_mul(Tape& tape, const Tensor& a, const Tensor& b);
/// |c - v| elementwise for a scalar constant c.
Tensor elementwise_sub_abs(Tape& tape, double c, const Tensor& v);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
/// Mean of squared differences; returns a scalar tensor of shape [1].
Tensor mse_loss(Tape& tape, const Tensor& pred, const Tensor& target);

}  // namespace deepsep
