#include "deepsep/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

namespace deepsep {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    auto s = std::make_shared<Storage>();
    s->value.assign(shape_numel(shape), value);
    s->shape = std::move(shape);
    s->requires_grad = requires_grad;
    if (requires_grad) s->grad.assign(s->value.size(), 0.0);
    return Tensor(std::move(s));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("tensor shape " + shape_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
    }
    auto s = std::make_shared<Storage>();
    s->shape = std::move(shape);
    s->value = std::move(values);
    s->requires_grad = requires_grad;
    if (requires_grad) s->grad.assign(s->value.size(), 0.0);
    return Tensor(std::move(s));
}

Tensor::Storage& Tensor::storage() const {
    if (!impl_) throw std::logic_error("use of an undefined tensor");
    return *impl_;
}

const Shape& Tensor::shape() const { return storage().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return storage().value.size(); }

std::span<double> Tensor::data() { return storage().value; }
std::span<const double> Tensor::data() const { return storage().value; }
const std::vector<double>& Tensor::values() const { return storage().value; }

bool Tensor::requires_grad() const { return storage().requires_grad; }
bool Tensor::has_grad() const { return !storage().grad.empty() || storage().value.empty(); }

std::span<double> Tensor::grad() {
    if (!has_grad()) throw GraphError("tensor has no gradient buffer");
    return storage().grad;
}

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw GraphError("tensor has no gradient buffer");
    return storage().grad;
}

std::span<double> Tensor::ensure_grad() {
    auto& s = storage();
    if (s.grad.size() != s.value.size()) s.grad.assign(s.value.size(), 0.0);
    return s.grad;
}

void Tensor::zero_grad() {
    auto& s = storage();
    std::fill(s.grad.begin(), s.grad.end(), 0.0);
}

void Tensor::drop_grad() {
    auto& s = storage();
    s.grad.clear();
    s.grad.shrink_to_fit();
}

NodeId Tensor::node_id() const { return storage().node; }

double Tensor::item() const {
    const auto& s = storage();
    if (s.value.size() != 1) {
        throw ShapeError("item() on tensor of shape " + shape_string(s.shape));
    }
    return s.value[0];
}

Tensor Tensor::clone() const {
    auto s = std::make_shared<Storage>();
    const auto& src = storage();
    s->shape = src.shape;
    s->value = src.value;
    s->grad = src.grad;
    s->requires_grad = src.requires_grad;
    return Tensor(std::move(s));
}

Tensor Tensor::detach() const {
    return Tensor::from(shape(), values(), false);
}

const char* op_name(OpTag tag) {
    switch (tag) {
        case OpTag::Conv1dSame: return "conv1d_same";
        case OpTag::Concat: return "concat_channels";
        case OpTag::Relu: return "relu";
        case OpTag::Sigmoid: return "sigmoid";
        case OpTag::Mul: return "elementwise_mul";
        case OpTag::SubAbs: return "elementwise_sub_abs";
        case OpTag::Add: return "add";
        case OpTag::Mse: return "mse_loss";
    }
    return "?";
}

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

void Tape::record(OpTag tag, std::initializer_list<const Tensor*> inputs, Tensor& output,
                  std::function<void()> backward) {
    std::vector<Tensor> copies;
    copies.reserve(inputs.size());
    for (const auto* t : inputs) copies.push_back(*t);
    record(tag, std::span<const Tensor>(copies), output, std::move(backward));
}

void Tape::record(OpTag tag, std::span<const Tensor> inputs, Tensor& output,
                  std::function<void()> backward) {
    if (!recording_) return;
    if (consumed_) throw GraphError("cannot record onto a tape that has already run backward");
    bool any = false;
    std::vector<NodeId> ids;
    ids.reserve(inputs.size());
    for (const auto& t : inputs) {
        any = any || t.requires_grad();
        ids.push_back(t.node_id());
    }
    if (!any) return;
    auto& out = output.storage();
    out.requires_grad = true;
    out.node = static_cast<NodeId>(nodes_.size());
    out.tape = id_;
    nodes_.push_back(Node{tag, std::move(ids), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (consumed_) throw GraphError("backward already ran on this tape; run a new forward pass first");
    if (loss.numel() != 1) {
        throw GraphError("backward requires a scalar loss, got shape " + shape_string(loss.shape()));
    }
    consumed_ = true;
    visit_order_.clear();
    const auto& ls = loss.storage();
    if (ls.node == kNoNode) return;  // constant loss, nothing to propagate
    if (ls.tape != id_) throw GraphError("loss was not produced by this tape");

    Tensor seed = loss;
    seed.ensure_grad()[0] = 1.0;
    for (auto i = ls.node; i >= 0; --i) {
        auto& n = nodes_[static_cast<std::size_t>(i)];
        visit_order_.push_back(i);
        n.backward();
        n.backward = nullptr;  // releases saved intermediates
    }
}

}  // namespace deepsep
