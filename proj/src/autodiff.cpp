#include "dds/autodiff.hpp"

#include <cassert>

namespace dds {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::leaf(Tensor value, bool requires_grad, std::string name) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.op = name.empty() ? "leaf" : std::move(name);
    node.scope = scope_;
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<NodeId> inputs, BackwardFn fn,
                 std::string op) {
    Node node;
    node.value = std::move(value);
    for (NodeId in : inputs) {
        if (in >= nodes_.size()) {
            throw std::logic_error("tape input " + std::to_string(in) +
                                   " recorded after its consumer");
        }
        node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
    }
    node.inputs = std::move(inputs);
    if (node.requires_grad) node.backward = std::move(fn);
    node.op = std::move(op);
    node.scope = scope_;
    nodes_.push_back(std::move(node));
    return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
    if (&loss.tape() != this) throw std::logic_error("loss belongs to another tape");
    const Tensor& lv = value(loss.id());
    if (lv.size() != 1) {
        throw ShapeError("backward requires a scalar loss, got shape " +
                         lv.shape().str());
    }
    grads_.assign(nodes_.size(), std::nullopt);
    grads_[loss.id()] = Tensor(lv.shape(), 1);
    for (NodeId id = loss.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (!grads_[id] || !node.backward) continue;
        for (NodeId in : node.inputs) {
            // Creation order is the topological order; a violation means the
            // graph is cyclic.
            assert(in < id);
            if (in >= id) throw std::logic_error("cyclic tape detected");
        }
        node.backward(*this, *grads_[id]);
    }
}

const Tensor* Tape::grad(NodeId id) const {
    if (id >= grads_.size() || !grads_[id]) return nullptr;
    return &*grads_[id];
}

Tensor& Tape::grad_buffer(NodeId id) {
    auto& slot = grads_.at(id);
    if (!slot) slot = Tensor::zeros(nodes_[id].value.shape());
    return *slot;
}

void Tape::push_scope(const std::string& name) {
    scope_lengths_.push_back(scope_.size());
    if (!scope_.empty()) scope_ += '/';
    scope_ += name;
}

void Tape::pop_scope() {
    if (scope_lengths_.empty()) throw std::logic_error("scope stack underflow");
    scope_.resize(scope_lengths_.back());
    scope_lengths_.pop_back();
}

bool Tape::reachable(NodeId from, NodeId to,
                     const std::function<bool(NodeId)>& blocked) const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{from};
    while (!stack.empty()) {
        NodeId id = stack.back();
        stack.pop_back();
        if (seen[id]) continue;
        seen[id] = 1;
        if (id == to) return true;
        if (id != from && blocked && blocked(id)) continue;
        for (NodeId in : nodes_[id].inputs) stack.push_back(in);
    }
    return false;
}

void Tape::mix_kink_signature(std::uint64_t h) {
    kink_signature_ ^= h + 0x9e3779b97f4a7c15ULL + (kink_signature_ << 6) +
                       (kink_signature_ >> 2);
}

}  // namespace dds
