#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dds/tensor.hpp"

namespace dds {

using NodeId = std::size_t;

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
   public:
    Var() = default;
    Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

    bool valid() const { return tape_ != nullptr; }
    NodeId id() const { return id_; }
    Tape& tape() const { return *tape_; }
    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }

   private:
    Tape* tape_ = nullptr;
    NodeId id_ = 0;
};

/// Called during backward with the gradient flowing into the node. The
/// function accumulates into its inputs via Tape::grad_buffer.
using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

/// Records operations in creation order. Since inputs must already exist when
/// a node is recorded, creation order is a topological order.
class Tape {
   public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad, std::string name = {});
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    /// Records an interior node. The node requires grad iff any input does;
    /// when none does, `fn` is dropped.
    Var record(Tensor value, std::vector<NodeId> inputs, BackwardFn fn,
               std::string op);

    std::size_t size() const { return nodes_.size(); }
    const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
    const std::vector<NodeId>& inputs(NodeId id) const {
        return nodes_.at(id).inputs;
    }
    const std::string& op(NodeId id) const { return nodes_.at(id).op; }
    const std::string& scope(NodeId id) const { return nodes_.at(id).scope; }

    /// Reverse sweep from a scalar node. Gradients of nodes used several
    /// times are summed. Throws ShapeError for a non-scalar loss.
    void backward(Var loss);

    /// Gradient of a node after backward(); nullptr when the node was not
    /// reached.
    const Tensor* grad(NodeId id) const;
    const Tensor* grad(Var v) const { return grad(v.id()); }

    /// Zero-initialized accumulation buffer, only valid during backward().
    Tensor& grad_buffer(NodeId id);

    void push_scope(const std::string& name);
    void pop_scope();
    const std::string& current_scope() const { return scope_; }

    /// True when `to` can be reached from `from` by walking input edges
    /// without entering a node for which `blocked` returns true.
    bool reachable(NodeId from, NodeId to,
                   const std::function<bool(NodeId)>& blocked = {}) const;

    /// Hash of every ReLU activation pattern seen so far. Two forward passes
    /// with the same signature take the same linear pieces.
    std::uint64_t kink_signature() const { return kink_signature_; }
    void mix_kink_signature(std::uint64_t h);

   private:
    struct Node {
        Tensor value;
        std::vector<NodeId> inputs;
        BackwardFn backward;
        std::string op;
        std::string scope;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::vector<std::optional<Tensor>> grads_;
    std::vector<std::size_t> scope_lengths_;
    std::string scope_;
    std::uint64_t kink_signature_ = 1469598103934665603ULL;
};

/// Pushes a name onto the tape's scope path for its lifetime.
class ScopeGuard {
   public:
    ScopeGuard(Tape& tape, const std::string& name) : tape_(tape) {
        tape_.push_scope(name);
    }
    ~ScopeGuard() { tape_.pop_scope(); }
    ScopeGuard(const ScopeGuard&) = delete;
    ScopeGuard& operator=(const ScopeGuard&) = delete;

   private:
    Tape& tape_;
};

}  // namespace dds
