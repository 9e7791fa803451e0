#include <gtest/gtest.h>

#include "dds/autodiff.hpp"
#include "dds/ops.hpp"
#include "test_util.hpp"

using namespace dds;

TEST(Tape, GradientOfSumIsOnes) {
    Tape tape;
    Var x = tape.leaf(fixtures::random_tensor(Shape{2, 3, 4, 5}, 1), true);
    tape.backward(ops::sum(x));
    const Tensor* g = tape.grad(x);
    ASSERT_NE(g, nullptr);
    for (Real v : g->data()) EXPECT_EQ(v, 1);
}

TEST(Tape, BackwardRequiresScalar) {
    Tape tape;
    Var x = tape.leaf(Tensor::ones(Shape{1, 1, 2, 2}), true);
    EXPECT_THROW(tape.backward(ops::relu(x)), ShapeError);
}

TEST(Tape, SharedInputAccumulatesBranches) {
    Tape tape;
    Var w = tape.leaf(Tensor(Shape{1, 1, 1, 3}, {1, -2, 3}), true);
    Var loss = ops::sum(ops::add(ops::scale(w, 2), ops::scale(w, 5)));
    tape.backward(loss);
    for (Real v : tape.grad(w)->data()) EXPECT_EQ(v, 7);
}

TEST(Tape, ConstantsGetNoGradient) {
    Tape tape;
    Var c = tape.constant(Tensor::ones(Shape{1, 1, 1, 2}));
    Var x = tape.leaf(Tensor::ones(Shape{1, 1, 1, 2}), true);
    tape.backward(ops::sum(ops::add(c, x)));
    EXPECT_EQ(tape.grad(c), nullptr);
    ASSERT_NE(tape.grad(x), nullptr);
}

TEST(Tape, UnreachedLeafHasNoGradient) {
    Tape tape;
    Var x = tape.leaf(Tensor::ones(Shape{1, 1, 1, 2}), true);
    Var y = tape.leaf(Tensor::ones(Shape{1, 1, 1, 2}), true);
    tape.backward(ops::sum(x));
    EXPECT_EQ(tape.grad(y), nullptr);
}

TEST(Tape, CreationOrderIsTopological) {
    Tape tape;
    Var x = tape.leaf(Tensor::ones(Shape{1, 1, 2, 2}), true);
    Var y = ops::sum(ops::relu(ops::scale(x, 3)));
    for (NodeId id = 0; id < tape.size(); ++id) {
        for (NodeId in : tape.inputs(id)) EXPECT_LT(in, id);
    }
    EXPECT_EQ(tape.op(y.id()), "sum");
}

TEST(Tape, ScopesAreRecorded) {
    Tape tape;
    Var x = tape.leaf(Tensor::ones(Shape{1, 1, 1, 1}), true);
    Var y;
    {
        ScopeGuard outer(tape, "a");
        ScopeGuard inner(tape, "b");
        y = ops::relu(x);
    }
    EXPECT_EQ(tape.scope(y.id()), "a/b");
    EXPECT_EQ(tape.current_scope(), "");
}

TEST(Tape, ReachabilityHonoursBlockedNodes) {
    Tape tape;
    Var x = tape.leaf(Tensor::ones(Shape{1, 1, 1, 1}), true);
    Var mid = ops::relu(x);
    Var out = ops::scale(mid, 2);
    EXPECT_TRUE(tape.reachable(out.id(), x.id()));
    EXPECT_FALSE(tape.reachable(out.id(), x.id(),
                                [&](NodeId id) { return id == mid.id(); }));
    EXPECT_FALSE(tape.reachable(x.id(), out.id()));
}

TEST(Tape, GradientShapesMatchValues) {
    Tape tape;
    Var x = tape.leaf(fixtures::random_tensor(Shape{1, 2, 3, 3}, 3), true);
    Var w = tape.leaf(fixtures::random_tensor(Shape{4, 2, 3, 3}, 4), true);
    ConvSpec s;
    s.in_channels = 2;
    s.out_channels = 4;
    s.kernel_h = s.kernel_w = 3;
    s.padding = 1;
    tape.backward(ops::sum(ops::conv2d(x, w, std::nullopt, s)));
    EXPECT_EQ(tape.grad(x)->shape(), x.shape());
    EXPECT_EQ(tape.grad(w)->shape(), w.shape());
}
