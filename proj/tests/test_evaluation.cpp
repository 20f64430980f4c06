#include "support/ex1.hpp"
#include "support/random_models.hpp"

#include "safedp/evaluation.hpp"

#include <doctest.h>

#include <array>

using namespace safedp;
using namespace safedp::testing;

namespace {

/// One taboo state x with a self-loop of probability `stay`, exits split between bad and goal.
MdpModel loop_model(double stay, double to_bad, double rho) {
    MdpModel m;
    m.states = {"x", "bad", "goal"};
    m.actions = {"u"};
    m.partition = {1, 1, 1};
    Matrix t = Matrix::Identity(3, 3);
    t.row(0) << stay, to_bad, 1.0 - stay - to_bad;
    m.transitions = {t};
    m.rewards = Matrix::Zero(1, 3);
    m.rewards(0, 0) = rho;
    return m;
}

/// EX1 without a forbidden state: d is dropped and its mass goes to e.
MdpModel ex1_without_u() {
    const auto full = ex1();
    MdpModel m;
    m.states = {"a", "b", "c", "e"};
    m.actions = full.actions;
    m.partition = {3, 0, 1};
    for (const auto& t : full.transitions) {
        Matrix r = Matrix::Zero(4, 4);
        for (int i : {0, 1, 2, 4})
            for (int j : {0, 1, 2, 3, 4}) {
                const int ri = i == 4 ? 3 : i;
                const int rj = j >= 3 ? 3 : j;
                r(ri, rj) += t(i, j);
            }
        m.transitions.push_back(r);
    }
    m.rewards = Matrix::Zero(2, 4);
    m.rewards.leftCols(3) = full.rewards.leftCols(3);
    return m;
}

} // namespace

TEST_CASE("cost inputs on EX1") {
    const auto m = ex1();
    const auto in = cost_inputs(m, ex1_policy(m, "u1", "u2"));
    CHECK(sup_diff(in.reward, vec({1, 2, 3})) == 0.0);
    CHECK(sup_diff(in.forbidden_exit, vec({0.4, 0, 0})) < 1e-15);
    CHECK(sup_diff(in.target_exit, vec({0.6, 0, 0})) < 1e-15);
    const auto free = cost_inputs(ex1_without_u(), ex1_policy(ex1_without_u(), "u2", "u1"));
    CHECK(free.forbidden_exit.isZero());
}

TEST_CASE("value on EX1") {
    const auto m = ex1();
    CHECK(sup_diff(value(m, ex1_policy(m, "u1", "u2")), vec({1, 3.6, 4})) < 1e-12);
    CHECK(sup_diff(value(m, ex1_policy(m, "u1", "u1")), vec({1, 5.1, 4})) < 1e-12);
    auto zero = m;
    zero.rewards.setZero();
    CHECK(value(zero, ex1_policy(zero, "u2", "u1")).isZero());
}

TEST_CASE("safety and reach for the four pure combinations") {
    const auto m = ex1();
    for (const char* a : {"u1", "u2"})
        for (const char* b : {"u1", "u2"}) {
            const auto pi = ex1_policy(m, a, b);
            const double pad = std::string(a) == "u1" ? 0.4 : 0.9;
            CHECK(sup_diff(safety(m, pi), Vector::Constant(3, pad)) < 1e-12);
            CHECK(sup_diff(reach(m, pi), Vector::Constant(3, 1.0 - pad)) < 1e-12);
        }
    const auto free = ex1_without_u();
    const auto pi = ex1_policy(free, "u2", "u2");
    CHECK(safety(free, pi).isZero());
    CHECK(sup_diff(reach(free, pi), Vector::Ones(3)) < 1e-12);
}

TEST_CASE("iterative evaluation") {
    const auto m = ex1();
    const auto pi = ex1_policy(m, "u1", "u2");
    const auto v = value_iterative(m, pi, Vector::Zero(3), {.tol = 1e-12});
    CHECK(sup_diff(v.values, vec({1, 3.6, 4})) < 1e-12);
    CHECK(v.iterations <= 4);

    const auto fixed = value_iterative(m, pi, vec({1, 3.6, 4}));
    CHECK(fixed.iterations == 0);

    const auto loop = loop_model(0.5, 0.25, 1.0);
    const Policy only(Matrix::Ones(3, 1));
    const auto g = value_iterative(loop, only, Vector::Zero(1), {.tol = 1e-6});
    CHECK(std::abs(g.values(0) - 2.0) <= 1e-6);
    CHECK(g.iterations >= 19);
    CHECK(g.iterations <= 23);

    const auto s = safety_iterative(m, pi, Vector::Zero(3), {.tol = 1e-12});
    CHECK(sup_diff(s.values, Vector::Constant(3, 0.4)) < 1e-12);
    CHECK(s.iterations <= 4);

    const auto sl = safety_iterative(loop, only, Vector::Zero(1), {.tol = 1e-9});
    CHECK(std::abs(sl.values(0) - 0.5) <= 1e-6);

    // Q = 0: one step from S0 = 1 lands exactly on K
    const auto direct = loop_model(0.0, 0.3, 1.0);
    const auto one = safety_iterative(direct, only, Vector::Ones(1), {.tol = 1e-12});
    CHECK(one.values(0) == 0.3);
    CHECK(one.iterations <= 2);
}

TEST_CASE("set_safety") {
    const Vector s = vec({0.1, 0.9, 0.2});
    const std::array<std::size_t, 3> all{0, 1, 2};
    const std::array<std::size_t, 1> second{2};
    CHECK(set_safety(s, all) == 0.9);
    CHECK(set_safety(s, second) == 0.2);
    const std::array<std::size_t, 2> ab{0, 1};
    CHECK(set_safety(Vector::Constant(3, 0.4), ab) == 0.4);
}

TEST_CASE("extensions carry the boundary conventions") {
    const auto m = ex1();
    const auto e = evaluate(m, ex1_policy(m, "u1", "u2"));
    CHECK(sup_diff(extend_safety(m, e.safety), vec({0.4, 0.4, 0.4, 1, 0})) < 1e-12);
    CHECK(sup_diff(extend_reach(m, e.reach), vec({0.6, 0.6, 0.6, 0, 1})) < 1e-12);
    CHECK(sup_diff(extend_value(m, e.value), vec({1, 3.6, 4, 0, 0})) < 1e-12);
}

TEST_CASE("closed forms agree with iteration on random models") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 40; ++k) {
        const auto m = random_model(rng);
        const auto pi = random_policy(m, rng);
        const auto e = evaluate(m, pi);
        CHECK(sup_diff(e.safety + e.reach, Vector::Ones(e.safety.size())) <= 1e-10);
        CHECK(sup_diff(value_iterative(m, pi, Vector::Zero(e.value.size()), {.tol = 1e-13}).values, e.value) <= 1e-9);
        CHECK(sup_diff(safety_iterative(m, pi, Vector::Zero(e.value.size()), {.tol = 1e-13}).values, e.safety) <= 1e-9);
        CHECK(e.inputs.forbidden_exit.minCoeff() >= 0.0);
        CHECK((e.inputs.forbidden_exit + e.inputs.target_exit).maxCoeff() <= 1.0 + 1e-12);
    }
}
