#include "support/ex1.hpp"
#include "support/random_models.hpp"

#include "safedp/bellman.hpp"

#include <doctest.h>

#include <limits>

using namespace safedp;
using namespace safedp::testing;

namespace {

MdpModel geometric(double stay, double rho) {
    MdpModel m;
    m.states = {"x", "goal"};
    m.actions = {"u"};
    m.partition = {1, 0, 1};
    Matrix t = Matrix::Identity(2, 2);
    t.row(0) << stay, 1.0 - stay;
    m.transitions = {t};
    m.rewards = Matrix::Zero(1, 2);
    m.rewards(0, 0) = rho;
    return m;
}

} // namespace

TEST_CASE("bellman_apply on EX1") {
    const auto m = ex1();
    const auto step = bellman_apply(m, vec({1, 2, 3}));
    CHECK(sup_diff(step.value, vec({1, 3.4, 4})) < 1e-15);
    CHECK(step.actions[1] == 1);
    CHECK(step.actions[0] == 0); // tie at a goes to the lower index
    CHECK(sup_diff(bellman_apply(m, Vector::Zero(3)).value, vec({1, 2, 3})) == 0.0);

    const auto g = geometric(0.5, 1.0);
    const auto one = bellman_apply(g, vec({4}));
    CHECK(one.value(0) == 3.0);
}

TEST_CASE("bellman_apply with offsets") {
    const auto m = ex1();
    Matrix offsets = Matrix::Zero(3, 2);
    offsets(1, 1) = 5.0;
    const auto step = bellman_apply(m, vec({1, 2, 3}), &offsets);
    CHECK(step.actions[1] == 0);
    CHECK(step.value(1) == doctest::Approx(2 + 0.3 + 2.1));
}

TEST_CASE("value iteration reproduces the EX1 iterates") {
    const auto m = ex1();
    const auto res = value_iteration(m, Vector::Zero(3), {.tol = 1e-12, .record_trace = true});
    REQUIRE(res.trace.size() >= 5);
    // 0.2 * 3 is not exact in binary; allow four ulps at |V| <= 4
    const double ulps = 4 * std::numeric_limits<double>::epsilon() * 4.0;
    CHECK(sup_diff(res.trace[1], vec({1, 2, 3})) == 0.0);
    CHECK(sup_diff(res.trace[2], vec({1, 3.4, 4})) <= ulps);
    CHECK(sup_diff(res.trace[3], vec({1, 3.6, 4})) <= ulps);
    CHECK(res.trace[4] == res.trace[3]);
    CHECK(sup_diff(res.value, vec({1, 3.6, 4})) < 1e-12);
    CHECK(res.actions == std::vector<std::size_t>{0, 1, 0});
    CHECK(res.iterations == 4);
}

TEST_CASE("value iteration edge cases") {
    auto zero = ex1();
    zero.rewards.setZero();
    CHECK(value_iteration(zero, vec({5, 1, 2})).value.lpNorm<Eigen::Infinity>() < 1e-9);

    const auto g = value_iteration(geometric(0.5, 1.0), Vector::Zero(1));
    CHECK(g.value(0) == doctest::Approx(2.0).epsilon(1e-9));

    CHECK_THROWS_AS(value_iteration(ex1(), Vector::Zero(3), {.max_iter = 2}), MaxIterExceeded);
    CHECK_THROWS_AS(value_iteration(ex1(), Vector::Zero(2)), DimensionMismatch);
}

TEST_CASE("value iteration diverges on a recurrent policy class") {
    MdpModel m = geometric(1.0, 1.0); // staying forever accumulates cost
    CHECK_THROWS_AS(value_iteration(m, Vector::Zero(1), {.divergence_factor = 10.0}), Diverging);
}

TEST_CASE("safest policy") {
    const auto m = ex1();
    const auto s = safest_policy(m, Vector::Zero(3));
    CHECK(sup_diff(s.value, Vector::Constant(3, 0.4)) < 1e-12);
    CHECK(s.actions[0] == 0);

    CHECK(safest_policy(geometric(0.5, 1.0), Vector::Zero(1)).value.isZero());

    // two taboo states: action "risky" at x can reach bad, "calm" never does
    MdpModel two;
    two.states = {"x", "y", "bad", "goal"};
    two.actions = {"risky", "calm"};
    two.partition = {2, 1, 1};
    Matrix risky = Matrix::Identity(4, 4), calm = Matrix::Identity(4, 4);
    risky.row(0) << 0, 0.5, 0.5, 0;
    risky.row(1) << 0.2, 0, 0.3, 0.5;
    calm.row(0) << 0, 0.5, 0, 0.5;
    calm.row(1) << 0.5, 0, 0, 0.5;
    two.transitions = {risky, calm};
    two.rewards = Matrix::Zero(2, 4);
    two.rewards.leftCols(2).setOnes();
    const auto safe = safest_policy(two, Vector::Zero(2));
    CHECK(safe.value.isZero());
    CHECK(safe.actions == std::vector<std::size_t>{1, 1});
}

TEST_CASE("certify_supremum") {
    const auto m = ex1();
    const std::vector<Policy> sample{ex1_policy(m, "u1", "u1"), ex1_policy(m, "u1", "u2")};
    CHECK(certify_supremum(m, vec({1, 3.6, 4}), sample).ok());

    const auto inflated = certify_supremum(m, vec({2, 4.6, 5}), sample);
    CHECK_FALSE(inflated.membership_violations.empty());

    const auto g = geometric(0.5, 1.0);
    const Policy only(Matrix::Ones(2, 1));
    CHECK(certify_supremum(g, vec({2}), {only}).ok());
    CHECK_FALSE(certify_supremum(g, vec({2.1}), {only}).ok());
}

TEST_CASE("value iteration matches the pure-policy minimum on random models") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 30; ++k) {
        const auto m = random_model(rng);
        const auto res = value_iteration(m, Vector::Zero(static_cast<Eigen::Index>(m.n_taboo())));
        Vector best = Vector::Constant(static_cast<Eigen::Index>(m.n_taboo()),
                                       std::numeric_limits<double>::infinity());
        for (std::size_t code = 0; code < pure_policy_count(m); ++code)
            best = best.cwiseMin(value(m, pure_policy(m, decode_pure(m, code))));
        CHECK(sup_diff(res.value, best) <= 1e-8);
        CHECK(sup_diff(value(m, res.policy), best) <= 1e-8);
    }
}
