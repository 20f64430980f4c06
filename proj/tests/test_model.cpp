#include "support/ex1.hpp"

#include "safedp/model.hpp"

#include <doctest.h>

#include <algorithm>

using namespace safedp;
using namespace safedp::testing;

namespace {

const char* two_state_doc = R"({
  "states": ["x", "goal"],
  "actions": ["only"],
  "partition": {"taboo": ["x"], "target": ["goal"]},
  "transitions": [{"from": "x", "action": "only", "to": "goal", "p": 1.0}],
  "rewards": [{"state": "x", "action": "only", "rho": 2.5}]
})";

bool mentions(const ValidationReport& report, const std::string& text) {
    return std::any_of(report.begin(), report.end(),
                       [&](const Violation& v) { return v.message.find(text) != std::string::npos; });
}

} // namespace

TEST_CASE("EX1 loads with the expected partition") {
    const auto m = ex1();
    CHECK(m.partition.taboo == 3);
    CHECK(m.partition.forbidden == 1);
    CHECK(m.partition.target == 1);
    CHECK(validate_model(m).empty());
    CHECK(m.states == std::vector<std::string>{"a", "b", "c", "d", "e"});
    CHECK(m.p(m.state_index("b"), m.action_index("u2"), m.state_index("c")) == doctest::Approx(0.2));
    CHECK(m.forbidden_exit(0, 0) == doctest::Approx(0.4));
    CHECK(m.target_exit(0, 1) == doctest::Approx(0.1));
    // omitted rows of U and E become self-loops
    CHECK(m.p(3, 0, 3) == 1.0);
    CHECK(m.p(4, 1, 4) == 1.0);
}

TEST_CASE("states are reordered into H, U, E") {
    const auto m = load_model(R"({
      "states": ["goal", "bad", "x"],
      "actions": ["go"],
      "partition": {"taboo": ["x"], "forbidden": ["bad"], "target": ["goal"]},
      "transitions": [{"from": "x", "action": "go", "to": "goal", "p": 0.75},
                      {"from": "x", "action": "go", "to": "bad", "p": 0.25}]
    })");
    CHECK(m.states == std::vector<std::string>{"x", "bad", "goal"});
    CHECK(m.p(0, 0, 1) == 0.25);
    CHECK(m.p(0, 0, 2) == 0.75);
    CHECK(m.rho(0, 0) == 0.0);
}

TEST_CASE("validate_model reports a broken row sum") {
    auto m = ex1();
    m.transitions[0](0, 4) = 0.5; // (a,u1) now sums to 0.9
    const auto report = validate_model(m);
    REQUIRE(report.size() == 1);
    CHECK(report[0].message == "row (a,u1) sums to 0.9");
}

TEST_CASE("validate_model rejects reward on a target state") {
    auto m = ex1();
    m.rewards(0, 4) = 5.0;
    const auto report = validate_model(m);
    CHECK(mentions(report, "reward nonzero on target"));
}

TEST_CASE("validate_model rejects out-of-range entries and empty H") {
    auto m = ex1();
    m.transitions[1](1, 0) = -0.2;
    m.transitions[1](1, 2) = 1.2;
    CHECK(mentions(validate_model(m), "outside [0,1]"));

    MdpModel empty;
    empty.states = {"e"};
    empty.actions = {"u"};
    empty.partition = {0, 0, 1};
    empty.transitions = {Matrix::Identity(1, 1)};
    empty.rewards = Matrix::Zero(1, 1);
    CHECK(mentions(validate_model(empty), "H empty"));
}

TEST_CASE("load_model errors") {
    SUBCASE("missing target list") {
        try {
            load_model(R"({"states": ["x"], "actions": ["u"], "partition": {"taboo": ["x"]},
                           "transitions": [{"from": "x", "action": "u", "to": "x", "p": 1}]})");
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("E empty") != std::string::npos);
        }
    }
    SUBCASE("unknown action label") {
        try {
            load_model(R"({"states": ["x", "g"], "actions": ["u"],
                           "partition": {"taboo": ["x"], "target": ["g"]},
                           "transitions": [{"from": "x", "action": "jump", "to": "g", "p": 1}]})");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("jump") != std::string::npos);
        }
    }
    SUBCASE("malformed json") { CHECK_THROWS_AS(load_model("{"), ParseError); }
    SUBCASE("state in two blocks") {
        CHECK_THROWS_AS(load_model(R"({"states": ["x", "g"], "actions": ["u"],
                                       "partition": {"taboo": ["x", "g"], "target": ["g"]}})"),
                        Error);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_model_file("/nonexistent/model.json"), std::ios_base::failure); }
}

TEST_CASE("serialize_model round-trips") {
    const auto m = ex1();
    const auto back = load_model(serialize_model(m));
    CHECK(back.states == m.states);
    CHECK(back.actions == m.actions);
    for (std::size_t u = 0; u < m.n_actions(); ++u)
        CHECK(back.transitions[u].isApprox(m.transitions[u]));
    CHECK(back.rewards.isApprox(m.rewards));
}

TEST_CASE("induced_matrix on EX1") {
    const auto m = ex1();
    const Matrix P = induced_matrix(m, ex1_policy(m, "u1", "u2"));
    CHECK(sup_diff(P.row(1).transpose(), vec({0.8, 0, 0.2, 0, 0})) < 1e-15);

    Matrix probs = ex1_policy(m, "u1", "u1").probs();
    probs.row(1) << 0.5, 0.5;
    const Matrix Pm = induced_matrix(m, Policy(probs));
    CHECK(sup_diff(Pm.row(1).transpose(), vec({0.55, 0, 0.45, 0, 0})) < 1e-15);

    // state c has identical rows under both actions
    probs.row(2) << 0.3, 0.7;
    const Matrix Pc = induced_matrix(m, Policy(probs));
    CHECK(sup_diff(Pc.row(2).transpose(), m.transitions[0].row(2).transpose()) < 1e-15);
}

TEST_CASE("pure_policy from an assignment") {
    const auto m = ex1();
    const auto pi = ex1_policy(m, "u1", "u2");
    CHECK(pi.pure());
    CHECK(pi(1, 1) == 1.0);
    CHECK(pi(1, 0) == 0.0);
    CHECK(pi.action(0) == 0);
    CHECK(pi(3, 0) == 1.0);

    try {
        pure_policy(m, std::map<std::string, std::string>{{"a", "u1"}, {"b", "u2"}});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("\"c\"") != std::string::npos);
    }

    const auto single = load_model(two_state_doc);
    const auto only = pure_policy(single, std::map<std::string, std::string>{{"x", "only"}});
    CHECK(only.probs().isApprox(Matrix::Ones(2, 1)));
}

TEST_CASE("policy documents") {
    const auto m = ex1();
    const auto pi = load_policy_file(m, fixture("ex1_policy.json"));
    CHECK(pi.probs().isApprox(ex1_policy(m, "u1", "u2").probs()));
    CHECK(validate_policy(m, pi).empty());
    CHECK(load_policy(m, serialize_policy(m, pi)).probs().isApprox(pi.probs()));

    CHECK_THROWS_AS(load_policy(m, R"({"policy": [{"state": "a", "dist": {"u1": 1}}]})"), ParseError);
    CHECK_THROWS_AS(load_policy(m, R"({"policy": [{"state": "a", "dist": {"u1": 0.7}},
                                                  {"state": "b", "dist": {"u1": 1}},
                                                  {"state": "c", "dist": {"u2": 1}}]})"),
                    ValidationError);
    Matrix lopsided = pi.probs();
    lopsided(0, 0) = 0.7;
    CHECK_FALSE(validate_policy(m, Policy(lopsided)).empty());
}

TEST_CASE("mix and pure enumeration") {
    const auto m = ex1();
    const auto a = ex1_policy(m, "u1", "u1");
    const auto b = ex1_policy(m, "u2", "u2");
    const auto half = mix(a, b, 0.25);
    CHECK(half(0, 0) == doctest::Approx(0.25));
    CHECK_FALSE(half.pure());
    CHECK(pure_policy_count(m) == 8);
    CHECK(decode_pure(m, 0) == std::vector<std::size_t>{0, 0, 0});
    CHECK(decode_pure(m, 1) == std::vector<std::size_t>{1, 0, 0});
    CHECK(decode_pure(m, 6) == std::vector<std::size_t>{0, 1, 1});
}
