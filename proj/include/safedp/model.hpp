#pragma once

#include "safedp/errors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace safedp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance for row-sum and simplex membership checks.
inline constexpr double prob_tol = 1e-12;

/**
 * Partition of the state space into the taboo set H, the forbidden set U and
 * the target set E. States are stored in canonical order: H first, then U,
 * then E, so each block is a contiguous index range.
 */
struct StatePartition {
    std::size_t taboo = 0;
    std::size_t forbidden = 0;
    std::size_t target = 0;

    std::size_t size() const noexcept { return taboo + forbidden + target; }
    std::size_t forbidden_begin() const noexcept { return taboo; }
    std::size_t target_begin() const noexcept { return taboo + forbidden; }
    bool in_taboo(std::size_t i) const noexcept { return i < taboo; }
    bool in_forbidden(std::size_t i) const noexcept {
        return i >= taboo && i < taboo + forbidden;
    }
    bool in_target(std::size_t i) const noexcept {
        return i >= taboo + forbidden && i < size();
    }
};

/**
 * Finite MDP with a stopping set. transitions[u](i, j) is the probability of
 * moving from state i to state j under action u; rewards(u, i) is the cost of
 * taking action u in state i.
 *
 * Construction does not validate; use validate_model() or load_model().
 */
struct MdpModel {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    StatePartition partition;
    std::vector<Matrix> transitions;
    Matrix rewards;

    std::size_t n_states() const noexcept { return states.size(); }
    std::size_t n_actions() const noexcept { return actions.size(); }
    std::size_t n_taboo() const noexcept { return partition.taboo; }

    double p(std::size_t i, std::size_t u, std::size_t j) const { return transitions[u](i, j); }
    double rho(std::size_t u, std::size_t i) const { return rewards(u, i); }

    /// One-step probability of leaving state i into U under action u.
    double forbidden_exit(std::size_t i, std::size_t u) const;
    /// One-step probability of leaving state i into E under action u.
    double target_exit(std::size_t i, std::size_t u) const;

    std::size_t state_index(const std::string& label) const;
    std::size_t action_index(const std::string& label) const;
};

/// Stationary randomized policy; one row per state, one column per action.
class Policy {
public:
    Policy() = default;
    explicit Policy(Matrix probs);

    const Matrix& probs() const noexcept { return probs_; }
    double operator()(std::size_t i, std::size_t u) const { return probs_(i, u); }
    bool pure() const noexcept { return pure_; }
    std::size_t n_states() const noexcept { return static_cast<std::size_t>(probs_.rows()); }
    std::size_t n_actions() const noexcept { return static_cast<std::size_t>(probs_.cols()); }

    /// Action of a pure row. Undefined for randomized rows.
    std::size_t action(std::size_t i) const;

private:
    Matrix probs_;
    bool pure_ = false;
};

struct Violation {
    std::string path;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate_model(const MdpModel& model);

/// Rows of every state must lie in the simplex.
ValidationReport validate_policy(const MdpModel& model, const Policy& policy);

/// Parses a model document without checking the numeric invariants.
MdpModel parse_model(const std::string& text);
/// Parses and validates a model document. Throws ParseError or ValidationError.
MdpModel load_model(const std::string& text);
/// Whole file as a string; throws std::ios_base::failure.
std::string read_text_file(const std::string& path);
MdpModel load_model_file(const std::string& path);
std::string serialize_model(const MdpModel& model);

/// Parses a policy document against a model. Rows of U and E default to action 0.
Policy load_policy(const MdpModel& model, const std::string& text);
Policy load_policy_file(const MdpModel& model, const std::string& path);
std::string serialize_policy(const MdpModel& model, const Policy& policy);

/// Pure policy from per-taboo-state action indices; U and E rows use action 0.
Policy pure_policy(const MdpModel& model, std::span<const std::size_t> taboo_actions);

/// Pure policy from state label to action label; every taboo state is required.
Policy pure_policy(const MdpModel& model, const std::map<std::string, std::string>& assignment);

/// Convex combination t * a + (1 - t) * b.
Policy mix(const Policy& a, const Policy& b, double t);

/// P(pi)(i, j) = sum_u pi(i, u) p(i, u, j).
Matrix induced_matrix(const MdpModel& model, const Policy& policy);

/// Number of pure policies |A|^|H|, saturated at SIZE_MAX.
std::size_t pure_policy_count(const MdpModel& model);

/// Decodes a mixed-radix policy code into per-taboo-state actions.
std::vector<std::size_t> decode_pure(const MdpModel& model, std::size_t code);

} // namespace safedp
