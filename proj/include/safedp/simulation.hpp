#pragma once

#include "safedp/model.hpp"
#include "safedp/parallel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace safedp {

enum class Absorption { forbidden, target, truncated };

const char* to_string(Absorption a) noexcept;

/// Realized path until the first entry into U or E. states[0] is the start.
struct Trajectory {
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;
    std::vector<double> rewards; ///< one per action taken from a taboo state
    Absorption absorbed_in = Absorption::truncated;

    double total_reward() const;
};

inline constexpr std::size_t default_max_steps = 100000;

/// Samples one trajectory from the (seed, stream) random stream.
Trajectory simulate(const MdpModel& model, const Policy& policy, std::size_t start,
                    std::uint64_t seed, std::size_t max_steps = default_max_steps,
                    std::uint64_t stream = 0);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Mean and standard error (sample stdev / sqrt(n)) with pairwise sums.
McEstimate estimate(std::span<const double> samples);

double pairwise_sum(std::span<const double> values);

struct McReport {
    McEstimate safety; ///< fraction absorbed in U
    McEstimate reach;  ///< fraction absorbed in E
    McEstimate value;  ///< accumulated reward
    std::vector<McEstimate> visits; ///< visits per taboo state before absorption
    std::size_t truncated = 0;      ///< excluded from every estimate
};

/// Trajectory t uses stream t of the seed, so the result does not depend on exec.
McReport mc_estimates(const MdpModel& model, const Policy& policy, std::size_t start, std::size_t n,
                      std::uint64_t seed, std::size_t max_steps = default_max_steps,
                      Exec exec = Exec::parallel);

/// Bounds from all support paths of length at most depth.
struct PathBounds {
    double safety_lo = 0.0;      ///< mass absorbed in U by depth
    double safety_hi = 0.0;      ///< safety_lo + mass_remaining
    double value_lo = 0.0;       ///< expected reward collected by depth
    double mass_remaining = 0.0; ///< mass still in H at depth
    std::size_t nodes = 0;
};

inline constexpr std::size_t max_path_depth = 64;

/// Throws PathExplosion once more than node_budget path nodes are expanded.
PathBounds exhaustive_paths(const MdpModel& model, const Policy& policy, std::size_t start,
                            std::size_t depth, std::size_t node_budget = 1000000);

struct BruteForceResult {
    bool feasible = false;
    std::vector<std::size_t> actions;
    std::optional<Policy> policy;
    Vector value;
    Vector safety;
    std::size_t admissible_count = 0;
    std::size_t evaluated = 0;
};

/**
 * Best pure policy with S_pi <= p by exhaustive enumeration, minimizing the
 * sum of V_pi over H (lowest code on ties). Throws CapExceeded.
 */
BruteForceResult brute_force_constrained(const MdpModel& model, double p,
                                         std::size_t cap = 1000000);

} // namespace safedp
