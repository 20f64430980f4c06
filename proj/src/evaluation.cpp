#include "safedp/evaluation.hpp"

#include <algorithm>

namespace safedp {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

} // namespace

PolicyCostInputs cost_inputs(const MdpModel& model, const Policy& policy) {
    if (policy.n_states() != model.n_states() || policy.n_actions() != model.n_actions())
        throw DimensionMismatch("policy shape does not match the model");
    const auto h = idx(model.n_taboo());
    PolicyCostInputs out{Vector::Zero(h), Vector::Zero(h), Vector::Zero(h)};
    for (std::size_t i = 0; i < model.n_taboo(); ++i)
        for (std::size_t u = 0; u < model.n_actions(); ++u) {
            const double w = policy(i, u);
            if (w == 0.0)
                continue;
            out.reward(idx(i)) += w * model.rho(u, i);
            out.forbidden_exit(idx(i)) += w * model.forbidden_exit(i, u);
            out.target_exit(idx(i)) += w * model.target_exit(i, u);
        }
    return out;
}

PolicyEvaluation evaluate(const MdpModel& model, const Policy& policy) {
    auto chain = induced_chain(model, policy);
    PolicyEvaluation out;
    out.inputs = cost_inputs(model, policy);
    out.value = chain.G * out.inputs.reward;
    out.safety = chain.G * out.inputs.forbidden_exit;
    out.reach = chain.G * out.inputs.target_exit;
    out.Q = std::move(chain.blocks.Q);
    out.G = std::move(chain.G);
    return out;
}

Vector value(const MdpModel& model, const Policy& policy) { return evaluate(model, policy).value; }

Vector safety(const MdpModel& model, const Policy& policy) { return evaluate(model, policy).safety; }

Vector reach(const MdpModel& model, const Policy& policy) { return evaluate(model, policy).reach; }

IterativeResult iterate_affine(const Matrix& Q, const Vector& b, Vector x0, const IterOptions& opts) {
    if (x0.size() != b.size() || Q.rows() != b.size())
        throw DimensionMismatch("initial iterate has wrong length");
    Vector x = std::move(x0);
    for (std::size_t n = 0; n < opts.max_iter; ++n) {
        Vector next = b + Q * x;
        const double step = (next - x).lpNorm<Eigen::Infinity>();
        if (step <= opts.tol)
            return {std::move(next), n};
        x = std::move(next);
    }
    throw MaxIterExceeded("affine iteration did not converge", x, opts.max_iter);
}

IterativeResult value_iterative(const MdpModel& model, const Policy& policy, const Vector& v0,
                                const IterOptions& opts) {
    const auto chain = induced_chain(model, policy);
    return iterate_affine(chain.blocks.Q, cost_inputs(model, policy).reward, v0, opts);
}

IterativeResult safety_iterative(const MdpModel& model, const Policy& policy, const Vector& s0,
                                 const IterOptions& opts) {
    const auto chain = induced_chain(model, policy);
    return iterate_affine(chain.blocks.Q, cost_inputs(model, policy).forbidden_exit, s0, opts);
}

double set_safety(const Vector& safety_h, std::span<const std::size_t> subset) {
    if (subset.empty())
        throw DimensionMismatch("set safety of an empty set");
    double worst = 0.0;
    for (std::size_t j : subset) {
        if (j >= static_cast<std::size_t>(safety_h.size()))
            throw DimensionMismatch("subset index outside the taboo set");
        worst = std::max(worst, safety_h(idx(j)));
    }
    return worst;
}

Vector extend_value(const MdpModel& model, const Vector& value_h) {
    Vector out = Vector::Zero(idx(model.n_states()));
    out.head(value_h.size()) = value_h;
    return out;
}

Vector extend_safety(const MdpModel& model, const Vector& safety_h) {
    Vector out = Vector::Zero(idx(model.n_states()));
    out.head(safety_h.size()) = safety_h;
    out.segment(idx(model.partition.forbidden_begin()), idx(model.partition.forbidden)).setOnes();
    return out;
}

Vector extend_reach(const MdpModel& model, const Vector& reach_h) {
    Vector out = Vector::Zero(idx(model.n_states()));
    out.head(reach_h.size()) = reach_h;
    out.segment(idx(model.partition.target_begin()), idx(model.partition.target)).setOnes();
    return out;
}

} // namespace safedp
