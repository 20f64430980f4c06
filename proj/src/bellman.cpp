#include "safedp/bellman.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace safedp {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::string describe(const MdpModel& model, const char* what, std::size_t policy_index,
                     std::size_t state, double excess) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: policy #%zu at state %s exceeds by %.3g", what,
                  policy_index, model.states[state].c_str(), excess);
    return buf;
}

} // namespace

DecisionBlocks::DecisionBlocks(const MdpModel& model) {
    const auto h = idx(model.n_taboo());
    const auto m = idx(model.n_actions());
    reward.resize(h, m);
    forbidden_exit.resize(h, m);
    target_exit.resize(h, m);
    Q.reserve(model.n_actions());
    for (std::size_t u = 0; u < model.n_actions(); ++u) {
        Q.push_back(model.transitions[u].topLeftCorner(h, h));
        for (std::size_t i = 0; i < model.n_taboo(); ++i) {
            reward(idx(i), idx(u)) = model.rho(u, i);
            forbidden_exit(idx(i), idx(u)) = model.forbidden_exit(i, u);
            target_exit(idx(i), idx(u)) = model.target_exit(i, u);
        }
    }
}

GreedyStep bellman_sweep(const DecisionBlocks& blocks, const Matrix& stage_cost, const Vector& v) {
    const auto h = idx(blocks.n_taboo());
    if (v.size() != h || stage_cost.rows() != h || stage_cost.cols() != idx(blocks.n_actions()))
        throw DimensionMismatch("Bellman sweep arguments do not match the model");
    GreedyStep out{Vector::Constant(h, std::numeric_limits<double>::infinity()),
                   std::vector<std::size_t>(blocks.n_taboo(), 0)};
    for (std::size_t u = 0; u < blocks.n_actions(); ++u) {
        const Vector cost = stage_cost.col(idx(u)) + blocks.Q[u] * v;
        for (Eigen::Index i = 0; i < h; ++i) {
            const double best = out.value(i);
            if (cost(i) < best - tie_tol * (1.0 + std::abs(best)) || std::isinf(best)) {
                out.value(i) = cost(i);
                out.actions[static_cast<std::size_t>(i)] = u;
            }
        }
    }
    return out;
}

GreedyStep bellman_apply(const MdpModel& model, const Vector& v, const Matrix* offsets) {
    const DecisionBlocks blocks(model);
    if (!offsets)
        return bellman_sweep(blocks, blocks.reward, v);
    if (offsets->rows() != blocks.reward.rows() || offsets->cols() != blocks.reward.cols())
        throw DimensionMismatch("offset table has wrong shape");
    return bellman_sweep(blocks, blocks.reward + *offsets, v);
}

BellmanResult minimize_stage_cost(const MdpModel& model, const DecisionBlocks& blocks,
                                  const Matrix& stage_cost, const Vector& v0,
                                  const BellmanOptions& opts) {
    if (v0.size() != idx(blocks.n_taboo()))
        throw DimensionMismatch("initial iterate has wrong length");
    // Disallowed actions carry +inf cost and do not count toward the bound.
    const double scale = stage_cost.unaryExpr([](double x) { return std::isfinite(x) ? std::abs(x) : 0.0; })
                             .maxCoeff();
    const double bound = opts.divergence_factor * (1.0 + scale * static_cast<double>(blocks.n_taboo()));
    BellmanResult out;
    Vector v = v0;
    if (opts.record_trace)
        out.trace.push_back(v);
    for (std::size_t n = 0; n < opts.max_iter; ++n) {
        GreedyStep step = bellman_sweep(blocks, stage_cost, v);
        if (opts.record_trace)
            out.trace.push_back(step.value);
        if (!step.value.allFinite() || step.value.lpNorm<Eigen::Infinity>() > bound)
            throw Diverging("Bellman iterates exceed the divergence bound; no transient policy?");
        const double delta = (step.value - v).lpNorm<Eigen::Infinity>();
        v = std::move(step.value);
        if (delta <= opts.tol) {
            GreedyStep last = bellman_sweep(blocks, stage_cost, v);
            out.residual = (last.value - v).lpNorm<Eigen::Infinity>();
            out.value = std::move(v);
            out.actions = std::move(last.actions);
            out.policy = pure_policy(model, out.actions);
            out.iterations = n + 1;
            return out;
        }
    }
    throw MaxIterExceeded("value iteration did not converge", v, opts.max_iter);
}

BellmanResult value_iteration(const MdpModel& model, const Vector& v0, const BellmanOptions& opts) {
    const DecisionBlocks blocks(model);
    return minimize_stage_cost(model, blocks, blocks.reward, v0, opts);
}

BellmanResult safest_policy(const MdpModel& model, const Vector& s0, const BellmanOptions& opts) {
    const DecisionBlocks blocks(model);
    return minimize_stage_cost(model, blocks, blocks.forbidden_exit, s0, opts);
}

CertificateReport certify_supremum(const MdpModel& model, const Vector& vstar,
                                   const std::vector<Policy>& policies, double tol) {
    if (vstar.size() != idx(model.n_taboo()))
        throw DimensionMismatch("value vector has wrong length");
    CertificateReport report;
    const auto h = idx(model.n_taboo());
    for (std::size_t k = 0; k < policies.size(); ++k) {
        const Policy& pi = policies[k];
        const Matrix Q = induced_matrix(model, pi).topLeftCorner(h, h);
        const auto inputs = cost_inputs(model, pi);
        const Vector laplacian = vstar - Q * vstar;
        for (Eigen::Index i = 0; i < h; ++i)
            if (laplacian(i) > inputs.reward(i) + tol)
                report.membership_violations.push_back(
                    describe(model, "membership", k, static_cast<std::size_t>(i),
                             laplacian(i) - inputs.reward(i)));
        Vector v_pi;
        try {
            v_pi = value(model, pi);
        } catch (const NotTransient&) {
            continue;
        }
        for (Eigen::Index i = 0; i < h; ++i)
            if (vstar(i) > v_pi(i) + tol)
                report.dominance_violations.push_back(describe(
                    model, "dominance", k, static_cast<std::size_t>(i), vstar(i) - v_pi(i)));
    }
    return report;
}

} // namespace safedp
