#include "safedp/chain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace safedp {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_initial(const MdpModel& model, const Vector& initial) {
    if (static_cast<std::size_t>(initial.size()) != model.n_states())
        throw DimensionMismatch("initial distribution has wrong length");
}

} // namespace

BlockDecomposition decompose(const Matrix& P, const StatePartition& partition) {
    const auto n = idx(partition.size());
    if (P.rows() != n || P.cols() != n)
        throw DimensionMismatch("matrix does not match the partition");
    const auto h = idx(partition.taboo);
    const auto u = idx(partition.forbidden);
    const auto e = idx(partition.target);
    BlockDecomposition out;
    out.Q = P.topLeftCorner(h, h);
    out.PHU = P.block(0, h, h, u);
    out.PHE = P.block(0, h + u, h, e);
    out.boundary_rows = P.bottomRows(u + e);
    return out;
}

TransienceCheck check_transient(const Matrix& Q) {
    const auto h = Q.rows();
    if (h == 0)
        return {true, 0.0};
    constexpr int max_steps = 10000;
    constexpr int window = 32;
    Vector x = Vector::Constant(h, 1.0 / static_cast<double>(h));
    // Log growth rates of the normalized iterates; the radius is their
    // geometric mean over a trailing window so periodic classes settle.
    std::vector<double> log_growth;
    log_growth.reserve(max_steps);
    double radius = 0.0;
    for (int step = 0; step < max_steps; ++step) {
        Vector y = Q * x;
        const double norm = y.lpNorm<Eigen::Infinity>();
        if (norm == 0.0)
            return {true, 0.0}; // nilpotent
        log_growth.push_back(std::log(norm / x.lpNorm<Eigen::Infinity>()));
        x = y / norm;
        if (log_growth.size() >= 2 * window) {
            const auto tail = log_growth.end() - window;
            double mean = 0.0;
            for (auto it = tail; it != log_growth.end(); ++it)
                mean += *it;
            mean /= window;
            const double prev = radius;
            radius = std::exp(mean);
            if (std::abs(radius - prev) < 1e-13 * std::max(1.0, radius))
                break;
        }
    }
    if (log_growth.size() < 2 * window) {
        double mean = 0.0;
        for (double g : log_growth)
            mean += g;
        radius = std::exp(mean / static_cast<double>(log_growth.size()));
    }
    return {radius < transience_threshold, radius};
}

Matrix green(const Matrix& Q) {
    const auto check = check_transient(Q);
    if (!check.transient) {
        std::ostringstream msg;
        msg << "chain is not transient on the taboo set (spectral radius " << check.spectral_radius
            << ")";
        throw NotTransient(msg.str(), check.spectral_radius);
    }
    const auto h = Q.rows();
    const Matrix I = Matrix::Identity(h, h);
    Matrix G = (I - Q).partialPivLu().solve(I);
    return G;
}

Matrix green_series(const Matrix& Q, double tol, std::size_t max_terms) {
    const auto h = Q.rows();
    Matrix sum = Matrix::Identity(h, h);
    Matrix power = Matrix::Identity(h, h);
    for (std::size_t k = 1; k < max_terms; ++k) {
        power = power * Q;
        sum += power;
        if (power.cwiseAbs().rowwise().sum().maxCoeff() < tol)
            return sum;
    }
    throw NotTransient("Neumann series did not converge", 1.0);
}

InducedChain induced_chain(const MdpModel& model, const Policy& policy) {
    InducedChain chain;
    chain.P = induced_matrix(model, policy);
    chain.blocks = decompose(chain.P, model.partition);
    chain.G = green(chain.blocks.Q);
    return chain;
}

Vector occupation(const MdpModel& model, const Policy& policy, const Vector& initial) {
    require_initial(model, initial);
    const auto chain = induced_chain(model, policy);
    const auto h = idx(model.n_taboo());
    return (initial.head(h).transpose() * chain.G).transpose();
}

Vector hitting(const MdpModel& model, const Policy& policy, const Vector& initial) {
    require_initial(model, initial);
    const auto chain = induced_chain(model, policy);
    const auto h = idx(model.n_taboo());
    const auto u = idx(model.partition.forbidden);
    const auto e = idx(model.partition.target);
    const Vector gamma = (initial.head(h).transpose() * chain.G).transpose();
    Vector out(u + e);
    out.head(u) = (gamma.transpose() * chain.blocks.PHU).transpose();
    out.tail(e) = (gamma.transpose() * chain.blocks.PHE).transpose();
    out += initial.tail(u + e);
    return out;
}

double evolution_residual(const Vector& initial, const Vector& occupation_h,
                          const Vector& hitting_ue, const Matrix& P) {
    const auto n = P.rows();
    if (P.cols() != n || initial.size() != n || occupation_h.size() + hitting_ue.size() != n)
        throw DimensionMismatch("evolution residual arguments have inconsistent sizes");
    const auto h = occupation_h.size();
    Vector gamma = Vector::Zero(n);
    gamma.head(h) = occupation_h;
    Vector lambda = Vector::Zero(n);
    lambda.tail(hitting_ue.size()) = hitting_ue;
    const Vector generator = (gamma.transpose() * P).transpose() - gamma;
    return (lambda - initial - generator).lpNorm<Eigen::Infinity>();
}

} // namespace safedp
