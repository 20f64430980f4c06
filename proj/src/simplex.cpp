#include "safedp/simplex.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace safedp {

namespace {

constexpr double eps = 1e-11;
constexpr std::size_t max_pivots = 200000;

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

/**
 * Tableau rows 0..m-1 hold the constraints with the right-hand side in the
 * last column. The objective is kept as a separate reduced-cost row
 * d_j = c_B B^-1 a_j - c_j, so a column can enter when d_j < -eps.
 */
class Tableau {
public:
    Tableau(Matrix body, std::vector<std::size_t> basis)
        : t_(std::move(body)), basis_(std::move(basis)) {}

    Eigen::Index rows() const { return t_.rows(); }
    Eigen::Index cols() const { return t_.cols() - 1; }
    double rhs(Eigen::Index r) const { return t_(r, t_.cols() - 1); }
    const std::vector<std::size_t>& basis() const { return basis_; }
    Matrix& data() { return t_; }

    /// Reduced costs and objective value for a cost vector over all columns.
    void price(const Vector& cost) {
        d_ = -cost;
        value_ = 0.0;
        for (Eigen::Index r = 0; r < rows(); ++r) {
            const double cb = cost(idx(basis_[static_cast<std::size_t>(r)]));
            if (cb != 0.0) {
                d_ += cb * t_.row(r).head(cols()).transpose();
                value_ += cb * rhs(r);
            }
        }
    }

    double value() const { return value_; }

    void pivot(Eigen::Index r, Eigen::Index col) {
        const double pv = t_(r, col);
        if (std::abs(pv) < min_pivot)
            throw NumericalInstability("simplex pivot below 1e-9");
        t_.row(r) /= pv;
        for (Eigen::Index k = 0; k < rows(); ++k)
            if (k != r && t_(k, col) != 0.0)
                t_.row(k) -= t_(k, col) * t_.row(r);
        const double dc = d_(col);
        if (dc != 0.0) {
            d_ -= dc * t_.row(r).head(cols()).transpose();
            value_ -= dc * rhs(r);
        }
        basis_[static_cast<std::size_t>(r)] = static_cast<std::size_t>(col);
        ++pivots_;
        if (pivots_ > max_pivots)
            throw NumericalInstability("simplex pivot limit reached");
    }

    /// Runs Bland's rule over columns [0, allowed). Throws Unbounded.
    void optimize(Eigen::Index allowed) {
        for (;;) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < allowed; ++j)
                if (d_(j) < -eps) {
                    enter = j;
                    break;
                }
            if (enter < 0)
                return;
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < rows(); ++r) {
                const double a = t_(r, enter);
                if (a <= eps)
                    continue;
                const double ratio = rhs(r) / a;
                if (leave < 0 || ratio < best - eps * (1.0 + std::abs(best)) ||
                    (std::abs(ratio - best) <= eps * (1.0 + std::abs(best)) &&
                     basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
                    best = ratio;
                    leave = r;
                }
            }
            if (leave < 0)
                throw Unbounded("linear program is unbounded");
            pivot(leave, enter);
        }
    }

    std::size_t pivots() const { return pivots_; }

private:
    Matrix t_;
    std::vector<std::size_t> basis_;
    Vector d_;
    double value_ = 0.0;
    std::size_t pivots_ = 0;
};

std::string column_name(const LinearProgram& lp, std::size_t col) {
    const std::size_t n = lp.n_vars();
    const std::size_t m = lp.n_rows();
    if (col < n)
        return col < lp.variable_names.size() ? lp.variable_names[col] : "x" + std::to_string(col);
    if (col < n + m)
        return "s" + std::to_string(col - n);
    return "a" + std::to_string(col - n - m);
}

} // namespace

LpResult solve_simplex(const LinearProgram& lp) {
    const std::size_t n = lp.n_vars();
    const std::size_t m = lp.n_rows();
    if (static_cast<std::size_t>(lp.A.rows()) != m || static_cast<std::size_t>(lp.A.cols()) != n)
        throw DimensionMismatch("constraint matrix does not match b and c");

    std::vector<std::size_t> negative_rows;
    for (std::size_t r = 0; r < m; ++r)
        if (lp.b(idx(r)) < 0.0)
            negative_rows.push_back(r);
    const std::size_t k = negative_rows.size();
    const std::size_t total = n + m + k;

    // [A | I | art | b], rows with b < 0 negated and given an artificial.
    Matrix body = Matrix::Zero(idx(m), idx(total + 1));
    std::vector<std::size_t> basis(m);
    body.leftCols(idx(n)) = lp.A;
    body.block(0, idx(n), idx(m), idx(m)).setIdentity();
    body.col(idx(total)) = lp.b;
    for (std::size_t r = 0; r < m; ++r)
        basis[r] = n + r;
    for (std::size_t a = 0; a < k; ++a) {
        const auto r = idx(negative_rows[a]);
        body.row(r) *= -1.0;
        body(r, idx(n + m + a)) = 1.0;
        basis[static_cast<std::size_t>(r)] = n + m + a;
    }
    Tableau tab(std::move(body), std::move(basis));

    if (k > 0) {
        Vector phase1 = Vector::Zero(idx(total));
        phase1.tail(idx(k)).setConstant(-1.0);
        tab.price(phase1);
        tab.optimize(idx(total));
        if (tab.value() < -1e-9)
            throw LpInfeasible("linear program is infeasible (phase one optimum " +
                               std::to_string(tab.value()) + ")");
        // Pivot zero-level artificials out where a real column allows it.
        for (Eigen::Index r = 0; r < tab.rows(); ++r) {
            if (tab.basis()[static_cast<std::size_t>(r)] < n + m)
                continue;
            for (Eigen::Index j = 0; j < idx(n + m); ++j)
                if (std::abs(tab.data()(r, j)) > min_pivot) {
                    tab.pivot(r, j);
                    break;
                }
        }
    }

    Vector cost = Vector::Zero(idx(total));
    cost.head(idx(n)) = lp.c;
    tab.price(cost);
    tab.optimize(idx(n + m));

    LpResult out;
    out.x = Vector::Zero(idx(n));
    for (Eigen::Index r = 0; r < tab.rows(); ++r)
        if (const std::size_t col = tab.basis()[static_cast<std::size_t>(r)]; col < n)
            out.x(idx(col)) = tab.rhs(r);
    out.objective = lp.c.dot(out.x);
    out.basis = tab.basis();
    out.pivots = tab.pivots();
    return out;
}

void write_tableau(std::ostream& out, const LinearProgram& lp, const LpResult* result) {
    const auto num = [](double x) { return x == 0.0 ? 0.0 : x; }; // no "-0"
    const std::size_t n = lp.n_vars();
    const std::size_t m = lp.n_rows();
    const auto old_precision = out.precision(12);
    out << "# lp tableau\n";
    out << "vars " << n << " rows " << m << "\n";
    out << "names";
    for (std::size_t j = 0; j < n; ++j)
        out << ' ' << column_name(lp, j);
    out << "\nobjective max";
    for (std::size_t j = 0; j < n; ++j)
        out << ' ' << num(lp.c(idx(j)));
    out << "\n";
    for (std::size_t r = 0; r < m; ++r) {
        out << "row " << (r < lp.row_names.size() ? lp.row_names[r] : std::to_string(r));
        for (std::size_t j = 0; j < n; ++j)
            out << ' ' << num(lp.A(idx(r), idx(j)));
        out << " <= " << num(lp.b(idx(r))) << "\n";
    }
    out << "basis";
    if (result) {
        for (std::size_t col : result->basis)
            out << ' ' << column_name(lp, col);
        out << "\nsolution";
        for (std::size_t j = 0; j < n; ++j)
            out << ' ' << num(result->x(idx(j)));
        out << "\nvalue " << num(result->objective) << "\n";
    } else {
        std::size_t artificial = 0;
        for (std::size_t r = 0; r < m; ++r)
            out << ' '
                << (lp.b(idx(r)) < 0.0 ? column_name(lp, n + m + artificial++)
                                       : column_name(lp, n + r));
        out << "\n";
    }
    out.precision(old_precision);
}

} // namespace safedp
