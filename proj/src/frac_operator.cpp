#include "fracinv/frac_operator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fracinv {

namespace {

void check_order(double s) {
    if (!(s > 0.0) || !(s < 1.0)) {
        std::ostringstream os;
        os << "fractional order s = " << s << " must lie in (0, 1)";
        throw std::invalid_argument(os.str());
    }
}

// int_a^b z^(-1-2s) dz, a, b > 0.
double kernel_moment0(double a, double b, double s) {
    return (std::pow(a, -2.0 * s) - std::pow(b, -2.0 * s)) / (2.0 * s);
}

// int_a^b z^(-2s) dz. Stable through the logarithmic branch at s = 1/2:
// (b^e - a^e)/e = a^e * expm1(e*log(b/a))/e with e = 1 - 2s.
double kernel_moment1(double a, double b, double s) {
    double e = 1.0 - 2.0 * s;
    double lr = std::log(b / a);
    if (e == 0.0) return lr;
    return std::pow(a, e) * std::expm1(e * lr) / e;
}

}  // namespace

FracConstant frac_constant(double order) {
    check_order(order);
    double s = order;
    // |Gamma(-s)| = Gamma(1-s)/s for s in (0,1).
    double c = s * std::tgamma(0.5 + s) * std::pow(4.0, s) /
               (std::tgamma(1.0 - s) * std::sqrt(std::numbers::pi));
    return FracConstant{s, c};
}

double getoor_constant(double order) {
    check_order(order);
    double s = order;
    return std::pow(4.0, s) * std::tgamma(1.0 + s) * std::tgamma(0.5 + s) /
           std::sqrt(std::numbers::pi);
}

NonlocalStiffness NonlocalStiffness::assemble(GridPtr grid, double order) {
    check_order(order);
    if (static_cast<int>(grid->interior_nodes().size()) < 5) {
        throw std::invalid_argument(
            "assemble: fewer than 5 interior nodes; the singular window would cover omega");
    }
    const int n = grid->size();
    const double h = grid->spacing();
    const double L = grid->half_width();
    const double s = order;
    const double c = frac_constant(s).value;

    NonlocalStiffness op;
    op.grid_ = std::move(grid);
    op.order_ = s;
    op.constant_ = c;

    // Nodewise hat-function weights of the regular band. Cell m spans
    // [mh, (m+1)h]; the node at distance mh carries (m+1) - z/h, the node
    // at distance (m+1)h carries z/h - m.
    std::vector<double> jl(static_cast<std::size_t>(n), 0.0);
    std::vector<double> jr(static_cast<std::size_t>(n), 0.0);
    for (int m = 1; m <= n - 2; ++m) {
        double a = static_cast<double>(m) * h;
        double b = static_cast<double>(m + 1) * h;
        double i0 = kernel_moment0(a, b, s);
        double i1 = kernel_moment1(a, b, s) / h;
        jl[static_cast<std::size_t>(m)] = static_cast<double>(m + 1) * i0 - i1;
        jr[static_cast<std::size_t>(m)] = i1 - static_cast<double>(m) * i0;
    }

    const double singular = std::pow(h, -2.0 * s) / (2.0 - 2.0 * s);
    op.lag_weights_.assign(static_cast<std::size_t>(n), 0.0);
    op.lag_weights_[1] = c * (singular + jl[1]);
    for (int m = 2; m <= n - 2; ++m) {
        op.lag_weights_[static_cast<std::size_t>(m)] =
            c * (jr[static_cast<std::size_t>(m - 1)] + jl[static_cast<std::size_t>(m)]);
    }

    // The diagonal collects the full kernel mass seen by u_i: the damped
    // singular window plus the exact integral over h <= |z| < infinity.
    // The far tail t_i cancels the band truncation, so d is node
    // independent.
    const double diag = c * std::pow(h, -2.0 * s) * (1.0 / (1.0 - s) + 1.0 / s);

    op.tail_.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i <= n - 2; ++i) {
        double x = op.grid_->node(i);
        op.tail_[static_cast<std::size_t>(i)] =
            c * (std::pow(L - x, -2.0 * s) + std::pow(L + x, -2.0 * s)) / (2.0 * s);
    }

    op.dense_.setZero(n, n);
    for (int i = 1; i <= n - 2; ++i) {
        for (int j = 1; j <= n - 2; ++j) {
            op.dense_(i, j) = (i == j) ? diag : -op.lag_weights_[static_cast<std::size_t>(std::abs(i - j))];
        }
    }
    return op;
}

Eigen::MatrixXd NonlocalStiffness::block(const std::vector<int>& rows,
                                         const std::vector<int>& cols) const {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c2 = 0; c2 < cols.size(); ++c2) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c2)) =
                dense_(rows[r], cols[c2]);
        }
    }
    return out;
}

ScalarField NonlocalStiffness::apply(const ScalarField& u) const {
    if (u.grid() != grid_) {
        throw std::invalid_argument("apply: field grid does not match the operator grid");
    }
    Eigen::Map<const Eigen::VectorXd> uv(u.raw().data(), u.size());
    Eigen::VectorXd av = dense_ * uv;
    std::vector<double> out(av.data(), av.data() + av.size());
    return ScalarField(grid_, std::move(out));
}

}  // namespace fracinv
