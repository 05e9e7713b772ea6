#pragma once

#include <Eigen/Dense>

#include "fracinv/grid.hpp"

namespace fracinv {

/// Normalizing constant of the 1-D fractional Laplacian kernel,
/// c = Gamma(1/2 + s) * 4^s / (|Gamma(-s)| * sqrt(pi)), evaluated through
/// |Gamma(-s)| = Gamma(1 - s) / s so only positive Gamma arguments appear.
struct FracConstant {
    double order = 0.0;  // s in (0, 1)
    double value = 0.0;  // c_{1,s} > 0
};

FracConstant frac_constant(double order);

/// Value of the operator applied to (1 - x^2)^s_+ inside the unit
/// interval: 4^s * Gamma(1 + s) * Gamma(1/2 + s) / Gamma(1/2). Equals 1 at
/// s = 1/2; used as the discretization benchmark.
double getoor_constant(double order);

/// Dense discrete fractional Laplacian on the truncated lattice, acting on
/// nodal values that vanish at the two endpoint nodes x = -L and x = +L
/// (fields are supported strictly inside the truncation by construction).
///
/// The action at a node x_i with |x_i| < L splits into three exactly
/// integrated parts:
///   - singular window |y - x_i| < h: quadratic-interpolant rule, giving
///     c * (2u_i - u_{i+1} - u_{i-1}) * h^{-2s} / (2 - 2s);
///   - regular band h <= |y - x_i|, |y| <= L: exact integration of the
///     piecewise-linear interpolant against |z|^{-1-2s}, via closed-form
///     antiderivatives (logarithmic branch at s = 1/2);
///   - far tail |y| > L: t_i * u_i with
///     t_i = c * ((L - x_i)^{-2s} + (L + x_i)^{-2s}) / (2s).
///
/// The resulting coupling between distinct inner nodes depends on the lag
/// |i - j| only, is symmetric, and is nonpositive off the diagonal with a
/// strictly dominant positive diagonal (M-matrix structure).
class NonlocalStiffness {
public:
    static NonlocalStiffness assemble(GridPtr grid, double order);

    const GridPtr& grid() const { return grid_; }
    double order() const { return order_; }
    double constant() const { return constant_; }

    /// Interaction weight at lag m >= 1; the off-diagonal matrix entry is
    /// -lag_weight(|i - j|).
    double lag_weight(int m) const { return lag_weights_[static_cast<std::size_t>(m)]; }
    /// Far-field correction t_i (zero at the endpoint nodes).
    double tail(int i) const { return tail_[static_cast<std::size_t>(i)]; }
    /// Assembled diagonal d_i.
    double diagonal(int i) const { return dense_(i, i); }

    /// Full dense action matrix; rows/columns of the endpoint nodes are
    /// zero.
    const Eigen::MatrixXd& matrix() const { return dense_; }

    /// Submatrix for the given row/column index sets.
    Eigen::MatrixXd block(const std::vector<int>& rows, const std::vector<int>& cols) const;

    /// Nodal values of the discrete operator applied to u; zero at the two
    /// endpoint nodes. Endpoint values of u are ignored (treated as zero).
    ScalarField apply(const ScalarField& u) const;

private:
    GridPtr grid_;
    double order_ = 0.0;
    double constant_ = 0.0;
    std::vector<double> lag_weights_;
    std::vector<double> tail_;
    Eigen::MatrixXd dense_;
};

}  // namespace fracinv
