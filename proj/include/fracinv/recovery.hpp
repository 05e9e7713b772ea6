#pragma once

#include <span>
#include <vector>

#include "fracinv/forward.hpp"
#include "fracinv/frac_operator.hpp"
#include "fracinv/grid.hpp"

namespace fracinv {

/// The reconstructions below consume interior solution fields, not raw
/// Cauchy pairs: equal exterior Cauchy data force equal solutions (unique
/// continuation), but that data-to-solution bridge is exponentially
/// ill-posed numerically, so the pipeline implements the constructive half
/// of each uniqueness argument and validates the bridge through round-trip
/// and discriminability checks.

/// Both evaluations of the subtracted-system determinant for the values
/// (u_0, ..., u_N): the pairwise product over all 0 <= l < m <= N and the
/// direct determinant of the N x N matrix with entries u_l^k - u_0^k.
struct VandermondeDet {
    double product = 0.0;
    double direct = 0.0;
};

VandermondeDet vandermonde_det(std::span<const double> values);

/// Source from the passive state: F_i = (A u0)_i + a(x_i, u0_i) on the
/// interior nodes, zero elsewhere.
ScalarField recover_source_passive(const NonlocalStiffness& op, const ScalarField& u0,
                                   const PolynomialNonlinearity& a);

struct LinearRecovery {
    ScalarField a1;
    ScalarField source;
    std::vector<int> unmasked;   // interior nodes with a reliable quotient
    double masked_fraction = 0.0;
};

/// Two-measurement linear reconstruction from the active and passive
/// states sharing the same unknown pair: v = u - u0 solves the homogeneous
/// equation, so a1 = -(A v)/v where v is meaningfully away from zero, and
/// the source follows from the passive equation. Nodes with |v| below
/// 1e-3 of its interior sup are masked.
LinearRecovery recover_linear_two(const NonlocalStiffness& op, const ScalarField& u,
                                  const ScalarField& u0);

struct RecoveryReport {
    int degree = 0;
    std::vector<ScalarField> coefficients;  // a_1 .. a_N, zero off omega
    ScalarField source;
    ScalarField determinant;  // pairwise-gap product per interior node
    ScalarField condition;    // inf-norm condition of the scaled local system
    std::vector<int> unmasked;
    double masked_fraction = 0.0;
    double noise_level = 0.0;

    RecoveryReport(GridPtr grid, int n)
        : degree(n),
          coefficients(static_cast<std::size_t>(n), ScalarField(grid)),
          source(grid),
          determinant(grid),
          condition(std::move(grid)) {}
};

/// Pointwise (N+1)-measurement reconstruction: at every interior node the
/// N+1 interior equations
///   sum_k a_k u_l^k - F = -(A u_l),   l = 0..N,
/// are reduced against the first equation and solved as an N x N system
/// whose determinant is the pairwise product of solution gaps. Nodes where
/// that product degenerates relative to the local gap amplitude are
/// masked. The solution list is canonicalized internally, so the output is
/// independent of input order.
RecoveryReport recover_polynomial(const NonlocalStiffness& op,
                                  const std::vector<ScalarField>& solutions, int degree);

struct QuadraticRecovery {
    ScalarField a2;
    ScalarField source;
    double consistency = 0.0;  // sup gap between the two source evaluations
    std::vector<int> unmasked;
    double masked_fraction = 0.0;
};

/// Two-measurement quadratic reconstruction under the sign hypotheses
/// (active input <= 0 and nontrivial, both states <= 0 as the comparison
/// principle guarantees): a2 = -(A(u - u0)) / (u^2 - u0^2) away from the
/// degenerate set, source from the passive equation, with the active
/// equation as a consistency check.
QuadraticRecovery recover_quadratic_two(const NonlocalStiffness& op, const ScalarField& u,
                                        const ScalarField& u0);

struct RungeResult {
    ScalarField exterior_data;          // combined w1 datum
    std::vector<double> coefficients;   // hat coefficients actually used
    double residual = 0.0;              // discrete L2(omega) distance
};

/// Least-squares approximation of an interior target by solutions of the
/// homogeneous problem driven from w1: the basis is the hat function at
/// each of the first `dofs` w1 nodes.
RungeResult runge_approximate(const NonlocalStiffness& op, const ScalarField& a1,
                              const ScalarField& target, int dofs);

/// Discrete second-linearization identity: h * sum_omega [(A + da/du(x,u0))
/// w_diff] * v2, which vanishes when the two nonlinearities behind w_diff
/// share their second derivative at u0 and stays away from zero for a
/// distinguishable difference and generic v2. v1 is the shared first
/// linearization (the trivial v1 == 0 forces a zero identity value).
double verify_second_order_identity(const NonlocalStiffness& op,
                                    const PolynomialNonlinearity& a, const ScalarField& u0,
                                    const ScalarField& v1, const ScalarField& v2,
                                    const ScalarField& w_diff);

}  // namespace fracinv
