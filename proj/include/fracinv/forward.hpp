#pragma once

#include <optional>
#include <vector>

#include "fracinv/frac_operator.hpp"
#include "fracinv/grid.hpp"

namespace fracinv {

/// Polynomial absorption a(x, u) = sum_{k=1}^N a_k(x) u^k with coefficient
/// fields supported on the interior region (no constant term: a(x, 0) = 0).
class PolynomialNonlinearity {
public:
    /// N = 0, a == 0.
    static PolynomialNonlinearity none(GridPtr grid);
    /// Coefficients a_1, ..., a_N in that order; values outside the
    /// interior region are zeroed.
    static PolynomialNonlinearity from_coefficients(std::vector<ScalarField> coeffs);

    int degree() const { return static_cast<int>(coeffs_.size()); }
    const GridPtr& grid() const { return grid_; }
    /// Coefficient field a_k, 1 <= k <= degree().
    const ScalarField& coefficient(int k) const { return coeffs_[static_cast<std::size_t>(k - 1)]; }

    double eval(int node, double u) const;               // a(x_i, u)
    double derivative(int node, double u) const;         // d/du a(x_i, u)
    double second_derivative(int node, double u) const;  // d2/du2 a(x_i, u)

    /// Field of d/du a(x, 0) = a_1 (zero field when degree 0).
    ScalarField linearization_at_zero() const;

private:
    GridPtr grid_;
    std::vector<ScalarField> coeffs_;
};

struct EigenvalueEstimate {
    double lambda_min = 0.0;    // smallest-magnitude eigenvalue (signed)
    bool condition_holds = false;  // |lambda_min| > 1e-8 and factorization succeeded
    bool singular = false;
    int iterations = 0;
};

/// Estimates the eigenvalue of smallest magnitude of the interior block
/// A_omega + diag(a1) by inverse power iteration (shift 0, cap 200,
/// eigenvector tolerance 1e-10). The Dirichlet problem is well posed iff
/// the condition holds.
EigenvalueEstimate check_eigenvalue_condition(const NonlocalStiffness& op,
                                              const ScalarField& a1);

struct SolveReport {
    ScalarField solution;
    int newton_iterations = 0;
    std::vector<double> residual_history;  // interior sup-norm residuals
    double final_residual = 0.0;
    double lambda_min = 0.0;
    bool eigenvalue_checked = false;
    bool smallness_satisfied = false;

    explicit SolveReport(ScalarField u) : solution(std::move(u)) {}
};

/// Solves (A u)_i + a1_i u_i = F_i on the interior with u = f on the
/// exterior. Verifies the eigenvalue condition first and refines the
/// direct solve until the interior residual stagnates (always <= 1e-10).
SolveReport solve_linear(const NonlocalStiffness& op, const ScalarField& a1,
                         const ScalarField& source, const ScalarField& exterior_data);

struct ForwardProblem {
    const NonlocalStiffness* op = nullptr;
    PolynomialNonlinearity nonlinearity;
    ScalarField source;         // supported on the interior region
    ScalarField exterior_data;  // supported in w1
    double smallness_source = 0.1;    // sup-norm bound on the source
    double smallness_exterior = 0.1;  // sup-norm bound on the exterior data
    bool override_smallness = false;

    ForwardProblem(const NonlocalStiffness& stiffness, PolynomialNonlinearity a,
                   ScalarField F, ScalarField f)
        : op(&stiffness),
          nonlinearity(std::move(a)),
          source(std::move(F)),
          exterior_data(std::move(f)) {}
};

/// Newton iteration for (A u)_i + a(x_i, u_i) = F_i, u = f outside, started
/// from the solution of the problem linearized at u = 0. Throws on smallness
/// violation (unless overridden), on a singular Jacobian, and when 50
/// iterations do not reach a 1e-10 interior residual.
SolveReport solve_semilinear(const ForwardProblem& problem);

/// First linearization around a solution u0 of the f = 0 problem: solves
/// (A v)_i + da/du(x_i, u0_i) v_i = 0 with v = g outside.
ScalarField solve_first_linearization(const NonlocalStiffness& op,
                                      const PolynomialNonlinearity& a,
                                      const ScalarField& u0, const ScalarField& g);

/// Second linearization field w: (A w)_i + da/du(x_i, u0_i) w_i =
/// -d2a/du2(x_i, u0_i) v1_i^2 with zero exterior data.
ScalarField solve_second_linearization(const NonlocalStiffness& op,
                                       const PolynomialNonlinearity& a,
                                       const ScalarField& u0, const ScalarField& v1);

}  // namespace fracinv
