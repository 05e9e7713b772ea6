#include "fracinv/recovery.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fracinv {

namespace {

constexpr double kMaskCoefficient = 1e-3;
constexpr double kSignSlack = 1e-12;

// Dense LU with partial pivoting on a tiny system; ties on the pivot
// magnitude keep the smallest row index, so results do not depend on how
// the equations were generated.
class SmallLU {
public:
    explicit SmallLU(std::vector<double> a, int n) : n_(n), a_(std::move(a)), perm_(n) {
        std::iota(perm_.begin(), perm_.end(), 0);
        det_ = 1.0;
        for (int k = 0; k < n_; ++k) {
            int pivot = k;
            double best = std::abs(at(k, k));
            for (int r = k + 1; r < n_; ++r) {
                double cand = std::abs(at(r, k));
                if (cand > best) {
                    best = cand;
                    pivot = r;
                }
            }
            if (pivot != k) {
                for (int c = 0; c < n_; ++c) std::swap(at(pivot, c), at(k, c));
                std::swap(perm_[static_cast<std::size_t>(pivot)], perm_[static_cast<std::size_t>(k)]);
                det_ = -det_;
            }
            double p = at(k, k);
            det_ *= p;
            if (p == 0.0) {
                singular_ = true;
                det_ = 0.0;
                return;
            }
            for (int r = k + 1; r < n_; ++r) {
                double m = at(r, k) / p;
                at(r, k) = m;
                for (int c = k + 1; c < n_; ++c) at(r, c) -= m * at(k, c);
            }
        }
    }

    bool singular() const { return singular_; }
    double determinant() const { return det_; }

    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x(static_cast<std::size_t>(n_));
        for (int r = 0; r < n_; ++r) x[static_cast<std::size_t>(r)] = b[static_cast<std::size_t>(perm_[static_cast<std::size_t>(r)])];
        for (int r = 1; r < n_; ++r) {
            for (int c = 0; c < r; ++c) x[static_cast<std::size_t>(r)] -= at(r, c) * x[static_cast<std::size_t>(c)];
        }
        for (int r = n_ - 1; r >= 0; --r) {
            for (int c = r + 1; c < n_; ++c) x[static_cast<std::size_t>(r)] -= at(r, c) * x[static_cast<std::size_t>(c)];
            x[static_cast<std::size_t>(r)] /= at(r, r);
        }
        return x;
    }

private:
    double& at(int r, int c) { return a_[static_cast<std::size_t>(r * n_ + c)]; }
    double at(int r, int c) const { return a_[static_cast<std::size_t>(r * n_ + c)]; }

    int n_;
    std::vector<double> a_;
    std::vector<int> perm_;
    double det_ = 0.0;
    bool singular_ = false;
};

// Infinity-norm condition estimate of a tiny matrix via its explicit
// inverse.
double condition_inf(const std::vector<double>& a, const SmallLU& lu, int n) {
    if (lu.singular()) return std::numeric_limits<double>::infinity();
    double norm_a = 0.0;
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int c = 0; c < n; ++c) s += std::abs(a[static_cast<std::size_t>(r * n + c)]);
        norm_a = std::max(norm_a, s);
    }
    double norm_inv = 0.0;
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    std::vector<double> rowsum(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n; ++c) {
        e[static_cast<std::size_t>(c)] = 1.0;
        std::vector<double> col = lu.solve(e);
        e[static_cast<std::size_t>(c)] = 0.0;
        for (int r = 0; r < n; ++r) rowsum[static_cast<std::size_t>(r)] += std::abs(col[static_cast<std::size_t>(r)]);
    }
    for (int r = 0; r < n; ++r) norm_inv = std::max(norm_inv, rowsum[static_cast<std::size_t>(r)]);
    return norm_a * norm_inv;
}

void require_grid(const NonlocalStiffness& op, const ScalarField& f, const char* where) {
    if (f.grid() != op.grid()) {
        throw std::invalid_argument(std::string(where) + ": field grid mismatch");
    }
}

}  // namespace

VandermondeDet vandermonde_det(std::span<const double> values) {
    const int count = static_cast<int>(values.size());
    if (count < 2) {
        throw std::invalid_argument("vandermonde_det: need at least two values");
    }
    const int n = count - 1;
    VandermondeDet out;
    out.product = 1.0;
    for (int l = 0; l < count; ++l) {
        for (int m = l + 1; m < count; ++m) {
            out.product *= values[static_cast<std::size_t>(m)] - values[static_cast<std::size_t>(l)];
        }
    }
    std::vector<double> u(static_cast<std::size_t>(n * n));
    for (int l = 1; l <= n; ++l) {
        double pl = 1.0;
        double p0 = 1.0;
        for (int k = 1; k <= n; ++k) {
            pl *= values[static_cast<std::size_t>(l)];
            p0 *= values[0];
            u[static_cast<std::size_t>((l - 1) * n + (k - 1))] = pl - p0;
        }
    }
    SmallLU lu(std::move(u), n);
    out.direct = lu.determinant();
    return out;
}

ScalarField recover_source_passive(const NonlocalStiffness& op, const ScalarField& u0,
                                   const PolynomialNonlinearity& a) {
    require_grid(op, u0, "recover_source_passive");
    if (a.grid() != op.grid()) {
        throw std::invalid_argument("recover_source_passive: nonlinearity grid mismatch");
    }
    ScalarField au = op.apply(u0);
    ScalarField source(op.grid());
    for (int i : op.grid()->interior_nodes()) source[i] = au[i] + a.eval(i, u0[i]);
    return source;
}

LinearRecovery recover_linear_two(const NonlocalStiffness& op, const ScalarField& u,
                                  const ScalarField& u0) {
    require_grid(op, u, "recover_linear_two");
    require_grid(op, u0, "recover_linear_two");
    const auto& omega = op.grid()->interior_nodes();

    ScalarField v = u - u0;
    double vsup = 0.0;
    for (int i : omega) vsup = std::max(vsup, std::abs(v[i]));
    if (!(vsup > 0.0)) {
        throw std::invalid_argument(
            "recover_linear_two: active and passive states coincide on omega (f must not vanish)");
    }

    ScalarField av = op.apply(v);
    ScalarField au0 = op.apply(u0);
    LinearRecovery rec{ScalarField(op.grid()), ScalarField(op.grid()), {}, 0.0};
    const double threshold = kMaskCoefficient * vsup;
    for (int i : omega) {
        if (std::abs(v[i]) < threshold) continue;
        double a1 = -av[i] / v[i];
        rec.a1[i] = a1;
        rec.source[i] = au0[i] + a1 * u0[i];
        rec.unmasked.push_back(i);
    }
    rec.masked_fraction =
        1.0 - static_cast<double>(rec.unmasked.size()) / static_cast<double>(omega.size());
    return rec;
}

RecoveryReport recover_polynomial(const NonlocalStiffness& op,
                                  const std::vector<ScalarField>& solutions, int degree) {
    if (degree < 1) {
        throw std::invalid_argument("recover_polynomial: degree must be >= 1");
    }
    if (static_cast<int>(solutions.size()) < degree + 1) {
        std::ostringstream os;
        os << "recover_polynomial: got " << solutions.size() << " solutions, need " << degree + 1;
        throw std::invalid_argument(os.str());
    }
    if (static_cast<int>(solutions.size()) != degree + 1) {
        throw std::invalid_argument("recover_polynomial: expected exactly degree + 1 solutions");
    }
    for (const auto& s : solutions) require_grid(op, s, "recover_polynomial");

    const auto& omega = op.grid()->interior_nodes();
    const int count = degree + 1;
    const int n = degree;
    const int pairs = degree * (degree + 1) / 2;

    // Canonical processing order: lexicographic in the interior values.
    // Permuting the input list then changes nothing downstream.
    std::vector<int> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    auto lex_less = [&](int a, int b) {
        for (int i : omega) {
            if (solutions[static_cast<std::size_t>(a)][i] != solutions[static_cast<std::size_t>(b)][i]) {
                return solutions[static_cast<std::size_t>(a)][i] < solutions[static_cast<std::size_t>(b)][i];
            }
        }
        return false;
    };
    std::stable_sort(order.begin(), order.end(), lex_less);
    bool all_equal = true;
    for (int l = 0; l + 1 < count && all_equal; ++l) {
        if (lex_less(order[static_cast<std::size_t>(l)], order[static_cast<std::size_t>(l + 1)]) ||
            lex_less(order[static_cast<std::size_t>(l + 1)], order[static_cast<std::size_t>(l)])) {
            all_equal = false;
        }
    }
    if (all_equal) {
        throw std::invalid_argument("recover_polynomial: all solutions are identical on omega");
    }

    std::vector<ScalarField> applied;
    applied.reserve(static_cast<std::size_t>(count));
    for (int l = 0; l < count; ++l) applied.push_back(op.apply(solutions[static_cast<std::size_t>(order[static_cast<std::size_t>(l)])]));

    RecoveryReport report(op.grid(), degree);

    // Pass 1: per-node gap amplitude and its interior maximum.
    std::vector<double> amp(static_cast<std::size_t>(op.grid()->size()), 0.0);
    double global_amp = 0.0;
    for (int i : omega) {
        double a = 0.0;
        for (int l = 0; l < count; ++l) {
            for (int m = l + 1; m < count; ++m) {
                a = std::max(a, std::abs(solutions[static_cast<std::size_t>(order[static_cast<std::size_t>(m)])][i] -
                                          solutions[static_cast<std::size_t>(order[static_cast<std::size_t>(l)])][i]));
            }
        }
        amp[static_cast<std::size_t>(i)] = a;
        global_amp = std::max(global_amp, a);
    }
    if (!(global_amp > 0.0)) {
        throw std::invalid_argument("recover_polynomial: all solutions are identical on omega");
    }

    std::vector<double> vals(static_cast<std::size_t>(count));
    for (int i : omega) {
        for (int l = 0; l < count; ++l) {
            vals[static_cast<std::size_t>(l)] = solutions[static_cast<std::size_t>(order[static_cast<std::size_t>(l)])][i];
        }
        double det = 1.0;
        for (int l = 0; l < count; ++l) {
            for (int m = l + 1; m < count; ++m) det *= vals[static_cast<std::size_t>(m)] - vals[static_cast<std::size_t>(l)];
        }
        report.determinant[i] = det;

        const double a = amp[static_cast<std::size_t>(i)];
        bool masked = a < kMaskCoefficient * global_amp ||
                      std::abs(det) < kMaskCoefficient * std::pow(a, pairs);
        if (masked) {
            report.condition[i] = std::numeric_limits<double>::infinity();
            continue;
        }

        // Reduced system in the column-scaled power basis: unknown y_k =
        // a_k * amp^k keeps the matrix entries O(1).
        std::vector<double> mat(static_cast<std::size_t>(n * n));
        std::vector<double> rhs(static_cast<std::size_t>(n));
        for (int l = 1; l <= n; ++l) {
            double pl = 1.0;
            double p0 = 1.0;
            double scale = 1.0;
            for (int k = 1; k <= n; ++k) {
                pl *= vals[static_cast<std::size_t>(l)];
                p0 *= vals[0];
                scale *= a;
                mat[static_cast<std::size_t>((l - 1) * n + (k - 1))] = (pl - p0) / scale;
            }
            rhs[static_cast<std::size_t>(l - 1)] = -(applied[static_cast<std::size_t>(l)][i] - applied[0][i]);
        }
        std::vector<double> mat_copy = mat;
        SmallLU lu(std::move(mat), n);
        if (lu.singular()) {
            report.condition[i] = std::numeric_limits<double>::infinity();
            continue;
        }
        report.condition[i] = condition_inf(mat_copy, lu, n);
        std::vector<double> y = lu.solve(rhs);

        double f = applied[0][i];
        double scale = 1.0;
        double p0 = 1.0;
        for (int k = 1; k <= n; ++k) {
            scale *= a;
            p0 *= vals[0];
            double ak = y[static_cast<std::size_t>(k - 1)] / scale;
            report.coefficients[static_cast<std::size_t>(k - 1)][i] = ak;
            f += ak * p0;
        }
        report.source[i] = f;
        report.unmasked.push_back(i);
    }

    report.masked_fraction =
        1.0 - static_cast<double>(report.unmasked.size()) / static_cast<double>(omega.size());
    return report;
}

QuadraticRecovery recover_quadratic_two(const NonlocalStiffness& op, const ScalarField& u,
                                        const ScalarField& u0) {
    require_grid(op, u, "recover_quadratic_two");
    require_grid(op, u0, "recover_quadratic_two");
    const auto& omega = op.grid()->interior_nodes();

    for (int j : op.grid()->exterior_nodes()) {
        if (u0[j] != 0.0) {
            throw std::invalid_argument(
                "recover_quadratic_two: passive state carries nonzero exterior data");
        }
        if (u[j] > kSignSlack) {
            throw std::invalid_argument(
                "recover_quadratic_two: exterior data is not nonpositive (hypothesis violation)");
        }
    }
    for (int i : omega) {
        if (u[i] > kSignSlack || u0[i] > kSignSlack) {
            throw std::invalid_argument(
                "recover_quadratic_two: states are not nonpositive on omega (hypothesis "
                "violation)");
        }
    }

    ScalarField v = u - u0;
    double gap_sup = 0.0;
    double sum_sup = 0.0;
    for (int i : omega) {
        gap_sup = std::max(gap_sup, std::abs(v[i]));
        sum_sup = std::max(sum_sup, std::abs(u[i] + u0[i]));
    }
    if (!(gap_sup > 0.0)) {
        throw std::invalid_argument(
            "recover_quadratic_two: active and passive states coincide (f must not vanish)");
    }

    ScalarField av = op.apply(v);
    ScalarField au0 = op.apply(u0);
    ScalarField au = op.apply(u);
    QuadraticRecovery rec{ScalarField(op.grid()), ScalarField(op.grid()), 0.0, {}, 0.0};
    for (int i : omega) {
        bool masked = std::abs(v[i]) < kMaskCoefficient * gap_sup ||
                      std::abs(u[i] + u0[i]) < kMaskCoefficient * sum_sup;
        if (masked) continue;
        double denom = u[i] * u[i] - u0[i] * u0[i];
        double a2 = -av[i] / denom;
        rec.a2[i] = a2;
        rec.source[i] = au0[i] + a2 * u0[i] * u0[i];
        double active = au[i] + a2 * u[i] * u[i];
        rec.consistency = std::max(rec.consistency, std::abs(active - rec.source[i]));
        rec.unmasked.push_back(i);
    }
    rec.masked_fraction =
        1.0 - static_cast<double>(rec.unmasked.size()) / static_cast<double>(omega.size());
    return rec;
}

RungeResult runge_approximate(const NonlocalStiffness& op, const ScalarField& a1,
                              const ScalarField& target, int dofs) {
    require_grid(op, a1, "runge_approximate");
    require_grid(op, target, "runge_approximate");
    const auto& w1 = op.grid()->w1_nodes();
    if (dofs < 1 || dofs > static_cast<int>(w1.size())) {
        std::ostringstream os;
        os << "runge_approximate: dofs = " << dofs << " outside [1, " << w1.size() << "]";
        throw std::invalid_argument(os.str());
    }
    const auto& omega = op.grid()->interior_nodes();
    const int ni = static_cast<int>(omega.size());

    EigenvalueEstimate est = check_eigenvalue_condition(op, a1);
    if (!est.condition_holds) {
        std::ostringstream os;
        os << "runge_approximate: eigenvalue condition violated (lambda_min = " << est.lambda_min
           << ")";
        throw std::runtime_error(os.str());
    }

    Eigen::MatrixXd k_omega = op.block(omega, omega);
    for (int r = 0; r < ni; ++r) k_omega(r, r) += a1[omega[static_cast<std::size_t>(r)]];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k_omega);

    Eigen::MatrixXd basis(ni, dofs);
    for (int c = 0; c < dofs; ++c) {
        int j = w1[static_cast<std::size_t>(c)];
        Eigen::VectorXd load(ni);
        for (int r = 0; r < ni; ++r) load(r) = -op.matrix()(omega[static_cast<std::size_t>(r)], j);
        basis.col(c) = lu.solve(load);
    }

    Eigen::VectorXd t(ni);
    for (int r = 0; r < ni; ++r) t(r) = target[omega[static_cast<std::size_t>(r)]];

    Eigen::VectorXd coeff = basis.colPivHouseholderQr().solve(t);
    double res2 = (basis * coeff - t).squaredNorm();

    RungeResult out{ScalarField(op.grid()), {}, 0.0};
    for (int c = 0; c < dofs; ++c) {
        out.coefficients.push_back(coeff(c));
        out.exterior_data[w1[static_cast<std::size_t>(c)]] = coeff(c);
    }
    out.residual = std::sqrt(op.grid()->spacing() * res2);
    return out;
}

double verify_second_order_identity(const NonlocalStiffness& op,
                                    const PolynomialNonlinearity& a, const ScalarField& u0,
                                    const ScalarField& v1, const ScalarField& v2,
                                    const ScalarField& w_diff) {
    require_grid(op, u0, "verify_second_order_identity");
    require_grid(op, v1, "verify_second_order_identity");
    require_grid(op, v2, "verify_second_order_identity");
    require_grid(op, w_diff, "verify_second_order_identity");
    if (a.grid() != op.grid()) {
        throw std::invalid_argument("verify_second_order_identity: nonlinearity grid mismatch");
    }
    ScalarField aw = op.apply(w_diff);
    double acc = 0.0;
    for (int i : op.grid()->interior_nodes()) {
        acc += (aw[i] + a.derivative(i, u0[i]) * w_diff[i]) * v2[i];
    }
    return op.grid()->spacing() * acc;
}

}  // namespace fracinv
