#pragma once

// Gain recovery from transmit-power matrices and received-power vectors.
//
// Each receiver accumulates one linear equation per round: the senders'
// transmit powers (a row of P, mW) dot the unknown link gains equals the
// measured received power. Estimation solves
//     min ||P h - p_rx||^2   s.t.  h_min <= h_i <= h_max
// with a bounded-variable active-set iteration. Solvability hinges on P being
// full rank; for the sequential-adjustment structure P = 1*b^T + diag(delta)
// the matrix determinant lemma gives det P = (prod delta_i) * (1 + sum b_i/delta_i),
// so singularity is exactly 1 + sum b_i/delta_i = 0 (with every delta nonzero).
// Condition numbers propagate measurement noise into the recovered gains, so
// they are reported alongside every estimate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "errors.hpp"
#include "units.hpp"

namespace igesim {

struct TxPowerMatrix {
    int m = 0; // rounds (rows)
    int n = 0; // senders (columns)
    std::vector<double> entries; // row-major, mW; zero = silent that round

    TxPowerMatrix() = default;
    TxPowerMatrix(int rows, int cols) : m(rows), n(cols), entries(static_cast<std::size_t>(rows) * cols, 0.0) {}

    double at(int r, int c) const { return entries[static_cast<std::size_t>(r) * n + c]; }
    double& at(int r, int c) { return entries[static_cast<std::size_t>(r) * n + c]; }

    Eigen::MatrixXd to_eigen() const {
        Eigen::MatrixXd a(m, n);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) a(r, c) = at(r, c);
        return a;
    }
};

struct GainEstimate {
    std::vector<double> gains; // linear power gains, within [h_min, h_max]
    double h_min = 0.0;
    double h_max = 1.0;
    double residual_norm = 0.0;    // ||P h - p_rx||, mW
    double condition_number = 1.0; // kappa of P
};

// Relative numerical-rank tolerance on singular values.
inline constexpr double kRankTolerance = 1e-10;

namespace est_detail {

inline int numerical_rank(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd) {
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cutoff = kRankTolerance * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    return rank;
}

// Least-squares solution restricted to the free variable set, bound variables
// held at their current values.
inline void solve_free_subproblem(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                  const std::vector<int>& free_vars, Eigen::VectorXd& x) {
    if (free_vars.empty()) return;
    Eigen::VectorXd rhs = b;
    for (int j = 0; j < a.cols(); ++j) {
        bool is_free = false;
        for (int f : free_vars)
            if (f == j) { is_free = true; break; }
        if (!is_free) rhs -= a.col(j) * x(j);
    }
    Eigen::MatrixXd af(a.rows(), static_cast<Eigen::Index>(free_vars.size()));
    for (std::size_t k = 0; k < free_vars.size(); ++k) af.col(static_cast<Eigen::Index>(k)) = a.col(free_vars[k]);
    Eigen::VectorXd xf = af.colPivHouseholderQr().solve(rhs);
    for (std::size_t k = 0; k < free_vars.size(); ++k) x(free_vars[k]) = xf(static_cast<Eigen::Index>(k));
}

} // namespace est_detail

// Bounded-variable least squares on the full-rank system P h = p_rx.
inline GainEstimate estimate_gains(const TxPowerMatrix& p, const std::vector<double>& p_rx_mw,
                                   double h_min, double h_max) {
    if (p.m < p.n) throw InvalidInput("estimate_gains: fewer rows than unknowns");
    if (static_cast<int>(p_rx_mw.size()) != p.m)
        throw InvalidInput("estimate_gains: received-power vector length mismatch");
    if (!(h_min <= h_max)) throw InvalidInput("estimate_gains: invalid bounds");

    const Eigen::MatrixXd a = p.to_eigen();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int rank = est_detail::numerical_rank(svd);
    if (rank < p.n)
        throw RankError("estimate_gains: transmit-power matrix is rank-deficient",
                        static_cast<std::size_t>(rank), static_cast<std::size_t>(p.n));

    const auto& sv = svd.singularValues();
    const double kappa = sv(0) / sv(sv.size() - 1);

    Eigen::VectorXd b(p.m);
    for (int r = 0; r < p.m; ++r) b(r) = p_rx_mw[static_cast<std::size_t>(r)];

    // Start from the unconstrained solution; if it is feasible we are done.
    Eigen::VectorXd x = svd.solve(b);
    enum class S { Free, Lower, Upper };
    std::vector<S> state(static_cast<std::size_t>(p.n), S::Free);
    bool feasible = true;
    for (int j = 0; j < p.n; ++j) {
        if (x(j) < h_min) {
            x(j) = h_min;
            state[static_cast<std::size_t>(j)] = S::Lower;
            feasible = false;
        } else if (x(j) > h_max) {
            x(j) = h_max;
            state[static_cast<std::size_t>(j)] = S::Upper;
            feasible = false;
        }
    }

    if (!feasible) {
        // Active-set iteration (bounded-variable least squares): grow the free
        // set by the most promising bound variable, keep the free subproblem
        // feasible by interpolating back to the last feasible point.
        const double grad_tol =
            1e-12 * std::max(1.0, (a.transpose() * b).cwiseAbs().maxCoeff());
        const int max_iter = 10 * p.n;
        for (int iter = 0; iter < max_iter; ++iter) {
            const Eigen::VectorXd w = a.transpose() * (b - a * x); // -grad/2
            int candidate = -1;
            double candidate_w = grad_tol;
            for (int j = 0; j < p.n; ++j) {
                const S st = state[static_cast<std::size_t>(j)];
                // A bound variable can improve the fit only by moving inward.
                double merit = 0.0;
                if (st == S::Lower && w(j) > 0.0) merit = w(j);
                if (st == S::Upper && w(j) < 0.0) merit = -w(j);
                if (merit > candidate_w) {
                    candidate_w = merit;
                    candidate = j;
                }
            }
            if (candidate < 0) break; // KKT satisfied
            state[static_cast<std::size_t>(candidate)] = S::Free;

            // Re-solve over the free set; clip back toward the last feasible
            // point whenever the free solution escapes the box.
            for (int inner = 0; inner < max_iter; ++inner) {
                std::vector<int> free_vars;
                for (int j = 0; j < p.n; ++j)
                    if (state[static_cast<std::size_t>(j)] == S::Free) free_vars.push_back(j);
                Eigen::VectorXd z = x;
                est_detail::solve_free_subproblem(a, b, free_vars, z);

                double alpha = 1.0;
                int blocker = -1;
                S blocker_side = S::Lower;
                for (int j : free_vars) {
                    double bound = 0.0;
                    S side = S::Lower;
                    if (z(j) < h_min) {
                        bound = h_min;
                        side = S::Lower;
                    } else if (z(j) > h_max) {
                        bound = h_max;
                        side = S::Upper;
                    } else {
                        continue;
                    }
                    const double denom = z(j) - x(j);
                    const double step = denom != 0.0 ? (bound - x(j)) / denom : 0.0;
                    if (step < alpha) {
                        alpha = step;
                        blocker = j;
                        blocker_side = side;
                    }
                }
                if (blocker < 0) {
                    x = z;
                    break;
                }
                x += alpha * (z - x);
                x(blocker) = blocker_side == S::Lower ? h_min : h_max;
                state[static_cast<std::size_t>(blocker)] = blocker_side;
            }
        }
        for (int j = 0; j < p.n; ++j) x(j) = std::clamp(x(j), h_min, h_max);
    }

    GainEstimate est;
    est.gains.assign(x.data(), x.data() + p.n);
    est.h_min = h_min;
    est.h_max = h_max;
    est.residual_norm = (a * x - b).norm();
    est.condition_number = kappa;
    return est;
}

enum class RankVerdict { FullRank, Singular, DegenerateDelta };

// Singularity test for the sequential-adjustment matrix P = 1*base^T + diag(deltas)
// via the matrix determinant lemma. A zero delta voids the lemma's factorization,
// reported as DegenerateDelta (callers fall back to a numerical rank check).
inline RankVerdict full_rank_condition(const std::vector<double>& base_mw,
                                       const std::vector<double>& deltas_mw) {
    if (base_mw.size() != deltas_mw.size())
        throw InvalidInput("full_rank_condition: length mismatch");
    if (base_mw.empty()) throw InvalidInput("full_rank_condition: empty input");
    for (double b : base_mw)
        if (b <= 0.0) throw InvalidInput("full_rank_condition: non-positive base power");
    for (double d : deltas_mw)
        if (d == 0.0) return RankVerdict::DegenerateDelta;
    double s = 1.0;
    for (std::size_t i = 0; i < base_mw.size(); ++i) s += base_mw[i] / deltas_mw[i];
    return s == 0.0 ? RankVerdict::Singular : RankVerdict::FullRank;
}

// Assemble the adjustment matrix the verdict describes (row r = base powers
// with node r perturbed by its delta) — used by the numerical cross-checks.
inline TxPowerMatrix adjustment_matrix(const std::vector<double>& base_mw,
                                       const std::vector<double>& deltas_mw) {
    const int n = static_cast<int>(base_mw.size());
    TxPowerMatrix p(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            p.at(r, c) = base_mw[static_cast<std::size_t>(c)] +
                         (r == c ? deltas_mw[static_cast<std::size_t>(c)] : 0.0);
    return p;
}

inline int numerical_rank(const TxPowerMatrix& p) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.to_eigen());
    return est_detail::numerical_rank(svd);
}

// kappa(P) = sigma_max / sigma_min.
inline double condition_number(const TxPowerMatrix& p) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.to_eigen());
    const int rank = est_detail::numerical_rank(svd);
    const int full = std::min(p.m, p.n);
    if (rank < full)
        throw RankError("condition_number: rank-deficient matrix",
                        static_cast<std::size_t>(rank), static_cast<std::size_t>(full));
    const auto& sv = svd.singularValues();
    return sv(0) / sv(sv.size() - 1);
}

// Relative error bound on the recovered gains: kappa * ||noise|| / ||delta p_rx||.
inline double error_bound(double kappa, double noise_norm_mw, double delta_prx_norm_mw) {
    if (kappa <= 0.0 || noise_norm_mw <= 0.0)
        throw InvalidInput("error_bound: inputs must be positive");
    if (delta_prx_norm_mw <= 0.0)
        throw InvalidInput("error_bound: zero received-power perturbation norm");
    return kappa * noise_norm_mw / delta_prx_norm_mw;
}

struct LinkError {
    double error_db = 0.0;
    bool censored = false; // estimate pinned at/below the lower box bound
};

// |estimated - true| gain in dB, per link. Estimates that collapsed onto the
// lower bound carry no magnitude information and are flagged instead.
inline std::vector<LinkError> gain_error_db(const GainEstimate& estimate,
                                            const std::vector<double>& truth_gains) {
    if (estimate.gains.size() != truth_gains.size())
        throw InvalidInput("gain_error_db: dimension mismatch");
    std::vector<LinkError> errors(estimate.gains.size());
    for (std::size_t i = 0; i < estimate.gains.size(); ++i) {
        if (truth_gains[i] <= 0.0) throw InvalidInput("gain_error_db: non-positive true gain");
        const double est = estimate.gains[i];
        if (est <= 0.0 || est <= estimate.h_min * (1.0 + 1e-12)) {
            errors[i].censored = true;
            errors[i].error_db = std::abs(gain_to_db(std::max(est, estimate.h_min)) -
                                          gain_to_db(truth_gains[i]));
        } else {
            errors[i].error_db = std::abs(gain_to_db(est) - gain_to_db(truth_gains[i]));
        }
    }
    return errors;
}

} // namespace igesim
