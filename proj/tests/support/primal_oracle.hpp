#pragma once

// Primal-only reference solver for
//   min_{theta, omega} sum_k 0.5 ||rho_k - theta - omega_k||_F^2 + gamma sum_k ||s o omega_k||_F.
// For fixed omega the optimal theta is mean_k (rho_k - omega_k), which leaves a problem in omega
// alone whose smooth part 0.5 ||P(c - omega)||^2 (P removes the mean over k, c_k = rho_k - mean)
// has a unit Lipschitz gradient. FISTA with step 1 and gradient restart is run on that problem.
// Nothing here touches the dual variables used by the production solver.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace ed3::testing {

struct OracleResult {
    Eigen::MatrixXd theta;
    std::vector<Eigen::MatrixXd> omegas;
    double objective = 0.0;
    long iterations = 0;
};

inline double oracle_objective(const std::vector<Eigen::MatrixXd> &rho, const Eigen::MatrixXd &s, double gamma,
                               const Eigen::MatrixXd &theta, const std::vector<Eigen::MatrixXd> &omegas) {
    double f = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
        f += 0.5 * (rho[k] - theta - omegas[k]).squaredNorm() + gamma * s.cwiseProduct(omegas[k]).norm();
    }
    return f;
}

// argmin_w 0.5 ||w - v||^2 + t ||s o w||_F. Zero iff ||v / s|| <= t; otherwise
// w = v / (1 + mu s^2) with mu > 0 solving mu ||s o w(mu)|| = t, found by bisection.
inline Eigen::MatrixXd weighted_group_prox(const Eigen::MatrixXd &v, const Eigen::MatrixXd &s, double t) {
    if (v.cwiseQuotient(s).norm() <= t) return Eigen::MatrixXd::Zero(v.rows(), v.cols());
    const Eigen::ArrayXXd s2 = s.array().square();
    auto g = [&](double mu) { return mu * (s.array() * v.array() / (1.0 + mu * s2)).matrix().norm(); };
    double lo = 0.0;
    double hi = 1.0;
    while (g(hi) < t) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-300; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (g(mid) < t ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);
    return (v.array() / (1.0 + mu * s2)).matrix();
}

inline OracleResult primal_oracle(const std::vector<Eigen::MatrixXd> &rho, const Eigen::MatrixXd &s, double gamma,
                                  long max_iterations = 1'000'000, double step_tolerance = 1e-15) {
    const std::size_t K = rho.size();
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(rho[0].rows(), rho[0].cols());
    for (const auto &r : rho) mean += r;
    mean /= static_cast<double>(K);
    std::vector<Eigen::MatrixXd> c(K);
    for (std::size_t k = 0; k < K; ++k) c[k] = rho[k] - mean;

    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
    std::vector<Eigen::MatrixXd> w(K, zero), y(K, zero), w_prev(K, zero), grad(K, zero);
    double momentum = 1.0;
    long it = 0;
    for (; it < max_iterations; ++it) {
        Eigen::MatrixXd residual_mean = zero;
        for (std::size_t k = 0; k < K; ++k) residual_mean += c[k] - y[k];
        residual_mean /= static_cast<double>(K);
        double step = 0.0;
        double restart = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            grad[k] = -(c[k] - y[k] - residual_mean);
            w_prev[k] = w[k];
            w[k] = weighted_group_prox(y[k] - grad[k], s, gamma);
            step += (w[k] - w_prev[k]).squaredNorm();
            restart += (y[k] - w[k]).cwiseProduct(w[k] - w_prev[k]).sum();
        }
        if (restart > 0.0) momentum = 1.0;
        const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = (momentum - 1.0) / next;
        momentum = next;
        for (std::size_t k = 0; k < K; ++k) y[k] = w[k] + beta * (w[k] - w_prev[k]);
        if (it > 10 && std::sqrt(step) < step_tolerance) break;
    }

    OracleResult out;
    out.theta = zero;
    for (std::size_t k = 0; k < K; ++k) out.theta += rho[k] - w[k];
    out.theta /= static_cast<double>(K);
    out.omegas = w;
    out.objective = oracle_objective(rho, s, gamma, out.theta, out.omegas);
    out.iterations = it;
    return out;
}

}  // namespace ed3::testing
