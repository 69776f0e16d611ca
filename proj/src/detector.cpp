#include "ed3/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ed3 {

namespace {

void require_weights_match(const MatrixSet &set, const WeightMatrix &weights) {
    if (weights.dim() != set.dim()) throw InvalidArgument("weight matrix dimension does not match the set");
}

void require_gamma(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gamma must be positive and finite");
    }
}

// Columns are the column-major vectorizations of the matrices.
Eigen::MatrixXd stack(const std::vector<RealMatrix> &ms) {
    const Eigen::Index n = ms.front().size();
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(ms.size()));
    for (std::size_t k = 0; k < ms.size(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXd>(ms[k].data(), n);
    }
    return out;
}

std::vector<RealMatrix> unstack(const Eigen::MatrixXd &cols, Eigen::Index dim, double scale) {
    std::vector<RealMatrix> out;
    out.reserve(static_cast<std::size_t>(cols.cols()));
    for (Eigen::Index k = 0; k < cols.cols(); ++k) {
        out.emplace_back(Eigen::Map<const RealMatrix>(cols.col(k).data(), dim, dim) * scale);
    }
    return out;
}

DecompositionResult assemble(const MatrixSet &set, const WeightMatrix &weights, double gamma,
                             const Eigen::MatrixXd &z, int iterations, double primal_residual, double dual_residual,
                             double boundary_tolerance) {
    DecompositionResult result;
    result.gamma = gamma;
    result.iterations = iterations;
    result.primal_residual = primal_residual;
    result.dual_residual = dual_residual;
    result.zetas = unstack(z, set.dim(), gamma);
    auto primal = recover_primal(set, result.zetas, weights, gamma, boundary_tolerance);
    result.theta = std::move(primal.theta);
    result.omegas = std::move(primal.omegas);
    result.degenerate = primal.degenerate;
    result.active_set.resize(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) {
        result.active_set[k] = result.omegas[k].norm() > kSparsityEpsilon;
        if (!result.active_set[k]) result.omegas[k].setZero();
    }
    return result;
}

}  // namespace

MatrixSet::MatrixSet(std::vector<RealMatrix> matrices) : matrices_(std::move(matrices)) {
    if (matrices_.size() < 2) throw InvalidArgument("MatrixSet: need at least two matrices");
    for (const auto &m : matrices_) {
        require_square_finite(m, "MatrixSet");
        if (m.rows() != matrices_.front().rows()) throw InvalidArgument("MatrixSet: matrices differ in dimension");
    }
}

MatrixSet::MatrixSet(std::span<const AbsoluteMatrix> matrices)
    : MatrixSet([&] {
          std::vector<RealMatrix> ms;
          ms.reserve(matrices.size());
          for (const auto &m : matrices) ms.push_back(m.matrix());
          return ms;
      }()) {}

WeightMatrix::WeightMatrix(RealMatrix s) : s_(std::move(s)) {
    require_square_finite(s_, "WeightMatrix");
    if (!(s_.minCoeff() > 0.0)) throw InvalidArgument("WeightMatrix: entries must be strictly positive");
}

std::string_view to_string(ScoreMethod m) { return m == ScoreMethod::naive ? "naive" : "ed3"; }

ScoreMethod score_method_from_string(std::string_view s) {
    if (s == "naive") return ScoreMethod::naive;
    if (s == "ed3") return ScoreMethod::ed3;
    throw InvalidArgument("unknown score method '" + std::string(s) + "'");
}

RealMatrix data_average(const MatrixSet &set) {
    RealMatrix sum = RealMatrix::Zero(set.dim(), set.dim());
    for (const auto &m : set.matrices()) sum += m;
    return sum / static_cast<double>(set.size());
}

ScoreReport naive_scores(const MatrixSet &set) {
    const RealMatrix mean = data_average(set);
    ScoreReport report;
    report.method = ScoreMethod::naive;
    report.scores.reserve(set.size());
    for (const auto &m : set.matrices()) report.scores.push_back(trace_norm(RealMatrix(m - mean)));
    return report;
}

WeightMatrix compute_weights(const MatrixSet &set, double floor) {
    if (!(floor > 0.0) || !std::isfinite(floor)) throw InvalidArgument("compute_weights: floor must be positive");
    const RealMatrix mean = data_average(set);
    RealMatrix mean_square = RealMatrix::Zero(set.dim(), set.dim());
    for (const auto &m : set.matrices()) mean_square += (m - mean).cwiseAbs2();
    mean_square /= static_cast<double>(set.size());
    return WeightMatrix(mean_square.cwiseMax(floor).cwiseSqrt().cwiseInverse());
}

namespace {

std::vector<double> scaled_deviation_norms(const MatrixSet &set, const WeightMatrix &weights) {
    require_weights_match(set, weights);
    const RealMatrix mean = data_average(set);
    std::vector<double> norms;
    norms.reserve(set.size());
    for (const auto &m : set.matrices()) norms.push_back((m - mean).cwiseQuotient(weights.matrix()).norm());
    return norms;
}

}  // namespace

double gamma_upper_bracket(const MatrixSet &set, const WeightMatrix &weights) {
    const auto norms = scaled_deviation_norms(set, weights);
    return *std::max_element(norms.begin(), norms.end());
}

double gamma_scale(const MatrixSet &set, const WeightMatrix &weights) {
    auto norms = scaled_deviation_norms(set, weights);
    std::sort(norms.begin(), norms.end());
    const std::size_t n = norms.size();
    return n % 2 == 1 ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
}

double primal_objective(const MatrixSet &set, const WeightMatrix &weights, double gamma, const RealMatrix &theta,
                        std::span<const RealMatrix> omegas) {
    require_weights_match(set, weights);
    if (omegas.size() != set.size()) throw InvalidArgument("primal_objective: need one omega per matrix");
    double fit = 0.0;
    double penalty = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        fit += 0.5 * (set[k] - theta - omegas[k]).squaredNorm();
        penalty += weights.matrix().cwiseProduct(omegas[k]).norm();
    }
    return fit + gamma * penalty;
}

namespace {

// Every group sits on its ball. Stationarity makes omega_k = t_k (zeta_k / s) with t_k >= 0, so
// fitted_k = theta + t_k g_k for all k. Eliminating theta = mean_k (fitted_k - t_k g_k) leaves a
// linear least-squares problem in t.
RealMatrix boundary_theta(const std::vector<RealMatrix> &fitted, std::span<const RealMatrix> zetas,
                          const RealMatrix &s) {
    const auto n = static_cast<Eigen::Index>(fitted.size());
    const Eigen::Index cells = s.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<RealMatrix> g;
    RealMatrix fitted_mean = RealMatrix::Zero(s.rows(), s.cols());
    for (Eigen::Index k = 0; k < n; ++k) {
        g.push_back(zetas[k].cwiseQuotient(s));
        fitted_mean += fitted[k] * inv_n;
    }
    RealMatrix a = RealMatrix::Zero(n * cells, n);
    Eigen::VectorXd c(n * cells);
    for (Eigen::Index k = 0; k < n; ++k) {
        c.segment(k * cells, cells) = (fitted[k] - fitted_mean).reshaped();
        for (Eigen::Index j = 0; j < n; ++j) {
            a.block(k * cells, j, cells, 1) = ((k == j ? 1.0 : 0.0) - inv_n) * g[j].reshaped();
        }
    }
    const Eigen::VectorXd t = a.colPivHouseholderQr().solve(c);
    RealMatrix theta = fitted_mean;
    for (Eigen::Index k = 0; k < n; ++k) theta -= inv_n * t(k) * g[k];
    return theta;
}

}  // namespace

PrimalRecovery recover_primal(const MatrixSet &set, std::span<const RealMatrix> zetas, const WeightMatrix &weights,
                              double gamma, double boundary_tolerance) {
    require_weights_match(set, weights);
    require_gamma(gamma);
    if (zetas.size() != set.size()) throw InvalidArgument("recover_primal: need one zeta per matrix");
    const std::size_t n = set.size();
    const RealMatrix &s = weights.matrix();

    std::vector<RealMatrix> fitted;
    fitted.reserve(n);
    std::vector<bool> inactive(n);
    std::size_t n_inactive = 0;
    RealMatrix inactive_sum = RealMatrix::Zero(set.dim(), set.dim());
    for (std::size_t k = 0; k < n; ++k) {
        if (zetas[k].rows() != set.dim() || zetas[k].cols() != set.dim()) {
            throw InvalidArgument("recover_primal: zeta dimension mismatch");
        }
        fitted.push_back(set[k] - s.cwiseProduct(zetas[k]));
        inactive[k] = zetas[k].norm() < gamma * (1.0 - boundary_tolerance);
        if (inactive[k]) {
            inactive_sum += fitted.back();
            ++n_inactive;
        }
    }

    PrimalRecovery out;
    if (n_inactive > 0) {
        out.theta = inactive_sum / static_cast<double>(n_inactive);
    } else {
        out.theta = boundary_theta(fitted, zetas, s);
        out.degenerate = true;
    }
    out.omegas.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (inactive[k]) {
            out.omegas.push_back(RealMatrix::Zero(set.dim(), set.dim()));
        } else {
            out.omegas.push_back(fitted[k] - out.theta);
        }
    }
    return out;
}

DecompositionResult solve_ed3(const MatrixSet &set, double gamma, const WeightMatrix &weights,
                              const AdmmOptions &opts) {
    require_gamma(gamma);
    require_weights_match(set, weights);
    if (!(opts.penalty > 0.0) || opts.max_iterations <= 0 || !(opts.primal_tolerance > 0.0) ||
        !(opts.dual_tolerance > 0.0) || !(opts.boundary_tolerance >= 0.0 && opts.boundary_tolerance < 1.0)) {
        throw InvalidArgument("solve_ed3: invalid ADMM options");
    }
    const auto n_groups = static_cast<Eigen::Index>(set.size());
    const double c = opts.objective_scale.value_or(1.0 / static_cast<double>(n_groups));
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("solve_ed3: objective scale must be positive");

    // Work in units of the ball radius: xi = zeta / gamma, data rho / gamma, unit balls.
    const Eigen::MatrixXd data = stack(set.matrices()) / gamma;
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(weights.matrix().data(), weights.matrix().size());
    const Eigen::Index n_elems = data.rows();
    const double sqrt_n = std::sqrt(static_cast<double>(n_elems * n_groups));

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n_elems, n_groups);
    Eigen::MatrixXd z = x;
    Eigen::MatrixXd u = x;
    Eigen::MatrixXd z_prev = x;
    // The data-dependent part of the smooth update does not change across iterations.
    const Eigen::MatrixXd fit_term = (2.0 * c * s).asDiagonal() * data;
    const Eigen::ArrayXd curvature = 2.0 * c * s.array().square();

    // The penalty is relative to the geometric mean curvature of the smooth block.
    double rho = opts.penalty * std::exp(curvature.log().mean());
    double r_norm = 0.0;
    double s_norm = 0.0;
    int iter = 0;
    bool converged = false;
    while (iter < opts.max_iterations) {
        ++iter;
        // Smooth block: per-element quadratic with a scalar multiplier enforcing zero sum over k.
        Eigen::MatrixXd b = fit_term + rho * (z - u);
        const Eigen::VectorXd nu = b.rowwise().mean();
        b.colwise() -= nu;
        x = (curvature + rho).inverse().matrix().asDiagonal() * b;

        // Ball block: project each group onto the unit Frobenius ball.
        z_prev = z;
        z = x + u;
        for (Eigen::Index k = 0; k < n_groups; ++k) {
            const double norm = z.col(k).norm();
            if (norm > 1.0) z.col(k) /= norm;
        }
        u += x - z;

        r_norm = (x - z).norm();
        s_norm = rho * (z - z_prev).norm();
        const double eps_pri = opts.primal_tolerance * (sqrt_n + std::max(x.norm(), z.norm()));
        const double eps_dual = opts.dual_tolerance * (sqrt_n + rho * u.norm());
        if (r_norm <= eps_pri && s_norm <= eps_dual) {
            converged = true;
            break;
        }
        // Residuals are balanced relative to their own tolerances.
        if (opts.adaptive_penalty && iter % 10 == 0) {
            const double r_rel = r_norm / eps_pri;
            const double s_rel = s_norm / eps_dual;
            if (r_rel > 10.0 * s_rel) {
                rho *= 2.0;
                u /= 2.0;
            } else if (s_rel > 10.0 * r_rel) {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    auto result = assemble(set, weights, gamma, z, iter, r_norm, s_norm, opts.boundary_tolerance);
    if (!converged) {
        throw AdmmConvergenceError("solve_ed3: ADMM did not converge in " + std::to_string(iter) +
                                       " iterations (primal residual " + std::to_string(r_norm) +
                                       ", dual residual " + std::to_string(s_norm) + ")",
                                   std::move(result));
    }
    return result;
}

ScoreReport ed3_scores(const DecompositionResult &result) {
    ScoreReport report;
    report.method = ScoreMethod::ed3;
    report.scores.reserve(result.omegas.size());
    for (std::size_t k = 0; k < result.omegas.size(); ++k) {
        const bool active = k < result.active_set.size() ? result.active_set[k] : result.omegas[k].norm() > 0.0;
        report.scores.push_back(active ? trace_norm(result.omegas[k]) : 0.0);
    }
    return report;
}

}  // namespace ed3
