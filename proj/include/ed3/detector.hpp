#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ed3/error.hpp"
#include "ed3/linalg.hpp"

namespace ed3 {

/// Frobenius norms at or below this count as an exactly-zero deviation.
inline constexpr double kSparsityEpsilon = 1e-6;
/// Mean squares below this are floored before inverting into a weight.
inline constexpr double kDefaultWeightFloor = 1e-12;

/// K >= 2 real d x d matrices sharing one dimension. Usually absolute density matrices, but the
/// detectors only need real entries.
class MatrixSet {
   public:
    explicit MatrixSet(std::vector<RealMatrix> matrices);
    explicit MatrixSet(std::span<const AbsoluteMatrix> matrices);

    std::size_t size() const { return matrices_.size(); }
    Eigen::Index dim() const { return matrices_.front().rows(); }
    const RealMatrix &operator[](std::size_t k) const { return matrices_[k]; }
    const std::vector<RealMatrix> &matrices() const { return matrices_; }

   private:
    std::vector<RealMatrix> matrices_;
};

/// Strictly positive, finite per-element weights s_ij.
class WeightMatrix {
   public:
    explicit WeightMatrix(RealMatrix s);

    const RealMatrix &matrix() const { return s_; }
    Eigen::Index dim() const { return s_.rows(); }

   private:
    RealMatrix s_;
};

struct AdmmOptions {
    /// Initial penalty in units of the geometric mean of the per-element curvature 2 c s_ij^2.
    double penalty = 1.0;
    int max_iterations = 10000;
    double primal_tolerance = 1e-8;
    double dual_tolerance = 1e-8;
    bool adaptive_penalty = true;
    /// Positive multiplier on the dual data-fit term; 1/K when unset. The minimizer does not
    /// depend on it.
    std::optional<double> objective_scale;
    /// Groups with ||zeta_k||_F < gamma (1 - boundary_tolerance) are treated as inactive.
    double boundary_tolerance = 1e-6;
};

struct DecompositionResult {
    RealMatrix theta;
    std::vector<RealMatrix> omegas;
    std::vector<RealMatrix> zetas;
    double gamma = 0.0;
    int iterations = 0;
    /// Residuals are measured on zeta / gamma, i.e. relative to the ball radius.
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    std::vector<bool> active_set;
    /// No group was strictly inside its ball, so theta came from the all-boundary rule.
    bool degenerate = false;
};

class AdmmConvergenceError : public ConvergenceError {
   public:
    AdmmConvergenceError(const std::string &what, DecompositionResult best)
        : ConvergenceError(what), best_(std::move(best)) {}

    const DecompositionResult &best_iterate() const { return best_; }

   private:
    DecompositionResult best_;
};

enum class ScoreMethod { naive, ed3 };

std::string_view to_string(ScoreMethod m);
ScoreMethod score_method_from_string(std::string_view s);

struct ScoreReport {
    std::vector<double> scores;
    ScoreMethod method = ScoreMethod::naive;
    std::optional<std::vector<bool>> labels;
};

struct PrimalRecovery {
    RealMatrix theta;
    std::vector<RealMatrix> omegas;
    bool degenerate = false;
};

/// Element-wise mean of the set.
RealMatrix data_average(const MatrixSet &set);

/// e_k = ||rho_k - mean||_tr.
ScoreReport naive_scores(const MatrixSet &set);

/// s_ij = (mean_k (rho_k,ij - mean_ij)^2)^(-1/2), with the mean square floored at `floor`.
WeightMatrix compute_weights(const MatrixSet &set, double floor = kDefaultWeightFloor);

/// max_k ||(rho_k - mean) / s||_F. For gamma above this every group is inactive.
double gamma_upper_bracket(const MatrixSet &set, const WeightMatrix &weights);

/// median_k ||(rho_k - mean) / s||_F, the natural scale of gamma for this set.
double gamma_scale(const MatrixSet &set, const WeightMatrix &weights);

/// Value of sum_k 0.5 ||rho_k - theta - omega_k||_F^2 + gamma sum_k ||s o omega_k||_F.
double primal_objective(const MatrixSet &set, const WeightMatrix &weights, double gamma, const RealMatrix &theta,
                        std::span<const RealMatrix> omegas);

/// Solves min sum_k ||rho_k - s o zeta_k||_F^2 s.t. sum_k zeta_k = 0, ||zeta_k||_F <= gamma by
/// ADMM and recovers theta and omega_k from the optimal zeta. Throws AdmmConvergenceError
/// carrying the last iterate if the iteration cap is reached.
DecompositionResult solve_ed3(const MatrixSet &set, double gamma, const WeightMatrix &weights,
                              const AdmmOptions &opts = {});

/// theta + omega_k = rho_k - s o zeta_k, with omega_k = 0 for groups strictly inside the ball and
/// theta averaged over those groups. If every group is on its ball, theta comes from
/// omega_k = t_k (zeta_k / s), t_k >= 0, solved in least squares, and the result is flagged.
PrimalRecovery recover_primal(const MatrixSet &set, std::span<const RealMatrix> zetas, const WeightMatrix &weights,
                              double gamma, double boundary_tolerance);

/// e_k = ||omega_k||_tr, exactly 0 for inactive groups.
ScoreReport ed3_scores(const DecompositionResult &result);

}  // namespace ed3
