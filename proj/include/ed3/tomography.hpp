#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ed3/error.hpp"
#include "ed3/linalg.hpp"

namespace ed3 {

inline constexpr std::size_t kNumSettings = 16;

/// Product projector |a><a| (x) |b><b| for one two-qubit tomography setting.
struct MeasurementSetting {
    ComplexMatrix projector;
    std::string label;
};

/// Coincidence counts for one tomography run, aligned with canonical_settings().
struct CountRecord {
    std::array<std::int64_t, kNumSettings> counts{};
    double pairs_per_setting = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const CountRecord &, const CountRecord &) = default;
};

enum class MleInit { identity_mixed, linear_inversion };

struct MleOptions {
    int max_iterations = 2000;
    /// Stop once the infinity norm of the projected gradient of the per-count
    /// negative log-likelihood falls below this.
    double gradient_tolerance = 1e-10;
    MleInit parameter_init = MleInit::identity_mixed;
};

class MleConvergenceError : public ConvergenceError {
   public:
    MleConvergenceError(const std::string &what, DensityMatrix best, int iterations)
        : ConvergenceError(what), best_(std::move(best)), iterations_(iterations) {}

    const DensityMatrix &best_iterate() const { return best_; }
    int iterations() const { return iterations_; }

   private:
    DensityMatrix best_;
    int iterations_;
};

/// {H, V, D, R} (x) {H, V, D, R} with D = (H+V)/sqrt2 and R = (H-iV)/sqrt2, labelled
/// "HH", "HV", "HD", "HR", "VH", ..., "RR".
const std::vector<MeasurementSetting> &canonical_settings();

/// Re tr(P_i rho), clamped to [0, 1].
std::vector<double> born_probabilities(const DensityMatrix &rho, std::span<const MeasurementSetting> settings);

/// Independent Poisson counts with mean pairs_per_setting * p_i. Deterministic in `rng_seed`.
CountRecord simulate_counts(const DensityMatrix &rho, double pairs_per_setting, std::uint64_t rng_seed);

/// Sum_i [n_i log(N p_i) - N p_i]. Returns -inf if some p_i = 0 while n_i > 0.
double poisson_log_likelihood(const CountRecord &record, std::span<const MeasurementSetting> settings,
                              const DensityMatrix &rho);

/// Maximum-likelihood state under the Poisson model, with rho = T^H T / tr(T^H T) and T
/// lower triangular (16 real parameters). Throws InvalidArgument for all-zero counts and
/// MleConvergenceError if the optimizer runs out of iterations.
DensityMatrix mle_reconstruct(const CountRecord &record, std::span<const MeasurementSetting> settings,
                              const MleOptions &opts = {});

/// Least-squares inversion of observed frequencies, projected onto the physical states by
/// clipping negative eigenvalues. Used as an MLE starting point.
DensityMatrix linear_inversion(const CountRecord &record, std::span<const MeasurementSetting> settings);

/// Per-setting mean N such that the expected total over the canonical settings,
/// N * sum_i p_i(rho), equals `pairs_per_run`.
double pairs_per_setting_for_run(const DensityMatrix &rho, double pairs_per_run);

/// exp(-i phi sigma_z / 2) acting on the first qubit.
ComplexMatrix phase_rotation_first_qubit(double phi);

struct PoolOptions {
    /// 1000 expected coincidences per run for the Bell and dephased states.
    double pairs_per_setting = 250.0;
    std::uint64_t base_seed = 0;
    /// Phase bias applied to the true state before every simulation, in radians.
    std::optional<double> systematic_offset;
    MleOptions mle;
    unsigned workers = 1;
};

/// `count` reconstructions of `state`; member i uses seed base_seed + i. The result does not
/// depend on the number of workers.
std::vector<DensityMatrix> generate_pool(const DensityMatrix &state, std::size_t count, const PoolOptions &opts);

}  // namespace ed3
