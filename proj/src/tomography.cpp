#include "ed3/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <ceres/ceres.h>
#include <unsupported/Eigen/KroneckerProduct>

#include "ed3/parallel.hpp"

namespace ed3 {

namespace {

constexpr int kDim = 4;
constexpr int kNumParams = 16;

std::vector<MeasurementSetting> build_settings() {
    const double r = 1.0 / std::sqrt(2.0);
    const std::array<std::pair<char, Eigen::Vector2cd>, 4> single = {{
        {'H', Eigen::Vector2cd(1.0, 0.0)},
        {'V', Eigen::Vector2cd(0.0, 1.0)},
        {'D', Eigen::Vector2cd(r, r)},
        {'R', Eigen::Vector2cd(r, Complex(0.0, -r))},
    }};
    std::vector<MeasurementSetting> out;
    out.reserve(kNumSettings);
    for (const auto &[la, a] : single) {
        for (const auto &[lb, b] : single) {
            Eigen::Vector4cd ket;
            ket << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
            out.push_back({ket * ket.adjoint(), std::string{la, lb}});
        }
    }
    return out;
}

void require_settings(std::span<const MeasurementSetting> settings, Eigen::Index dim) {
    if (settings.size() != kNumSettings) {
        throw InvalidArgument("expected 16 measurement settings");
    }
    for (const auto &s : settings) {
        if (s.projector.rows() != dim || s.projector.cols() != dim) {
            throw InvalidArgument("measurement setting dimension does not match the state");
        }
    }
}

void require_record(const CountRecord &record) {
    if (!(record.pairs_per_setting > 0.0) || !std::isfinite(record.pairs_per_setting)) {
        throw InvalidArgument("CountRecord: pairs_per_setting must be positive");
    }
    for (auto n : record.counts) {
        if (n < 0) throw InvalidArgument("CountRecord: negative count");
    }
}

// Lower-triangular T from the packed parameters: four real diagonal entries followed by
// (re, im) pairs for (1,0), (2,0), (2,1), (3,0), (3,1), (3,2).
Eigen::Matrix4cd unpack(const double *x) {
    Eigen::Matrix4cd t = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < kDim; ++i) t(i, i) = x[i];
    int p = kDim;
    for (int i = 1; i < kDim; ++i) {
        for (int j = 0; j < i; ++j, p += 2) t(i, j) = Complex(x[p], x[p + 1]);
    }
    return t;
}

void pack(const Eigen::Matrix4cd &t, double *x) {
    for (int i = 0; i < kDim; ++i) x[i] = t(i, i).real();
    int p = kDim;
    for (int i = 1; i < kDim; ++i) {
        for (int j = 0; j < i; ++j, p += 2) {
            x[p] = t(i, j).real();
            x[p + 1] = t(i, j).imag();
        }
    }
}

ComplexMatrix state_from_params(const double *x) {
    const Eigen::Matrix4cd t = unpack(x);
    const Eigen::Matrix4cd a = t.adjoint() * t;
    ComplexMatrix rho = a / a.trace().real();
    return (rho + rho.adjoint()) / 2.0;
}

// Per-count negative Poisson log-likelihood in the T parametrization, plus a quadratic pin on
// tr(T^H T) that removes the scale degeneracy without moving the optimum in rho.
class NegativeLogLikelihood final : public ceres::FirstOrderFunction {
   public:
    NegativeLogLikelihood(const CountRecord &record, std::span<const MeasurementSetting> settings)
        : pairs_(record.pairs_per_setting) {
        total_ = 0.0;
        for (std::size_t i = 0; i < kNumSettings; ++i) {
            counts_[i] = static_cast<double>(record.counts[i]);
            projectors_[i] = settings[i].projector;
            total_ += counts_[i];
        }
    }

    bool Evaluate(const double *x, double *cost, double *gradient) const override {
        const Eigen::Matrix4cd t = unpack(x);
        const Eigen::Matrix4cd a = t.adjoint() * t;
        const double tr = a.trace().real();
        if (!(tr > 0.0) || !std::isfinite(tr)) return false;
        const Eigen::Matrix4cd rho = a / tr;

        double f = 0.0;
        Eigen::Matrix4cd r = Eigen::Matrix4cd::Zero();
        for (std::size_t i = 0; i < kNumSettings; ++i) {
            const double p = std::max(0.0, (projectors_[i] * rho).trace().real());
            if (counts_[i] > 0.0) {
                if (p <= 0.0) return false;
                f += pairs_ * p - counts_[i] * std::log(pairs_ * p);
            } else {
                f += pairs_ * p;
            }
            if (gradient != nullptr) {
                const double dp = counts_[i] > 0.0 ? pairs_ - counts_[i] / p : pairs_;
                r += dp * projectors_[i];
            }
        }
        *cost = f / total_ + 0.5 * (tr - 1.0) * (tr - 1.0);

        if (gradient != nullptr) {
            r /= total_;
            const Complex r_rho = (r * rho).trace();
            Eigen::Matrix4cd g = (r - r_rho.real() * Eigen::Matrix4cd::Identity()) / tr;
            g += (tr - 1.0) * Eigen::Matrix4cd::Identity();
            const Eigen::Matrix4cd grad_t = 2.0 * t * g;
            for (int i = 0; i < kDim; ++i) gradient[i] = grad_t(i, i).real();
            int p = kDim;
            for (int i = 1; i < kDim; ++i) {
                for (int j = 0; j < i; ++j, p += 2) {
                    gradient[p] = grad_t(i, j).real();
                    gradient[p + 1] = grad_t(i, j).imag();
                }
            }
        }
        return std::isfinite(*cost);
    }

    int NumParameters() const override { return kNumParams; }

   private:
    double pairs_;
    double total_;
    std::array<double, kNumSettings> counts_{};
    std::array<Eigen::Matrix4cd, kNumSettings> projectors_;
};

// Lower-triangular T with T^H T = rho for a positive definite rho.
Eigen::Matrix4cd lower_factor(const ComplexMatrix &rho) {
    Eigen::Matrix4cd j = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < kDim; ++i) j(i, kDim - 1 - i) = 1.0;
    const Eigen::Matrix4cd flipped = j * rho * j;
    Eigen::LLT<Eigen::Matrix4cd> llt(flipped);
    const Eigen::Matrix4cd l = llt.matrixL();
    return j * l.adjoint() * j;
}

}  // namespace

const std::vector<MeasurementSetting> &canonical_settings() {
    static const std::vector<MeasurementSetting> settings = build_settings();
    return settings;
}

std::vector<double> born_probabilities(const DensityMatrix &rho, std::span<const MeasurementSetting> settings) {
    std::vector<double> p;
    p.reserve(settings.size());
    for (const auto &s : settings) {
        if (s.projector.rows() != rho.dim() || s.projector.cols() != rho.dim()) {
            throw InvalidArgument("born_probabilities: setting dimension does not match the state");
        }
        p.push_back(std::clamp((s.projector * rho.matrix()).trace().real(), 0.0, 1.0));
    }
    return p;
}

CountRecord simulate_counts(const DensityMatrix &rho, double pairs_per_setting, std::uint64_t rng_seed) {
    if (!(pairs_per_setting > 0.0) || !std::isfinite(pairs_per_setting)) {
        throw InvalidArgument("simulate_counts: pairs_per_setting must be positive");
    }
    const auto &settings = canonical_settings();
    require_settings(settings, rho.dim());
    const auto p = born_probabilities(rho, settings);
    std::mt19937_64 rng(rng_seed);
    CountRecord record;
    record.pairs_per_setting = pairs_per_setting;
    record.seed = rng_seed;
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        const double mean = pairs_per_setting * p[i];
        if (mean > 0.0) {
            std::poisson_distribution<std::int64_t> poisson(mean);
            record.counts[i] = poisson(rng);
        }
    }
    return record;
}

double poisson_log_likelihood(const CountRecord &record, std::span<const MeasurementSetting> settings,
                              const DensityMatrix &rho) {
    require_record(record);
    require_settings(settings, rho.dim());
    const auto p = born_probabilities(rho, settings);
    double ll = 0.0;
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        const double mean = record.pairs_per_setting * p[i];
        const auto n = static_cast<double>(record.counts[i]);
        if (n > 0.0) {
            if (mean <= 0.0) return -std::numeric_limits<double>::infinity();
            ll += n * std::log(mean);
        }
        ll -= mean;
    }
    return ll;
}

DensityMatrix linear_inversion(const CountRecord &record, std::span<const MeasurementSetting> settings) {
    require_record(record);
    require_settings(settings, kDim);

    // Hermitian basis: sigma_a (x) sigma_b.
    std::array<Eigen::Matrix2cd, 4> pauli;
    pauli[0] << 1, 0, 0, 1;
    pauli[1] << 0, 1, 1, 0;
    pauli[2] << 0, Complex(0, -1), Complex(0, 1), 0;
    pauli[3] << 1, 0, 0, -1;
    std::array<Eigen::Matrix4cd, 16> basis;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) basis[4 * a + b] = Eigen::kroneckerProduct(pauli[a], pauli[b]);
    }

    Eigen::Matrix<double, 16, 16> m;
    Eigen::Matrix<double, 16, 1> f;
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        for (int j = 0; j < 16; ++j) m(i, j) = (settings[i].projector * basis[j]).trace().real();
        f(i) = static_cast<double>(record.counts[i]) / record.pairs_per_setting;
    }
    const Eigen::Matrix<double, 16, 1> c = m.colPivHouseholderQr().solve(f);
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    for (int j = 0; j < 16; ++j) rho += c(j) * basis[j];
    rho = (rho + rho.adjoint()) / 2.0;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(rho);
    Eigen::Vector4d w = eig.eigenvalues().cwiseMax(0.0);
    if (!(w.sum() > 0.0)) return DensityMatrix(Eigen::Matrix4cd::Identity() / 4.0);
    w /= w.sum();
    ComplexMatrix projected = eig.eigenvectors() * w.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
    return DensityMatrix((projected + projected.adjoint()) / 2.0);
}

DensityMatrix mle_reconstruct(const CountRecord &record, std::span<const MeasurementSetting> settings,
                              const MleOptions &opts) {
    require_record(record);
    require_settings(settings, kDim);
    if (opts.max_iterations <= 0 || !(opts.gradient_tolerance > 0.0)) {
        throw InvalidArgument("mle_reconstruct: invalid options");
    }
    if (std::all_of(record.counts.begin(), record.counts.end(), [](auto n) { return n == 0; })) {
        throw InvalidArgument("mle_reconstruct: all counts are zero");
    }

    std::array<double, kNumParams> x{};
    if (opts.parameter_init == MleInit::linear_inversion) {
        const ComplexMatrix start = 0.99 * linear_inversion(record, settings).matrix() +
                                    0.01 * ComplexMatrix::Identity(kDim, kDim) / double(kDim);
        pack(lower_factor(start), x.data());
    } else {
        pack(Eigen::Matrix4cd::Identity() / 2.0, x.data());
    }

    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::LBFGS;
    options.max_num_iterations = opts.max_iterations;
    options.gradient_tolerance = opts.gradient_tolerance;
    options.function_tolerance = 1e-15;
    options.parameter_tolerance = 1e-14;
    options.logging_type = ceres::SILENT;
    ceres::GradientProblem problem(new NegativeLogLikelihood(record, settings));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, x.data(), &summary);

    DensityMatrix rho(state_from_params(x.data()));
    if (summary.termination_type == ceres::NO_CONVERGENCE) {
        throw MleConvergenceError("mle_reconstruct: no convergence after " +
                                      std::to_string(summary.iterations.size()) + " iterations",
                                  rho, static_cast<int>(summary.iterations.size()));
    }
    // FAILURE here means the line search could not make progress at the precision limit; the
    // iterate is the best found and is returned as the estimate.
    return rho;
}

double pairs_per_setting_for_run(const DensityMatrix &rho, double pairs_per_run) {
    if (!(pairs_per_run > 0.0) || !std::isfinite(pairs_per_run)) {
        throw InvalidArgument("pairs_per_setting_for_run: pairs_per_run must be positive");
    }
    const auto p = born_probabilities(rho, canonical_settings());
    return pairs_per_run / std::accumulate(p.begin(), p.end(), 0.0);
}

ComplexMatrix phase_rotation_first_qubit(double phi) {
    Eigen::Matrix2cd rz = Eigen::Matrix2cd::Zero();
    rz(0, 0) = std::polar(1.0, -phi / 2.0);
    rz(1, 1) = std::polar(1.0, phi / 2.0);
    return Eigen::kroneckerProduct(rz, Eigen::Matrix2cd::Identity());
}

std::vector<DensityMatrix> generate_pool(const DensityMatrix &state, std::size_t count, const PoolOptions &opts) {
    if (count == 0) throw InvalidArgument("generate_pool: count must be at least 1");
    const DensityMatrix truth =
        opts.systematic_offset ? conjugate(state, phase_rotation_first_qubit(*opts.systematic_offset)) : state;
    const auto &settings = canonical_settings();
    std::vector<std::optional<DensityMatrix>> slots(count);
    parallel_for(count, opts.workers, [&](std::size_t i) {
        const auto record = simulate_counts(truth, opts.pairs_per_setting, opts.base_seed + i);
        slots[i].emplace(mle_reconstruct(record, settings, opts.mle));
    });
    std::vector<DensityMatrix> pool;
    pool.reserve(count);
    for (auto &s : slots) pool.push_back(std::move(*s));
    return pool;
}

}  // namespace ed3
