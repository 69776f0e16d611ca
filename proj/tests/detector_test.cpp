#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "ed3/detector.hpp"
#include "instances.hpp"
#include "primal_oracle.hpp"

using namespace ed3;
using ed3::testing::random_instance;

namespace {

RealMatrix sym(double a, double b, double c) {
    RealMatrix m(2, 2);
    m << a, b, b, c;
    return m;
}

struct Solved {
    MatrixSet set;
    WeightMatrix weights;
    double gamma;
    DecompositionResult result;
};

Solved solve_random(std::mt19937_64 &rng, std::size_t K, Eigen::Index d, double gamma_fraction,
                    const AdmmOptions &opts = {}) {
    MatrixSet set(random_instance(rng, K, d));
    WeightMatrix w = compute_weights(set);
    const double gamma = gamma_fraction * gamma_upper_bracket(set, w);
    auto result = solve_ed3(set, gamma, w, opts);
    return {std::move(set), std::move(w), gamma, std::move(result)};
}

}  // namespace

TEST(MatrixSet, Validation) {
    EXPECT_THROW(MatrixSet(std::vector<RealMatrix>{sym(1, 0, 0)}), InvalidArgument);
    EXPECT_THROW(MatrixSet(std::vector<RealMatrix>{sym(1, 0, 0), RealMatrix::Zero(3, 3)}), InvalidArgument);
    EXPECT_NO_THROW(MatrixSet(std::vector<RealMatrix>{sym(1, 0, 0), sym(0, -1, 0)}));
}

TEST(WeightMatrix, RequiresPositiveEntries) {
    EXPECT_THROW(WeightMatrix(sym(1, 0, 1)), InvalidArgument);
    EXPECT_NO_THROW(WeightMatrix(sym(1, 2, 3)));
}

TEST(DataAverage, Examples) {
    const RealMatrix m = sym(0.3, 0.1, 0.7);
    EXPECT_TRUE(data_average(MatrixSet({m, m, m})).isApprox(m));
    EXPECT_TRUE(data_average(MatrixSet({m, RealMatrix(-m)})).isZero(0.0));
    EXPECT_NEAR(data_average(MatrixSet({sym(0.1, 0, 0), sym(0.2, 0, 0), sym(0.6, 0, 0)}))(0, 0), 0.3, 1e-15);
}

TEST(NaiveScores, IdenticalSetScoresZero) {
    const RealMatrix m = sym(0.3, 0.1, 0.7);
    const auto r = naive_scores(MatrixSet({m, m, m, m}));
    EXPECT_EQ(r.method, ScoreMethod::naive);
    for (double s : r.scores) EXPECT_EQ(s, 0.0);
}

TEST(NaiveScores, RankOnePairSplitsDeviation) {
    Eigen::Vector2d u(0.6, 0.8);
    const RealMatrix delta = 0.2 * u * u.transpose();
    const RealMatrix m = sym(0.5, 0.2, 0.5);
    const auto r = naive_scores(MatrixSet({m, RealMatrix(m + delta)}));
    EXPECT_NEAR(r.scores[0], 0.1, 1e-14);
    EXPECT_NEAR(r.scores[1], 0.1, 1e-14);
}

TEST(NaiveScores, PermutationEquivariant) {
    std::mt19937_64 rng(2);
    auto ms = random_instance(rng, 6, 3);
    const auto a = naive_scores(MatrixSet(ms)).scores;
    std::reverse(ms.begin(), ms.end());
    auto b = naive_scores(MatrixSet(ms)).scores;
    std::reverse(b.begin(), b.end());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
}

TEST(Weights, UnitDeviationGivesTen) {
    const MatrixSet set({sym(0.4, 0.2, 0.5), sym(0.6, 0.2, 0.5)});
    const auto w = compute_weights(set);
    EXPECT_NEAR(w.matrix()(0, 0), 10.0, 1e-12);
}

TEST(Weights, ZeroVarianceUsesFloor) {
    const MatrixSet set({sym(0.4, 0.2, 0.5), sym(0.6, 0.2, 0.5)});
    EXPECT_NEAR(compute_weights(set).matrix()(0, 1), 1e6, 1e-6);
    EXPECT_NEAR(compute_weights(set, 1e-4).matrix()(1, 1), 100.0, 1e-9);
}

TEST(Weights, InverseHomogeneity) {
    std::mt19937_64 rng(4);
    const auto ms = random_instance(rng, 5, 3);
    std::vector<RealMatrix> scaled;
    for (const auto &m : ms) scaled.push_back(3.0 * m);
    const RealMatrix w1 = compute_weights(MatrixSet(ms)).matrix();
    const RealMatrix w3 = compute_weights(MatrixSet(scaled)).matrix();
    EXPECT_TRUE((3.0 * w3).isApprox(w1, 1e-12));
}

TEST(Solve, RejectsBadGammaAndDimension) {
    const MatrixSet set({sym(0.4, 0.2, 0.5), sym(0.6, 0.1, 0.5)});
    const auto w = compute_weights(set);
    EXPECT_THROW(solve_ed3(set, 0.0, w), InvalidArgument);
    EXPECT_THROW(solve_ed3(set, -1.0, w), InvalidArgument);
    EXPECT_THROW(solve_ed3(set, 1.0, WeightMatrix(RealMatrix::Ones(3, 3))), InvalidArgument);
}

TEST(Solve, IdenticalMatricesCollapse) {
    const RealMatrix m = sym(0.3, 0.1, 0.7);
    const MatrixSet set({m, m, m, m});
    const auto r = solve_ed3(set, 0.5, compute_weights(set));
    EXPECT_TRUE(r.theta.isApprox(m, 1e-12));
    for (std::size_t k = 0; k < set.size(); ++k) {
        EXPECT_TRUE(r.omegas[k].isZero(0.0));
        EXPECT_LE(r.zetas[k].norm(), 1e-12);
    }
    for (double s : ed3_scores(r).scores) EXPECT_EQ(s, 0.0);
}

TEST(Solve, AboveBracketAllGroupsInactive) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 20; ++t) {
        const auto s = solve_random(rng, 5, 3, 1.05);
        EXPECT_FALSE(s.result.degenerate);
        EXPECT_TRUE(s.result.theta.isApprox(data_average(s.set), 1e-8));
        for (std::size_t k = 0; k < s.set.size(); ++k) {
            EXPECT_TRUE(s.result.omegas[k].isZero(0.0));
            EXPECT_FALSE(s.result.active_set[k]);
        }
    }
}

TEST(Solve, MatchesPrimalOracle) {
    std::mt19937_64 rng(8);
    int compared = 0;
    for (int t = 0; t < 6; ++t) {
        const auto s = solve_random(rng, 3 + t % 4, 2 + t % 2, 0.3 + 0.1 * t);
        if (s.result.degenerate) continue;
        ++compared;
        const auto oracle = ed3::testing::primal_oracle(s.set.matrices(), s.weights.matrix(), s.gamma);
        const double ours =
            primal_objective(s.set, s.weights, s.gamma, s.result.theta, s.result.omegas);
        EXPECT_NEAR(ours, oracle.objective, 1e-4 * std::abs(oracle.objective)) << t;
        EXPECT_NEAR(ed3::testing::oracle_objective(s.set.matrices(), s.weights.matrix(), s.gamma, s.result.theta,
                                                   s.result.omegas),
                    ours, 1e-12 * std::abs(ours));
    }
    EXPECT_GE(compared, 4);
}

TEST(Solve, KktInvariants) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> frac(0.05, 1.2);
    for (int t = 0; t < 60; ++t) {
        const auto s = solve_random(rng, 3 + t % 10, 2 + t % 3, frac(rng));
        RealMatrix sum = RealMatrix::Zero(s.set.dim(), s.set.dim());
        for (std::size_t k = 0; k < s.set.size(); ++k) {
            sum += s.result.zetas[k];
            const double zn = s.result.zetas[k].norm();
            EXPECT_LE(zn, s.gamma * (1.0 + 1e-6));
            EXPECT_TRUE(s.result.omegas[k].norm() <= kSparsityEpsilon || zn >= s.gamma * (1.0 - 1e-4));
            EXPECT_EQ(s.result.active_set[k], s.result.omegas[k].norm() > kSparsityEpsilon);
        }
        EXPECT_LE(sum.cwiseAbs().maxCoeff(), 1e-6);
        // (1/K) sum_k (theta + omega_k) = mean follows from sum_k zeta_k = 0 when not degenerate.
        if (!s.result.degenerate) {
            RealMatrix fitted = RealMatrix::Zero(s.set.dim(), s.set.dim());
            for (const auto &o : s.result.omegas) fitted += s.result.theta + o;
            fitted /= static_cast<double>(s.set.size());
            EXPECT_LE((fitted - data_average(s.set)).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(Solve, ObjectiveScaleDoesNotMoveTheMinimizer) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 10; ++t) {
        MatrixSet set(random_instance(rng, 6, 3));
        const auto w = compute_weights(set);
        const double gamma = 0.4 * gamma_upper_bracket(set, w);
        AdmmOptions a, b;
        a.objective_scale = 0.5;
        b.objective_scale = 1.0 / 6.0;
        const auto ra = solve_ed3(set, gamma, w, a);
        const auto rb = solve_ed3(set, gamma, w, b);
        for (std::size_t k = 0; k < set.size(); ++k) EXPECT_LE((ra.zetas[k] - rb.zetas[k]).norm(), 1e-5 * gamma);
    }
}

TEST(Solve, MonotoneSparsification) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 10; ++t) {
        MatrixSet set(random_instance(rng, 12, 3, 3));
        const auto w = compute_weights(set);
        const double top = gamma_upper_bracket(set, w);
        std::ptrdiff_t previous = static_cast<std::ptrdiff_t>(set.size());
        for (double f : {0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.01}) {
            const auto r = solve_ed3(set, f * top, w);
            const auto active = std::count(r.active_set.begin(), r.active_set.end(), true);
            EXPECT_LE(active, previous + 1) << f;
            previous = active;
        }
        EXPECT_EQ(previous, 0);
    }
}

TEST(Solve, BitIdenticalReruns) {
    std::mt19937_64 rng(16);
    MatrixSet set(random_instance(rng, 8, 4));
    const auto w = compute_weights(set);
    const auto a = solve_ed3(set, 0.3 * gamma_upper_bracket(set, w), w);
    const auto b = solve_ed3(set, 0.3 * gamma_upper_bracket(set, w), w);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_TRUE(a.theta == b.theta);
    for (std::size_t k = 0; k < set.size(); ++k) {
        EXPECT_TRUE(a.zetas[k] == b.zetas[k]);
        EXPECT_TRUE(a.omegas[k] == b.omegas[k]);
    }
}

TEST(Solve, IterationCapRaisesWithBestIterate) {
    std::mt19937_64 rng(18);
    MatrixSet set(random_instance(rng, 8, 3));
    const auto w = compute_weights(set);
    AdmmOptions opts;
    opts.max_iterations = 2;
    try {
        solve_ed3(set, 0.3 * gamma_upper_bracket(set, w), w, opts);
        FAIL() << "expected AdmmConvergenceError";
    } catch (const AdmmConvergenceError &e) {
        EXPECT_EQ(e.best_iterate().omegas.size(), set.size());
        EXPECT_EQ(e.best_iterate().iterations, 2);
    }
}

TEST(RecoverPrimal, AllInteriorAveragesFit) {
    const MatrixSet set({sym(0.4, 0.2, 0.5), sym(0.6, 0.1, 0.5), sym(0.5, 0.3, 0.2)});
    const WeightMatrix w(RealMatrix::Ones(2, 2));
    const std::vector<RealMatrix> zetas(3, RealMatrix::Zero(2, 2));
    const auto r = recover_primal(set, zetas, w, 1.0, 1e-6);
    EXPECT_FALSE(r.degenerate);
    EXPECT_TRUE(r.theta.isApprox(data_average(set), 1e-15));
    for (const auto &o : r.omegas) EXPECT_TRUE(o.isZero(0.0));
}

TEST(RecoverPrimal, OneBoundaryGroup) {
    const MatrixSet set({sym(0.4, 0.2, 0.5), sym(0.6, 0.1, 0.5), sym(0.5, 0.3, 0.2)});
    const WeightMatrix w(RealMatrix::Constant(2, 2, 2.0));
    std::vector<RealMatrix> zetas(3, RealMatrix::Zero(2, 2));
    zetas[1] = sym(0.5, 0.5, 0.5);  // norm 1 = gamma
    zetas[0] = -0.5 * zetas[1];
    zetas[2] = -0.5 * zetas[1];
    const auto r = recover_primal(set, zetas, w, 1.0, 1e-6);
    const RealMatrix fit0 = set[0] - 2.0 * zetas[0];
    const RealMatrix fit2 = set[2] - 2.0 * zetas[2];
    const RealMatrix theta = 0.5 * (fit0 + fit2);
    EXPECT_TRUE(r.theta.isApprox(theta, 1e-15));
    EXPECT_TRUE(r.omegas[0].isZero(0.0));
    EXPECT_TRUE(r.omegas[2].isZero(0.0));
    EXPECT_TRUE(r.omegas[1].isApprox(RealMatrix(set[1] - 2.0 * zetas[1] - theta), 1e-15));
}

TEST(RecoverPrimal, EmptyInactiveSetIsFlagged) {
    const MatrixSet set({sym(0.4, 0.2, 0.5), sym(0.6, 0.1, 0.5)});
    const WeightMatrix w(RealMatrix::Ones(2, 2));
    const RealMatrix z = sym(0.5, 0.5, 0.5);
    const std::vector<RealMatrix> zetas{z, RealMatrix(-z)};
    const auto r = recover_primal(set, zetas, w, 1.0, 1e-6);
    EXPECT_TRUE(r.degenerate);
    RealMatrix fitted = RealMatrix::Zero(2, 2);
    for (std::size_t k = 0; k < 2; ++k) fitted += r.theta + r.omegas[k];
    EXPECT_TRUE((0.5 * fitted).isApprox(data_average(set), 1e-12));
}

TEST(Ed3Scores, RankOneDeviation) {
    DecompositionResult r;
    r.theta = RealMatrix::Zero(2, 2);
    Eigen::Vector2d u(0.6, 0.8);
    r.omegas = {RealMatrix::Zero(2, 2), RealMatrix(0.12 * u * u.transpose()), RealMatrix::Zero(2, 2)};
    const auto s = ed3_scores(r);
    EXPECT_EQ(s.method, ScoreMethod::ed3);
    EXPECT_EQ(s.scores[0], 0.0);
    EXPECT_NEAR(s.scores[1], 0.12, 1e-14);
    EXPECT_EQ(s.scores[2], 0.0);
}

TEST(Ed3Scores, PermutationEquivariant) {
    std::mt19937_64 rng(20);
    auto ms = random_instance(rng, 7, 3, 2);
    auto score = [](const std::vector<RealMatrix> &m) {
        MatrixSet set(m);
        const auto w = compute_weights(set);
        return ed3_scores(solve_ed3(set, 0.5 * gamma_upper_bracket(set, w), w)).scores;
    };
    const auto a = score(ms);
    std::reverse(ms.begin(), ms.end());
    auto b = score(ms);
    std::reverse(b.begin(), b.end());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-6);
}

TEST(ScoreMethod, StringRoundTrip) {
    EXPECT_EQ(score_method_from_string(to_string(ScoreMethod::ed3)), ScoreMethod::ed3);
    EXPECT_EQ(score_method_from_string(to_string(ScoreMethod::naive)), ScoreMethod::naive);
    EXPECT_THROW(score_method_from_string("other"), InvalidArgument);
}
