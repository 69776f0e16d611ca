#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ed3/detector.hpp"
#include "ed3/linalg.hpp"

namespace ed3 {

/// Where a dataset member was drawn from.
struct MemberSource {
    bool erroneous = false;
    std::size_t pool_index = 0;

    friend bool operator==(const MemberSource &, const MemberSource &) = default;
};

/// A shuffled sample of normal and erroneous matrices with ground-truth labels
/// (true = erroneous). Fewer than half the members are erroneous.
struct LabeledDataset {
    MatrixSet set;
    std::vector<bool> labels;
    std::size_t n_normal = 0;
    std::size_t n_erroneous = 0;
    std::vector<MemberSource> sources;
};

struct RocPoint {
    double fdr = 0.0;
    double tdr = 0.0;

    friend bool operator==(const RocPoint &, const RocPoint &) = default;
};

/// Points ordered by non-decreasing fdr, from (0, 0) to (1, 1). thresholds[i] produced points[i]
/// under the rule score > threshold; the sentinels are +inf and -inf.
struct RocCurve {
    std::vector<RocPoint> points;
    std::vector<double> thresholds;
};

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};

/// AUC values in percent.
struct AucSummary {
    std::vector<double> auc_values;
    double mean = 0.0;
    double median = 0.0;
    Histogram histogram;
};

struct Rates {
    double tdr = 0.0;
    double fdr = 0.0;
};

/// Samples without replacement from each pool and shuffles the members. Deterministic in `rng_seed`.
LabeledDataset build_dataset(std::span<const AbsoluteMatrix> normal_pool, std::span<const AbsoluteMatrix> erroneous_pool,
                             std::size_t n_normal, std::size_t n_erroneous, std::uint64_t rng_seed);

/// Detection rule e_k > threshold. Requires labels with at least one member of each class.
Rates confusion_at_threshold(const ScoreReport &report, double threshold);

RocCurve roc_curve(const ScoreReport &report);

/// Trapezoidal area under the curve, in percent.
double auc(const RocCurve &curve);

/// Fraction of (erroneous, normal) pairs ranked correctly, ties counted as one half, in percent.
double auc_pair_ordering(const ScoreReport &report);

/// Equal-width bins over [lo, hi]; the last bin is closed on the right.
Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo = 0.0, double hi = 100.0);

AucSummary summarize_auc(std::vector<double> auc_values, std::size_t bins = 20);

struct GammaCandidate {
    double gamma = 0.0;
    bool qualified = false;
    double min_auc = 0.0;
};

struct GammaTuning {
    double gamma = 0.0;
    std::vector<GammaCandidate> candidates;
};

/// 16 (by default) log-spaced values over [0.01, 100] times the median gamma_scale of the datasets.
std::vector<double> default_gamma_grid(std::span<const LabeledDataset> datasets, std::size_t n_points = 16,
                                       double weight_floor = kDefaultWeightFloor);

/// Picks the gamma maximizing the minimum AUC over the datasets. Ties resolve to the upper
/// median of the tied gammas.
/// A gamma is disqualified if any solve fails to converge or is boundary-degenerate.
GammaTuning tune_gamma(std::span<const LabeledDataset> preliminary, std::span<const double> grid,
                       const AdmmOptions &opts = {}, double weight_floor = kDefaultWeightFloor, unsigned workers = 1);

/// oracle scores each member by its label and constant gives every member the same score; both
/// exist to sanity-check the harness.
enum class DetectorKind { naive, ed3, oracle, constant };

DetectorKind detector_kind_from_string(std::string_view s);

struct Pools {
    std::span<const AbsoluteMatrix> normal;
    std::span<const AbsoluteMatrix> erroneous;
};

struct DatasetPlan {
    std::size_t n_datasets = 100;
    std::size_t n_normal = 25;
    std::size_t n_erroneous = 5;
    /// Dataset i is sampled with seed base_seed + i.
    std::uint64_t base_seed = 0;
};

/// Scores one labelled dataset with the given detector.
ScoreReport score_dataset(const LabeledDataset &dataset, DetectorKind detector, double gamma,
                          const AdmmOptions &opts = {}, double weight_floor = kDefaultWeightFloor);

AucSummary auc_distribution(const Pools &pools, const DatasetPlan &plan, DetectorKind detector, double gamma,
                            const AdmmOptions &opts = {}, unsigned workers = 1, std::size_t bins = 20);

/// Naive and ED3 scores on the same datasets, for paired comparison.
struct Comparison {
    std::vector<ScoreReport> naive;
    std::vector<ScoreReport> ed3;
    AucSummary naive_auc;
    AucSummary ed3_auc;
    /// mean over datasets of AUC(ed3) - AUC(naive).
    double paired_delta_mean = 0.0;
};

Comparison compare_detectors(const Pools &pools, const DatasetPlan &plan, double gamma, const AdmmOptions &opts = {},
                             unsigned workers = 1, std::size_t bins = 20);

/// One-sided paired t-test of mean(a - b) > 0. Returns the p-value.
double paired_t_test_greater(std::span<const double> a, std::span<const double> b);

}  // namespace ed3
