#include "ed3/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "ed3/parallel.hpp"

namespace ed3 {

namespace {

// Moves a uniform random sample of `count` indices to the front, in sampled order.
void partial_shuffle(std::vector<std::size_t> &idx, std::size_t count, std::mt19937_64 &rng) {
    for (std::size_t i = 0; i < count && i + 1 < idx.size(); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
}

const std::vector<bool> &require_labels(const ScoreReport &report) {
    if (!report.labels) throw InvalidArgument("score report carries no labels");
    const auto &labels = *report.labels;
    if (labels.size() != report.scores.size()) throw InvalidArgument("labels and scores differ in length");
    const auto positives = std::count(labels.begin(), labels.end(), true);
    if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
        throw InvalidArgument("ROC analysis needs at least one erroneous and one normal member");
    }
    return labels;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

LabeledDataset build_dataset(std::span<const AbsoluteMatrix> normal_pool, std::span<const AbsoluteMatrix> erroneous_pool,
                             std::size_t n_normal, std::size_t n_erroneous, std::uint64_t rng_seed) {
    const std::size_t total = n_normal + n_erroneous;
    if (2 * n_erroneous >= total) throw InvalidArgument("build_dataset: erroneous members must be fewer than half");
    if (n_normal > normal_pool.size() || n_erroneous > erroneous_pool.size()) {
        throw InvalidArgument("build_dataset: pool too small for the requested sample");
    }

    std::mt19937_64 rng(rng_seed);
    std::vector<std::size_t> normal_idx(normal_pool.size());
    std::iota(normal_idx.begin(), normal_idx.end(), 0);
    partial_shuffle(normal_idx, n_normal, rng);
    std::vector<std::size_t> erroneous_idx(erroneous_pool.size());
    std::iota(erroneous_idx.begin(), erroneous_idx.end(), 0);
    partial_shuffle(erroneous_idx, n_erroneous, rng);

    std::vector<MemberSource> sources;
    sources.reserve(total);
    for (std::size_t i = 0; i < n_normal; ++i) sources.push_back({false, normal_idx[i]});
    for (std::size_t i = 0; i < n_erroneous; ++i) sources.push_back({true, erroneous_idx[i]});
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    partial_shuffle(order, total, rng);

    std::vector<RealMatrix> matrices;
    std::vector<bool> labels;
    std::vector<MemberSource> shuffled;
    matrices.reserve(total);
    labels.reserve(total);
    shuffled.reserve(total);
    for (auto o : order) {
        const auto &src = sources[o];
        matrices.push_back(src.erroneous ? erroneous_pool[src.pool_index].matrix() : normal_pool[src.pool_index].matrix());
        labels.push_back(src.erroneous);
        shuffled.push_back(src);
    }
    return LabeledDataset{MatrixSet(std::move(matrices)), std::move(labels), n_normal, n_erroneous,
                          std::move(shuffled)};
}

Rates confusion_at_threshold(const ScoreReport &report, double threshold) {
    const auto &labels = require_labels(report);
    std::size_t positives = 0, negatives = 0, tp = 0, fp = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const bool detected = report.scores[k] > threshold;
        if (labels[k]) {
            ++positives;
            tp += detected;
        } else {
            ++negatives;
            fp += detected;
        }
    }
    return {static_cast<double>(tp) / static_cast<double>(positives),
            static_cast<double>(fp) / static_cast<double>(negatives)};
}

RocCurve roc_curve(const ScoreReport &report) {
    require_labels(report);
    std::vector<double> thresholds = report.scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), std::numeric_limits<double>::infinity());
    thresholds.push_back(-std::numeric_limits<double>::infinity());

    RocCurve curve;
    for (double t : thresholds) {
        const auto rates = confusion_at_threshold(report, t);
        const RocPoint p{rates.fdr, rates.tdr};
        if (!curve.points.empty() && curve.points.back() == p) continue;
        curve.points.push_back(p);
        curve.thresholds.push_back(t);
    }
    return curve;
}

double auc(const RocCurve &curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto &a = curve.points[i - 1];
        const auto &b = curve.points[i];
        area += (b.fdr - a.fdr) * (a.tdr + b.tdr) / 2.0;
    }
    return 100.0 * area;
}

double auc_pair_ordering(const ScoreReport &report) {
    const auto &labels = require_labels(report);
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (report.scores[i] > report.scores[j]) {
                wins += 1.0;
            } else if (report.scores[i] == report.scores[j]) {
                wins += 0.5;
            }
        }
    }
    return 100.0 * wins / static_cast<double>(pairs);
}

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    if (bins == 0 || !(hi > lo)) throw InvalidArgument("make_histogram: need at least one bin over a non-empty range");
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) {
        h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    }
    h.counts.assign(bins, 0);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        auto bin = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        h.counts[std::min(bin, bins - 1)] += 1;
    }
    return h;
}

AucSummary summarize_auc(std::vector<double> auc_values, std::size_t bins) {
    AucSummary summary;
    if (!auc_values.empty()) {
        summary.mean = std::accumulate(auc_values.begin(), auc_values.end(), 0.0) /
                       static_cast<double>(auc_values.size());
        summary.median = median_of(auc_values);
    }
    summary.histogram = make_histogram(auc_values, bins);
    summary.auc_values = std::move(auc_values);
    return summary;
}

std::vector<double> default_gamma_grid(std::span<const LabeledDataset> datasets, std::size_t n_points,
                                       double weight_floor) {
    if (datasets.empty() || n_points < 2) throw InvalidArgument("default_gamma_grid: need datasets and two points");
    std::vector<double> scales;
    scales.reserve(datasets.size());
    for (const auto &ds : datasets) scales.push_back(gamma_scale(ds.set, compute_weights(ds.set, weight_floor)));
    const double scale = median_of(scales);
    if (!(scale > 0.0)) throw InvalidArgument("default_gamma_grid: datasets have no spread");
    std::vector<double> grid(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double exponent = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n_points - 1);
        grid[i] = scale * std::pow(10.0, exponent);
    }
    return grid;
}

ScoreReport score_dataset(const LabeledDataset &dataset, DetectorKind detector, double gamma, const AdmmOptions &opts,
                          double weight_floor) {
    ScoreReport report;
    switch (detector) {
        case DetectorKind::naive:
            report = naive_scores(dataset.set);
            break;
        case DetectorKind::ed3:
            report = ed3_scores(solve_ed3(dataset.set, gamma, compute_weights(dataset.set, weight_floor), opts));
            break;
        case DetectorKind::oracle:
            for (bool l : dataset.labels) report.scores.push_back(l ? 1.0 : 0.0);
            break;
        case DetectorKind::constant:
            report.scores.assign(dataset.labels.size(), 0.0);
            break;
    }
    report.labels = dataset.labels;
    return report;
}

GammaTuning tune_gamma(std::span<const LabeledDataset> preliminary, std::span<const double> grid,
                       const AdmmOptions &opts, double weight_floor, unsigned workers) {
    if (grid.empty()) throw InvalidArgument("tune_gamma: empty grid");
    if (preliminary.empty()) throw InvalidArgument("tune_gamma: no preliminary datasets");
    for (double g : grid) {
        if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgument("tune_gamma: grid values must be positive");
    }

    const std::size_t n_ds = preliminary.size();
    std::vector<std::optional<double>> aucs(grid.size() * n_ds);
    parallel_for(aucs.size(), workers, [&](std::size_t job) {
        const double gamma = grid[job / n_ds];
        const auto &ds = preliminary[job % n_ds];
        try {
            const auto result = solve_ed3(ds.set, gamma, compute_weights(ds.set, weight_floor), opts);
            if (result.degenerate) return;
            auto report = ed3_scores(result);
            report.labels = ds.labels;
            aucs[job] = auc(roc_curve(report));
        } catch (const ConvergenceError &) {
        }
    });

    GammaTuning tuning;
    double best_min = -1.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        GammaCandidate cand{grid[g], true, std::numeric_limits<double>::infinity()};
        for (std::size_t d = 0; d < n_ds; ++d) {
            const auto &a = aucs[g * n_ds + d];
            if (!a) {
                cand.qualified = false;
                break;
            }
            cand.min_auc = std::min(cand.min_auc, *a);
        }
        if (!cand.qualified) cand.min_auc = 0.0;
        if (cand.qualified) best_min = std::max(best_min, cand.min_auc);
        tuning.candidates.push_back(cand);
    }
    if (best_min < 0.0) throw ConvergenceError("tune_gamma: every gamma in the grid was disqualified");

    // Among the gammas tied at the best minimum AUC take the upper median. The largest tied value
    // sits at the edge of the plateau and does not transfer to fresh datasets.
    constexpr double kTie = 1e-9;
    std::vector<double> tied;
    for (const auto &c : tuning.candidates) {
        if (c.qualified && c.min_auc >= best_min - kTie) tied.push_back(c.gamma);
    }
    std::sort(tied.begin(), tied.end());
    tuning.gamma = tied[tied.size() / 2];
    return tuning;
}

DetectorKind detector_kind_from_string(std::string_view s) {
    if (s == "naive") return DetectorKind::naive;
    if (s == "ed3") return DetectorKind::ed3;
    if (s == "oracle") return DetectorKind::oracle;
    if (s == "constant") return DetectorKind::constant;
    throw InvalidArgument("unknown detector '" + std::string(s) + "'");
}

AucSummary auc_distribution(const Pools &pools, const DatasetPlan &plan, DetectorKind detector, double gamma,
                            const AdmmOptions &opts, unsigned workers, std::size_t bins) {
    std::vector<double> values(plan.n_datasets);
    parallel_for(plan.n_datasets, workers, [&](std::size_t i) {
        const auto ds = build_dataset(pools.normal, pools.erroneous, plan.n_normal, plan.n_erroneous, plan.base_seed + i);
        values[i] = auc(roc_curve(score_dataset(ds, detector, gamma, opts)));
    });
    return summarize_auc(std::move(values), bins);
}

Comparison compare_detectors(const Pools &pools, const DatasetPlan &plan, double gamma, const AdmmOptions &opts,
                             unsigned workers, std::size_t bins) {
    Comparison out;
    out.naive.resize(plan.n_datasets);
    out.ed3.resize(plan.n_datasets);
    parallel_for(plan.n_datasets, workers, [&](std::size_t i) {
        const auto ds = build_dataset(pools.normal, pools.erroneous, plan.n_normal, plan.n_erroneous, plan.base_seed + i);
        out.naive[i] = score_dataset(ds, DetectorKind::naive, gamma, opts);
        out.ed3[i] = score_dataset(ds, DetectorKind::ed3, gamma, opts);
    });
    std::vector<double> naive_auc, ed3_auc;
    double delta = 0.0;
    for (std::size_t i = 0; i < plan.n_datasets; ++i) {
        naive_auc.push_back(auc(roc_curve(out.naive[i])));
        ed3_auc.push_back(auc(roc_curve(out.ed3[i])));
        delta += ed3_auc.back() - naive_auc.back();
    }
    out.paired_delta_mean = plan.n_datasets > 0 ? delta / static_cast<double>(plan.n_datasets) : 0.0;
    out.naive_auc = summarize_auc(std::move(naive_auc), bins);
    out.ed3_auc = summarize_auc(std::move(ed3_auc), bins);
    return out;
}

double paired_t_test_greater(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("paired_t_test_greater: need two equal samples");
    const auto n = static_cast<double>(a.size());
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) return mean > 0.0 ? 0.0 : 1.0;
    const double t = mean / (sd / std::sqrt(n));
    boost::math::students_t dist(n - 1.0);
    return boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace ed3
