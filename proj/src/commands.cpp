#include "ed3/commands.hpp"

#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>

#include "ed3/evaluation.hpp"
#include "ed3/json_io.hpp"

namespace ed3::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

void ensure_dir(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

json admm_config(const AdmmOptions &o) {
    json j = {{"penalty", o.penalty},
              {"max_iterations", o.max_iterations},
              {"primal_tolerance", o.primal_tolerance},
              {"dual_tolerance", o.dual_tolerance},
              {"adaptive_penalty", o.adaptive_penalty},
              {"boundary_tolerance", o.boundary_tolerance}};
    if (o.objective_scale) j["objective_scale"] = *o.objective_scale;
    return j;
}

json summary_json(const AucSummary &s) {
    return {{"auc_values", s.auc_values},
            {"mean", s.mean},
            {"median", s.median},
            {"histogram_counts", s.histogram.counts}};
}

std::string member_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "member_%05zu.json", i);
    return buf;
}

std::string roc_name(const char *method, std::size_t i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%04zu.csv", method, i);
    return buf;
}

// (1,2), (1,4), (2,2) in 1-based indexing, when the dimension has them.
std::vector<std::pair<int, int>> traced_elements(Eigen::Index dim) {
    std::vector<std::pair<int, int>> out;
    for (auto [i, j] : {std::pair{1, 2}, std::pair{1, 4}, std::pair{2, 2}}) {
        if (i <= dim && j <= dim) out.emplace_back(i, j);
    }
    return out;
}

}  // namespace

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const InvalidArgument &) {
        return kExitInvalidArgument;
    } catch (const ConvergenceError &) {
        return kExitConvergence;
    } catch (const IoError &) {
        return kExitIo;
    } catch (const fs::filesystem_error &) {
        return kExitIo;
    } catch (const json::exception &) {
        return kExitInvalidArgument;
    } catch (...) {
        return 1;
    }
}

void cmd_simulate(const SimulateConfig &cfg, std::ostream &log) {
    if (cfg.state != "normal" && cfg.state != "erroneous") {
        throw InvalidArgument("simulate: --state must be 'normal' or 'erroneous'");
    }
    if (cfg.n == 0) throw InvalidArgument("simulate: --n must be at least 1");
    const double lambda = cfg.state == "normal" ? 0.0 : cfg.lambda;
    const DensityMatrix state = cfg.state == "normal" ? density_of(bell_state()) : erroneous_state(lambda);
    const double pairs = cfg.pairs_per_setting ? *cfg.pairs_per_setting : pairs_per_setting_for_run(state, cfg.pairs_per_run);
    if (!(pairs > 0.0)) throw InvalidArgument("simulate: --pairs must be positive");

    PoolOptions opts;
    opts.pairs_per_setting = pairs;
    opts.base_seed = cfg.seed;
    opts.systematic_offset = cfg.phase_offset;
    opts.mle = cfg.mle;
    opts.workers = cfg.workers;
    const auto pool = generate_pool(state, cfg.n, opts);

    ensure_dir(cfg.out);
    io::PoolManifest manifest{cfg.state, lambda, cfg.n, pairs, cfg.seed, cfg.phase_offset, {}};
    double coherence = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        manifest.members.push_back(member_name(i));
        io::write_json(cfg.out / manifest.members.back(), io::to_json(pool[i]));
        coherence += std::abs(pool[i](0, 3));
    }
    io::write_json(cfg.out / "manifest.json", io::to_json(manifest));
    log << "simulated " << pool.size() << " " << cfg.state << " reconstructions into " << cfg.out.string()
        << "; mean |rho(1,4)| = " << coherence / static_cast<double>(pool.size()) << "\n";
}

void cmd_sample(const SampleConfig &cfg, std::ostream &log) {
    const auto normal = io::load_pool_absolute(cfg.normal_pool);
    const auto erroneous = io::load_pool_absolute(cfg.erroneous_pool);
    const auto ds = build_dataset(normal, erroneous, cfg.n_normal, cfg.n_erroneous, cfg.seed);
    if (cfg.out.has_parent_path()) ensure_dir(cfg.out.parent_path());
    io::write_json(cfg.out, io::to_json(io::to_dataset_file(ds)));
    log << "sampled " << ds.set.size() << " matrices (" << ds.n_erroneous << " erroneous) into " << cfg.out.string()
        << "\n";
}

void cmd_detect(const DetectConfig &cfg, std::ostream &log) {
    const bool run_naive = cfg.method == "naive" || cfg.method == "both";
    const bool run_ed3 = cfg.method == "ed3" || cfg.method == "both";
    if (!run_naive && !run_ed3) throw InvalidArgument("detect: --method must be naive, ed3 or both");
    if (run_ed3 && !cfg.gamma) throw InvalidArgument("detect: --gamma is required for ed3");

    const auto file = io::dataset_from_json(io::read_json(cfg.input));
    const MatrixSet set(file.matrices);
    ensure_dir(cfg.out);

    std::optional<ScoreReport> naive;
    if (run_naive) {
        naive = naive_scores(set);
        naive->labels = file.labels;
        io::write_json(cfg.out / "scores_naive.json", io::to_json(*naive));
    }

    std::optional<ScoreReport> ed3;
    std::optional<DecompositionResult> decomposition;
    std::exception_ptr failure;
    if (run_ed3) {
        const auto weights = compute_weights(set, cfg.weight_floor);
        try {
            decomposition = solve_ed3(set, *cfg.gamma, weights, cfg.admm);
        } catch (const AdmmConvergenceError &e) {
            decomposition = e.best_iterate();
            failure = std::current_exception();
        }
        ed3 = ed3_scores(*decomposition);
        ed3->labels = file.labels;
        io::write_json(cfg.out / "decomposition.json", io::to_json(*decomposition));
        io::write_json(cfg.out / "scores_ed3.json", io::to_json(*ed3));
    }

    std::ostringstream table;
    table.precision(17);
    const auto elements = traced_elements(set.dim());
    table << "k,erroneous";
    for (auto [i, j] : elements) table << ",raw_" << i << '_' << j;
    if (naive) table << ",naive_score";
    if (decomposition) {
        for (auto [i, j] : elements) table << ",estimated_" << i << '_' << j;
        table << ",ed3_score";
    }
    table << '\n';
    for (std::size_t k = 0; k < set.size(); ++k) {
        table << k + 1 << ',';
        if (file.labels) table << ((*file.labels)[k] ? 1 : 0);
        for (auto [i, j] : elements) table << ',' << set[k](i - 1, j - 1);
        if (naive) table << ',' << naive->scores[k];
        if (decomposition) {
            const RealMatrix estimate = decomposition->theta + decomposition->omegas[k];
            for (auto [i, j] : elements) table << ',' << estimate(i - 1, j - 1);
            table << ',' << ed3->scores[k];
        }
        table << '\n';
    }
    io::write_text(cfg.out / "trace_table.csv", table.str());

    json echo = {{"input", cfg.input.string()}, {"method", cfg.method}, {"weight_floor", cfg.weight_floor}};
    if (cfg.gamma) echo["gamma"] = *cfg.gamma;
    echo["admm"] = admm_config(cfg.admm);
    if (failure) echo["converged"] = false;
    io::write_json(cfg.out / "detect_config.json", echo);

    log << "scored " << set.size() << " matrices into " << cfg.out.string() << "\n";
    if (failure) std::rethrow_exception(failure);
}

void cmd_evaluate(const EvaluateConfig &cfg, std::ostream &log) {
    if (cfg.n_datasets == 0) throw InvalidArgument("evaluate: --n-datasets must be at least 1");
    if (cfg.n_erroneous == 0) throw InvalidArgument("evaluate: ROC analysis needs --n-erroneous >= 1");
    if (!cfg.gamma && cfg.n_preliminary == 0) throw InvalidArgument("evaluate: need --gamma or preliminary datasets");

    const auto normal = io::load_pool_absolute(cfg.normal_pool);
    const auto erroneous = io::load_pool_absolute(cfg.erroneous_pool);
    const Pools pools{normal, erroneous};

    // Preliminary datasets use seeds seed .. seed+P-1, evaluation datasets the next n_datasets.
    double gamma = cfg.gamma.value_or(0.0);
    std::optional<GammaTuning> tuning;
    if (!cfg.gamma) {
        std::vector<LabeledDataset> preliminary;
        for (std::size_t i = 0; i < cfg.n_preliminary; ++i) {
            preliminary.push_back(build_dataset(normal, erroneous, cfg.n_normal, cfg.n_erroneous, cfg.seed + i));
        }
        const auto grid = cfg.grid.empty() ? default_gamma_grid(preliminary) : cfg.grid;
        tuning = tune_gamma(preliminary, grid, cfg.admm, kDefaultWeightFloor, cfg.workers);
        gamma = tuning->gamma;
        log << "tuned gamma = " << gamma << " on " << preliminary.size() << " preliminary datasets\n";
    }

    const DatasetPlan plan{cfg.n_datasets, cfg.n_normal, cfg.n_erroneous, cfg.seed + cfg.n_preliminary};
    const auto cmp = compare_detectors(pools, plan, gamma, cfg.admm, cfg.workers, cfg.bins);

    ensure_dir(cfg.out);
    json report = {{"gamma", gamma},
                   {"n_datasets", cfg.n_datasets},
                   {"naive", summary_json(cmp.naive_auc)},
                   {"ed3", summary_json(cmp.ed3_auc)},
                   {"histogram_bins", cmp.ed3_auc.histogram.edges},
                   {"paired_delta_mean", cmp.paired_delta_mean}};
    if (cfg.n_datasets >= 2) {
        report["paired_p_value"] = paired_t_test_greater(cmp.ed3_auc.auc_values, cmp.naive_auc.auc_values);
    }
    if (tuning) {
        json candidates = json::array();
        for (const auto &c : tuning->candidates) {
            candidates.push_back({{"gamma", c.gamma}, {"qualified", c.qualified}, {"min_auc", c.min_auc}});
        }
        report["tuning"] = candidates;
    }
    if (cfg.oracle_self_test) {
        const auto oracle = auc_distribution(pools, plan, DetectorKind::oracle, gamma, cfg.admm, cfg.workers, cfg.bins);
        report["oracle"] = summary_json(oracle);
        log << "oracle self-test mean AUC = " << oracle.mean << "\n";
    }
    json echo = {{"normal_pool", cfg.normal_pool.string()},
                 {"erroneous_pool", cfg.erroneous_pool.string()},
                 {"n_preliminary", cfg.n_preliminary},
                 {"n_normal", cfg.n_normal},
                 {"n_erroneous", cfg.n_erroneous},
                 {"seed", cfg.seed},
                 {"bins", cfg.bins},
                 {"grid", cfg.grid},
                 {"admm", admm_config(cfg.admm)}};
    if (cfg.gamma) echo["gamma"] = *cfg.gamma;
    report["config"] = echo;
    io::write_json(cfg.out / "report.json", report);

    std::ostringstream hist;
    hist.precision(17);
    hist << "bin_lo,bin_hi,naive,ed3\n";
    const auto &edges = cmp.ed3_auc.histogram.edges;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        hist << edges[b] << ',' << edges[b + 1] << ',' << cmp.naive_auc.histogram.counts[b] << ','
             << cmp.ed3_auc.histogram.counts[b] << '\n';
    }
    io::write_text(cfg.out / "histogram.csv", hist.str());

    if (cfg.write_roc) {
        ensure_dir(cfg.out / "roc");
        for (std::size_t i = 0; i < cfg.n_datasets; ++i) {
            io::write_text(cfg.out / "roc" / roc_name("naive", i), io::roc_csv(roc_curve(cmp.naive[i])));
            io::write_text(cfg.out / "roc" / roc_name("ed3", i), io::roc_csv(roc_curve(cmp.ed3[i])));
        }
    }
    log << "mean AUC naive = " << cmp.naive_auc.mean << ", ed3 = " << cmp.ed3_auc.mean
        << " (paired delta " << cmp.paired_delta_mean << ") over " << cfg.n_datasets << " datasets\n";
}

}  // namespace ed3::cli
