#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "ed3/commands.hpp"

namespace {

// --out falls back to $ED3_OUTPUT_DIR/<subcommand>.
std::filesystem::path resolve_out(const std::string &given, const char *subcommand) {
    if (!given.empty()) return given;
    if (const char *env = std::getenv("ED3_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env) / subcommand;
    }
    throw ed3::InvalidArgument(std::string(subcommand) + ": --out is required (or set ED3_OUTPUT_DIR)");
}

void add_admm_options(CLI::App *cmd, ed3::AdmmOptions &admm) {
    cmd->add_option("--admm-penalty", admm.penalty, "Initial ADMM penalty")->check(CLI::PositiveNumber);
    cmd->add_option("--admm-max-iterations", admm.max_iterations, "ADMM iteration cap")->check(CLI::PositiveNumber);
    cmd->add_option("--admm-tolerance", admm.primal_tolerance, "Primal residual tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--admm-dual-tolerance", admm.dual_tolerance, "Dual residual tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("!--no-adaptive-penalty", admm.adaptive_penalty, "Keep the ADMM penalty fixed");
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Detect decohered density matrices among tomographic reconstructions"};
    app.require_subcommand(1);

    ed3::cli::SimulateConfig sim;
    std::string sim_out;
    std::optional<double> phase_offset;
    auto *simulate = app.add_subcommand("simulate", "Simulate tomography counts and reconstruct a pool of states");
    simulate->add_option("--state", sim.state, "normal or erroneous")
        ->check(CLI::IsMember({"normal", "erroneous"}));
    simulate->add_option("--lambda", sim.lambda, "Dephasing weight of the erroneous state")->check(CLI::Range(0.0, 0.5));
    simulate->add_option("--n", sim.n, "Pool size")->check(CLI::PositiveNumber);
    auto *pairs_opt = simulate->add_option("--pairs", sim.pairs_per_setting, "Mean photon pairs per setting")
                          ->check(CLI::PositiveNumber);
    simulate->add_option("--pairs-per-run", sim.pairs_per_run, "Expected coincidences per 16-setting run")
        ->check(CLI::PositiveNumber)
        ->excludes(pairs_opt);
    simulate->add_option("--seed", sim.seed, "Base seed; member i uses seed + i");
    simulate->add_option("--phase-offset", phase_offset, "Systematic phase bias on qubit a, radians");
    simulate->add_option("--mle-max-iterations", sim.mle.max_iterations)->check(CLI::PositiveNumber);
    simulate->add_option("--workers", sim.workers, "Worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim_out, "Output directory");

    ed3::cli::SampleConfig sample;
    std::string sample_out;
    auto *sample_cmd = app.add_subcommand("sample", "Draw one labelled dataset from a normal and an erroneous pool");
    sample_cmd->add_option("--normal", sample.normal_pool, "Normal pool manifest or directory")->required();
    sample_cmd->add_option("--erroneous", sample.erroneous_pool, "Erroneous pool manifest or directory")->required();
    sample_cmd->add_option("--n-normal", sample.n_normal);
    sample_cmd->add_option("--n-erroneous", sample.n_erroneous);
    sample_cmd->add_option("--seed", sample.seed);
    sample_cmd->add_option("--out", sample_out, "Output dataset file");

    ed3::cli::DetectConfig detect;
    std::string detect_out;
    std::optional<double> detect_gamma;
    auto *detect_cmd = app.add_subcommand("detect", "Score the matrices of a dataset file");
    detect_cmd->add_option("--in", detect.input, "Dataset file")->required()->check(CLI::ExistingFile);
    detect_cmd->add_option("--method", detect.method, "naive, ed3 or both")
        ->check(CLI::IsMember({"naive", "ed3", "both"}));
    detect_cmd->add_option("--gamma", detect_gamma, "Regularization strength for ed3")->check(CLI::PositiveNumber);
    detect_cmd->add_option("--weight-floor", detect.weight_floor)->check(CLI::PositiveNumber);
    add_admm_options(detect_cmd, detect.admm);
    detect_cmd->add_option("--out", detect_out, "Output directory");

    ed3::cli::EvaluateConfig eval;
    std::string eval_out;
    std::optional<double> eval_gamma;
    auto *evaluate = app.add_subcommand("evaluate", "Tune gamma and compare AUC distributions of both detectors");
    evaluate->add_option("--normal", eval.normal_pool, "Normal pool manifest or directory")->required();
    evaluate->add_option("--erroneous", eval.erroneous_pool, "Erroneous pool manifest or directory")->required();
    evaluate->add_option("--n-datasets", eval.n_datasets)->check(CLI::PositiveNumber);
    evaluate->add_option("--n-preliminary", eval.n_preliminary);
    evaluate->add_option("--n-normal", eval.n_normal);
    evaluate->add_option("--n-erroneous", eval.n_erroneous);
    evaluate->add_option("--seed", eval.seed);
    evaluate->add_option("--grid", eval.grid, "Gamma grid (default: 16 log-spaced, data-scaled)");
    evaluate->add_option("--gamma", eval_gamma, "Fixed gamma; skips tuning")->check(CLI::PositiveNumber);
    evaluate->add_option("--bins", eval.bins, "AUC histogram bins")->check(CLI::PositiveNumber);
    evaluate->add_flag("--oracle-self-test", eval.oracle_self_test, "Also score with the ground-truth labels");
    evaluate->add_flag("!--no-roc", eval.write_roc, "Skip per-dataset ROC files");
    evaluate->add_option("--workers", eval.workers, "Worker threads")->check(CLI::PositiveNumber);
    add_admm_options(evaluate, eval.admm);
    evaluate->add_option("--out", eval_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ed3::cli::kExitInvalidArgument;
    }

    try {
        if (simulate->parsed()) {
            sim.phase_offset = phase_offset;
            sim.out = resolve_out(sim_out, "simulate");
            ed3::cli::cmd_simulate(sim, std::cout);
        } else if (sample_cmd->parsed()) {
            sample.out = sample_out.empty() ? resolve_out("", "sample") / "dataset.json"
                                            : std::filesystem::path(sample_out);
            ed3::cli::cmd_sample(sample, std::cout);
        } else if (detect_cmd->parsed()) {
            detect.gamma = detect_gamma;
            detect.out = resolve_out(detect_out, "detect");
            ed3::cli::cmd_detect(detect, std::cout);
        } else if (evaluate->parsed()) {
            eval.gamma = eval_gamma;
            eval.out = resolve_out(eval_out, "evaluate");
            ed3::cli::cmd_evaluate(eval, std::cout);
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return ed3::cli::exit_code_for_current_exception();
    }
    return ed3::cli::kExitOk;
}
