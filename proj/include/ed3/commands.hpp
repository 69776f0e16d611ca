#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ed3/detector.hpp"
#include "ed3/tomography.hpp"

// Subcommands of the ed3 tool. Each takes a validated config, writes its outputs under the
// configured path and reports progress to `log`. Errors surface as InvalidArgument,
// ConvergenceError or IoError; exit_code_for maps them to process exit codes.
namespace ed3::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidArgument = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitIo = 4;

/// Exit code for the exception currently being handled.
int exit_code_for_current_exception();

struct SimulateConfig {
    std::string state = "normal";
    double lambda = 0.1;
    std::size_t n = 600;
    /// Expected coincidences per 16-setting run; converted to a per-setting mean from the true
    /// state. Ignored when pairs_per_setting is set.
    double pairs_per_run = 1000.0;
    std::optional<double> pairs_per_setting;
    std::uint64_t seed = 0;
    std::optional<double> phase_offset;
    MleOptions mle;
    unsigned workers = 1;
    std::filesystem::path out;
};

/// Writes manifest.json plus one DensityMatrix file per member into `out`.
void cmd_simulate(const SimulateConfig &cfg, std::ostream &log);

struct SampleConfig {
    std::filesystem::path normal_pool;
    std::filesystem::path erroneous_pool;
    std::size_t n_normal = 25;
    std::size_t n_erroneous = 5;
    std::uint64_t seed = 0;
    std::filesystem::path out;
};

/// Draws one labelled dataset from two pools and writes it as a dataset file.
void cmd_sample(const SampleConfig &cfg, std::ostream &log);

struct DetectConfig {
    std::filesystem::path input;
    std::filesystem::path out;
    std::string method = "both";  // naive, ed3 or both
    std::optional<double> gamma;
    AdmmOptions admm;
    double weight_floor = kDefaultWeightFloor;
};

/// Writes scores_<method>.json, decomposition.json (ed3) and trace_table.csv into `out`.
void cmd_detect(const DetectConfig &cfg, std::ostream &log);

struct EvaluateConfig {
    std::filesystem::path normal_pool;
    std::filesystem::path erroneous_pool;
    std::size_t n_datasets = 100;
    std::size_t n_preliminary = 10;
    std::size_t n_normal = 25;
    std::size_t n_erroneous = 5;
    std::uint64_t seed = 0;
    std::vector<double> grid;  // empty: default grid from the preliminary datasets
    std::optional<double> gamma;  // skips tuning when set
    std::size_t bins = 20;
    bool oracle_self_test = false;
    bool write_roc = true;
    AdmmOptions admm;
    unsigned workers = 1;
    std::filesystem::path out;
};

/// Tunes gamma on preliminary datasets, compares both detectors on fresh datasets and writes
/// report.json, histogram.csv and roc/<method>_<i>.csv into `out`.
void cmd_evaluate(const EvaluateConfig &cfg, std::ostream &log);

}  // namespace ed3::cli
