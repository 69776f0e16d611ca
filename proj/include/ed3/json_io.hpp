#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ed3/detector.hpp"
#include "ed3/evaluation.hpp"
#include "ed3/linalg.hpp"
#include "ed3/tomography.hpp"

// Serialization of every on-disk schema. Matrices are {"dim": d, "re": [[...]], "im": [[...]]}
// with row-major nested arrays; real matrices omit "im".
namespace ed3::io {

using nlohmann::json;

json to_json(const ComplexMatrix &m);
json to_json(const RealMatrix &m);
json to_json(const DensityMatrix &rho);
json to_json(const AbsoluteMatrix &m);
json to_json(const CountRecord &record);
json to_json(const DecompositionResult &result);
json to_json(const ScoreReport &report);

ComplexMatrix complex_matrix_from_json(const json &j);
/// Rejects input with a non-zero "im" part.
RealMatrix real_matrix_from_json(const json &j);
DensityMatrix density_matrix_from_json(const json &j);
AbsoluteMatrix absolute_matrix_from_json(const json &j);
CountRecord count_record_from_json(const json &j);
DecompositionResult decomposition_from_json(const json &j);
ScoreReport score_report_from_json(const json &j);

struct PoolManifest {
    std::string state;  // "normal" or "erroneous"
    double lambda = 0.0;
    std::size_t n = 0;
    double pairs_per_setting = 0.0;
    std::uint64_t base_seed = 0;
    std::optional<double> phase_offset;
    /// Paths relative to the manifest's directory.
    std::vector<std::string> members;
};

json to_json(const PoolManifest &manifest);
PoolManifest pool_manifest_from_json(const json &j);

/// Loads every member of the pool at `manifest_path` (a manifest file or a directory holding
/// manifest.json) and returns the absolute matrices.
std::vector<AbsoluteMatrix> load_pool_absolute(const std::filesystem::path &manifest_path);

/// A set of matrices to run the detectors on: {"matrices": [...], "labels": [...]}. Labels are
/// optional.
struct DatasetFile {
    std::vector<RealMatrix> matrices;
    std::optional<std::vector<bool>> labels;
    std::vector<MemberSource> sources;
};

json to_json(const DatasetFile &dataset);
DatasetFile dataset_from_json(const json &j);
DatasetFile to_dataset_file(const LabeledDataset &dataset);

json read_json(const std::filesystem::path &path);
/// Pretty-printed with two-space indent and a trailing newline. Throws IoError on failure.
void write_json(const std::filesystem::path &path, const json &j);
void write_text(const std::filesystem::path &path, const std::string &text);

/// "threshold,fdr,tdr" header followed by one row per curve point.
std::string roc_csv(const RocCurve &curve);

}  // namespace ed3::io
