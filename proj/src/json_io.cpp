#include "ed3/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ed3::io {

namespace {

json rows_of(const RealMatrix &m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

RealMatrix parse_rows(const json &rows, Eigen::Index dim, const char *field) {
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != dim) {
        throw InvalidArgument(std::string("matrix json: '") + field + "' must have dim rows");
    }
    RealMatrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const auto &row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim) {
            throw InvalidArgument(std::string("matrix json: '") + field + "' rows must have dim entries");
        }
        for (Eigen::Index j = 0; j < dim; ++j) {
            const auto &v = row[static_cast<std::size_t>(j)];
            if (!v.is_number()) throw InvalidArgument("matrix json: entries must be numbers");
            m(i, j) = v.get<double>();
        }
    }
    if (!m.allFinite()) throw InvalidArgument("matrix json: non-finite entry");
    return m;
}

Eigen::Index parse_dim(const json &j) {
    if (!j.is_object() || !j.contains("dim") || !j.at("dim").is_number_integer()) {
        throw InvalidArgument("matrix json: missing integer 'dim'");
    }
    const auto dim = j.at("dim").get<long long>();
    if (dim < 1) throw InvalidArgument("matrix json: 'dim' must be positive");
    return static_cast<Eigen::Index>(dim);
}

template <typename T>
T get_field(const json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("json: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw InvalidArgument(std::string("json: bad field '") + key + "': " + e.what());
    }
}

json matrices_to_json(const std::vector<RealMatrix> &ms) {
    json arr = json::array();
    for (const auto &m : ms) arr.push_back(to_json(m));
    return arr;
}

std::vector<RealMatrix> matrices_from_json(const json &arr, const char *key) {
    if (!arr.is_array()) throw InvalidArgument(std::string("json: '") + key + "' must be an array");
    std::vector<RealMatrix> out;
    out.reserve(arr.size());
    for (const auto &m : arr) out.push_back(real_matrix_from_json(m));
    return out;
}

}  // namespace

json to_json(const ComplexMatrix &m) {
    return {{"dim", m.rows()}, {"re", rows_of(m.real())}, {"im", rows_of(m.imag())}};
}

json to_json(const RealMatrix &m) { return {{"dim", m.rows()}, {"re", rows_of(m)}}; }
json to_json(const DensityMatrix &rho) { return to_json(rho.matrix()); }
json to_json(const AbsoluteMatrix &m) { return to_json(m.matrix()); }

ComplexMatrix complex_matrix_from_json(const json &j) {
    const auto dim = parse_dim(j);
    if (!j.contains("re")) throw InvalidArgument("matrix json: missing 're'");
    ComplexMatrix m = parse_rows(j.at("re"), dim, "re").cast<Complex>();
    if (j.contains("im")) m += Complex(0.0, 1.0) * parse_rows(j.at("im"), dim, "im").cast<Complex>();
    return m;
}

RealMatrix real_matrix_from_json(const json &j) {
    const auto dim = parse_dim(j);
    if (!j.contains("re")) throw InvalidArgument("matrix json: missing 're'");
    if (j.contains("im") && !parse_rows(j.at("im"), dim, "im").isZero(0.0)) {
        throw InvalidArgument("matrix json: expected a real matrix");
    }
    return parse_rows(j.at("re"), dim, "re");
}

DensityMatrix density_matrix_from_json(const json &j) { return DensityMatrix(complex_matrix_from_json(j)); }
AbsoluteMatrix absolute_matrix_from_json(const json &j) { return AbsoluteMatrix(real_matrix_from_json(j)); }

json to_json(const CountRecord &record) {
    json labels = json::array();
    for (const auto &s : canonical_settings()) labels.push_back(s.label);
    return {{"labels", labels},
            {"counts", record.counts},
            {"pairs_per_setting", record.pairs_per_setting},
            {"seed", record.seed}};
}

CountRecord count_record_from_json(const json &j) {
    CountRecord record;
    const auto labels = get_field<std::vector<std::string>>(j, "labels");
    const auto &settings = canonical_settings();
    if (labels.size() != kNumSettings) throw InvalidArgument("count record: expected 16 labels");
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        if (labels[i] != settings[i].label) throw InvalidArgument("count record: labels out of canonical order");
    }
    const auto counts = get_field<std::vector<std::int64_t>>(j, "counts");
    if (counts.size() != kNumSettings) throw InvalidArgument("count record: expected 16 counts");
    for (std::size_t i = 0; i < kNumSettings; ++i) {
        if (counts[i] < 0) throw InvalidArgument("count record: negative count");
        record.counts[i] = counts[i];
    }
    record.pairs_per_setting = get_field<double>(j, "pairs_per_setting");
    if (!(record.pairs_per_setting > 0.0)) throw InvalidArgument("count record: pairs_per_setting must be positive");
    record.seed = get_field<std::uint64_t>(j, "seed");
    return record;
}

json to_json(const DecompositionResult &result) {
    json active = json::array();
    for (bool a : result.active_set) active.push_back(a);
    return {{"theta", rows_of(result.theta)},
            {"omegas", [&] {
                 json arr = json::array();
                 for (const auto &m : result.omegas) arr.push_back(rows_of(m));
                 return arr;
             }()},
            {"zetas", [&] {
                 json arr = json::array();
                 for (const auto &m : result.zetas) arr.push_back(rows_of(m));
                 return arr;
             }()},
            {"gamma", result.gamma},
            {"iterations", result.iterations},
            {"primal_residual", result.primal_residual},
            {"dual_residual", result.dual_residual},
            {"active_set", active},
            {"degenerate", result.degenerate}};
}

DecompositionResult decomposition_from_json(const json &j) {
    DecompositionResult r;
    const auto &theta = j.at("theta");
    const auto dim = static_cast<Eigen::Index>(theta.size());
    if (dim < 1) throw InvalidArgument("decomposition json: empty theta");
    r.theta = parse_rows(theta, dim, "theta");
    for (const auto &m : j.at("omegas")) r.omegas.push_back(parse_rows(m, dim, "omegas"));
    for (const auto &m : j.at("zetas")) r.zetas.push_back(parse_rows(m, dim, "zetas"));
    r.gamma = get_field<double>(j, "gamma");
    r.iterations = get_field<int>(j, "iterations");
    r.primal_residual = get_field<double>(j, "primal_residual");
    r.dual_residual = get_field<double>(j, "dual_residual");
    r.active_set = get_field<std::vector<bool>>(j, "active_set");
    r.degenerate = get_field<bool>(j, "degenerate");
    if (r.omegas.size() != r.zetas.size() || r.omegas.size() != r.active_set.size()) {
        throw InvalidArgument("decomposition json: omegas, zetas and active_set differ in length");
    }
    return r;
}

json to_json(const ScoreReport &report) {
    json j = {{"method", std::string(to_string(report.method))}, {"scores", report.scores}};
    if (report.labels) {
        json labels = json::array();
        for (bool l : *report.labels) labels.push_back(l);
        j["labels"] = labels;
    }
    return j;
}

ScoreReport score_report_from_json(const json &j) {
    ScoreReport r;
    r.method = score_method_from_string(get_field<std::string>(j, "method"));
    r.scores = get_field<std::vector<double>>(j, "scores");
    for (double s : r.scores) {
        if (!std::isfinite(s) || s < 0.0) throw InvalidArgument("score report: scores must be finite and >= 0");
    }
    if (j.contains("labels")) {
        r.labels = get_field<std::vector<bool>>(j, "labels");
        if (r.labels->size() != r.scores.size()) throw InvalidArgument("score report: labels and scores differ");
    }
    return r;
}

json to_json(const PoolManifest &m) {
    json j = {{"state", m.state},
              {"lambda", m.lambda},
              {"n", m.n},
              {"pairs_per_setting", m.pairs_per_setting},
              {"base_seed", m.base_seed},
              {"members", m.members}};
    if (m.phase_offset) j["phase_offset"] = *m.phase_offset;
    return j;
}

PoolManifest pool_manifest_from_json(const json &j) {
    PoolManifest m;
    m.state = get_field<std::string>(j, "state");
    if (m.state != "normal" && m.state != "erroneous") throw InvalidArgument("manifest: unknown state");
    m.lambda = get_field<double>(j, "lambda");
    m.n = get_field<std::size_t>(j, "n");
    m.pairs_per_setting = get_field<double>(j, "pairs_per_setting");
    m.base_seed = get_field<std::uint64_t>(j, "base_seed");
    if (j.contains("phase_offset")) m.phase_offset = get_field<double>(j, "phase_offset");
    m.members = get_field<std::vector<std::string>>(j, "members");
    if (m.members.size() != m.n) throw InvalidArgument("manifest: member count differs from n");
    return m;
}

std::vector<AbsoluteMatrix> load_pool_absolute(const std::filesystem::path &manifest_path) {
    auto path = manifest_path;
    if (std::filesystem::is_directory(path)) path /= "manifest.json";
    const auto manifest = pool_manifest_from_json(read_json(path));
    const auto dir = path.parent_path();
    std::vector<AbsoluteMatrix> pool;
    pool.reserve(manifest.members.size());
    for (const auto &member : manifest.members) {
        pool.push_back(elementwise_abs(density_matrix_from_json(read_json(dir / member))));
    }
    return pool;
}

json to_json(const DatasetFile &dataset) {
    json j = {{"matrices", matrices_to_json(dataset.matrices)}};
    if (dataset.labels) {
        json labels = json::array();
        for (bool l : *dataset.labels) labels.push_back(l);
        j["labels"] = labels;
    }
    if (!dataset.sources.empty()) {
        json sources = json::array();
        for (const auto &s : dataset.sources) {
            sources.push_back({{"pool", s.erroneous ? "erroneous" : "normal"}, {"index", s.pool_index}});
        }
        j["sources"] = sources;
    }
    return j;
}

DatasetFile dataset_from_json(const json &j) {
    DatasetFile d;
    if (!j.is_object() || !j.contains("matrices")) throw InvalidArgument("dataset json: missing 'matrices'");
    d.matrices = matrices_from_json(j.at("matrices"), "matrices");
    if (j.contains("labels")) {
        d.labels = get_field<std::vector<bool>>(j, "labels");
        if (d.labels->size() != d.matrices.size()) throw InvalidArgument("dataset json: labels and matrices differ");
    }
    if (j.contains("sources")) {
        for (const auto &s : j.at("sources")) {
            d.sources.push_back({get_field<std::string>(s, "pool") == "erroneous", get_field<std::size_t>(s, "index")});
        }
    }
    return d;
}

DatasetFile to_dataset_file(const LabeledDataset &dataset) {
    return {dataset.set.matrices(), dataset.labels, dataset.sources};
}

json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw InvalidArgument("cannot parse " + path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const std::filesystem::path &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

std::string roc_csv(const RocCurve &curve) {
    std::ostringstream out;
    out.precision(17);
    out << "threshold,fdr,tdr\n";
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const double t = curve.thresholds[i];
        if (std::isinf(t)) {
            out << (t > 0 ? "inf" : "-inf");
        } else {
            out << t;
        }
        out << ',' << curve.points[i].fdr << ',' << curve.points[i].tdr << '\n';
    }
    return out.str();
}

}  // namespace ed3::io
