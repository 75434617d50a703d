#include "otflow/report_io.hpp"

#include <chrono>
#include <cstdio>

#include <json.hpp>

#include "otflow/otf1.hpp"
#include "otflow/rng.hpp"

namespace otflow {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : known) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw UnknownKey("'" + scope + "." + it.key() + "' is not a config key");
        }
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Config parse_config_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("config is not valid JSON");
    if (!j.is_object()) throw ParseError("config root must be an object");
    reject_unknown_keys(j, {"attribution", "metrics", "train", "experiment"},
                        "config");

    Config cfg;
    if (j.contains("attribution")) {
        const json& a = j.at("attribution");
        reject_unknown_keys(a, {"K", "integrator", "endpoint_mode", "quadrature"},
                            "attribution");
        read_field(a, "K", cfg.attribution.steps);
        if (a.contains("integrator")) {
            cfg.attribution.integrator =
                integrator_from_string(a.at("integrator").get<std::string>());
        }
        if (a.contains("endpoint_mode")) {
            cfg.attribution.endpoint_mode =
                endpoint_mode_from_string(a.at("endpoint_mode").get<std::string>());
        }
        read_field(a, "quadrature", cfg.attribution.quadrature);
    }
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        reject_unknown_keys(m, {"alpha", "deletion_steps", "blur_sigma"}, "metrics");
        read_field(m, "alpha", cfg.metrics.alpha);
        read_field(m, "deletion_steps", cfg.metrics.deletion_steps);
        read_field(m, "blur_sigma", cfg.metrics.blur_sigma);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        reject_unknown_keys(t,
                            {"steps", "batch", "lr", "beta1", "beta2",
                             "cosine_decay", "checkpoint_every", "seed", "hidden",
                             "time_embedding", "fourier_features", "dim"},
                            "train");
        read_field(t, "steps", cfg.train.steps);
        read_field(t, "batch", cfg.train.batch);
        read_field(t, "lr", cfg.train.lr);
        read_field(t, "beta1", cfg.train.beta1);
        read_field(t, "beta2", cfg.train.beta2);
        read_field(t, "cosine_decay", cfg.train.cosine_decay);
        read_field(t, "checkpoint_every", cfg.train.checkpoint_every);
        read_field(t, "seed", cfg.train.seed);
        read_field(t, "hidden", cfg.train.hidden);
        read_field(t, "time_embedding", cfg.train.time_embedding);
        read_field(t, "fourier_features", cfg.train.fourier_features);
        read_field(t, "dim", cfg.train.dim);
    }
    if (j.contains("experiment")) {
        const json& e = j.at("experiment");
        reject_unknown_keys(e,
                            {"dim", "k_values", "seeds", "n_inputs",
                             "reflow_pairs", "image_size"},
                            "experiment");
        read_field(e, "dim", cfg.experiment.dim);
        read_field(e, "k_values", cfg.experiment.k_values);
        read_field(e, "seeds", cfg.experiment.seeds);
        read_field(e, "n_inputs", cfg.experiment.n_inputs);
        read_field(e, "reflow_pairs", cfg.experiment.reflow_pairs);
        read_field(e, "image_size", cfg.experiment.image_size);
    }

    // Range validation with field names in the message.
    if (cfg.attribution.steps < 1) throw RangeError("attribution.K must be >= 1");
    if (cfg.attribution.quadrature != "left" &&
        cfg.attribution.quadrature != "midpoint") {
        throw RangeError("attribution.quadrature must be left or midpoint");
    }
    if (!(cfg.metrics.alpha > 0.0)) throw RangeError("metrics.alpha must be > 0");
    if (cfg.metrics.deletion_steps < 1) {
        throw RangeError("metrics.deletion_steps must be >= 1");
    }
    if (!(cfg.metrics.blur_sigma > 0.0)) {
        throw RangeError("metrics.blur_sigma must be > 0");
    }
    if (cfg.train.steps < 0) throw RangeError("train.steps must be >= 0");
    if (cfg.train.batch < 1) throw RangeError("train.batch must be >= 1");
    if (!(cfg.train.lr > 0.0)) throw RangeError("train.lr must be > 0");
    if (cfg.train.dim < 1) throw RangeError("train.dim must be >= 1");
    if (cfg.experiment.dim < 1) throw RangeError("experiment.dim must be >= 1");
    if (cfg.experiment.seeds.empty()) {
        throw RangeError("experiment.seeds must be non-empty");
    }
    for (int k : cfg.experiment.k_values) {
        if (k < 1) throw RangeError("experiment.k_values entries must be >= 1");
    }
    if (cfg.experiment.n_inputs < 1) {
        throw RangeError("experiment.n_inputs must be >= 1");
    }
    return cfg;
}

Config parse_config_file(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return parse_config_text(std::string(bytes.begin(), bytes.end()));
}

std::string Config::to_json_text() const {
    json j;
    j["attribution"] = {{"K", attribution.steps},
                        {"integrator", to_string(attribution.integrator)},
                        {"endpoint_mode", to_string(attribution.endpoint_mode)},
                        {"quadrature", attribution.quadrature}};
    j["metrics"] = {{"alpha", metrics.alpha},
                    {"deletion_steps", metrics.deletion_steps},
                    {"blur_sigma", metrics.blur_sigma}};
    j["train"] = {{"steps", train.steps},
                  {"batch", train.batch},
                  {"lr", train.lr},
                  {"beta1", train.beta1},
                  {"beta2", train.beta2},
                  {"cosine_decay", train.cosine_decay},
                  {"checkpoint_every", train.checkpoint_every},
                  {"seed", train.seed},
                  {"hidden", train.hidden},
                  {"time_embedding", train.time_embedding},
                  {"fourier_features", train.fourier_features},
                  {"dim", train.dim}};
    j["experiment"] = {{"dim", experiment.dim},
                       {"k_values", experiment.k_values},
                       {"seeds", experiment.seeds},
                       {"n_inputs", experiment.n_inputs},
                       {"reflow_pairs", experiment.reflow_pairs},
                       {"image_size", experiment.image_size}};
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

CsvTable::CsvTable(std::vector<std::string> columns)
    : columns_(std::move(columns)) {
    if (columns_.empty()) throw RangeError("csv needs columns");
}

std::string CsvTable::format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
}

void CsvTable::add_row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) throw DimMismatch("csv row width");
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    rows_.push_back(std::move(cells));
}

void CsvTable::add_row_mixed(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw DimMismatch("csv row width");
    rows_.push_back(cells);
}

std::string CsvTable::to_text() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i > 0) out += ',';
        out += columns_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

void CsvTable::save(const std::string& path) const {
    atomic_write_text(path, to_text());
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

RunManifest::RunManifest(const std::string& out_dir,
                         const std::string& tool_version, std::uint64_t seed,
                         const std::string& resolved_config_json)
    : out_dir_(out_dir), tool_version_(tool_version), seed_(seed),
      config_json_(resolved_config_json) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%lld-%016llx",
                  static_cast<long long>(secs),
                  static_cast<unsigned long long>(RngStream::mix64(seed)));
    run_id_ = buf;
    save();  // manifest exists before any numeric output
}

void RunManifest::record_input(const std::string& label,
                               const std::string& path) {
    inputs_[label] = {path, file_digest(path)};
    save();
}

void RunManifest::record_output(const std::string& label,
                                const std::string& path) {
    outputs_[label] = {path, file_digest(path)};
    save();
}

void RunManifest::save() const {
    json j;
    j["run_id"] = run_id_;
    j["tool_version"] = tool_version_;
    j["seed"] = seed_;
    j["config"] = json::parse(config_json_);
    json in = json::object();
    for (const auto& [label, pd] : inputs_) {
        in[label] = {{"path", pd.first}, {"digest", pd.second}};
    }
    json out = json::object();
    for (const auto& [label, pd] : outputs_) {
        out[label] = {{"path", pd.first}, {"digest", pd.second}};
    }
    j["inputs"] = in;
    j["outputs"] = out;
    atomic_write_text(out_dir_ + "/manifest.json", j.dump(2) + "\n");
}

bool RunManifest::verify(const std::string& manifest_path) {
    const auto bytes = read_file_bytes(manifest_path);
    json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid manifest JSON");
    for (const char* section : {"inputs", "outputs"}) {
        for (const auto& [label, entry] : j.at(section).items()) {
            (void)label;
            if (file_digest(entry.at("path").get<std::string>()) !=
                entry.at("digest").get<std::string>()) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace otflow
