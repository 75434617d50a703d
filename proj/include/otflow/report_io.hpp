#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "otflow/ode.hpp"

namespace otflow {

// Resolved tool configuration. Parsing applies the documented defaults and
// rejects unknown keys and out-of-range values.
struct Config {
    struct Attribution {
        int steps = 50;
        Integrator integrator = Integrator::rk4;
        EndpointMode endpoint_mode = EndpointMode::reversed_backward;
        std::string quadrature = "left";  // or "midpoint"
    } attribution;

    struct Metrics {
        double alpha = 10.0;
        int deletion_steps = 10;
        double blur_sigma = 2.0;
    } metrics;

    struct Train {
        int steps = 4000;
        int batch = 128;
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        bool cosine_decay = true;
        int checkpoint_every = 0;
        std::uint64_t seed = 0;
        std::vector<int> hidden{64, 64};
        std::string time_embedding = "append-t";
        int fourier_features = 8;
        int dim = 2;
    } train;

    struct Experiment {
        int dim = 10;
        std::vector<int> k_values{10, 20, 50, 100, 200};
        std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
        int n_inputs = 100;
        int reflow_pairs = 4096;
        int image_size = 16;
    } experiment;

    std::string to_json_text() const;
};

Config parse_config_text(const std::string& text);
Config parse_config_file(const std::string& path);

// CSV table with a fixed column order; numerics print with 6 significant
// digits. Files go through the atomic write path.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);
    void add_row(const std::vector<double>& values);
    void add_row_mixed(const std::vector<std::string>& cells);
    std::string to_text() const;
    void save(const std::string& path) const;
    static std::string format_number(double v);

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

// Run provenance: written before numeric outputs, digests recorded after
// each artifact lands. The run id mixes wall-clock time with the seed hash;
// everything else in the manifest is deterministic.
class RunManifest {
public:
    RunManifest(const std::string& out_dir, const std::string& tool_version,
                std::uint64_t seed, const std::string& resolved_config_json);

    const std::string& run_id() const { return run_id_; }
    void record_input(const std::string& label, const std::string& path);
    void record_output(const std::string& label, const std::string& path);
    void save() const;

    // Re-hashes every recorded artifact and compares against the manifest.
    static bool verify(const std::string& manifest_path);

private:
    std::string out_dir_;
    std::string run_id_;
    std::string tool_version_;
    std::uint64_t seed_;
    std::string config_json_;
    std::map<std::string, std::pair<std::string, std::string>> inputs_;
    std::map<std::string, std::pair<std::string, std::string>> outputs_;
};

}  // namespace otflow
