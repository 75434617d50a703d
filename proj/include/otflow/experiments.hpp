#pragma once

#include <string>
#include <vector>

#include "otflow/report_io.hpp"

namespace otflow {

// One experiment outcome: raw per-seed rows, aggregate mean +- sample std,
// and pass/fail flags against the configured thresholds. Everything in the
// report is reproducible from (config, seeds); wall-clock provenance lives
// only in the run manifest written by the CLI.
struct ExperimentReport {
    std::string id;
    std::vector<std::string> raw_columns;
    std::vector<std::vector<std::string>> raw_rows;

    struct Aggregate {
        std::string name;
        double mean = 0.0;
        double stddev = 0.0;
    };
    std::vector<Aggregate> aggregates;

    struct Flag {
        std::string name;
        bool passed = false;
    };
    std::vector<Flag> flags;

    bool all_passed() const;
    double aggregate_mean(const std::string& name) const;
    bool flag(const std::string& name) const;

    std::string raw_csv_text() const;
    std::string report_json_text(const Config& cfg) const;
    // Writes report.json and raw.csv under out_dir.
    void save(const std::string& out_dir, const Config& cfg) const;
};

// Straight-path estimator against the coordinatewise additive ground truth.
ExperimentReport exp_additive(const Config& cfg);

// Controlled transport between seeded Gaussians: trains 1-RF, reflows to
// 2-RF and 3-RF, and reports action gap, relative field error, relative
// attribution error and curvature per method against the closed-form oracle.
ExperimentReport exp_gaussian_ot(const Config& cfg);

// Efficiency residual of the discrete estimator across step counts.
ExperimentReport exp_completeness(const Config& cfg);

// Attribution error versus field error across training checkpoints.
ExperimentReport exp_convergence(const Config& cfg);

// Across-seed attribution stability for 1-RF vs 2-RF on grid images.
ExperimentReport exp_stability(const Config& cfg);

ExperimentReport run_experiment(const std::string& id, const Config& cfg);

double mean_of(const std::vector<double>& xs);
double sample_std(const std::vector<double>& xs);

}  // namespace otflow
