// Command-line front end: training, attribution, path metrics, structure and
// deletion evaluation, and the five controlled experiments. Every run that
// produces numbers writes a manifest with artifact digests first.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "otflow/attribution.hpp"
#include "otflow/experiments.hpp"
#include "otflow/metrics.hpp"
#include "otflow/model_io.hpp"
#include "otflow/otf1.hpp"
#include "otflow/rectflow.hpp"
#include "otflow/report_io.hpp"
#include "otflow/version.hpp"

namespace {

using namespace otflow;
using nlohmann::json;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;  // -1 means "keep the config seed"
    bool quiet = false;
};

Config load_config(const GlobalArgs& g) {
    Config cfg = g.config_path.empty() ? Config{} : parse_config_file(g.config_path);
    if (g.seed >= 0) {
        cfg.train.seed = static_cast<std::uint64_t>(g.seed);
    }
    return cfg;
}

void info(const GlobalArgs& g, const std::string& msg) {
    if (!g.quiet) std::cout << msg << "\n";
}

QuadratureRule quadrature_from(const Config& cfg) {
    return cfg.attribution.quadrature == "midpoint" ? QuadratureRule::midpoint
                                                    : QuadratureRule::left;
}

void save_trajectory(const std::string& dir, const Trajectory& traj,
                     const Config& cfg, const std::string& field_id,
                     RunManifest& manifest) {
    Matrix m(traj.steps() + 1, traj.dim());
    for (int k = 0; k <= traj.steps(); ++k)
        for (int i = 0; i < traj.dim(); ++i) m(k, i) = traj.state(k)[i];
    otf1_save(dir + "/trajectory.otf1", otf1_from_matrix(m));
    json sidecar{{"K", traj.steps()},
                 {"method", to_string(cfg.attribution.integrator)},
                 {"field_id", field_id},
                 {"mode", to_string(cfg.attribution.endpoint_mode)}};
    atomic_write_text(dir + "/trajectory.json", sidecar.dump(2) + "\n");
    manifest.record_output("trajectory", dir + "/trajectory.otf1");
}

void save_attribution(const std::string& dir, const AttributionVector& attr,
                      const std::string& run_id, RunManifest& manifest) {
    otf1_save(dir + "/attribution.otf1", otf1_from_vector(attr.values));
    json meta{{"method", attr.method},
              {"K", attr.steps},
              {"score_start", attr.score_start},
              {"score_end", attr.score_end},
              {"run_id", run_id}};
    atomic_write_text(dir + "/attribution.json", meta.dump(2) + "\n");
    manifest.record_output("attribution", dir + "/attribution.otf1");
    manifest.record_output("attribution_meta", dir + "/attribution.json");
}

std::shared_ptr<const CouplingSampler> make_coupling(const Config& cfg,
                                                     const std::string& task) {
    if (task == "gaussian") {
        RngStream instance_rng(cfg.train.seed, 21);
        const GaussianPair pair =
            seeded_gaussian_pair(cfg.train.dim, instance_rng);
        return std::make_shared<IndependentCoupling>(
            std::make_shared<GaussianPointSampler>(pair.g0),
            std::make_shared<GaussianPointSampler>(pair.g1));
    }
    if (task == "images") {
        const int side = cfg.experiment.image_size;
        struct BumpSampler final : PointSampler {
            int side;
            explicit BumpSampler(int s) : side(s) {}
            int dim() const override { return side * side; }
            Vector draw(RngStream& rng) const override {
                return gaussian_bump_image(side, side, rng).to_vector();
            }
        };
        return std::make_shared<IndependentCoupling>(
            std::make_shared<StdNormalSampler>(side * side),
            std::make_shared<BumpSampler>(side));
    }
    throw RangeError("unknown task '" + task + "' (expected gaussian or images)");
}

int cmd_train(const GlobalArgs& g, const std::string& task) {
    const Config cfg = load_config(g);
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());

    auto coupling = make_coupling(cfg, task);
    MlpSpec spec;
    spec.input_dim = coupling->dim();
    spec.hidden = cfg.train.hidden;
    spec.time_embedding = cfg.train.time_embedding == "fourier"
                              ? TimeEmbedding::fourier
                              : TimeEmbedding::append_t;
    spec.fourier_features = cfg.train.fourier_features;

    TrainConfig tc;
    tc.steps = cfg.train.steps;
    tc.batch = cfg.train.batch;
    tc.lr = cfg.train.lr;
    tc.beta1 = cfg.train.beta1;
    tc.beta2 = cfg.train.beta2;
    tc.cosine_decay = cfg.train.cosine_decay;
    tc.checkpoint_every = cfg.train.checkpoint_every;
    tc.seed = cfg.train.seed;

    const TrainResult result = train_flow(*coupling, spec, tc);
    const std::string run_dir = g.out_dir + "/runs/" + manifest.run_id();
    for (const auto& ckpt : result.checkpoints) {
        const std::string ckpt_dir =
            run_dir + "/ckpt_" + std::to_string(ckpt.iteration);
        save_flow_checkpoint(ckpt_dir, ckpt);
        manifest.record_output("ckpt_" + std::to_string(ckpt.iteration),
                               ckpt_dir + "/model.json");
    }
    info(g, "trained " + std::to_string(tc.steps) + " steps, final loss " +
                CsvTable::format_number(result.loss_history.empty()
                                            ? 0.0
                                            : result.loss_history.back()) +
                ", checkpoints in " + run_dir);
    return 0;
}

int cmd_reflow(const GlobalArgs& g, const std::string& field_dir, int n_pairs) {
    const Config cfg = load_config(g);
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());
    manifest.record_input("field", field_dir + "/model.json");

    const auto field = load_flow_field(field_dir);
    RngStream rng(cfg.train.seed, 31);
    StdNormalSampler p0(field->dim());
    const Coupling coupling = reflow(*field, p0, n_pairs, 100,
                                     cfg.attribution.integrator, rng);

    Matrix z0(n_pairs, field->dim());
    Matrix z1(n_pairs, field->dim());
    for (int i = 0; i < n_pairs; ++i) {
        for (int j = 0; j < field->dim(); ++j) {
            z0(i, j) = coupling.pairs[static_cast<std::size_t>(i)].first[j];
            z1(i, j) = coupling.pairs[static_cast<std::size_t>(i)].second[j];
        }
    }
    otf1_save(g.out_dir + "/z0.otf1", otf1_from_matrix(z0));
    otf1_save(g.out_dir + "/z1.otf1", otf1_from_matrix(z1));
    json meta{{"kind", "reflow-generated"},
              {"pairs", n_pairs},
              {"transport_cost", coupling.transport_cost()}};
    atomic_write_text(g.out_dir + "/coupling.json", meta.dump(2) + "\n");
    manifest.record_output("z0", g.out_dir + "/z0.otf1");
    manifest.record_output("z1", g.out_dir + "/z1.otf1");
    manifest.record_output("coupling", g.out_dir + "/coupling.json");
    info(g, "reflow coupling cost " +
                CsvTable::format_number(coupling.transport_cost()));
    return 0;
}

int cmd_attribute(const GlobalArgs& g, const std::string& field_dir,
                  const std::string& score_path, const std::string& input_path) {
    const Config cfg = load_config(g);
    if (!std::filesystem::exists(field_dir + "/model.json")) {
        throw IoError("checkpoint not found: " + field_dir + "/model.json");
    }
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());
    manifest.record_input("field", field_dir + "/model.json");
    manifest.record_input("score", score_path);
    manifest.record_input("input", input_path);

    const auto field = load_flow_field(field_dir);
    const ScorePtr score = score_from_json_file(score_path);
    const Vector x1 = otf1_to_vector(otf1_load(input_path));

    const Trajectory traj = reference_endpoint_trajectory(
        *field, x1, cfg.attribution.steps, cfg.attribution.integrator,
        cfg.attribution.endpoint_mode);
    const AttributionVector attr =
        path_attribution(*score, traj, quadrature_from(cfg), "transport-flow");

    save_trajectory(g.out_dir, traj, cfg, field_dir, manifest);
    save_attribution(g.out_dir, attr, manifest.run_id(), manifest);
    info(g, "attribution sum " + CsvTable::format_number(attr.sum()) +
                ", score delta " + CsvTable::format_number(attr.score_delta()));
    return 0;
}

int cmd_ig(const GlobalArgs& g, const std::string& score_path,
           const std::string& input_path, const std::string& baseline_path) {
    const Config cfg = load_config(g);
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());
    manifest.record_input("score", score_path);
    manifest.record_input("input", input_path);

    const ScorePtr score = score_from_json_file(score_path);
    const Vector x1 = otf1_to_vector(otf1_load(input_path));
    Vector baseline(x1.dim(), 0.0);
    if (!baseline_path.empty()) {
        baseline = otf1_to_vector(otf1_load(baseline_path));
        manifest.record_input("baseline", baseline_path);
    }
    const AttributionVector attr = integrated_gradients(
        *score, baseline, x1, cfg.attribution.steps, quadrature_from(cfg));
    save_attribution(g.out_dir, attr, manifest.run_id(), manifest);
    info(g, "ig sum " + CsvTable::format_number(attr.sum()));
    return 0;
}

int cmd_path_metrics(const GlobalArgs& g, const std::string& traj_path,
                     const std::string& field_dir) {
    const Config cfg = load_config(g);
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());
    manifest.record_input("trajectory", traj_path);

    const Matrix m = otf1_to_matrix(otf1_load(traj_path));
    std::vector<Vector> states;
    for (int k = 0; k < m.rows(); ++k) {
        Vector s(m.cols());
        for (int i = 0; i < m.cols(); ++i) s[i] = m(k, i);
        states.push_back(std::move(s));
    }
    const Trajectory traj(std::move(states));

    std::shared_ptr<MlpFlowField> field;
    if (!field_dir.empty()) {
        field = load_flow_field(field_dir);
        manifest.record_input("field", field_dir + "/model.json");
    }
    const PathGeometryReport rep = path_geometry(traj, field.get());

    CsvTable table({"gps", "fce", "action", "curvature"});
    table.add_row_mixed({rep.gps ? CsvTable::format_number(*rep.gps) : "-",
                         rep.fce ? CsvTable::format_number(*rep.fce) : "-",
                         CsvTable::format_number(rep.action),
                         rep.curvature ? CsvTable::format_number(*rep.curvature)
                                       : "-"});
    table.save(g.out_dir + "/path_metrics.csv");
    manifest.record_output("path_metrics", g.out_dir + "/path_metrics.csv");
    info(g, "gps " + (rep.gps ? CsvTable::format_number(*rep.gps) : "-") +
                ", action " + CsvTable::format_number(rep.action));
    return 0;
}

int cmd_eval_structure(const GlobalArgs& g, const std::string& attr_path,
                       const std::string& image_path) {
    const Config cfg = load_config(g);
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());
    manifest.record_input("attr", attr_path);
    manifest.record_input("image", image_path);

    const GridImage image = otf1_to_image(otf1_load(image_path));
    const Otf1Tensor attr_tensor = otf1_load(attr_path);
    const GridImage attr_map =
        attr_tensor.dims.size() == 1
            ? GridImage::from_vector(image.height(), image.width(),
                                     otf1_to_vector(attr_tensor))
            : otf1_to_image(attr_tensor);

    CsvTable table({"satv", "eas"});
    table.add_row({satv(attr_map, image, cfg.metrics.alpha),
                   eas(attr_map, image)});
    table.save(g.out_dir + "/structure.csv");
    manifest.record_output("structure", g.out_dir + "/structure.csv");
    return 0;
}

int cmd_eval_deletion(const GlobalArgs& g, const std::string& score_path,
                      const std::string& attr_path, const std::string& image_path,
                      const std::string& replacement) {
    const Config cfg = load_config(g);
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());
    manifest.record_input("score", score_path);
    manifest.record_input("attr", attr_path);
    manifest.record_input("image", image_path);

    const ScorePtr score = score_from_json_file(score_path);
    const GridImage image = otf1_to_image(otf1_load(image_path));
    const Vector attr_values = otf1_to_vector(otf1_load(attr_path));
    AttributionVector attr;
    attr.values = attr_values;
    attr.endpoint_start = Vector(attr_values.dim(), 0.0);
    attr.endpoint_end = image.to_vector();

    const Replacement repl =
        replacement == "blur" ? Replacement::blur : Replacement::zero;
    const DeletionCurve curve =
        deletion_curve(*score, image, attr, repl, cfg.metrics.deletion_steps,
                       cfg.metrics.blur_sigma);

    CsvTable table({"fraction", "score"});
    for (std::size_t j = 0; j < curve.fractions.size(); ++j) {
        table.add_row({curve.fractions[j], curve.scores[j]});
    }
    table.save(g.out_dir + "/deletion.csv");
    json meta{{"auc", curve.auc}, {"replacement", replacement}};
    atomic_write_text(g.out_dir + "/deletion.json", meta.dump(2) + "\n");
    manifest.record_output("deletion", g.out_dir + "/deletion.csv");
    manifest.record_output("deletion_meta", g.out_dir + "/deletion.json");
    info(g, "deletion auc " + CsvTable::format_number(curve.auc));
    return 0;
}

int cmd_experiment(const GlobalArgs& g, const std::string& id) {
    const Config cfg = load_config(g);
    RunManifest manifest(g.out_dir, kToolVersion, cfg.train.seed,
                         cfg.to_json_text());
    const ExperimentReport rep = run_experiment(id, cfg);
    rep.save(g.out_dir, cfg);
    manifest.record_output("report", g.out_dir + "/report.json");
    manifest.record_output("raw", g.out_dir + "/raw.csv");
    for (const auto& f : rep.flags) {
        info(g, std::string(f.passed ? "[pass] " : "[FAIL] ") + f.name);
    }
    info(g, std::string("experiment ") + id +
                (rep.all_passed() ? " passed" : " had failing flags"));
    return rep.all_passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transport-path attribution toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON config path");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--seed", g.seed, "master seed override");
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    std::string task = "gaussian";
    auto* train = app.add_subcommand("train", "train a rectified flow field");
    train->add_option("--task", task, "gaussian | images");

    std::string field_dir, score_path, input_path, baseline_path, traj_path,
        attr_path, image_path;
    std::string replacement = "zero";
    int n_pairs = 4096;

    auto* reflow_cmd = app.add_subcommand("reflow", "generate a reflow coupling");
    reflow_cmd->add_option("--field", field_dir, "checkpoint directory")->required();
    reflow_cmd->add_option("--pairs", n_pairs, "number of pairs");

    auto* attribute = app.add_subcommand("attribute",
                                         "transport-flow attribution for one input");
    attribute->add_option("--field", field_dir, "checkpoint directory")->required();
    attribute->add_option("--score", score_path, "score JSON")->required();
    attribute->add_option("--input", input_path, "input OTF1 vector")->required();

    auto* ig = app.add_subcommand("ig", "straight-path attribution");
    ig->add_option("--score", score_path, "score JSON")->required();
    ig->add_option("--input", input_path, "input OTF1 vector")->required();
    ig->add_option("--baseline", baseline_path, "baseline OTF1 vector");

    auto* pm = app.add_subcommand("path-metrics", "geometry of a stored trajectory");
    pm->add_option("--traj", traj_path, "trajectory OTF1")->required();
    pm->add_option("--field", field_dir, "checkpoint directory (enables FCE)");

    auto* es = app.add_subcommand("eval-structure", "SATV and EAS of a map");
    es->add_option("--attr", attr_path, "attribution OTF1")->required();
    es->add_option("--image", image_path, "image OTF1")->required();

    auto* ed = app.add_subcommand("eval-deletion", "deletion curve and AUC");
    ed->add_option("--score", score_path, "score JSON")->required();
    ed->add_option("--attr", attr_path, "attribution OTF1")->required();
    ed->add_option("--image", image_path, "image OTF1")->required();
    ed->add_option("--replacement", replacement, "zero | blur");

    app.add_subcommand("exp-additive", "additive ground-truth check");
    app.add_subcommand("exp-gaussian", "controlled Gaussian transport study");
    app.add_subcommand("exp-completeness", "efficiency residual vs steps");
    app.add_subcommand("exp-convergence", "attribution error vs field error");
    app.add_subcommand("exp-stability", "across-seed stability study");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // --help is 0, any parse failure is 1
    }

    try {
        const std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "train") return cmd_train(g, task);
        if (sub == "reflow") return cmd_reflow(g, field_dir, n_pairs);
        if (sub == "attribute") return cmd_attribute(g, field_dir, score_path, input_path);
        if (sub == "ig") return cmd_ig(g, score_path, input_path, baseline_path);
        if (sub == "path-metrics") return cmd_path_metrics(g, traj_path, field_dir);
        if (sub == "eval-structure") return cmd_eval_structure(g, attr_path, image_path);
        if (sub == "eval-deletion")
            return cmd_eval_deletion(g, score_path, attr_path, image_path, replacement);
        if (sub.rfind("exp-", 0) == 0) {
            std::string id = sub.substr(4);
            if (id == "gaussian") id = "gaussian-ot";
            return cmd_experiment(g, id);
        }
        std::cerr << "unknown subcommand\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.category() == ErrorCategory::numeric ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
