#include "otflow/model_io.hpp"

#include <filesystem>

#include <json.hpp>

#include "otflow/otf1.hpp"

namespace otflow {

using nlohmann::json;

namespace {

std::string embedding_name(TimeEmbedding e) {
    return e == TimeEmbedding::append_t ? "append-t" : "fourier";
}

TimeEmbedding embedding_from_name(const std::string& s) {
    if (s == "append-t") return TimeEmbedding::append_t;
    if (s == "fourier") return TimeEmbedding::fourier;
    throw ParseError("unknown time embedding '" + s + "'");
}

json spec_to_json(const MlpSpec& spec) {
    return json{{"input_dim", spec.input_dim},
                {"output_dim", spec.output_dim},
                {"hidden", spec.hidden},
                {"time_embedding", embedding_name(spec.time_embedding)},
                {"fourier_features", spec.fourier_features},
                {"with_time", spec.with_time}};
}

MlpSpec spec_from_json(const json& j) {
    MlpSpec spec;
    spec.input_dim = j.at("input_dim").get<int>();
    spec.output_dim = j.at("output_dim").get<int>();
    spec.hidden = j.at("hidden").get<std::vector<int>>();
    spec.time_embedding = embedding_from_name(j.at("time_embedding").get<std::string>());
    spec.fourier_features = j.at("fourier_features").get<int>();
    spec.with_time = j.at("with_time").get<bool>();
    return spec;
}

json load_json_file(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON in " + path);
    return j;
}

}  // namespace

void save_flow_checkpoint(const std::string& dir, const Checkpoint& ckpt) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    const Mlp& net = ckpt.net;
    json meta{{"kind", "mlp-flow"},
              {"spec", spec_to_json(net.spec())},
              {"iteration", ckpt.iteration},
              {"running_loss", ckpt.running_loss},
              {"n_layers", net.weights().size()},
              {"n_params", net.n_params()}};
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        otf1_save(dir + "/w" + std::to_string(l) + ".otf1",
                  otf1_from_matrix(net.weights()[l]));
        otf1_save(dir + "/b" + std::to_string(l) + ".otf1",
                  otf1_from_vector(net.biases()[l]));
    }
    atomic_write_text(dir + "/model.json", meta.dump(2) + "\n");
}

Checkpoint load_flow_checkpoint(const std::string& dir) {
    const json meta = load_json_file(dir + "/model.json");
    if (meta.at("kind").get<std::string>() != "mlp-flow") {
        throw FormatError("checkpoint kind is not mlp-flow");
    }
    const MlpSpec spec = spec_from_json(meta.at("spec"));
    const std::size_t n_layers = meta.at("n_layers").get<std::size_t>();

    RngStream dummy(0, 0);
    Mlp net(spec, dummy);
    if (net.weights().size() != n_layers) {
        throw FormatError("layer count mismatch in checkpoint");
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        Matrix w = otf1_to_matrix(otf1_load(dir + "/w" + std::to_string(l) + ".otf1"));
        Vector b = otf1_to_vector(otf1_load(dir + "/b" + std::to_string(l) + ".otf1"));
        if (w.rows() != net.weights()[l].rows() ||
            w.cols() != net.weights()[l].cols() || b.dim() != net.biases()[l].dim()) {
            throw FormatError("weight shape mismatch in checkpoint");
        }
        net.weights()[l] = std::move(w);
        net.biases()[l] = std::move(b);
    }

    Checkpoint ckpt;
    ckpt.iteration = meta.at("iteration").get<int>();
    ckpt.running_loss = meta.at("running_loss").get<double>();
    ckpt.net = std::move(net);
    return ckpt;
}

std::shared_ptr<MlpFlowField> load_flow_field(const std::string& dir) {
    return std::make_shared<MlpFlowField>(load_flow_checkpoint(dir).net);
}

ScorePtr score_from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid score JSON");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "additive-sin") {
        return std::make_shared<AdditiveSinScore>(j.at("dim").get<int>());
    }
    if (kind == "linear") {
        Vector w = Vector::from(j.at("weights").get<std::vector<double>>());
        const double b = j.value("bias", 0.0);
        return std::make_shared<LinearScore>(std::move(w), b);
    }
    if (kind == "quadratic") {
        const auto diag = j.at("hessian_diag").get<std::vector<double>>();
        return std::make_shared<QuadraticScore>(
            SpdMatrix::from_diag(Vector::from(diag)));
    }
    if (kind == "mlp") {
        MlpSpec spec;
        spec.input_dim = j.at("dim").get<int>();
        spec.output_dim = 1;
        if (j.contains("hidden")) spec.hidden = j.at("hidden").get<std::vector<int>>();
        RngStream rng(j.value("seed", std::uint64_t{0}), 7);
        return std::make_shared<MlpScore>(spec, rng);
    }
    if (kind == "grid-logit") {
        return std::make_shared<GridLogitScore>(j.at("height").get<int>(),
                                                j.at("width").get<int>());
    }
    throw ParseError("unknown score kind '" + kind + "'");
}

ScorePtr score_from_json_file(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return score_from_json_text(std::string(bytes.begin(), bytes.end()));
}

}  // namespace otflow
