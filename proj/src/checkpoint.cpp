#include "rnne/error.hpp"
#include "rnne/json_io.hpp"

#include <fstream>

namespace rnne {

namespace {

constexpr const char* checkpoint_format = "rnne-checkpoint";
constexpr int checkpoint_version = 1;

nlohmann::json layer_to_json(const Layer& layer) {
    std::vector<double> weight(layer.weight.data(), layer.weight.data() + layer.weight.size());
    std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
    return {{"rows", layer.weight.rows()}, {"cols", layer.weight.cols()}, {"weight", weight}, {"bias", bias}};
}

void layer_from_json(const nlohmann::json& j, Layer& layer) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (rows != layer.weight.rows() || cols != layer.weight.cols())
        throw ValidationError("checkpoint layer shape does not match layer_sizes");
    const auto weight = j.at("weight").get<std::vector<double>>();
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(weight.size()) != rows * cols || static_cast<Eigen::Index>(bias.size()) != rows)
        throw ValidationError("checkpoint layer has the wrong number of values");
    layer.weight = Eigen::Map<const Matrix>(weight.data(), rows, cols);
    layer.bias = Eigen::Map<const Vector>(bias.data(), rows);
}

}  // namespace

nlohmann::json to_json(const Hyperparams& hp) {
    return {{"loss_alpha", hp.loss_alpha},     {"beta", hp.beta},
            {"gamma", hp.gamma},               {"learning_rate", hp.learning_rate},
            {"lr_decay", hp.lr_decay},         {"batch_size", hp.batch_size},
            {"embedding_dim", hp.embedding_dim}, {"hidden_layers", hp.hidden_layers},
            {"max_iters", hp.max_iters},       {"patience", hp.patience},
            {"tolerance", hp.tolerance},       {"warm_start", hp.warm_start}};
}

void update_from_json(Hyperparams& hp, const nlohmann::json& j) {
    auto take = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    take("loss_alpha", hp.loss_alpha);
    take("beta", hp.beta);
    take("gamma", hp.gamma);
    take("learning_rate", hp.learning_rate);
    take("lr_decay", hp.lr_decay);
    take("batch_size", hp.batch_size);
    take("embedding_dim", hp.embedding_dim);
    take("hidden_layers", hp.hidden_layers);
    take("max_iters", hp.max_iters);
    take("patience", hp.patience);
    take("tolerance", hp.tolerance);
    take("warm_start", hp.warm_start);
}

nlohmann::json to_json(const ModelParams& p) {
    nlohmann::json enc = nlohmann::json::array();
    nlohmann::json dec = nlohmann::json::array();
    for (const auto& l : p.encoder) enc.push_back(layer_to_json(l));
    for (const auto& l : p.decoder) dec.push_back(layer_to_json(l));
    return {{"layer_sizes", p.layer_sizes}, {"encoder", enc}, {"decoder", dec}};
}

ModelParams model_params_from_json(const nlohmann::json& j) {
    ModelParams p = ModelParams::zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const auto& enc = j.at("encoder");
    const auto& dec = j.at("decoder");
    if (enc.size() != p.encoder.size() || dec.size() != p.decoder.size())
        throw ValidationError("checkpoint layer count does not match layer_sizes");
    for (std::size_t l = 0; l < p.encoder.size(); ++l) layer_from_json(enc[l], p.encoder[l]);
    for (std::size_t l = 0; l < p.decoder.size(); ++l) layer_from_json(dec[l], p.decoder[l]);
    p.check_finite("checkpoint parameters");
    return p;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::json j = {{"format", checkpoint_format},
                        {"version", checkpoint_version},
                        {"model", to_json(ckpt.params)},
                        {"hyperparams", to_json(ckpt.hyper)},
                        {"seed", ckpt.seed}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw CorruptionError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != checkpoint_format) throw ValidationError(path.string() + " is not an rnne checkpoint");
    if (j.value("version", 0) != checkpoint_version)
        throw ValidationError("unsupported checkpoint version " + j.value("version", nlohmann::json()).dump());
    Checkpoint ckpt;
    try {
        ckpt.params = model_params_from_json(j.at("model"));
        update_from_json(ckpt.hyper, j.at("hyperparams"));
        ckpt.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    return ckpt;
}

}  // namespace rnne
