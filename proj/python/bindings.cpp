#include "rnne/dynamics.hpp"
#include "rnne/error.hpp"
#include "rnne/evaluation.hpp"
#include "rnne/pipeline.hpp"
#include "rnne/pretreatment.hpp"
#include "rnne/stats.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;

namespace {

rnne::RunConfig parse_config(const std::string& text) { return rnne::config_from_json(nlohmann::json::parse(text)); }

std::vector<std::tuple<std::string, std::string, std::string, std::string, double>> as_tuples(
    const std::vector<rnne::MetricRow>& rows) {
    std::vector<std::tuple<std::string, std::string, std::string, std::string, double>> out;
    for (const auto& r : rows) out.emplace_back(r.task, r.snapshot, r.k_or_fraction, r.metric, r.value);
    return out;
}

}  // namespace

PYBIND11_MODULE(_rnne, m) {
    m.doc() = "Recurrent autoencoder embeddings for dynamic networks";

    auto base = py::register_exception<rnne::Error>(m, "RnneError");
    py::register_exception<rnne::ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<rnne::CapacityError>(m, "CapacityError", base.ptr());
    py::register_exception<rnne::SequencingError>(m, "SequencingError", base.ptr());
    py::register_exception<rnne::TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<rnne::IoError>(m, "IoError", base.ptr());

    m.def("feature_matrix", &rnne::feature_matrix, py::arg("adjacency"));
    m.def("grubbs_critical", &rnne::stats::grubbs_critical, py::arg("m"), py::arg("alpha") = 0.05);
    m.def(
        "grubbs_outliers",
        [](const rnne::Vector& scores, std::vector<bool> exclude, double alpha) {
            if (exclude.empty()) exclude.assign(static_cast<std::size_t>(scores.size()), false);
            return rnne::grubbs_outliers(scores, exclude, alpha).outliers;
        },
        py::arg("scores"), py::arg("exclude") = std::vector<bool>{}, py::arg("alpha") = 0.05);

    m.def(
        "synth_community_graph",
        [](std::size_t communities, std::size_t nodes_per, double p_in, double p_out, std::uint64_t seed) {
            auto lg = rnne::synth_community_graph(communities, nodes_per, p_in, p_out, seed);
            std::vector<std::string> labels;
            for (const auto& [id, label] : lg.labels) labels.push_back(label);
            return py::make_tuple(lg.graph.node_ids, lg.graph.adjacency, labels);
        },
        py::arg("communities"), py::arg("nodes_per"), py::arg("p_in"), py::arg("p_out"), py::arg("seed") = 0);

    m.def(
        "precision_at_k",
        [](const rnne::Matrix& y, const std::vector<std::pair<std::size_t, std::size_t>>& edges, std::size_t k) {
            rnne::PairSet truth;
            for (auto [a, b] : edges) truth.insert(rnne::make_pair_key(a, b));
            const auto ranked = rnne::rank_pairs(y, std::vector<bool>(static_cast<std::size_t>(y.rows()), true));
            return rnne::precision_at_k(ranked, truth, k);
        },
        py::arg("y"), py::arg("edges"), py::arg("k"));

    m.def(
        "f1_scores",
        [](const std::vector<int>& predicted, const std::vector<int>& truth) {
            const auto r = rnne::f1_scores(predicted, truth);
            return py::make_tuple(r.micro_f1, r.macro_f1);
        },
        py::arg("predicted"), py::arg("truth"));

    m.def("default_config", [] { return rnne::to_json(rnne::RunConfig{}).dump(); });
    m.def("generate", [](const std::string& config) { rnne::cmd_gen(parse_config(config)); }, py::arg("config"));
    m.def(
        "train",
        [](const std::string& config) {
            const auto outcome = rnne::cmd_train(parse_config(config));
            return py::make_tuple(outcome.total_iterations, outcome.final_loss, outcome.temporal_variance);
        },
        py::arg("config"));
    m.def(
        "evaluate",
        [](const std::string& config, const std::string& task) {
            return as_tuples(rnne::cmd_eval(parse_config(config), task));
        },
        py::arg("config"), py::arg("task"));
    m.def(
        "inspect_checkpoint", [](const std::string& path) { return rnne::inspect_checkpoint(path).dump(); },
        py::arg("path"));
    m.def(
        "read_embeddings", [](const std::string& path) { return rnne::read_embedding_file(path); }, py::arg("path"));
}
