#pragma once

#include "rnne/graph.hpp"
#include "rnne/pretreatment.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rnne {

/// Fully connected logistic layer: a = sigmoid(weight * in + bias).
struct Layer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

/// Parameters of the shared recurrent autoencoder cell.
///
/// `layer_sizes` describes the encoder, [N + d, L1, ..., d]. The decoder
/// mirrors it back to N + d. Gradients use the same type.
struct ModelParams {
    std::vector<std::size_t> layer_sizes;
    std::vector<Layer> encoder;
    std::vector<Layer> decoder;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t embedding_dim() const { return layer_sizes.back(); }
    std::size_t capacity() const { return input_dim() - embedding_dim(); }
    std::size_t parameter_count() const;

    /// Glorot-uniform weights, zero biases.
    static ModelParams initialize(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);
    static ModelParams zeros(const std::vector<std::size_t>& layer_sizes);
    ModelParams zeros_like() const { return zeros(layer_sizes); }

    /// Visits every weight and bias entry in a fixed order.
    template <typename F>
    void for_each_parameter(F&& f) {
        for (auto* stack : {&encoder, &decoder})
            for (auto& layer : *stack) {
                for (Eigen::Index i = 0; i < layer.weight.size(); ++i) f(layer.weight.data()[i]);
                for (Eigen::Index i = 0; i < layer.bias.size(); ++i) f(layer.bias.data()[i]);
            }
    }

    bool all_finite() const;
    /// Throws CorruptionError naming `what` if any entry is NaN or Inf.
    void check_finite(const std::string& what) const;
};

std::vector<std::size_t> make_layer_sizes(std::size_t capacity, std::size_t embedding_dim,
                                          const std::vector<std::size_t>& hidden_layers);

struct Hyperparams {
    double loss_alpha = 0.1;      // weight of the first-order term
    double beta = 5.0;            // reconstruction weight on non-zero entries
    double gamma = 1.0;           // weight of the temporal stability term
    double learning_rate = 0.01;
    double lr_decay = 1.0;        // multiplied into the rate every 100 iterations
    std::size_t batch_size = 16;
    std::size_t embedding_dim = 16;
    std::vector<std::size_t> hidden_layers{64};
    std::size_t max_iters = 2000;
    std::size_t patience = 20;
    double tolerance = 1e-5;
    bool warm_start = true;

    void validate() const;
};

Vector encode(const Vector& h_prev, const Vector& x, const ModelParams& p);
Vector decode(const Vector& y, const ModelParams& p);

/// Weighted squared reconstruction error of one node against [h_prev, x].
/// Feature coordinates whose adjacency entry is non-zero get weight beta,
/// everything else (including the hidden-state coordinates) weight 1.
double recon_loss(const Vector& x_hat, const Vector& h_prev, const Vector& x, const Vector& adjacency_row,
                  double beta);

/// sum_{i,j} a_ij ||y_i - y_j||^2 over ordered pairs; rows of `y` are nodes.
double first_order_loss(const Matrix& y, const Matrix& adjacency);

/// sum_k ||y_k - mean(y)||^2; rows of `y_over_time` are time steps.
double stability_loss(const Matrix& y_over_time);

struct LossBreakdown {
    double total = 0.0;
    std::vector<double> first_order;     // L1 per window step
    std::vector<double> reconstruction;  // L2 per window step
    double stability = 0.0;              // summed over the batch

    double first_order_sum() const;
    double reconstruction_sum() const;
};

/// Forward pass of the whole window for the batch, with hidden carry.
LossBreakdown total_loss(const TrainingWindow& window, const std::vector<std::size_t>& batch,
                         const ModelParams& p, const Hyperparams& hp);

struct LossAndGradients {
    LossBreakdown loss;
    ModelParams grads;
};

/// Exact gradient of the total loss, backpropagated through every window step.
LossAndGradients gradients(const TrainingWindow& window, const std::vector<std::size_t>& batch,
                           const ModelParams& p, const Hyperparams& hp);

/// theta <- theta - eta * grad
void sgd_step(ModelParams& p, const ModelParams& grads, double eta);

struct BatchSample {
    std::vector<std::size_t> slots;  // sorted ascending
    std::optional<std::string> diagnostic;
};

/// Uniform sample without replacement among slots that are normal in every
/// window entry.
BatchSample sample_batch(const TrainingWindow& window, std::size_t batch_size, std::uint64_t seed);

/// Representations of every slot for one window step.
struct SnapshotEmbedding {
    std::size_t time_index = 0;
    std::vector<std::string> node_ids;
    std::vector<NodeState> states;
    Matrix y;       // N x d
    Matrix hidden;  // N x d, equal to y

    bool valid(std::size_t slot) const { return states[slot] != NodeState::virtual_node; }
};

using EmbeddingSet = std::vector<SnapshotEmbedding>;

/// Runs the cell over all N slots of every window entry.
EmbeddingSet embed_window(const TrainingWindow& window, const ModelParams& p);

struct LossRecord {
    std::size_t iteration = 0;
    double total = 0.0;
    double first_order = 0.0;
    double reconstruction = 0.0;
    double stability = 0.0;
};

struct TrainResult {
    ModelParams params;
    EmbeddingSet embeddings;
    std::vector<LossRecord> log;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<std::string> diagnostics;
};

/// Trains on the window until the mean loss of consecutive `patience`-long
/// blocks improves by less than `tolerance` (relative) or `max_iters` is hit.
/// Starts from `params` when given and warm starts are enabled.
TrainResult train_window(const TrainingWindow& window, const std::optional<ModelParams>& params,
                         const Hyperparams& hp, std::uint64_t seed);

/// Copies trained hidden states back into the window entries.
void store_hidden(TrainingWindow& window, const EmbeddingSet& embeddings);

struct Checkpoint {
    ModelParams params;
    Hyperparams hyper;
    std::uint64_t seed = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rnne
