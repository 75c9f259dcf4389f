#include "rnne/error.hpp"
#include "rnne/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rnne {

namespace {

constexpr Eigen::Index embed_chunk = 256;

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Matrix encode_columns(const ModelParams& p, Matrix input) {
    for (const auto& layer : p.encoder) {
        Matrix z = layer.weight * input;
        z.colwise() += layer.bias;
        input = sigmoid(z);
    }
    return input;
}

}  // namespace

BatchSample sample_batch(const TrainingWindow& window, std::size_t batch_size, std::uint64_t seed) {
    BatchSample out;
    auto eligible = window.eligible_slots();
    if (eligible.empty()) throw TrainingError("no slot is normal across the whole window; nothing to train on");
    if (eligible.size() < batch_size) {
        out.diagnostic = "batch shrunk from " + std::to_string(batch_size) + " to " +
                         std::to_string(eligible.size()) + " eligible slots";
        batch_size = eligible.size();
    }

    // Partial Fisher-Yates: the first batch_size entries are the sample.
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < batch_size; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
        std::swap(eligible[i], eligible[pick(rng)]);
    }
    eligible.resize(batch_size);
    std::sort(eligible.begin(), eligible.end());
    out.slots = std::move(eligible);
    return out;
}

EmbeddingSet embed_window(const TrainingWindow& window, const ModelParams& p) {
    const auto n = static_cast<Eigen::Index>(window.capacity());
    const auto d = static_cast<Eigen::Index>(window.embedding_dim());
    if (p.capacity() != window.capacity() || p.embedding_dim() != window.embedding_dim())
        throw ValidationError("model and window dimensions differ");

    EmbeddingSet out;
    Matrix h_prev = window.carry_hidden();  // N x d
    for (const auto& entry : window.entries()) {
        const auto& snap = entry.snapshot;
        Matrix y(n, d);
        for (Eigen::Index start = 0; start < n; start += embed_chunk) {
            const Eigen::Index cols = std::min(embed_chunk, n - start);
            Matrix input(d + n, cols);
            input.topRows(d) = h_prev.middleRows(start, cols).transpose();
            input.bottomRows(n) = snap.features.middleRows(start, cols).transpose();
            y.middleRows(start, cols) = encode_columns(p, std::move(input)).transpose();
        }
        if (!y.allFinite()) throw CorruptionError("embedding of snapshot " + std::to_string(snap.time_index()) +
                                                  " contains NaN or Inf");
        SnapshotEmbedding emb;
        emb.time_index = snap.time_index();
        emb.node_ids = snap.base.node_ids;
        emb.states = snap.states;
        emb.y = y;
        emb.hidden = y;
        out.push_back(std::move(emb));
        h_prev = std::move(y);
    }
    return out;
}

TrainResult train_window(const TrainingWindow& window, const std::optional<ModelParams>& params,
                         const Hyperparams& hp, std::uint64_t seed) {
    hp.validate();
    if (window.empty()) throw ValidationError("cannot train on an empty window");

    TrainResult result;
    if (params && hp.warm_start) {
        result.params = *params;
    } else {
        const auto sizes = make_layer_sizes(window.capacity(), window.embedding_dim(), hp.hidden_layers);
        result.params = ModelParams::initialize(sizes, seed);
    }
    result.params.check_finite("initial parameters");

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    double block_sum = 0.0;
    std::size_t block_len = 0;
    std::optional<double> previous_block;
    bool shrink_noted = false;

    for (std::size_t iter = 0; iter < hp.max_iters; ++iter) {
        auto batch = sample_batch(window, hp.batch_size, rng());
        if (batch.diagnostic && !shrink_noted) {
            result.diagnostics.push_back(*batch.diagnostic);
            shrink_noted = true;
        }

        LossAndGradients lg;
        try {
            lg = gradients(window, batch.slots, result.params, hp);
        } catch (const CorruptionError& e) {
            throw TrainingError("training diverged at iteration " + std::to_string(iter) + ": " + e.what());
        }
        const double loss = lg.loss.total;
        if (!std::isfinite(loss))
            throw TrainingError("training diverged at iteration " + std::to_string(iter) + ": loss is not finite");

        result.log.push_back(
            {iter, loss, lg.loss.first_order_sum(), lg.loss.reconstruction_sum(), lg.loss.stability});

        const double eta = hp.learning_rate * std::pow(hp.lr_decay, static_cast<double>(iter / 100));
        try {
            sgd_step(result.params, lg.grads, eta);
        } catch (const CorruptionError& e) {
            throw TrainingError("training diverged at iteration " + std::to_string(iter) + ": " + e.what());
        }
        result.iterations = iter + 1;

        block_sum += loss;
        if (++block_len == hp.patience) {
            const double block_mean = block_sum / static_cast<double>(block_len);
            if (previous_block) {
                const double improvement = (*previous_block - block_mean) / std::max(std::fabs(*previous_block), 1e-300);
                if (improvement < hp.tolerance) {
                    result.converged = true;
                    break;
                }
            }
            previous_block = block_mean;
            block_sum = 0.0;
            block_len = 0;
        }
    }

    result.embeddings = embed_window(window, result.params);
    return result;
}

void store_hidden(TrainingWindow& window, const EmbeddingSet& embeddings) {
    if (embeddings.size() != window.size()) throw ValidationError("store_hidden: one embedding per window entry expected");
    for (std::size_t k = 0; k < embeddings.size(); ++k) {
        if (embeddings[k].time_index != window[k].snapshot.time_index())
            throw SequencingError("store_hidden: embedding time index does not match window entry");
        window.set_hidden(k, embeddings[k].hidden);
    }
}

}  // namespace rnne
