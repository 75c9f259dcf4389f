#include "rnne/model.hpp"

#include "rnne/error.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace rnne {

namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Layer make_layer(std::size_t in, std::size_t out) {
    const auto r = static_cast<Eigen::Index>(out);
    const auto c = static_cast<Eigen::Index>(in);
    return {Matrix::Zero(r, c), Vector::Zero(r)};
}

/// Activations of a stack of layers; acts[0] is the input, one column per sample.
std::vector<Matrix> forward_stack(const std::vector<Layer>& stack, Matrix input) {
    std::vector<Matrix> acts;
    acts.reserve(stack.size() + 1);
    acts.push_back(std::move(input));
    for (const auto& layer : stack) {
        Matrix z = layer.weight * acts.back();
        z.colwise() += layer.bias;
        acts.push_back(sigmoid(z));
    }
    return acts;
}

/// Accumulates parameter gradients of a stack given d(loss)/d(output) and
/// returns d(loss)/d(input).
Matrix backward_stack(const std::vector<Layer>& stack, const std::vector<Matrix>& acts, Matrix grad_out,
                      std::vector<Layer>& grads) {
    for (std::size_t l = stack.size(); l-- > 0;) {
        const Matrix& a = acts[l + 1];
        Matrix delta = (grad_out.array() * a.array() * (1.0 - a.array())).matrix();
        grads[l].weight.noalias() += delta * acts[l].transpose();
        grads[l].bias += delta.rowwise().sum();
        grad_out = stack[l].weight.transpose() * delta;
    }
    return grad_out;
}

void check_dims(const ModelParams& p, Eigen::Index h, Eigen::Index x) {
    const auto d = static_cast<Eigen::Index>(p.embedding_dim());
    const auto n = static_cast<Eigen::Index>(p.capacity());
    if (h != d || x != n)
        throw ValidationError("input has hidden width " + std::to_string(h) + " and feature width " +
                              std::to_string(x) + ", model expects " + std::to_string(d) + " and " +
                              std::to_string(n));
}

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) throw CorruptionError(what + " contains NaN or Inf");
}

/// Per-step state of the batch forward pass.
struct StepTrace {
    std::vector<Matrix> enc;  // enc[0] = [h_prev; x], enc.back() = y
    std::vector<Matrix> dec;  // dec[0] = y, dec.back() = x_hat
    Matrix weight_sq;         // squared reconstruction weights, (N + d) x b
    Matrix adjacency;         // b x b slice of M_k
};

struct BatchTrace {
    std::vector<StepTrace> steps;
    LossBreakdown loss;
};

BatchTrace run_batch(const TrainingWindow& window, const std::vector<std::size_t>& batch, const ModelParams& p,
                     const Hyperparams& hp) {
    if (window.empty()) throw ValidationError("window is empty");
    if (batch.empty()) throw TrainingError("empty batch");
    const auto n_slots = window.capacity();
    if (p.capacity() != n_slots || p.embedding_dim() != window.embedding_dim())
        throw ValidationError("model is sized for N=" + std::to_string(p.capacity()) + ", d=" +
                              std::to_string(p.embedding_dim()) + " but window has N=" + std::to_string(n_slots) +
                              ", d=" + std::to_string(window.embedding_dim()));
    for (auto s : batch) {
        if (s >= n_slots) throw ValidationError("batch slot " + std::to_string(s) + " out of range");
        for (const auto& e : window.entries())
            if (e.snapshot.states[s] != NodeState::normal)
                throw TrainingError("sampling contract violated: slot " + std::to_string(s) + " is " +
                                    std::string(to_string(e.snapshot.states[s])) + " at snapshot " +
                                    std::to_string(e.snapshot.time_index()));
    }

    const auto b = static_cast<Eigen::Index>(batch.size());
    const auto d = static_cast<Eigen::Index>(p.embedding_dim());
    const auto n = static_cast<Eigen::Index>(n_slots);

    BatchTrace trace;
    Matrix h_prev(d, b);
    for (Eigen::Index c = 0; c < b; ++c)
        h_prev.col(c) = window.carry_hidden().row(static_cast<Eigen::Index>(batch[c])).transpose();

    for (const auto& entry : window.entries()) {
        const auto& snap = entry.snapshot;
        StepTrace step;
        Matrix input(d + n, b);
        input.topRows(d) = h_prev;
        step.weight_sq = Matrix::Ones(d + n, b);
        step.adjacency.resize(b, b);
        for (Eigen::Index c = 0; c < b; ++c) {
            const auto u = static_cast<Eigen::Index>(batch[c]);
            input.col(c).tail(n) = snap.features.row(u).transpose();
            for (Eigen::Index j = 0; j < n; ++j)
                if (snap.adjacency()(u, j) != 0.0) step.weight_sq(d + j, c) = hp.beta * hp.beta;
            for (Eigen::Index c2 = 0; c2 < b; ++c2)
                step.adjacency(c, c2) = snap.adjacency()(u, static_cast<Eigen::Index>(batch[c2]));
        }
        step.enc = forward_stack(p.encoder, std::move(input));
        step.dec = forward_stack(p.decoder, step.enc.back());

        const Matrix& y = step.enc.back();
        const Matrix residual = step.dec.back() - step.enc.front();
        trace.loss.reconstruction.push_back((residual.array().square() * step.weight_sq.array()).sum());
        trace.loss.first_order.push_back(first_order_loss(y.transpose(), step.adjacency));

        h_prev = y;
        trace.steps.push_back(std::move(step));
    }

    const auto steps = trace.steps.size();
    if (steps >= 2) {
        Matrix mean = Matrix::Zero(d, b);
        for (const auto& s : trace.steps) mean += s.enc.back();
        mean /= static_cast<double>(steps);
        for (const auto& s : trace.steps) trace.loss.stability += (s.enc.back() - mean).squaredNorm();
    }

    double total = hp.gamma * trace.loss.stability;
    for (std::size_t k = 0; k < steps; ++k)
        total += hp.loss_alpha * trace.loss.first_order[k] + trace.loss.reconstruction[k];
    trace.loss.total = total;
    return trace;
}

}  // namespace

std::size_t ModelParams::parameter_count() const {
    std::size_t count = 0;
    for (const auto* stack : {&encoder, &decoder})
        for (const auto& layer : *stack) count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    return count;
}

ModelParams ModelParams::zeros(const std::vector<std::size_t>& layer_sizes) {
    if (layer_sizes.size() < 2) throw ValidationError("layer_sizes needs at least an input and an output width");
    for (auto s : layer_sizes)
        if (s == 0) throw ValidationError("layer widths must be positive");
    if (layer_sizes.front() <= layer_sizes.back())
        throw ValidationError("encoder input width must exceed the embedding width");
    ModelParams p;
    p.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        p.encoder.push_back(make_layer(layer_sizes[l], layer_sizes[l + 1]));
    for (std::size_t l = layer_sizes.size() - 1; l > 0; --l)
        p.decoder.push_back(make_layer(layer_sizes[l], layer_sizes[l - 1]));
    return p;
}

ModelParams ModelParams::initialize(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
    ModelParams p = zeros(layer_sizes);
    std::mt19937_64 rng(seed);
    for (auto* stack : {&p.encoder, &p.decoder}) {
        for (auto& layer : *stack) {
            const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
        }
    }
    return p;
}

bool ModelParams::all_finite() const {
    for (const auto* stack : {&encoder, &decoder})
        for (const auto& layer : *stack)
            if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    return true;
}

void ModelParams::check_finite(const std::string& what) const {
    if (!all_finite()) throw CorruptionError(what + " contains NaN or Inf");
}

std::vector<std::size_t> make_layer_sizes(std::size_t capacity, std::size_t embedding_dim,
                                          const std::vector<std::size_t>& hidden_layers) {
    std::vector<std::size_t> sizes{capacity + embedding_dim};
    sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
    sizes.push_back(embedding_dim);
    return sizes;
}

void Hyperparams::validate() const {
    if (!(loss_alpha >= 0.0)) throw ValidationError("loss_alpha must be >= 0");
    if (!(beta >= 1.0)) throw ValidationError("beta must be >= 1");
    if (!(gamma >= 0.0)) throw ValidationError("gamma must be >= 0");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (!(lr_decay > 0.0)) throw ValidationError("lr_decay must be > 0");
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    if (embedding_dim == 0) throw ValidationError("embedding_dim must be positive");
    if (patience == 0) throw ValidationError("patience must be positive");
    if (!(tolerance >= 0.0)) throw ValidationError("tolerance must be >= 0");
}

Vector encode(const Vector& h_prev, const Vector& x, const ModelParams& p) {
    check_dims(p, h_prev.size(), x.size());
    Matrix input(h_prev.size() + x.size(), 1);
    input.col(0) << h_prev, x;
    auto acts = forward_stack(p.encoder, std::move(input));
    require_finite(acts.back(), "encoder output");
    return acts.back().col(0);
}

Vector decode(const Vector& y, const ModelParams& p) {
    if (y.size() != static_cast<Eigen::Index>(p.embedding_dim()))
        throw ValidationError("decode: representation has width " + std::to_string(y.size()) + ", expected " +
                              std::to_string(p.embedding_dim()));
    auto acts = forward_stack(p.decoder, Matrix(y));
    require_finite(acts.back(), "decoder output");
    return acts.back().col(0);
}

double recon_loss(const Vector& x_hat, const Vector& h_prev, const Vector& x, const Vector& adjacency_row,
                  double beta) {
    if (!(beta >= 1.0)) throw ValidationError("beta must be >= 1");
    if (x_hat.size() != h_prev.size() + x.size() || adjacency_row.size() != x.size())
        throw ValidationError("recon_loss: dimension mismatch");
    const auto d = h_prev.size();
    double loss = (x_hat.head(d) - h_prev).squaredNorm();
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double w = adjacency_row[j] != 0.0 ? beta : 1.0;
        const double r = (x_hat[d + j] - x[j]) * w;
        loss += r * r;
    }
    return loss;
}

double first_order_loss(const Matrix& y, const Matrix& adjacency) {
    if (adjacency.rows() != y.rows() || adjacency.cols() != y.rows())
        throw ValidationError("first_order_loss: adjacency must be b x b for b representations");
    double loss = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index j = 0; j < y.rows(); ++j)
            if (adjacency(i, j) != 0.0) loss += adjacency(i, j) * (y.row(i) - y.row(j)).squaredNorm();
    return loss;
}

double stability_loss(const Matrix& y_over_time) {
    if (y_over_time.rows() < 2) return 0.0;
    const Eigen::RowVectorXd mean = y_over_time.colwise().mean();
    return (y_over_time.rowwise() - mean).squaredNorm();
}

double LossBreakdown::first_order_sum() const { return std::accumulate(first_order.begin(), first_order.end(), 0.0); }

double LossBreakdown::reconstruction_sum() const {
    return std::accumulate(reconstruction.begin(), reconstruction.end(), 0.0);
}

LossBreakdown total_loss(const TrainingWindow& window, const std::vector<std::size_t>& batch, const ModelParams& p,
                         const Hyperparams& hp) {
    return run_batch(window, batch, p, hp).loss;
}

LossAndGradients gradients(const TrainingWindow& window, const std::vector<std::size_t>& batch,
                           const ModelParams& p, const Hyperparams& hp) {
    BatchTrace trace = run_batch(window, batch, p, hp);
    ModelParams grads = p.zeros_like();

    const auto steps = trace.steps.size();
    const auto d = static_cast<Eigen::Index>(p.embedding_dim());
    const auto b = static_cast<Eigen::Index>(batch.size());

    Matrix mean = Matrix::Zero(d, b);
    for (const auto& s : trace.steps) mean += s.enc.back();
    mean /= static_cast<double>(steps);

    // Gradient reaching y_k through step k + 1 (as encoder input and as target).
    Matrix carry = Matrix::Zero(d, b);
    for (std::size_t k = steps; k-- > 0;) {
        const StepTrace& s = trace.steps[k];
        const Matrix& y = s.enc.back();

        const Matrix grad_xhat = 2.0 * ((s.dec.back() - s.enc.front()).array() * s.weight_sq.array()).matrix();
        Matrix grad_y = backward_stack(p.decoder, s.dec, grad_xhat, grads.decoder);

        if (hp.loss_alpha != 0.0) {
            const Matrix sym = s.adjacency + s.adjacency.transpose();
            const Vector degree = sym.rowwise().sum();
            grad_y += hp.loss_alpha * 2.0 * (y * degree.asDiagonal() - y * sym);
        }
        if (steps >= 2 && hp.gamma != 0.0) grad_y += hp.gamma * 2.0 * (y - mean);
        grad_y += carry;

        const Matrix grad_input = backward_stack(p.encoder, s.enc, std::move(grad_y), grads.encoder);
        carry = grad_input.topRows(d) - grad_xhat.topRows(d);
    }

    grads.check_finite("gradient");
    return {std::move(trace.loss), std::move(grads)};
}

void sgd_step(ModelParams& p, const ModelParams& grads, double eta) {
    if (p.layer_sizes != grads.layer_sizes) throw ValidationError("sgd_step: gradient shape does not match");
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        p.encoder[l].weight -= eta * grads.encoder[l].weight;
        p.encoder[l].bias -= eta * grads.encoder[l].bias;
    }
    for (std::size_t l = 0; l < p.decoder.size(); ++l) {
        p.decoder[l].weight -= eta * grads.decoder[l].weight;
        p.decoder[l].bias -= eta * grads.decoder[l].bias;
    }
    p.check_finite("parameters after update");
}

}  // namespace rnne
