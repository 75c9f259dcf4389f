#include "fixtures.hpp"
#include "oracles.hpp"
#include "rnne/error.hpp"
#include "rnne/model.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace rnne;

namespace {

std::vector<double> flat(const ModelParams& p) {
    std::vector<double> out;
    ModelParams copy = p;
    copy.for_each_parameter([&](double& v) { out.push_back(v); });
    return out;
}

Hyperparams hyper(double alpha, double beta, double gamma) {
    Hyperparams hp;
    hp.loss_alpha = alpha;
    hp.beta = beta;
    hp.gamma = gamma;
    return hp;
}

/// Rebuilds the whole window loss node by node with the scalar forward pass
/// and the single-node term functions.
LossBreakdown recompute(const TrainingWindow& w, const std::vector<std::size_t>& batch, const ModelParams& p,
                        const Hyperparams& hp) {
    const auto d = static_cast<Eigen::Index>(p.embedding_dim());
    const auto b = static_cast<Eigen::Index>(batch.size());
    LossBreakdown out;
    std::vector<Matrix> y_time(batch.size(), Matrix(static_cast<Eigen::Index>(w.size()), d));
    std::vector<Vector> h(batch.size());
    for (std::size_t c = 0; c < batch.size(); ++c) h[c] = w.carry_hidden().row(static_cast<Eigen::Index>(batch[c])).transpose();

    for (std::size_t k = 0; k < w.size(); ++k) {
        const auto& snap = w[k].snapshot;
        Matrix y(b, d);
        Matrix adj(b, b);
        double l2 = 0.0;
        for (std::size_t c = 0; c < batch.size(); ++c) {
            const auto u = static_cast<Eigen::Index>(batch[c]);
            const Vector x = snap.features.row(u).transpose();
            std::vector<double> in(static_cast<std::size_t>(d + x.size()));
            for (Eigen::Index i = 0; i < d; ++i) in[static_cast<std::size_t>(i)] = h[c][i];
            for (Eigen::Index i = 0; i < x.size(); ++i) in[static_cast<std::size_t>(d + i)] = x[i];
            const Vector yc = oracle::to_vector(oracle::forward(p.encoder, in));
            const Vector xhat = oracle::to_vector(oracle::forward(p.decoder, oracle::forward(p.encoder, in)));
            l2 += recon_loss(xhat, h[c], x, snap.adjacency().row(u).transpose(), hp.beta);
            y.row(static_cast<Eigen::Index>(c)) = yc.transpose();
            y_time[c].row(static_cast<Eigen::Index>(k)) = yc.transpose();
            for (std::size_t c2 = 0; c2 < batch.size(); ++c2)
                adj(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c2)) =
                    snap.adjacency()(u, static_cast<Eigen::Index>(batch[c2]));
            h[c] = yc;
        }
        out.reconstruction.push_back(l2);
        out.first_order.push_back(first_order_loss(y, adj));
    }
    for (const auto& yt : y_time) out.stability += stability_loss(yt);
    out.total = hp.gamma * out.stability;
    for (std::size_t k = 0; k < w.size(); ++k) out.total += hp.loss_alpha * out.first_order[k] + out.reconstruction[k];
    return out;
}

}  // namespace

TEST(Encode, ZeroWeightsGiveOneHalf) {
    auto p = ModelParams::zeros({7, 3});
    const Vector y = encode(Vector::Zero(3), Vector::Ones(4), p);
    EXPECT_TRUE(y.isApprox(Vector::Constant(3, 0.5)));
    const Vector xhat = decode(y, p);
    EXPECT_EQ(xhat.size(), 7);
    EXPECT_TRUE(xhat.isApprox(Vector::Constant(7, 0.5)));
}

TEST(Encode, MatchesScalarForward) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto p = fixture::random_params(make_layer_sizes(9, 3, {6, 4}), seed);
        Vector h(3), x(9);
        for (auto& v : h) v = u(rng);
        for (auto& v : x) v = u(rng);
        std::vector<double> in(h.data(), h.data() + 3);
        in.insert(in.end(), x.data(), x.data() + 9);
        const auto ye = oracle::forward(p.encoder, in);
        const Vector y = encode(h, x, p);
        EXPECT_LT((y - oracle::to_vector(ye)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_LT((decode(y, p) - oracle::to_vector(oracle::forward(p.decoder, ye))).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_GT(y.minCoeff(), 0.0);
        EXPECT_LT(y.maxCoeff(), 1.0);
    }
}

TEST(Encode, BiasOnlyWhenInputIsZero) {
    auto p = fixture::random_params(make_layer_sizes(5, 2, {}), 3);
    const Vector y = encode(Vector::Zero(2), Vector::Zero(5), p);
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(y[i], 1.0 / (1.0 + std::exp(-p.encoder[0].bias[i])), 1e-15);
}

TEST(Encode, RejectsWrongWidth) {
    auto p = ModelParams::zeros({7, 3});
    EXPECT_THROW(encode(Vector::Zero(3), Vector::Zero(5), p), ValidationError);
    EXPECT_THROW(decode(Vector::Zero(2), p), ValidationError);
}

TEST(ReconLoss, PerfectReconstructionIsZero) {
    Vector h(2), x(3), a(3);
    h << 0.2, 0.7;
    x << 1, 0.5, 0;
    a << 0, 1, 0;
    Vector t(5);
    t << h, x;
    EXPECT_EQ(recon_loss(t, h, x, a, 5.0), 0.0);
}

TEST(ReconLoss, BetaOneIsPlainSquaredError) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vector h(3), x(6), a(6), xhat(9);
        for (auto& v : h) v = u(rng);
        for (auto& v : x) v = u(rng);
        for (auto& v : xhat) v = u(rng);
        for (auto& v : a) v = u(rng) < 0.5 ? 0.0 : 2.0;
        Vector t(9);
        t << h, x;
        const double plain = (xhat - t).squaredNorm();
        EXPECT_NEAR(recon_loss(xhat, h, x, a, 1.0), plain, 4 * std::numeric_limits<double>::epsilon() * plain);
        EXPECT_NEAR(recon_loss(xhat, h, x, Vector::Zero(6), 7.0), plain,
                    4 * std::numeric_limits<double>::epsilon() * plain);
    }
}

TEST(ReconLoss, ThreeNodeToyWithOneEdge) {
    // Node 0 of the single-edge graph {0-1}; x is its feature row, d = 1.
    Vector h(1), x(3), a(3), xhat(4);
    h << 0.3;
    x << 0.5, 1.0, 0.0;
    a << 0.0, 1.0, 0.0;
    xhat << 0.4, 0.6, 0.8, 0.1;
    // (0.1)^2 + (0.1)^2 + (0.2 * 5)^2 + (0.1)^2
    EXPECT_NEAR(recon_loss(xhat, h, x, a, 5.0), 0.01 + 0.01 + 1.0 + 0.01, 1e-15);
    EXPECT_THROW(recon_loss(xhat, h, x, a, 0.5), ValidationError);
}

TEST(FirstOrderLoss, WeightedEdgeCountsBothOrders) {
    Matrix y(3, 2);
    y << 0, 0, 0.3, 0.4, 9, 9;
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 2.0;
    EXPECT_NEAR(first_order_loss(y, a), 1.0, 1e-15);
    EXPECT_EQ(first_order_loss(y, Matrix::Zero(3, 3)), 0.0);
    EXPECT_EQ(first_order_loss(Matrix::Constant(3, 2, 0.4), a), 0.0);
}

TEST(StabilityLoss, HandExamples) {
    Matrix y(2, 1);
    y << 0, 2;
    EXPECT_DOUBLE_EQ(stability_loss(y), 2.0);
    EXPECT_EQ(stability_loss(Matrix::Constant(4, 3, 0.7)), 0.0);
    EXPECT_EQ(stability_loss(Matrix::Ones(1, 3)), 0.0);
}

TEST(StabilityLoss, EqualsStepsTimesPopulationVariance) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix y(4, 3);
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
        double var_sum = 0.0;
        for (Eigen::Index c = 0; c < 3; ++c) {
            double m = 0.0, m2 = 0.0;
            for (Eigen::Index r = 0; r < 4; ++r) {
                m += y(r, c);
                m2 += y(r, c) * y(r, c);
            }
            m /= 4.0;
            var_sum += m2 / 4.0 - m * m;
        }
        EXPECT_NEAR(stability_loss(y), 4.0 * var_sum, 1e-12);
    }
}

TEST(TotalLoss, TermSwitchOff) {
    auto w = fixture::random_window(4, 6, 2, 3);
    auto p = fixture::random_params(make_layer_sizes(6, 2, {4}), 4);
    const auto l = total_loss(w, {0, 2, 5}, p, hyper(0.0, 5.0, 0.0));
    EXPECT_EQ(l.total, l.reconstruction_sum());
    EXPECT_GT(l.stability, 0.0);
}

TEST(TotalLoss, SingleStepWindowHasNoStabilityTerm) {
    auto w = fixture::random_window(5, 6, 2, 1);
    ASSERT_EQ(w.size(), 1u);
    auto p = fixture::random_params(make_layer_sizes(6, 2, {4}), 5);
    const auto l = total_loss(w, {0, 1, 2, 3}, p, hyper(0.3, 2.0, 10.0));
    EXPECT_EQ(l.stability, 0.0);
    EXPECT_DOUBLE_EQ(l.total, 0.3 * l.first_order_sum() + l.reconstruction_sum());
}

TEST(TotalLoss, MatchesNodeByNodeRecomputation) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto w = fixture::random_window(seed, 6, 2, 2);
        auto p = fixture::random_params(make_layer_sizes(6, 2, {4}), seed);
        const auto hp = hyper(0.4, 3.0, 2.5);
        const std::vector<std::size_t> batch{1, 3, 4};
        const auto got = total_loss(w, batch, p, hp);
        const auto want = recompute(w, batch, p, hp);
        ASSERT_EQ(got.first_order.size(), 2u);
        for (std::size_t k = 0; k < 2; ++k) {
            EXPECT_NEAR(got.first_order[k], want.first_order[k], 1e-12);
            EXPECT_NEAR(got.reconstruction[k], want.reconstruction[k], 1e-12);
        }
        EXPECT_NEAR(got.stability, want.stability, 1e-12);
        EXPECT_NEAR(got.total, want.total, 1e-11);
    }
}

TEST(TotalLoss, RejectsNonNormalBatchSlot) {
    Matrix m0 = Matrix::Zero(12, 12);
    for (Eigen::Index i = 0; i < 12; ++i) m0(i, (i + 1) % 12) = m0((i + 1) % 12, i) = 1.0;
    Matrix m1 = m0;
    m1(0, 1) = m1(1, 0) = m1(0, 11) = m1(11, 0) = 0.0;
    for (Eigen::Index j : {3, 5, 6, 7, 9}) m1(0, j) = m1(j, 0) = 1.0;
    TrainingWindow w(2, 12, 2);
    w.push(fixture::snapshot_of(m0, 0));
    w.push(fixture::snapshot_of(m1, 1));
    ASSERT_EQ(w[1].snapshot.states[0], NodeState::dangerous);
    auto p = ModelParams::initialize(make_layer_sizes(12, 2, {}), 1);
    EXPECT_THROW(total_loss(w, {0, 4}, p, Hyperparams{}), TrainingError);
}

TEST(Gradients, MatchFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto w = fixture::random_window(seed, 8, 3, 3);
        auto p = fixture::random_params(make_layer_sizes(8, 3, {5}), seed);
        const auto batch = sample_batch(w, 4, seed).slots;
        ASSERT_EQ(batch.size(), 4u);
        const auto r = fixture::check_gradients(w, batch, p, hyper(0.2, 5.0, 1.5));
        EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed;
        EXPECT_EQ(r.checked, p.parameter_count());
    }
}

TEST(Gradients, MatchFiniteDifferencesAtCorners) {
    auto w = fixture::random_window(11, 8, 3, 3);
    auto p = fixture::random_params(make_layer_sizes(8, 3, {5}), 11);
    const std::vector<std::size_t> batch{0, 2, 5, 7};
    for (const auto& hp : {hyper(0.2, 5.0, 0.0), hyper(0.0, 5.0, 1.5), hyper(0.2, 1.0, 1.5), hyper(0.0, 1.0, 0.0)})
        EXPECT_LT(fixture::check_gradients(w, batch, p, hp).max_rel_error, 1e-4)
            << hp.loss_alpha << ' ' << hp.beta << ' ' << hp.gamma;
}

TEST(Gradients, DeepStackAndDegenerateInput) {
    auto w = fixture::random_window(21, 8, 2, 2);
    auto p = fixture::random_params(make_layer_sizes(8, 2, {6, 4}), 21);
    EXPECT_LT(fixture::check_gradients(w, {1, 3, 6}, p, hyper(0.5, 3.0, 2.0)).max_rel_error, 1e-4);

    auto empty = fixture::identical_window(Matrix::Zero(5, 5), 2, 2);
    auto q = fixture::random_params(make_layer_sizes(5, 2, {}), 2);
    const auto g = gradients(empty, {0, 1, 2, 3, 4}, q, hyper(1.0, 5.0, 1.0));
    EXPECT_TRUE(g.grads.all_finite());
    EXPECT_LT(fixture::check_gradients(empty, {0, 1, 2, 3, 4}, q, hyper(1.0, 5.0, 1.0)).max_rel_error, 1e-4);
}

TEST(SgdStep, ScalarArithmetic) {
    auto p = ModelParams::zeros({2, 1});
    auto g = p.zeros_like();
    p.encoder[0].weight(0, 0) = 1.0;
    g.encoder[0].weight(0, 0) = 2.0;
    sgd_step(p, g, 0.1);
    EXPECT_DOUBLE_EQ(p.encoder[0].weight(0, 0), 0.8);
}

TEST(SgdStep, ZeroGradientLeavesParamsUnchanged) {
    auto p = fixture::random_params(make_layer_sizes(6, 2, {4}), 9);
    const auto before = flat(p);
    sgd_step(p, p.zeros_like(), 0.5);
    EXPECT_EQ(flat(p), before);
}

TEST(SgdStep, NonFiniteResultIsCorruption) {
    auto p = ModelParams::zeros({3, 1});
    auto g = p.zeros_like();
    g.decoder[0].bias[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(sgd_step(p, g, 0.1), CorruptionError);
    EXPECT_THROW(sgd_step(p, ModelParams::zeros({4, 1}), 0.1), ValidationError);
}

TEST(SgdStep, SmallStepDecreasesLoss) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto w = fixture::random_window(seed, 8, 3, 3);
        auto p = fixture::random_params(make_layer_sizes(8, 3, {5}), seed);
        const std::vector<std::size_t> batch{0, 1, 4, 6};
        const auto hp = hyper(0.2, 5.0, 1.0);
        const auto lg = gradients(w, batch, p, hp);
        bool decreased = false;
        for (double eta = 1.0; eta > 1e-9 && !decreased; eta /= 2.0) {
            auto q = p;
            sgd_step(q, lg.grads, eta);
            decreased = total_loss(w, batch, q, hp).total < lg.loss.total;
        }
        EXPECT_TRUE(decreased) << "seed " << seed;
    }
}

TEST(SampleBatch, FullBatchIsEverySlot) {
    auto w = fixture::random_window(1, 8, 2, 2);
    EXPECT_EQ(sample_batch(w, 8, 3).slots, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(SampleBatch, DeterministicAndWithoutReplacement) {
    auto w = fixture::random_window(1, 20, 2, 2);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = sample_batch(w, 7, seed).slots;
        EXPECT_EQ(a, sample_batch(w, 7, seed).slots);
        EXPECT_EQ(a.size(), 7u);
        EXPECT_TRUE(std::adjacent_find(a.begin(), a.end()) == a.end());
        EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
    }
}

TEST(SampleBatch, SkipsDangerousAndShrinks) {
    Matrix m0 = Matrix::Zero(12, 12);
    for (Eigen::Index i = 0; i < 12; ++i) m0(i, (i + 1) % 12) = m0((i + 1) % 12, i) = 1.0;
    Matrix m1 = m0;
    m1(0, 1) = m1(1, 0) = m1(0, 11) = m1(11, 0) = 0.0;
    for (Eigen::Index j : {3, 5, 6, 7, 9}) m1(0, j) = m1(j, 0) = 1.0;
    TrainingWindow w(2, 12, 2);
    w.push(fixture::snapshot_of(m0, 0));
    w.push(fixture::snapshot_of(m1, 1));
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto s = sample_batch(w, 5, seed).slots;
        EXPECT_EQ(std::count(s.begin(), s.end(), 0u), 0);
    }
    const auto all = sample_batch(w, 16, 1);
    EXPECT_EQ(all.slots.size(), 11u);
    EXPECT_TRUE(all.diagnostic.has_value());
}

TEST(TrainWindow, StabilityTermReducesTemporalVariance) {
    std::mt19937_64 rng(5);
    const Matrix m = fixture::random_adjacency(rng, 20, 0.2);
    auto w = fixture::identical_window(m, 4, 4);
    Hyperparams hp;
    hp.embedding_dim = 4;
    hp.hidden_layers = {16};
    hp.batch_size = 20;
    hp.max_iters = 300;
    hp.learning_rate = 0.05;

    auto variance = [&](double gamma) {
        hp.gamma = gamma;
        const auto r = train_window(w, std::nullopt, hp, 17);
        double v = 0.0;
        for (Eigen::Index i = 0; i < 20; ++i) {
            Matrix yt(4, 4);
            for (std::size_t k = 0; k < 4; ++k) yt.row(static_cast<Eigen::Index>(k)) = r.embeddings[k].y.row(i);
            v += stability_loss(yt) / 4.0;
        }
        return v / 20.0;
    };
    EXPECT_LT(variance(5.0), variance(0.0));
}

TEST(TrainWindow, FirstOrderTermPullsLinkedNodesTogether) {
    // Two 6-cliques joined by one bridge.
    Matrix m = Matrix::Zero(12, 12);
    for (Eigen::Index i = 0; i < 12; ++i)
        for (Eigen::Index j = i + 1; j < 12; ++j)
            if (i / 6 == j / 6) m(i, j) = m(j, i) = 1.0;
    m(5, 6) = m(6, 5) = 1.0;
    auto w = fixture::identical_window(m, 2, 2);
    Hyperparams hp;
    hp.embedding_dim = 2;
    hp.hidden_layers = {8};
    hp.batch_size = 12;
    hp.max_iters = 400;
    hp.learning_rate = 0.05;
    hp.loss_alpha = 1.0;
    const auto r = train_window(w, std::nullopt, hp, 3);
    const Matrix& y = r.embeddings.back().y;
    // 1 and 2 are linked; 1 and 8 are not; all three have degree 5.
    EXPECT_LT((y.row(1) - y.row(2)).norm(), (y.row(1) - y.row(8)).norm());
}

TEST(TrainWindow, WarmStartContinuesFromFinalLoss) {
    auto w = fixture::random_window(8, 10, 2, 3, false);
    Hyperparams hp;
    hp.embedding_dim = 2;
    hp.hidden_layers = {6};
    hp.batch_size = 10;
    hp.max_iters = 150;
    hp.learning_rate = 0.05;
    const auto first = train_window(w, std::nullopt, hp, 4);
    const auto second = train_window(w, first.params, hp, 5);
    EXPECT_LE(second.log.front().total, 1.05 * first.log.back().total);
    EXPECT_EQ(first.iterations, first.log.size());
    EXPECT_EQ(first.embeddings.size(), 3u);
}

TEST(TrainWindow, DivergenceIsTrainingError) {
    auto w = fixture::random_window(8, 10, 2, 2, false);
    Hyperparams hp;
    hp.embedding_dim = 2;
    hp.hidden_layers = {6};
    hp.batch_size = 10;
    hp.max_iters = 50;
    hp.learning_rate = std::numeric_limits<double>::max();
    EXPECT_THROW(train_window(w, std::nullopt, hp, 1), TrainingError);
}

TEST(TrainWindow, DeterministicForSeed) {
    auto w = fixture::random_window(2, 10, 2, 2, false);
    Hyperparams hp;
    hp.embedding_dim = 2;
    hp.hidden_layers = {6};
    hp.batch_size = 4;
    hp.max_iters = 60;
    const auto a = train_window(w, std::nullopt, hp, 9);
    const auto b = train_window(w, std::nullopt, hp, 9);
    EXPECT_EQ(flat(a.params), flat(b.params));
    EXPECT_EQ(a.embeddings.back().y, b.embeddings.back().y);
}

TEST(Checkpoint, RoundTripIsExact) {
    Checkpoint c;
    c.params = fixture::random_params(make_layer_sizes(7, 3, {5}), 1);
    c.hyper.gamma = 2.5;
    c.hyper.hidden_layers = {5};
    c.hyper.embedding_dim = 3;
    c.seed = 123456789012345ULL;
    const auto path = std::filesystem::temp_directory_path() / "rnne_test_checkpoint.json";
    save_checkpoint(path, c);
    const auto back = load_checkpoint(path);
    EXPECT_EQ(back.params.layer_sizes, c.params.layer_sizes);
    EXPECT_EQ(flat(back.params), flat(c.params));
    EXPECT_EQ(back.hyper.gamma, 2.5);
    EXPECT_EQ(back.hyper.hidden_layers, c.hyper.hidden_layers);
    EXPECT_EQ(back.seed, c.seed);
    std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptFileIsRejected) {
    const auto path = std::filesystem::temp_directory_path() / "rnne_test_bad_checkpoint.json";
    {
        std::ofstream out(path);
        out << "{\"format\": \"rnne-checkpoint\", \"version\": 1, \"model\": {\"layer_sizes\": [3]}}";
    }
    EXPECT_THROW(load_checkpoint(path), Error);
    EXPECT_THROW(load_checkpoint(path.string() + ".missing"), IoError);
    std::filesystem::remove(path);
}
