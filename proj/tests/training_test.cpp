#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tlforecast/training.hpp"

using namespace tlf;

namespace {

/// Samples with target y = 0.3 * (mean of last-day features) + tiny noise:
/// a learnable linear signal.
std::vector<WindowedSample> linear_samples(std::size_t count, std::size_t window,
                                           std::size_t features, std::uint64_t seed) {
    SeededRng rng(seed);
    std::vector<WindowedSample> out;
    const Date start = make_date(2003, 1, 1);
    for (std::size_t i = 0; i < count; ++i) {
        WindowedSample s;
        s.inputs = Matrix(window, features);
        for (double& v : s.inputs.data) v = rng.next_uniform(0.0, 1.0);
        double m = 0.0;
        for (std::size_t f = 0; f < features; ++f) m += s.inputs(window - 1, f);
        m /= static_cast<double>(features);
        s.target = 0.3 * m + 0.001 * rng.next_normal();
        s.target_timestamp = Date{start.days + static_cast<std::int64_t>(i)};
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> flatten_params(const Network& net) {
    std::vector<double> out;
    auto& mutnet = const_cast<Network&>(net);
    for_each_tensor(mutnet, [&](const std::string&, double* p, std::size_t n, std::size_t) {
        out.insert(out.end(), p, p + n);
    });
    return out;
}

std::vector<double> flatten_layer(const LstmLayerParams& l) {
    std::vector<double> out;
    for (const Matrix* m : {&l.w_i, &l.w_f, &l.w_o, &l.w_g, &l.u_i, &l.u_f, &l.u_o, &l.u_g})
        out.insert(out.end(), m->data.begin(), m->data.end());
    for (const Vector* b : {&l.b_i, &l.b_f, &l.b_o, &l.b_g})
        out.insert(out.end(), b->begin(), b->end());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// mse
// ---------------------------------------------------------------------------

TEST(Mse, PerfectFitIsZero) {
    EXPECT_DOUBLE_EQ(mse({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}), 0.0);
}

TEST(Mse, HandComputed) { EXPECT_DOUBLE_EQ(mse({0.0, 1.0}, {1.0, 0.0}), 1.0); }

TEST(Mse, RejectsMismatchAndEmpty) {
    EXPECT_THROW(mse({1.0}, {1.0, 2.0}), ShapeError);
    EXPECT_THROW(mse({}, {}), ShapeError);
}

// ---------------------------------------------------------------------------
// adam
// ---------------------------------------------------------------------------

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    Network net = make_network(NetworkArchitecture::stacked(2, {3, 2}), 1);
    const auto before = flatten_params(net);
    AdamState state = AdamState::for_network(net);
    adam_step(net, make_zero_gradients(net), state, TrainConfig{});
    EXPECT_EQ(flatten_params(net), before);
}

TEST(Adam, FirstStepHasClosedForm) {
    // With g = 1 at t = 1: m_hat = 1, v_hat = 1, so the update is
    // -lr / (1 + eps) which is -1e-3 to within 1e-6.
    Network net = make_network(NetworkArchitecture::stacked(2, {3, 2}), 2);
    const double bias_before = net.head.bias;
    GradientSet grads = make_zero_gradients(net);
    grads.head.bias = 1.0;
    AdamState state = AdamState::for_network(net);
    adam_step(net, grads, state, TrainConfig{});
    EXPECT_NEAR(net.head.bias - bias_before, -1e-3, 1e-6);
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FrozenLayerIsBitwiseUntouched) {
    Network net = make_network(NetworkArchitecture::stacked(2, {3, 2}), 3);
    net.trainable = {false, true, true};
    const auto frozen_before = flatten_layer(net.layers[0]);
    const auto live_before = flatten_layer(net.layers[1]);

    GradientSet grads = make_zero_gradients(net);
    for (auto& l : grads.layers)
        for (Matrix* m : {&l.w_i, &l.w_f, &l.w_o, &l.w_g, &l.u_i, &l.u_f, &l.u_o, &l.u_g})
            for (double& v : m->data) v = 0.5;
    AdamState state = AdamState::for_network(net);
    adam_step(net, grads, state, TrainConfig{});

    EXPECT_EQ(flatten_layer(net.layers[0]), frozen_before);
    EXPECT_NE(flatten_layer(net.layers[1]), live_before);

    // moments of the frozen layer must not advance either
    for (std::size_t ti = 0; ti < state.tensor_layer.size(); ++ti) {
        if (state.tensor_layer[ti] != 0) continue;
        for (std::size_t i = 0; i < state.tensor_len[ti]; ++i) {
            EXPECT_EQ(state.m[state.tensor_offset[ti] + i], 0.0);
            EXPECT_EQ(state.v[state.tensor_offset[ti] + i], 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

TEST(Train, SingleEpochDegenerateBudget) {
    auto train_set = linear_samples(20, 3, 2, 1);
    auto val_set = linear_samples(8, 3, 2, 2);
    Network net = make_network(NetworkArchitecture::stacked(2, {3, 2}), 4);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    TrainingReport report = train(net, train_set, val_set, cfg);
    EXPECT_EQ(report.train_curve.size(), 1u);
    EXPECT_EQ(report.val_curve.size(), 1u);
    EXPECT_EQ(report.best_train_epoch, 1u);
    EXPECT_EQ(report.best_val_epoch, 1u);
}

TEST(Train, LearnsLinearSignal) {
    auto train_set = linear_samples(60, 3, 2, 5);
    auto val_set = linear_samples(20, 3, 2, 6);
    Network net = make_network(NetworkArchitecture::stacked(2, {6, 4}), 7);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    TrainingReport report = train(net, train_set, val_set, cfg);
    EXPECT_LT(report.best_train_mse, report.initial_train_mse);
    EXPECT_LT(report.train_curve.back(), report.initial_train_mse);
}

TEST(Train, BestTrackingIsFirstArgmin) {
    auto train_set = linear_samples(30, 2, 2, 8);
    auto val_set = linear_samples(10, 2, 2, 9);
    Network net = make_network(NetworkArchitecture::stacked(2, {4}), 10);
    TrainConfig cfg;
    cfg.max_epochs = 25;
    TrainingReport report = train(net, train_set, val_set, cfg);

    double min_val = report.val_curve[0];
    std::size_t first_argmin = 1;
    for (std::size_t e = 1; e < report.val_curve.size(); ++e)
        if (report.val_curve[e] < min_val) {
            min_val = report.val_curve[e];
            first_argmin = e + 1;
        }
    EXPECT_DOUBLE_EQ(report.best_val_mse, min_val);
    EXPECT_EQ(report.best_val_epoch, first_argmin);
    for (double v : report.val_curve) EXPECT_GE(v, report.best_val_mse);
}

TEST(Train, BestNetworkReproducesBestValMse) {
    auto train_set = linear_samples(40, 3, 2, 11);
    auto val_set = linear_samples(15, 3, 2, 12);
    Network net = make_network(NetworkArchitecture::stacked(2, {4, 3}), 13);
    TrainConfig cfg;
    cfg.max_epochs = 30;
    TrainingReport report = train(net, train_set, val_set, cfg);
    EXPECT_DOUBLE_EQ(evaluate_mse(report.best_network, val_set), report.best_val_mse);
}

TEST(Train, DeterministicUnderIdenticalInputs) {
    auto train_set = linear_samples(30, 3, 2, 14);
    auto val_set = linear_samples(10, 3, 2, 15);
    TrainConfig cfg;
    cfg.max_epochs = 15;

    Network net1 = make_network(NetworkArchitecture::stacked(2, {4}), 16);
    Network net2 = make_network(NetworkArchitecture::stacked(2, {4}), 16);
    TrainingReport r1 = train(net1, train_set, val_set, cfg);
    TrainingReport r2 = train(net2, train_set, val_set, cfg);

    EXPECT_EQ(r1.train_curve, r2.train_curve);
    EXPECT_EQ(r1.val_curve, r2.val_curve);
    EXPECT_EQ(r1.best_val_epoch, r2.best_val_epoch);
    EXPECT_EQ(flatten_params(r1.best_network), flatten_params(r2.best_network));
    EXPECT_EQ(flatten_params(net1), flatten_params(net2));
}

TEST(Train, ValidationNeverContributesGradients) {
    auto train_set = linear_samples(30, 2, 2, 17);
    auto val_set = linear_samples(50, 2, 2, 18);
    Network net = make_network(NetworkArchitecture::stacked(2, {3}), 19);
    TrainConfig cfg;
    cfg.max_epochs = 4;
    TrainingReport report = train(net, train_set, val_set, cfg);
    EXPECT_EQ(report.gradient_sample_count, cfg.max_epochs * train_set.size());
}

TEST(Train, FrozenLayerSurvivesTrainingBitwise) {
    auto train_set = linear_samples(30, 3, 2, 20);
    auto val_set = linear_samples(10, 3, 2, 21);
    Network net = make_network(NetworkArchitecture::stacked(2, {4, 3}), 22);
    net.trainable = {true, false, true};
    const auto frozen_before = flatten_layer(net.layers[1]);
    TrainConfig cfg;
    cfg.max_epochs = 10;
    train(net, train_set, val_set, cfg);
    EXPECT_EQ(flatten_layer(net.layers[1]), frozen_before);
}

TEST(Train, DivergenceAborts) {
    auto train_set = linear_samples(10, 2, 2, 23);
    auto val_set = linear_samples(5, 2, 2, 24);
    Network net = make_network(NetworkArchitecture::stacked(2, {3}), 25);
    TrainConfig cfg;
    cfg.max_epochs = 5;
    cfg.learning_rate = 1e200;  // guaranteed blow-up
    EXPECT_THROW(train(net, train_set, val_set, cfg), DivergenceError);
}

TEST(Train, RejectsBadInputs) {
    auto samples = linear_samples(10, 2, 2, 26);
    Network net = make_network(NetworkArchitecture::stacked(3, {3}), 27);  // wrong F
    EXPECT_THROW(train(net, samples, samples, TrainConfig{}), ShapeError);
    Network ok = make_network(NetworkArchitecture::stacked(2, {3}), 28);
    EXPECT_THROW(train(ok, {}, samples, TrainConfig{}), ShapeError);
    TrainConfig bad;
    bad.learning_rate = 0.0;
    EXPECT_THROW(train(ok, samples, samples, bad), ConfigError);
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

TEST(Report, JsonCarriesCurvesAndSummary) {
    auto train_set = linear_samples(15, 2, 2, 29);
    auto val_set = linear_samples(5, 2, 2, 30);
    Network net = make_network(NetworkArchitecture::stacked(2, {3}), 31);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    TrainingReport report = train(net, train_set, val_set, cfg);

    nlohmann::json j = report_to_json(report);
    EXPECT_EQ(j.at("train_curve").size(), 3u);
    EXPECT_DOUBLE_EQ(j.at("best_val_mse").get<double>(), report.best_val_mse);
    EXPECT_TRUE(j.contains("best_network"));
}

TEST(Report, CurveCsvHasHeaderPlusOneRowPerEpoch) {
    const std::vector<double> curve = {0.5, 0.4, 0.3};
    const auto path = (std::filesystem::temp_directory_path() / "tlf_curve.csv").string();
    write_curve_csv(curve, path);
    std::ifstream in(path);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, curve.size() + 1);
}
