#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlforecast/dataset.hpp"
#include "tlforecast/errors.hpp"
#include "tlforecast/lstm.hpp"

namespace tlf {

// ============================================================================
// Config
// ============================================================================

struct TrainConfig {
    std::size_t max_epochs = 400;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;

    void validate() const {
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
        if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("train: beta1 must be in (0,1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("train: beta2 must be in (0,1)");
        if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    }
};

// ============================================================================
// Loss
// ============================================================================

/// Mean of squared residuals.
inline double mse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.empty()) throw ShapeError("mse: empty inputs");
    if (predictions.size() != targets.size())
        throw ShapeError("mse: length mismatch (" + std::to_string(predictions.size()) + " vs " +
                         std::to_string(targets.size()) + ")");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - targets[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

/// Full-set MSE of a network over samples, serial accumulation in sample
/// order so results are bitwise stable.
inline double evaluate_mse(const Network& net, const std::vector<WindowedSample>& samples) {
    if (samples.empty()) throw ShapeError("evaluate_mse: empty sample set");
    double acc = 0.0;
    for (const auto& s : samples) {
        const double d = predict(net, s.inputs) - s.target;
        acc += d * d;
    }
    return acc / static_cast<double>(samples.size());
}

// ============================================================================
// Adam
// ============================================================================

/// First/second moment estimates, flattened in for_each_tensor order.
struct AdamState {
    std::vector<double> m, v;
    std::vector<std::size_t> tensor_offset;  // offset of each tensor in m/v
    std::vector<std::size_t> tensor_len;
    std::vector<std::size_t> tensor_layer;   // owning layer index per tensor
    std::uint64_t step = 0;

    static AdamState for_network(const Network& net) {
        AdamState st;
        std::size_t total = 0;
        auto& mutnet = const_cast<Network&>(net);
        for_each_tensor(mutnet, [&](const std::string&, double*, std::size_t len, std::size_t layer) {
            st.tensor_offset.push_back(total);
            st.tensor_len.push_back(len);
            st.tensor_layer.push_back(layer);
            total += len;
        });
        st.m.assign(total, 0.0);
        st.v.assign(total, 0.0);
        return st;
    }
};

/// One Adam update with bias correction. Parameters of frozen layers are
/// untouched and their moments are not advanced.
inline void adam_step(Network& net, const GradientSet& grads, AdamState& state,
                      const TrainConfig& cfg) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);

    std::vector<std::pair<double*, std::size_t>> param_tensors, grad_tensors;
    for_each_tensor(net, [&](const std::string&, double* p, std::size_t n, std::size_t) {
        param_tensors.emplace_back(p, n);
    });
    auto& mutgrads = const_cast<GradientSet&>(grads);
    for_each_tensor(mutgrads, [&](const std::string&, double* p, std::size_t n, std::size_t) {
        grad_tensors.emplace_back(p, n);
    });
    if (param_tensors.size() != grad_tensors.size())
        throw ShapeError("adam_step: gradient set does not match network");

    for (std::size_t ti = 0; ti < param_tensors.size(); ++ti) {
        if (param_tensors[ti].second != grad_tensors[ti].second)
            throw ShapeError("adam_step: tensor length mismatch");
        if (!net.trainable[state.tensor_layer[ti]]) continue;
        double* p = param_tensors[ti].first;
        const double* g = grad_tensors[ti].first;
        double* m = state.m.data() + state.tensor_offset[ti];
        double* v = state.v.data() + state.tensor_offset[ti];
        for (std::size_t i = 0; i < param_tensors[ti].second; ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
    net.bump_version();
}

// ============================================================================
// Training loop
// ============================================================================

/// Outcome of a full training run. Curves hold the post-epoch evaluation
/// for epochs 1..max_epochs; the initial values are the epoch-0 evaluation
/// taken before any parameter update. best_network is the weight snapshot
/// from the first epoch attaining the minimum validation MSE.
struct TrainingReport {
    double initial_train_mse = 0.0;
    double initial_val_mse = 0.0;
    double best_train_mse = 0.0;
    double best_val_mse = 0.0;
    std::size_t best_train_epoch = 0;  // 1-based
    std::size_t best_val_epoch = 0;    // 1-based
    std::vector<double> train_curve;
    std::vector<double> val_curve;
    Network best_network;
    std::size_t gradient_sample_count = 0;  // instrumentation: leakage guard
};

/// Deterministic epoch loop: mini-batches in chronological order, no
/// shuffling, per-sample gradients averaged per batch, Adam updates honoring
/// the trainable mask. Aborts with DivergenceError on NaN/Inf loss.
inline TrainingReport train(Network& net, const std::vector<WindowedSample>& train_samples,
                            const std::vector<WindowedSample>& val_samples,
                            const TrainConfig& cfg) {
    cfg.validate();
    if (train_samples.empty() || val_samples.empty())
        throw ShapeError("train: sample sets must be non-empty");
    if (train_samples.front().inputs.cols != net.input_dim())
        throw ShapeError("train: sample feature count " +
                         std::to_string(train_samples.front().inputs.cols) +
                         " does not match network input dim " + std::to_string(net.input_dim()));

    TrainingReport report;
    report.train_curve.reserve(cfg.max_epochs);
    report.val_curve.reserve(cfg.max_epochs);

    report.initial_train_mse = evaluate_mse(net, train_samples);
    report.initial_val_mse = evaluate_mse(net, val_samples);
    if (!std::isfinite(report.initial_train_mse) || !std::isfinite(report.initial_val_mse))
        throw DivergenceError("train: non-finite loss at initialization");

    AdamState adam = AdamState::for_network(net);
    const std::size_t n = train_samples.size();

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            GradientSet batch_grads = make_zero_gradients(net);
            for (std::size_t i = start; i < end; ++i) {
                const auto& sample = train_samples[i];
                ForwardCache cache = forward(net, sample.inputs);
                if (!std::isfinite(cache.prediction))
                    throw DivergenceError("train: non-finite prediction at epoch " +
                                          std::to_string(epoch));
                const double loss_grad = 2.0 * (cache.prediction - sample.target);
                batch_grads.accumulate(backward(net, cache, loss_grad));
                ++report.gradient_sample_count;
            }
            batch_grads.scale(1.0 / static_cast<double>(end - start));
            adam_step(net, batch_grads, adam, cfg);
        }

        const double train_mse = evaluate_mse(net, train_samples);
        const double val_mse = evaluate_mse(net, val_samples);
        if (!std::isfinite(train_mse) || !std::isfinite(val_mse))
            throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
        report.train_curve.push_back(train_mse);
        report.val_curve.push_back(val_mse);

        if (report.best_train_epoch == 0 || train_mse < report.best_train_mse) {
            report.best_train_mse = train_mse;
            report.best_train_epoch = epoch;
        }
        if (report.best_val_epoch == 0 || val_mse < report.best_val_mse) {
            report.best_val_mse = val_mse;
            report.best_val_epoch = epoch;
            report.best_network = net;  // snapshot weights at the best-validation epoch
        }
    }
    return report;
}

// ============================================================================
// Report serialization
// ============================================================================

inline nlohmann::json report_to_json(const TrainingReport& r, bool include_network = true) {
    nlohmann::json j = {{"initial_train_mse", r.initial_train_mse},
                        {"initial_val_mse", r.initial_val_mse},
                        {"best_train_mse", r.best_train_mse},
                        {"best_val_mse", r.best_val_mse},
                        {"best_train_epoch", r.best_train_epoch},
                        {"best_val_epoch", r.best_val_epoch},
                        {"train_curve", r.train_curve},
                        {"val_curve", r.val_curve}};
    if (include_network) j["best_network"] = network_to_json(r.best_network);
    return j;
}

/// Two-column loss-curve CSV: epoch, mse. Epochs are 1-based.
inline void write_curve_csv(const std::vector<double>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write curve CSV: " + path);
    out << "epoch,mse\n";
    out.precision(17);
    for (std::size_t e = 0; e < curve.size(); ++e) out << (e + 1) << ',' << curve[e] << '\n';
}

}  // namespace tlf
