#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlforecast/dataset.hpp"
#include "tlforecast/errors.hpp"
#include "tlforecast/lstm.hpp"
#include "tlforecast/training.hpp"

namespace tlf {

inline constexpr int kCheckpointFormatVersion = 1;

// ============================================================================
// Checkpoints
// ============================================================================

struct CheckpointMeta {
    std::string station;
    std::string pollutant;
    std::uint64_t training_seed = 0;
    std::string created_at;  // ISO-8601 UTC, filled by save_checkpoint when empty

    std::string task_label() const { return station + "." + pollutant; }
};

/// The portable pre-trained-network artifact: architecture, weights, freeze
/// flags, the feature space the network was trained on, its scaler, and
/// provenance metadata. Immutable once written.
struct NetworkCheckpoint {
    int format_version = kCheckpointFormatVersion;
    Network network;  // architecture + weight tensors + trainable mask
    std::vector<std::string> feature_names;
    ScalerParams scaler;
    CheckpointMeta metadata;
};

namespace detail {

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const NetworkCheckpoint& ckpt) {
    nlohmann::json net_json = network_to_json(ckpt.network);
    nlohmann::json arch = net_json.at("architecture");
    arch["trainable"] = net_json.at("trainable");
    return {{"format_version", ckpt.format_version},
            {"architecture", arch},
            {"feature_names", ckpt.feature_names},
            {"scaler", scaler_to_json(ckpt.scaler)},
            {"weights", net_json.at("weights")},
            {"metadata",
             {{"station", ckpt.metadata.station},
              {"pollutant", ckpt.metadata.pollutant},
              {"training_seed", ckpt.metadata.training_seed},
              {"created_at", ckpt.metadata.created_at}}}};
}

inline NetworkCheckpoint checkpoint_from_json(const nlohmann::json& j) {
    NetworkCheckpoint ckpt;
    ckpt.format_version = j.at("format_version").get<int>();
    if (ckpt.format_version != kCheckpointFormatVersion)
        throw CheckpointError(CheckpointError::Kind::bad_version,
                              "unsupported checkpoint format_version " +
                                  std::to_string(ckpt.format_version) + " (expected " +
                                  std::to_string(kCheckpointFormatVersion) + ")");
    nlohmann::json net_json = {{"architecture", j.at("architecture")},
                               {"trainable", j.at("architecture").at("trainable")},
                               {"weights", j.at("weights")}};
    ckpt.network = network_from_json(net_json);
    ckpt.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    ckpt.scaler = scaler_from_json(j.at("scaler"));
    const auto& meta = j.at("metadata");
    ckpt.metadata.station = meta.at("station").get<std::string>();
    ckpt.metadata.pollutant = meta.at("pollutant").get<std::string>();
    ckpt.metadata.training_seed = meta.at("training_seed").get<std::uint64_t>();
    ckpt.metadata.created_at = meta.at("created_at").get<std::string>();
    if (ckpt.feature_names.size() != ckpt.network.input_dim())
        throw CheckpointError(CheckpointError::Kind::corrupt,
                              "checkpoint feature_names length does not match network input dim");
    return ckpt;
}

/// Writes the checkpoint as a single JSON document. Floats are serialized
/// with round-trip-exact decimal representations, so load(save(c))
/// reproduces every bit. The file is written to a temp name and renamed, so
/// a crash cannot leave a partial checkpoint at the target path.
inline void save_checkpoint(const Network& net, const ScalerParams& scaler,
                            const CheckpointMeta& meta, const std::vector<std::string>& features,
                            const std::string& path) {
    if (!net.all_finite())
        throw ContractError("save_checkpoint: network contains non-finite weights");
    if (features.size() != net.input_dim())
        throw ShapeError("save_checkpoint: feature list does not match network input dim");

    NetworkCheckpoint ckpt;
    ckpt.network = net;
    ckpt.feature_names = features;
    ckpt.scaler = scaler;
    ckpt.metadata = meta;
    if (ckpt.metadata.created_at.empty()) ckpt.metadata.created_at = detail::utc_timestamp();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write " + tmp);
        out << checkpoint_to_json(ckpt).dump(1, '\t') << '\n';
        if (!out) throw CheckpointError(CheckpointError::Kind::io, "write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw CheckpointError(CheckpointError::Kind::io,
                              "cannot move checkpoint into place: " + ec.message());
}

inline NetworkCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(CheckpointError::Kind::corrupt,
                              path + ": not a valid checkpoint (" + e.what() + ")");
    }
    try {
        return checkpoint_from_json(j);
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(CheckpointError::Kind::corrupt,
                              path + ": malformed checkpoint (" + e.what() + ")");
    }
}

// ============================================================================
// Target-domain adaptation
// ============================================================================

enum class TransferMode { trainable, untrainable };

inline std::string to_string(TransferMode m) {
    return m == TransferMode::trainable ? "trainable" : "untrainable";
}

struct TransferSpec {
    TransferMode mode = TransferMode::trainable;
    std::vector<std::string> target_feature_names;
    std::uint64_t init_seed = 1;  // seeds re-initialized layers

    std::size_t target_input_dim() const { return target_feature_names.size(); }
};

/// Builds the target-domain network from a source checkpoint. The layer
/// count never changes. The input-facing LSTM layer is rebuilt with fresh
/// weights sized to the target feature space when the input dimension
/// differs (trainable mode) or always (untrainable mode, which needs a
/// trainable entry point in front of the frozen stack); every other layer
/// and the Dense head copy the checkpoint weights verbatim.
///
/// Masks: trainable -> everything trainable; untrainable -> copied layers
/// frozen, only the rebuilt input layer trainable.
inline Network adapt_for_target(const NetworkCheckpoint& ckpt, const TransferSpec& spec,
                                SeededRng& rng) {
    if (ckpt.network.layers.size() < 2)
        throw ConfigError("adapt_for_target: checkpoint needs >= 2 LSTM layers plus the Dense head");
    if (spec.target_input_dim() == 0)
        throw ConfigError("adapt_for_target: target feature space is empty");

    const std::size_t target_f = spec.target_input_dim();
    const bool rebuild_input =
        target_f != ckpt.network.input_dim() || spec.mode == TransferMode::untrainable;

    Network net = ckpt.network;  // deep copy: deeper layers + head stay verbatim
    net.arch.lstm_layers[0].input_dim = target_f;
    net.arch.validate();

    if (rebuild_input) {
        const std::size_t hidden = net.arch.lstm_layers[0].hidden_dim;
        LstmLayerParams fresh(target_f, hidden);
        fresh.w_i = uniform_init(rng, hidden, target_f, target_f, hidden);
        fresh.w_f = uniform_init(rng, hidden, target_f, target_f, hidden);
        fresh.w_o = uniform_init(rng, hidden, target_f, target_f, hidden);
        fresh.w_g = uniform_init(rng, hidden, target_f, target_f, hidden);
        fresh.u_i = uniform_init(rng, hidden, hidden, hidden, hidden);
        fresh.u_f = uniform_init(rng, hidden, hidden, hidden, hidden);
        fresh.u_o = uniform_init(rng, hidden, hidden, hidden, hidden);
        fresh.u_g = uniform_init(rng, hidden, hidden, hidden, hidden);
        std::fill(fresh.b_f.begin(), fresh.b_f.end(), 1.0);
        net.layers[0] = std::move(fresh);
    }

    net.trainable.assign(net.layer_count(), true);
    if (spec.mode == TransferMode::untrainable) {
        for (std::size_t k = 0; k < net.layer_count(); ++k)
            net.trainable[k] = rebuild_input && k == 0;
    }
    net.param_version = 1;
    return net;
}

/// Composes adapt_for_target with the training loop. The report's initial
/// MSE therefore reflects the transferred initialization.
inline TrainingReport run_transfer_task(const NetworkCheckpoint& source_ckpt,
                                        const std::vector<WindowedSample>& target_train,
                                        const std::vector<WindowedSample>& target_val,
                                        const TransferSpec& spec, const TrainConfig& cfg) {
    SeededRng rng(spec.init_seed);
    Network net = adapt_for_target(source_ckpt, spec, rng);
    return train(net, target_train, target_val, cfg);
}

}  // namespace tlf
