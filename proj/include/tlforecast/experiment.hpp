#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tlforecast/dataset.hpp"
#include "tlforecast/errors.hpp"
#include "tlforecast/lstm.hpp"
#include "tlforecast/training.hpp"
#include "tlforecast/transfer.hpp"

namespace tlf {

// ============================================================================
// Scenario configuration
// ============================================================================

enum class RunMode { random_init, pretrained_trainable, pretrained_untrainable };

inline std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::random_init: return "random_init";
        case RunMode::pretrained_trainable: return "pretrained_trainable";
        case RunMode::pretrained_untrainable: return "pretrained_untrainable";
    }
    return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
    if (s == "random_init") return RunMode::random_init;
    if (s == "pretrained_trainable") return RunMode::pretrained_trainable;
    if (s == "pretrained_untrainable") return RunMode::pretrained_untrainable;
    throw ConfigError("unknown mode '" + s + "'");
}

/// A prediction task: one pollutant at one station, i.e. one dataset column.
struct TaskRef {
    std::string station;
    std::string pollutant;

    std::string column() const { return station + "." + pollutant; }
};

struct ScenarioConfig {
    // data source: either CSV files or a synthetic-data config
    std::vector<std::string> csv_paths;
    std::optional<SynthConfig> synth;

    std::optional<TaskRef> source_task;
    std::optional<std::string> source_checkpoint_path;
    TaskRef target_task;

    std::size_t window = 6;  // B
    std::size_t max_gap = 3;
    SplitSpec split;
    TrainConfig train_config;
    std::vector<std::size_t> hidden_dims = {64, 32};

    std::vector<RunMode> modes = {RunMode::random_init, RunMode::pretrained_trainable,
                                  RunMode::pretrained_untrainable};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::string out_dir = "tlforecast_out";
    std::size_t parallelism = 0;  // 0: use hardware concurrency

    bool wants_pretrained() const {
        return std::any_of(modes.begin(), modes.end(),
                           [](RunMode m) { return m != RunMode::random_init; });
    }

    void validate() const {
        if (csv_paths.empty() == !synth.has_value())
            throw ConfigError("scenario: exactly one of csv paths or synth config required");
        if (target_task.station.empty() || target_task.pollutant.empty())
            throw ConfigError("scenario: target task must name a station and a pollutant");
        if (modes.empty()) throw ConfigError("scenario: at least one mode required");
        if (seeds.empty()) throw ConfigError("scenario: at least one seed required");
        if (window < 1) throw ConfigError("scenario: window must be >= 1");
        if (hidden_dims.size() < 2)
            throw ConfigError("scenario: need >= 2 LSTM layers for the transfer rule");
        if (wants_pretrained() && !source_task && !source_checkpoint_path)
            throw ConfigError("scenario: pretrained modes need a source task or checkpoint");
        split.validate();
        train_config.validate();
    }
};

// ============================================================================
// Comparison rows
// ============================================================================

/// One line of the experiment summary, in the layout of the comparison
/// tables: training and validation Best MSE / Best epoch / Initial MSE.
/// Epochs are doubles because seed-averaged rows have fractional means.
struct ComparisonRow {
    std::string mode;
    std::string seed_label;  // decimal seed or "mean"
    std::string source_domain;  // "N/A" for random initialization
    std::string target_domain;
    double train_best_mse = 0.0;
    double train_best_epoch = 0.0;
    double train_initial_mse = 0.0;
    double val_best_mse = 0.0;
    double val_best_epoch = 0.0;
    double val_initial_mse = 0.0;
    bool best = false;  // set by highlight_best
};

/// Per target domain, marks the row with minimum validation Best MSE; ties
/// broken by lower validation Best epoch, then by declaration order.
inline std::vector<ComparisonRow> highlight_best(std::vector<ComparisonRow> rows) {
    std::map<std::string, std::size_t> winner;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].best = false;
        auto it = winner.find(rows[i].target_domain);
        if (it == winner.end()) {
            winner.emplace(rows[i].target_domain, i);
            continue;
        }
        const ComparisonRow& cur = rows[it->second];
        const ComparisonRow& cand = rows[i];
        if (cand.val_best_mse < cur.val_best_mse ||
            (cand.val_best_mse == cur.val_best_mse && cand.val_best_epoch < cur.val_best_epoch))
            it->second = i;
    }
    for (auto& [domain, idx] : winner) rows[idx].best = true;
    return rows;
}

// ============================================================================
// Results
// ============================================================================

struct RunRecord {
    RunMode mode = RunMode::random_init;
    std::uint64_t seed = 0;
    TrainingReport report;
};

struct RunFailure {
    std::string mode;
    std::uint64_t seed = 0;
    std::string error;
};

struct ScenarioResult {
    std::vector<ComparisonRow> rows;  // per-seed rows then a mean row, per mode
    std::vector<RunRecord> runs;
    std::vector<RunFailure> failures;

    // context needed to emit per-run artifacts
    std::string target_column;
    ScalerParams target_scaler;
    std::vector<std::string> feature_names;
    std::vector<WindowedSample> test_samples;  // scaled, chronological

    bool all_succeeded() const { return failures.empty(); }
};

// ============================================================================
// Data pipeline
// ============================================================================

/// Union-join of several daily datasets on the calendar; days absent from a
/// file become missing rows. Column names must not collide.
inline TimeSeriesDataset merge_datasets(const std::vector<TimeSeriesDataset>& parts) {
    if (parts.empty()) throw ConfigError("merge_datasets: nothing to merge");
    Date first = parts.front().dates.front();
    Date last = parts.front().dates.back();
    for (const auto& p : parts) {
        first = std::min(first, p.dates.front());
        last = std::max(last, p.dates.back());
    }
    TimeSeriesDataset out;
    for (const auto& p : parts)
        for (const auto& name : p.feature_names) {
            if (std::find(out.feature_names.begin(), out.feature_names.end(), name) !=
                out.feature_names.end())
                throw ConfigError("merge_datasets: duplicate column '" + name + "'");
            out.feature_names.push_back(name);
        }
    const std::size_t total_f = out.feature_names.size();
    for (Date d = first; d <= last; d = d.next()) out.dates.push_back(d);
    out.rows.assign(out.dates.size(), std::vector<double>(total_f, missing_value()));

    std::size_t col = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            const std::size_t row = static_cast<std::size_t>(p.dates[i].days - first.days);
            for (std::size_t f = 0; f < p.feature_count(); ++f)
                out.rows[row][col + f] = p.rows[i][f];
        }
        col += p.feature_count();
    }
    return out;
}

/// Windowed, scaled and split data for one prediction task. The scaler is
/// fitted only on the rows visible to the training partition (dates up to
/// the last training target), so validation and test values cannot leak
/// into the feature ranges.
struct TaskData {
    std::string column;
    ScalerParams scaler;
    std::vector<WindowedSample> train, val, test;
};

inline TaskData prepare_task(const TimeSeriesDataset& imputed, const std::string& target_column,
                             std::size_t window, const SplitSpec& split) {
    TaskData task;
    task.column = target_column;

    auto raw_windows = make_windows(imputed, window, target_column);
    auto parts = chronological_split(raw_windows, split);

    const Date boundary = parts.train.back().target_timestamp;
    std::size_t train_rows = 0;
    while (train_rows < imputed.size() && imputed.dates[train_rows] <= boundary) ++train_rows;
    task.scaler = fit_scaler(imputed.prefix(train_rows));

    task.train = scale_windows(parts.train, task.scaler, target_column);
    task.val = scale_windows(parts.val, task.scaler, target_column);
    task.test = scale_windows(parts.test, task.scaler, target_column);
    return task;
}

// ============================================================================
// Formatting
// ============================================================================

namespace detail {

/// MSE columns print in scientific notation with 12 significant digits,
/// comfortably above the 9 the comparison tables carry.
inline std::string format_mse(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.11e", v);
    return buf;
}

inline std::string format_epoch(double v) {
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string source_domain_label(RunMode mode, const std::string& source_label) {
    switch (mode) {
        case RunMode::random_init: return "N/A";
        case RunMode::pretrained_trainable: return source_label + ", pre-trained LSTM is trainable";
        case RunMode::pretrained_untrainable:
            return source_label + ", pre-trained LSTM is untrainable";
    }
    return "?";
}

/// Deterministic per-purpose seed derivation (splitmix64 of seed ^ tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_tag) {
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (stream_tag + 1));
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t kStreamSourceInit = 1;
inline constexpr std::uint64_t kStreamRandomInit = 2;
inline constexpr std::uint64_t kStreamTransferInit = 3;

}  // namespace detail

// ============================================================================
// Report emission
// ============================================================================

inline nlohmann::json comparison_row_to_json(const ComparisonRow& r) {
    return {{"mode", r.mode},
            {"seed", r.seed_label},
            {"source_domain", r.source_domain},
            {"target_domain", r.target_domain},
            {"train_best_mse", r.train_best_mse},
            {"train_best_epoch", r.train_best_epoch},
            {"train_initial_mse", r.train_initial_mse},
            {"val_best_mse", r.val_best_mse},
            {"val_best_epoch", r.val_best_epoch},
            {"val_initial_mse", r.val_initial_mse},
            {"best", r.best}};
}

/// Writes comparison.csv / comparison.json, per-run loss curves, test-set
/// predictions in physical units, per-run checkpoints, and failures.json
/// when anything failed. comparison.csv is byte-deterministic for a given
/// config.
inline void emit_reports(const ScenarioResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

    {
        std::ofstream csv(path("comparison.csv"));
        if (!csv) throw Error("cannot write " + path("comparison.csv"));
        csv << "mode,seed,source_domain,target_domain,"
               "train_best_mse,train_best_epoch,train_initial_mse,"
               "val_best_mse,val_best_epoch,val_initial_mse,best\n";
        for (const auto& r : result.rows) {
            csv << r.mode << ',' << r.seed_label << ",\"" << r.source_domain << "\",\""
                << r.target_domain << "\"," << detail::format_mse(r.train_best_mse) << ','
                << detail::format_epoch(r.train_best_epoch) << ','
                << detail::format_mse(r.train_initial_mse) << ','
                << detail::format_mse(r.val_best_mse) << ','
                << detail::format_epoch(r.val_best_epoch) << ','
                << detail::format_mse(r.val_initial_mse) << ',' << (r.best ? 1 : 0) << '\n';
        }
    }
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : result.rows) rows.push_back(comparison_row_to_json(r));
        std::ofstream js(path("comparison.json"));
        js << rows.dump(1, '\t') << '\n';
    }
    if (!result.failures.empty()) {
        nlohmann::json fails = nlohmann::json::array();
        for (const auto& f : result.failures)
            fails.push_back({{"mode", f.mode}, {"seed", f.seed}, {"error", f.error}});
        std::ofstream js(path("failures.json"));
        js << fails.dump(1, '\t') << '\n';
    }

    const std::size_t target_idx = result.target_scaler.index_of(result.target_column);
    for (const auto& run : result.runs) {
        const std::string tag = to_string(run.mode) + "_" + std::to_string(run.seed);

        {
            std::ofstream curve(path("loss_curve_" + tag + ".csv"));
            curve << "epoch,train_mse,val_mse\n";
            for (std::size_t e = 0; e < run.report.train_curve.size(); ++e)
                curve << (e + 1) << ',' << detail::format_mse(run.report.train_curve[e]) << ','
                      << detail::format_mse(run.report.val_curve[e]) << '\n';
        }
        {
            std::ofstream pred(path("predictions_" + tag + ".csv"));
            pred << "date,actual,predicted\n";
            for (const auto& sample : result.test_samples) {
                const double predicted_scaled = predict(run.report.best_network, sample.inputs);
                pred << format_date(sample.target_timestamp) << ','
                     << detail::format_mse(
                            inverse_scale(sample.target, target_idx, result.target_scaler))
                     << ','
                     << detail::format_mse(
                            inverse_scale(predicted_scaled, target_idx, result.target_scaler))
                     << '\n';
            }
        }
        {
            CheckpointMeta meta;
            const auto dot = result.target_column.find('.');
            meta.station = result.target_column.substr(0, dot);
            meta.pollutant = dot == std::string::npos ? "" : result.target_column.substr(dot + 1);
            meta.training_seed = run.seed;
            save_checkpoint(run.report.best_network, result.target_scaler, meta,
                            result.feature_names, path("checkpoint_" + tag + ".ckpt.json"));
        }
    }
}

// ============================================================================
// Scenario runner
// ============================================================================

namespace detail {

struct SeedOutcome {
    std::vector<RunRecord> runs;
    std::vector<RunFailure> failures;
};

inline ComparisonRow row_from_report(RunMode mode, const std::string& seed_label,
                                     const std::string& source_label,
                                     const std::string& target_label, const TrainingReport& rep) {
    ComparisonRow row;
    row.mode = to_string(mode);
    row.seed_label = seed_label;
    row.source_domain = source_domain_label(mode, source_label);
    row.target_domain = target_label;
    row.train_best_mse = rep.best_train_mse;
    row.train_best_epoch = static_cast<double>(rep.best_train_epoch);
    row.train_initial_mse = rep.initial_train_mse;
    row.val_best_mse = rep.best_val_mse;
    row.val_best_epoch = static_cast<double>(rep.best_val_epoch);
    row.val_initial_mse = rep.initial_val_mse;
    return row;
}

}  // namespace detail

/// Runs the requested modes over all seeds, isolating per-run failures, and
/// writes every artifact into cfg.out_dir. Distinct (mode, seed) runs for
/// different seeds execute in parallel; results are keyed, so aggregation
/// order does not depend on completion order.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();

    // ---- data ----
    TimeSeriesDataset combined;
    if (cfg.synth) {
        auto stations = synthesize(*cfg.synth);
        combined = merge_stations(stations);
    } else {
        std::vector<TimeSeriesDataset> parts;
        for (const auto& p : cfg.csv_paths) parts.push_back(load_csv(p));
        combined = merge_datasets(parts);
    }
    const TimeSeriesDataset imputed = impute(combined, cfg.max_gap);

    const std::string target_column = cfg.target_task.column();
    if (!imputed.has_feature(target_column))
        throw ConfigError("scenario: dataset has no column '" + target_column + "'");
    TaskData target = prepare_task(imputed, target_column, cfg.window, cfg.split);

    const bool train_source = cfg.wants_pretrained() && !cfg.source_checkpoint_path;
    std::optional<TaskData> source;
    std::string source_label = "N/A";
    if (train_source) {
        const std::string source_column = cfg.source_task->column();
        if (!imputed.has_feature(source_column))
            throw ConfigError("scenario: dataset has no column '" + source_column + "'");
        source = prepare_task(imputed, source_column, cfg.window, cfg.split);
        source_label = source_column;
    }

    std::optional<NetworkCheckpoint> fixed_checkpoint;
    std::string checkpoint_load_error;
    if (cfg.wants_pretrained() && cfg.source_checkpoint_path) {
        try {
            fixed_checkpoint = load_checkpoint(*cfg.source_checkpoint_path);
            source_label = fixed_checkpoint->metadata.task_label();
        } catch (const std::exception& e) {
            checkpoint_load_error = e.what();
        }
    }

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    const NetworkArchitecture target_arch =
        NetworkArchitecture::stacked(imputed.feature_count(), cfg.hidden_dims);

    // ---- per-seed jobs ----
    auto run_seed = [&](std::uint64_t seed) -> detail::SeedOutcome {
        detail::SeedOutcome outcome;

        std::optional<NetworkCheckpoint> ckpt = fixed_checkpoint;
        std::string source_error = checkpoint_load_error;
        if (train_source) {
            try {
                Network src_net = make_network(
                    target_arch, detail::derive_seed(seed, detail::kStreamSourceInit));
                TrainConfig src_cfg = cfg.train_config;
                src_cfg.seed = seed;
                TrainingReport src_report = train(src_net, source->train, source->val, src_cfg);

                NetworkCheckpoint c;
                c.network = src_report.best_network;
                c.feature_names = imputed.feature_names;
                c.scaler = source->scaler;
                c.metadata.station = cfg.source_task->station;
                c.metadata.pollutant = cfg.source_task->pollutant;
                c.metadata.training_seed = seed;
                ckpt = std::move(c);
                save_checkpoint(ckpt->network, ckpt->scaler, ckpt->metadata, ckpt->feature_names,
                                (fs::path(cfg.out_dir) /
                                 ("source_" + std::to_string(seed) + ".ckpt.json"))
                                    .string());
            } catch (const std::exception& e) {
                source_error = std::string("source training failed: ") + e.what();
            }
        }

        for (RunMode mode : cfg.modes) {
            try {
                TrainConfig run_cfg = cfg.train_config;
                run_cfg.seed = seed;
                TrainingReport report;
                if (mode == RunMode::random_init) {
                    Network net = make_network(
                        target_arch, detail::derive_seed(seed, detail::kStreamRandomInit));
                    report = train(net, target.train, target.val, run_cfg);
                } else {
                    if (!ckpt) throw ConfigError(source_error.empty() ? "no source checkpoint"
                                                                      : source_error);
                    TransferSpec spec;
                    spec.mode = mode == RunMode::pretrained_trainable
                                    ? TransferMode::trainable
                                    : TransferMode::untrainable;
                    spec.target_feature_names = imputed.feature_names;
                    spec.init_seed = detail::derive_seed(seed, detail::kStreamTransferInit);
                    report = run_transfer_task(*ckpt, target.train, target.val, spec, run_cfg);
                }
                outcome.runs.push_back({mode, seed, std::move(report)});
            } catch (const std::exception& e) {
                outcome.failures.push_back({to_string(mode), seed, e.what()});
            }
        }
        return outcome;
    };

    std::size_t par = cfg.parallelism ? cfg.parallelism
                                      : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    par = std::min(par, cfg.seeds.size());

    std::map<std::uint64_t, detail::SeedOutcome> by_seed;
    if (par <= 1 || cfg.seeds.size() == 1) {
        for (std::uint64_t seed : cfg.seeds) by_seed[seed] = run_seed(seed);
    } else {
        std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(par));
        std::vector<std::pair<std::uint64_t, std::future<detail::SeedOutcome>>> futures;
        futures.reserve(cfg.seeds.size());
        for (std::uint64_t seed : cfg.seeds)
            futures.emplace_back(seed, std::async(std::launch::async, [&, seed] {
                                     slots.acquire();
                                     try {
                                         auto out = run_seed(seed);
                                         slots.release();
                                         return out;
                                     } catch (...) {
                                         slots.release();
                                         throw;
                                     }
                                 }));
        for (auto& [seed, fut] : futures) by_seed[seed] = fut.get();
    }

    // ---- assemble keyed results ----
    ScenarioResult result;
    result.target_column = target_column;
    result.target_scaler = target.scaler;
    result.feature_names = imputed.feature_names;
    result.test_samples = target.test;

    // rows are built first, while the per-seed outcomes still own the
    // reports; the records are moved into the result afterwards
    std::map<std::pair<std::string, std::uint64_t>, const TrainingReport*> reports;
    for (std::uint64_t seed : cfg.seeds) {
        auto& outcome = by_seed[seed];
        for (const auto& run : outcome.runs)
            reports[{to_string(run.mode), run.seed}] = &run.report;
        for (const auto& f : outcome.failures) result.failures.push_back(f);
    }

    std::vector<ComparisonRow> means;
    for (RunMode mode : cfg.modes) {
        std::vector<const TrainingReport*> mode_reports;
        for (std::uint64_t seed : cfg.seeds) {
            auto it = reports.find({to_string(mode), seed});
            if (it == reports.end()) continue;
            result.rows.push_back(detail::row_from_report(mode, std::to_string(seed),
                                                          source_label, target_column,
                                                          *it->second));
            mode_reports.push_back(it->second);
        }
        if (mode_reports.empty()) continue;
        ComparisonRow mean;
        mean.mode = to_string(mode);
        mean.seed_label = "mean";
        mean.source_domain = detail::source_domain_label(mode, source_label);
        mean.target_domain = target_column;
        const double n = static_cast<double>(mode_reports.size());
        for (const TrainingReport* r : mode_reports) {
            mean.train_best_mse += r->best_train_mse / n;
            mean.train_best_epoch += static_cast<double>(r->best_train_epoch) / n;
            mean.train_initial_mse += r->initial_train_mse / n;
            mean.val_best_mse += r->best_val_mse / n;
            mean.val_best_epoch += static_cast<double>(r->best_val_epoch) / n;
            mean.val_initial_mse += r->initial_val_mse / n;
        }
        means.push_back(mean);
    }

    means = highlight_best(std::move(means));
    for (const auto& m : means) result.rows.push_back(m);

    for (std::uint64_t seed : cfg.seeds)
        for (auto& run : by_seed[seed].runs) result.runs.push_back(std::move(run));

    emit_reports(result, cfg.out_dir);
    return result;
}

// ============================================================================
// Config (de)serialization
// ============================================================================

inline ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    const auto& data = j.at("data");
    if (data.contains("csv")) cfg.csv_paths = data.at("csv").get<std::vector<std::string>>();
    if (data.contains("synth")) cfg.synth = synth_config_from_json(data.at("synth"));

    if (j.contains("source") && !j.at("source").is_null()) {
        TaskRef t;
        t.station = j.at("source").at("station").get<std::string>();
        t.pollutant = j.at("source").at("pollutant").get<std::string>();
        cfg.source_task = t;
    }
    if (j.contains("source_checkpoint"))
        cfg.source_checkpoint_path = j.at("source_checkpoint").get<std::string>();

    cfg.target_task.station = j.at("target").at("station").get<std::string>();
    cfg.target_task.pollutant = j.at("target").at("pollutant").get<std::string>();

    if (j.contains("window")) cfg.window = j.at("window").get<std::size_t>();
    if (j.contains("max_gap")) cfg.max_gap = j.at("max_gap").get<std::size_t>();
    if (j.contains("split")) {
        cfg.split.train_frac = j.at("split").at("train").get<double>();
        cfg.split.val_frac = j.at("split").at("val").get<double>();
        cfg.split.test_frac = j.at("split").at("test").get<double>();
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        if (t.contains("max_epochs")) cfg.train_config.max_epochs = t.at("max_epochs").get<std::size_t>();
        if (t.contains("learning_rate")) cfg.train_config.learning_rate = t.at("learning_rate").get<double>();
        if (t.contains("beta1")) cfg.train_config.beta1 = t.at("beta1").get<double>();
        if (t.contains("beta2")) cfg.train_config.beta2 = t.at("beta2").get<double>();
        if (t.contains("epsilon")) cfg.train_config.epsilon = t.at("epsilon").get<double>();
        if (t.contains("batch_size")) cfg.train_config.batch_size = t.at("batch_size").get<std::size_t>();
        if (t.contains("seed")) cfg.train_config.seed = t.at("seed").get<std::uint64_t>();
    }
    if (j.contains("hidden_dims"))
        cfg.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
    if (j.contains("modes")) {
        cfg.modes.clear();
        for (const auto& m : j.at("modes")) cfg.modes.push_back(run_mode_from_string(m.get<std::string>()));
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<std::size_t>();
    return cfg;
}

inline ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": invalid JSON (" + std::string(e.what()) + ")");
    }
    try {
        return scenario_config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": bad scenario config (" + std::string(e.what()) + ")");
    }
}

}  // namespace tlf
