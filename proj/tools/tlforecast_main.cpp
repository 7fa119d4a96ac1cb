#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tlforecast/tlforecast.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) seeds.push_back(std::stoull(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (seeds.empty()) throw tlf::ConfigError("--seeds: empty list");
    return seeds;
}

std::vector<tlf::RunMode> parse_mode_list(const std::string& csv) {
    std::vector<tlf::RunMode> modes;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) modes.push_back(tlf::run_mode_from_string(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (modes.empty()) throw tlf::ConfigError("--modes: empty list");
    return modes;
}

int cmd_run(const std::string& config_path, const std::string& out_dir_flag,
            const std::string& seeds_flag, const std::string& modes_flag) {
    tlf::ScenarioConfig cfg = tlf::load_scenario_config(config_path);
    if (const char* env = std::getenv("TLFORECAST_OUT"); env && *env) cfg.out_dir = env;
    if (!out_dir_flag.empty()) cfg.out_dir = out_dir_flag;
    if (!seeds_flag.empty()) cfg.seeds = parse_seed_list(seeds_flag);
    if (!modes_flag.empty()) cfg.modes = parse_mode_list(modes_flag);

    tlf::ScenarioResult result = tlf::run_scenario(cfg);

    std::printf("%-24s %-6s %-16s %-8s %-16s %-8s %s\n", "mode", "seed", "val_best_mse",
                "epoch", "val_initial_mse", "best", "source");
    for (const auto& row : result.rows)
        std::printf("%-24s %-6s %-16.9e %-8.0f %-16.9e %-8s %s\n", row.mode.c_str(),
                    row.seed_label.c_str(), row.val_best_mse, row.val_best_epoch,
                    row.val_initial_mse, row.best ? "*" : "", row.source_domain.c_str());

    if (!result.all_succeeded()) {
        std::fprintf(stderr, "%zu run(s) failed; see %s/failures.json\n",
                     result.failures.size(), cfg.out_dir.c_str());
        return 1;
    }
    std::printf("artifacts written to %s\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out_csv) {
    std::ifstream in(config_path);
    if (!in) throw tlf::ConfigError("cannot open config file: " + config_path);
    nlohmann::json j;
    in >> j;
    tlf::SynthConfig cfg = tlf::synth_config_from_json(j);

    auto stations = tlf::synthesize(cfg);
    tlf::TimeSeriesDataset combined = tlf::merge_stations(stations);
    tlf::write_csv(combined, out_csv);
    std::printf("wrote %zu days x %zu columns to %s\n", combined.size(),
                combined.feature_count(), out_csv.c_str());
    return 0;
}

/// Gradient check: analytic BPTT vs central finite differences over a batch
/// of random small networks. Exits nonzero on any failure.
int cmd_gradcheck(std::size_t trials, double tolerance) {
    tlf::SeededRng rng(20240901);
    double worst = 0.0;
    std::size_t failures = 0;

    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t depth = 1 + rng.next_u64() % 3;
        const std::size_t features = 1 + rng.next_u64() % 5;
        const std::size_t window = 1 + rng.next_u64() % 6;
        std::vector<std::size_t> hidden;
        for (std::size_t d = 0; d < depth; ++d) hidden.push_back(1 + rng.next_u64() % 8);

        tlf::Network net = tlf::make_network(
            tlf::NetworkArchitecture::stacked(features, hidden), rng.next_u64());
        tlf::Matrix window_data(window, features);
        for (double& v : window_data.data) v = rng.next_uniform(-1.0, 1.0);
        // target near the prediction keeps the FD quotient well conditioned
        const double delta = rng.next_uniform(0.001, 0.005) * (rng.next_unit() < 0.5 ? -1.0 : 1.0);
        const double target = tlf::predict(net, window_data) - delta;

        tlf::ForwardCache cache = tlf::forward(net, window_data);
        const double loss_grad = 2.0 * (cache.prediction - target);
        tlf::GradientSet analytic = tlf::backward(net, cache, loss_grad);
        tlf::GradientSet numeric =
            tlf::finite_difference_gradients(net, window_data, target, 1e-5);

        const double err = tlf::max_relative_gradient_error(analytic, numeric);
        worst = std::max(worst, err);
        const bool ok = err < tolerance;
        if (!ok) ++failures;
        std::printf("[%s] net %2zu: depth=%zu F=%zu B=%zu max_rel_err=%.3e\n",
                    ok ? "ok" : "FAIL", trial + 1, depth, features, window, err);
    }
    std::printf("gradcheck: %zu/%zu networks passed (worst %.3e, tolerance %.1e)\n",
                trials - failures, trials, worst, tolerance);
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tlforecast: next-day pollutant forecasting with LSTM transfer learning"};
    app.require_subcommand(1);

    std::string config_path, out_dir, seeds_flag, modes_flag, out_csv;
    std::size_t trials = 20;
    double tolerance = 1e-5;

    auto* run = app.add_subcommand("run", "run a forecasting comparison scenario");
    run->add_option("--config", config_path, "scenario config JSON")->required();
    run->add_option("--out-dir", out_dir, "output directory (overrides config and TLFORECAST_OUT)");
    run->add_option("--seeds", seeds_flag, "comma-separated seed list override");
    run->add_option("--modes", modes_flag, "comma-separated mode list override");

    auto* synth = app.add_subcommand("synth", "emit a synthetic multi-station CSV");
    synth->add_option("--config", config_path, "synthetic-data config JSON")->required();
    synth->add_option("--out", out_csv, "output CSV path")->required();

    auto* gradcheck = app.add_subcommand("gradcheck", "verify BPTT against finite differences");
    gradcheck->add_option("--trials", trials, "number of random networks (default 20)");
    gradcheck->add_option("--tolerance", tolerance, "max relative error (default 1e-5)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seeds_flag, modes_flag);
        if (synth->parsed()) return cmd_synth(config_path, out_csv);
        if (gradcheck->parsed()) return cmd_gradcheck(trials, tolerance);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
