// dbfsim: command-line driver for the distributed beamforming simulator.
//
// Exit codes: 0 success, 2 validation or parse error, 3 stage failure,
// 4 I/O error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dbf/errors.hpp"
#include "dbf/pipeline.hpp"
#include "dbf/report_io.hpp"
#include "dbf/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;
constexpr int kExitIo = 4;

struct CommonArgs {
    std::string scenario;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    unsigned jobs = 1;
    std::size_t exchanges = 16;
};

dbf::ScenarioConfig resolve_scenario(const std::string& ref, const CommonArgs& args) {
    auto cfg = dbf::find_builtin(ref);
    dbf::ScenarioConfig out = cfg ? *cfg : dbf::load_scenario_file(ref);
    if (args.mode == "abstract") {
        out.mode = dbf::SimulationMode::AbstractError;
    } else if (args.mode == "waveform") {
        out.mode = dbf::SimulationMode::WaveformLevel;
    }
    if (args.seed) out.seed = *args.seed;
    dbf::validate(out);
    return out;
}

/// Calibration shares the run's mode; its own seed is offset from the run seed
/// so the two never reuse a stream.
dbf::ScenarioConfig resolve_calibration(const std::string& ref, const CommonArgs& args) {
    auto cfg = resolve_scenario(ref, args);
    if (args.seed) cfg.seed = *args.seed ^ 0xca11b4a7e5eedULL;
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--mode", args.mode, "Simulation mode")->check(CLI::IsMember({"waveform", "abstract"}));
    cmd->add_option("--seed", args.seed, "Master seed (overrides the scenario seed)");
    cmd->add_option("--out", args.out, "Output directory")->capture_default_str();
    cmd->add_option("--jobs", args.jobs, "Concurrent trials")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--exchanges", args.exchanges, "Calibration exchanges per node pair")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

int list_scenarios(const std::string& export_dir) {
    for (const auto& s : dbf::builtin_scenarios()) {
        std::printf("%-14s nodes=%zu receivers=%zu seed=%llu\n", s.name.c_str(), s.nodes.size(), s.receivers.size(),
                    static_cast<unsigned long long>(s.seed));
        if (export_dir.empty()) continue;
        const auto path = std::filesystem::path(export_dir) / (s.name + ".json");
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        std::ofstream os(path);
        os << dbf::serialize_scenario(s);
        if (!os) throw dbf::IoError("cannot write " + path.string());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed phased-array synchronization, localization and beamforming simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string calibration_ref = "calibration";
    std::size_t trials = 1;
    bool dump_waveforms = false;
    bool no_power_map = false;
    double position_sigma = 0.0;
    double sync_sigma = 0.0;
    std::string axis;
    std::vector<double> values;

    std::string export_dir;
    auto* scenarios = app.add_subcommand("scenarios", "List builtin scenarios");
    scenarios->add_option("--export", export_dir, "Also write each builtin as DIR/<name>.json");

    auto* calibrate = app.add_subcommand("calibrate", "Estimate per-pair system delays on a known geometry");
    args.scenario = "calibration";
    calibrate->add_option("--scenario", args.scenario, "Scenario file or builtin name")->capture_default_str();
    add_common(calibrate, args);

    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", args.scenario, "Scenario file or builtin name")->required();
        cmd->add_option("--calibration", calibration_ref, "Calibration scenario file or builtin name")
            ->capture_default_str();
        cmd->add_option("--trials", trials, "Monte-Carlo trials")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--position-sigma", position_sigma, "Injected node-position error std (m)");
        cmd->add_option("--sync-sigma", sync_sigma, "Injected residual sync error std (s)");
        add_common(cmd, args);
    };

    auto* run = app.add_subcommand("run", "Run the end-to-end pipeline");
    add_run_options(run);
    run->add_flag("--dump-waveforms", dump_waveforms, "Write trial-0 captures as cf32");
    run->add_flag("--no-power-map", no_power_map, "Skip the field power map");

    auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over one parameter");
    add_run_options(sweep);
    sweep->add_option("--axis", axis, "Sweep axis")->required()->check(CLI::IsMember(dbf::sweep_axes()));
    sweep->add_option("--values", values, "Axis values")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    const auto started = std::chrono::steady_clock::now();
    try {
        if (*scenarios) return list_scenarios(export_dir);

        dbf::PipelineOptions opts;
        opts.calibration_exchanges = args.exchanges;
        opts.jobs = args.jobs;

        if (*calibrate) {
            const auto cfg = resolve_scenario(args.scenario, args);
            dbf::OutputBundle bundle;
            bundle.command = "calibrate";
            bundle.config = cfg;
            bundle.calibration = dbf::run_calibration(cfg, opts);
            bundle.wall_time_s = seconds_since(started);
            dbf::emit_outputs(bundle, args.out);
            for (const auto& [key, tau] : bundle.calibration->tau_cal_s) {
                std::printf("tau_cal %d-%d = %.6f ns\n", key.first, key.second, tau * 1e9);
            }
            return kExitOk;
        }

        const auto cfg = resolve_scenario(args.scenario, args);
        const auto cal_cfg = resolve_calibration(calibration_ref, args);
        opts.injected = {position_sigma, sync_sigma};
        const auto calibration = dbf::run_calibration(cal_cfg, opts);

        dbf::OutputBundle bundle;
        bundle.command = *run ? "run" : "sweep";
        bundle.config = cfg;
        bundle.calibration = calibration;
        int code = kExitOk;
        if (*run) {
            opts.keep_waveforms = dump_waveforms;
            if (!no_power_map) opts.power_map = dbf::GridSpec{};
            auto result = dbf::run_monte_carlo(cfg, calibration, opts, trials);
            bundle.trials = std::move(result.trials);
            bundle.summary = result.summary;
            for (const auto& r : bundle.trials) {
                if (!r.ok()) {
                    std::fprintf(stderr, "trial %zu failed at %s: %s\n", r.trial, r.failed_stage.c_str(),
                                 r.error.c_str());
                    code = kExitStage;
                }
            }
            const auto& s = *bundle.summary;
            std::printf("%s: %zu trials, %zu failed, median null depth %.2f dB, median coherent gain %.3f\n",
                        cfg.name.c_str(), s.n_trials, s.n_failed, s.median_null_depth_db, s.median_coherent_gain);
        } else {
            bundle.sweep = dbf::run_sweep(cfg, calibration, opts, axis, values, trials);
            for (const auto& p : bundle.sweep) {
                if (p.summary.n_failed == p.summary.n_trials) code = kExitStage;
                std::printf("%s=%g: %zu/%zu ok\n", p.axis.c_str(), p.value, p.summary.n_trials - p.summary.n_failed,
                            p.summary.n_trials);
            }
        }
        bundle.wall_time_s = seconds_since(started);
        dbf::emit_outputs(bundle, args.out);
        return code;
    } catch (const dbf::IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kExitIo;
    } catch (const dbf::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitValidation;
    } catch (const dbf::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const dbf::Error& e) {
        std::fprintf(stderr, "stage failure: %s\n", e.what());
        return kExitStage;
    }
}
