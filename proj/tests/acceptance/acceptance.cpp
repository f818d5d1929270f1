// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dbf/beamformer.hpp"
#include "dbf/estimation.hpp"
#include "dbf/localization.hpp"
#include "dbf/pipeline.hpp"
#include "dbf/report_io.hpp"
#include "dbf/sync.hpp"

using namespace dbf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rmse_of(const MonteCarloSummary& s, const std::string& q) {
    for (const auto& r : s.localization) {
        if (r.quantity == q) return r.rmse_m;
    }
    return std::numeric_limits<double>::infinity();
}

ScenarioConfig noiseless(const ScenarioConfig& base) {
    auto cfg = base;
    cfg.mode = SimulationMode::AbstractError;
    cfg.channel.abstract_timestamp_sigma_s = 0.0;
    for (auto& n : cfg.nodes) n.clock.timestamp_jitter_s = 0.0;
    return cfg;
}

std::vector<ScenarioConfig> family(const std::string& prefix) {
    std::vector<ScenarioConfig> out;
    for (int i = 1; i <= 4; ++i) out.push_back(*find_builtin(prefix + std::to_string(i)));
    return out;
}

std::vector<Position2D> true_transmitters(const ScenarioConfig& cfg) {
    std::vector<Position2D> tx;
    for (const auto& n : cfg.nodes) tx.push_back(n.true_position + n.lever_arm);
    return tx;
}

// 1 ---------------------------------------------------------------------------
Outcome algebraic_sync() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> pos(-4.0, 4.0);
    std::uniform_real_distribution<double> offset(-1e-6, 1e-6);
    std::uniform_real_distribution<double> hw(0.0, 50e-9);
    double worst_delay = 0.0;
    double worst_offset = 0.0;
    const auto base = noiseless(*find_builtin("calibration"));
    for (int s = 0; s < 1000; ++s) {
        auto cfg = base;
        for (auto& n : cfg.nodes) {
            n.true_position = {pos(rng), pos(rng)};
            n.hardware_delay_s = hw(rng);
            n.clock.offset_s = n.id == 0 ? 0.0 : offset(rng);
        }
        const auto clocks = realize_epoch_clocks(cfg, rng);
        for (int remote : {1, 2}) {
            const auto out = run_exchange(cfg, clocks, {0, remote}, rng);
            worst_delay = std::max(worst_delay, std::abs(est_prop_delay(out.quad) - out.truth.one_way_delay_s));
            worst_offset = std::max(worst_offset, std::abs(est_clock_offset(out.quad) + out.truth.clock_offset_s));
        }
    }
    return {worst_delay < 1e-15 && worst_offset < 1e-15,
            fmt("max delay error %.3g fs, max offset error %.3g fs over 1000 scenarios", worst_delay * 1e15,
                worst_offset * 1e15)};
}

// 2, 3 ------------------------------------------------------------------------
struct RangingRuns {
    std::vector<MonteCarloSummary> per_position;
    std::vector<RunReport> pooled;
    double seconds = 0.0;
};

const RangingRuns& ranging_runs(unsigned jobs) {
    static RangingRuns runs = [&] {
        const auto t0 = std::chrono::steady_clock::now();
        RangingRuns r;
        PipelineOptions opts;
        opts.jobs = jobs;
        opts.focus_only_gain = false;
        const auto cal = run_calibration(*find_builtin("calibration"), opts);
        for (const auto& cfg : family("exp-a-pos")) {
            auto result = run_monte_carlo(cfg, cal, opts, 200);
            r.per_position.push_back(result.summary);
            for (auto& t : result.trials) r.pooled.push_back(std::move(t));
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }();
    return runs;
}

Outcome rmse_line(const std::vector<MonteCarloSummary>& s, const std::vector<std::string>& qs, double limit,
                  std::string& detail) {
    bool ok = true;
    for (std::size_t p = 0; p < s.size(); ++p) {
        detail += fmt(" pos%zu[", p + 1);
        for (const auto& q : qs) {
            const double v = rmse_of(s[p], q);
            ok = ok && v < limit && s[p].n_failed == 0;  // strict bound serves both ≤ 10 mm and < 1 cm
            detail += fmt("%s %.2f ", q.c_str(), v * 1e3);
        }
        detail.back() = ']';
    }
    return {ok, detail};
}

Outcome ranging_accuracy(unsigned jobs) {
    const auto& runs = ranging_runs(jobs);
    std::string detail = "range RMSE mm:";
    auto out = rmse_line(runs.per_position, {"d01", "d02", "d12"}, 0.010, detail);
    std::size_t failed = 0;
    for (const auto& s : runs.per_position) failed += s.n_failed;
    out.detail += fmt("; failed trials %zu", failed);
    return out;
}

Outcome localization_accuracy(unsigned jobs) {
    const auto& runs = ranging_runs(jobs);
    std::string detail = "coordinate RMSE mm:";
    auto out = rmse_line(runs.per_position, {"y1", "x2", "y2"}, 0.010, detail);
    // Pooled over positions: each trial scored against its own position's truth.
    double sq[3] = {0, 0, 0};
    std::size_t n = 0;
    std::size_t pos = 0;
    for (const auto& cfg : family("exp-a-pos")) {
        const auto truth = localize_array(range_set_from(ground_truth(cfg)));
        for (std::size_t t = 0; t < 200; ++t) {
            const auto& r = runs.pooled[pos * 200 + t];
            if (!r.ok()) continue;
            sq[0] += std::pow(r.geometry.at(1).y - truth.at(1).y, 2);
            sq[1] += std::pow(r.geometry.at(2).x - truth.at(2).x, 2);
            sq[2] += std::pow(r.geometry.at(2).y - truth.at(2).y, 2);
            ++n;
        }
        ++pos;
    }
    const auto pooled = [&](int i) { return std::sqrt(sq[i] / static_cast<double>(n)) * 1e3; };
    out.detail += fmt("; pooled y1 %.2f x2 %.2f y2 %.2f", pooled(0), pooled(1), pooled(2));
    return out;
}

// 4 ---------------------------------------------------------------------------
Outcome geometric_round_trip() {
    double worst = 0.0;
    for (const auto& cfg : builtin_scenarios()) {
        const auto g = localize_array(range_set_from(ground_truth(cfg)));
        for (const auto& n : cfg.nodes) {
            const auto p = g.at(n.id);
            worst = std::max(worst, std::hypot(p.x - n.true_position.x, p.y - n.true_position.y));
        }
    }
    return {worst < 1e-9, fmt("max position error %.3g m over %zu layouts", worst, builtin_scenarios().size())};
}

// 5 ---------------------------------------------------------------------------
Outcome lcmp_exactness() {
    double worst = 0.0;
    for (const auto& cfg : builtin_scenarios()) {
        const auto spec = constraint_spec_from(cfg);
        const auto c = constraint_matrix(true_transmitters(cfg), spec);
        const auto w = lcmp_weights(c, spec.g);
        const Eigen::RowVectorXcd response = w.w.transpose() * c.entries;
        for (Eigen::Index m = 0; m < response.size(); ++m) {
            worst = std::max(worst, std::abs(response(m) - spec.g[static_cast<std::size_t>(m)]));
        }
    }
    return {worst < 1e-9, fmt("max |w·C − g| = %.3g", worst)};
}

// 6, 7, 10 --------------------------------------------------------------------
const std::vector<MonteCarloResult>& perturbed(const std::string& prefix, unsigned jobs) {
    static std::map<std::string, std::vector<MonteCarloResult>> cache;
    auto it = cache.find(prefix);
    if (it != cache.end()) return it->second;
    PipelineOptions opts;
    opts.jobs = jobs;
    opts.injected = {0.005, 5e-12};
    const auto cal = run_calibration(noiseless(*find_builtin("calibration")), opts);
    std::vector<MonteCarloResult> out;
    for (const auto& cfg : family(prefix)) out.push_back(run_monte_carlo(noiseless(cfg), cal, opts, 200));
    return cache.emplace(prefix, std::move(out)).first->second;
}

Outcome null_depth(unsigned jobs) {
    const auto& runs = perturbed("exp-b-pos", jobs);
    bool ok = true;
    std::string detail = "median null depth dB:";
    for (std::size_t p = 0; p < runs.size(); ++p) {
        const auto& s = runs[p].summary;
        ok = ok && s.n_failed == 0 && s.median_null_depth_db >= 15.0;
        detail += fmt(" pos%zu %.1f", p + 1, s.median_null_depth_db);
    }
    return {ok, detail};
}

Outcome coherent_gain_criterion(unsigned jobs) {
    const auto& runs = perturbed("exp-b-pos", jobs);
    bool ok = true;
    std::string detail = "median coherent gain (focus beam / focus+null weights):";
    for (std::size_t p = 0; p < runs.size(); ++p) {
        const auto& s = runs[p].summary;
        ok = ok && s.n_failed == 0 && s.median_focus_only_gain >= 0.90;
        detail += fmt(" pos%zu %.3f/%.3f", p + 1, s.median_focus_only_gain, s.median_coherent_gain);
    }
    return {ok, detail};
}

Outcome focus_stability(unsigned jobs) {
    const auto& runs = perturbed("exp-a-pos", jobs);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    bool null_below = true;
    std::size_t violations = 0;
    std::string detail = "mean focus/null dB:";
    for (std::size_t p = 0; p < runs.size(); ++p) {
        const auto& s = runs[p].summary;
        lo = std::min(lo, s.mean_focus_power_db);
        hi = std::max(hi, s.mean_focus_power_db);
        null_below = null_below && s.n_failed == 0 && s.mean_null_power_db < s.mean_focus_power_db;
        for (const auto& t : runs[p].trials) violations += t.power.null_power >= t.power.focus_power;
        detail += fmt(" pos%zu %.2f/%.2f", p + 1, s.mean_focus_power_db, s.mean_null_power_db);
    }
    detail += fmt("; focus spread %.3f dB; trials with null >= focus: %zu", hi - lo, violations);
    return {hi - lo < 1.0 && null_below, detail};
}

// 8 ---------------------------------------------------------------------------
Outcome sidelobe_ordering() {
    auto metrics = [](WaveformKind k) {
        auto spec = find_builtin("calibration")->sync_waveform;
        spec.kind = k;
        const auto wf = synthesize_pulse(spec);
        return sidelobe_metrics(matched_filter(wf, wf));
    };
    const auto tt = metrics(WaveformKind::TwoTone);
    const auto dual = metrics(WaveformKind::DualLFM);
    const auto lfm = metrics(WaveformKind::LFM);
    const bool ok = tt.peak_sidelobe_ratio_db > dual.peak_sidelobe_ratio_db &&
                    dual.peak_sidelobe_ratio_db > lfm.peak_sidelobe_ratio_db &&
                    tt.mainlobe_width_s < dual.mainlobe_width_s && dual.mainlobe_width_s < lfm.mainlobe_width_s;
    return {ok, fmt("PSLR dB two-tone %.2f > dual %.2f > LFM %.2f; width ns %.2f < %.2f < %.2f",
                    tt.peak_sidelobe_ratio_db, dual.peak_sidelobe_ratio_db, lfm.peak_sidelobe_ratio_db,
                    tt.mainlobe_width_s * 1e9, dual.mainlobe_width_s * 1e9, lfm.mainlobe_width_s * 1e9)};
}

// 9 ---------------------------------------------------------------------------
Outcome multipath(unsigned jobs) {
    const std::vector<MultipathTap> tap{{25e-9, 0.6}};
    auto outlier_rate = [&](WaveformKind kind) {
        auto cal_cfg = *find_builtin("calibration");
        cal_cfg.sync_waveform.kind = kind;
        cal_cfg.channel.multipath = tap;
        cal_cfg.channel.snr_db = std::numeric_limits<double>::infinity();
        PipelineOptions opts;
        opts.jobs = jobs;
        opts.focus_only_gain = false;
        const auto cal = run_calibration(cal_cfg, opts);

        auto cfg = *find_builtin("exp-a-pos1");
        cfg.sync_waveform.kind = kind;
        cfg.channel.multipath = tap;
        cfg.channel.snr_db = 10.0;
        const auto truth = ground_truth(cfg);
        const auto result = run_monte_carlo(cfg, cal, opts, 500);
        std::size_t outliers = 0;
        std::size_t total = 0;
        for (const auto& r : result.trials) {
            for (const auto& [key, d] : truth.ranges) {
                ++total;
                const auto it = r.ranges_m.find(key);
                // A pair with no range (detection failure) counts as an outlier.
                if (it == r.ranges_m.end() || std::abs(it->second - d) > 0.5) ++outliers;
            }
        }
        return static_cast<double>(outliers) / static_cast<double>(total);
    };
    const double tt = outlier_rate(WaveformKind::TwoTone);
    const double dual = outlier_rate(WaveformKind::DualLFM);
    const bool ok = tt > 0.0 && tt >= 10.0 * dual;
    return {ok, fmt("outlier rate two-tone %.4f, dual-LFM %.4f (%s)", tt, dual,
                    dual > 0 ? fmt("ratio %.1f", tt / dual).c_str() : "dual-LFM has none")};
}

// 11 --------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome determinism(unsigned jobs) {
    const auto cfg = *find_builtin("exp-a-pos1");
    auto produce = [&](const fs::path& dir, unsigned j) {
        PipelineOptions opts;
        opts.jobs = j;
        opts.calibration_exchanges = 4;
        opts.power_map = GridSpec{};
        opts.keep_waveforms = true;
        const auto cal = run_calibration(*find_builtin("calibration"), opts);
        auto result = run_monte_carlo(cfg, cal, opts, 8);
        OutputBundle b;
        b.command = "run";
        b.config = cfg;
        b.calibration = cal;
        b.trials = std::move(result.trials);
        b.summary = result.summary;
        fs::remove_all(dir);
        return emit_outputs(b, dir);
    };
    const auto root = fs::temp_directory_path() / "dbf_acceptance_determinism";
    const auto files_a = produce(root / "a", 1);
    const auto files_b = produce(root / "b", std::max(2u, jobs));
    std::size_t compared = 0;
    std::size_t differing = 0;
    for (const auto& f : files_a) {
        if (f == "manifest.json") continue;  // carries wall time
        ++compared;
        if (slurp(root / "a" / f) != slurp(root / "b" / f)) ++differing;
    }
    fs::remove_all(root);
    return {files_a == files_b && differing == 0 && compared >= 3,
            fmt("%zu metric files compared, %zu differ (runs with 1 and %u jobs)", compared, differing,
                std::max(2u, jobs))};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    unsigned jobs = 1;
    std::vector<int> only;
    app.add_option("--jobs", jobs, "Concurrent trials")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "Run only these criteria");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "algebraic sync exactness", 5, algebraic_sync},
        {2, "ranging accuracy", 120, [&] { return ranging_accuracy(jobs); }},
        {3, "localization accuracy", 120, [&] { return localization_accuracy(jobs); }},
        {4, "noiseless geometric round-trip", 1, geometric_round_trip},
        {5, "LCMP constraint exactness", 1, lcmp_exactness},
        {6, "null depth under error", 60, [&] { return null_depth(jobs); }},
        {7, "coherent gain", 60, [&] { return coherent_gain_criterion(jobs); }},
        {8, "waveform sidelobe ordering", 5, sidelobe_ordering},
        {9, "multipath robustness", 120, [&] { return multipath(jobs); }},
        {10, "experiment-A focus stability", 60, [&] { return focus_stability(jobs); }},
        {11, "determinism", 10, [&] { return determinism(jobs); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        // Criteria 2 and 3 share one batch of runs; both are timed against it.
        if (c.id == 2 || c.id == 3) secs = ranging_runs(jobs).seconds;
        const bool in_time = secs < c.limit_s;
        const bool pass = out.pass && in_time;
        failures += !pass;
        std::printf("%s [%2d] %s: %s; %.2f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    out.detail.c_str(), secs, c.limit_s, in_time ? "" : " over time");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
