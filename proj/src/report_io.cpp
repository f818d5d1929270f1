#include "dbf/report_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "dbf/errors.hpp"
#include "json.hpp"

namespace dbf {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// NaN and infinities become null.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class Writer {
public:
    explicit Writer(fs::path root) : root_(std::move(root)) {}

    void write(const std::string& rel, const std::string& content) {
        const fs::path path = root_ / rel;
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + path.string() + " for writing");
        os << content;
        os.close();
        if (!os) throw IoError("write failed for " + path.string());
        files_.push_back(rel);
    }

    void record(const std::string& rel) { files_.push_back(rel); }

    [[nodiscard]] const std::vector<std::string>& files() const { return files_; }
    [[nodiscard]] const fs::path& root() const { return root_; }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

json quad_json(const TimestampQuad& q) {
    return {{"t_tx_n", q.t_tx_n}, {"t_rx_0", q.t_rx_0}, {"t_tx_0", q.t_tx_0}, {"t_rx_n", q.t_rx_n}};
}

json calibration_json(const CalibrationRecord& cal) {
    json pairs = json::array();
    for (const auto& [key, tau] : cal.tau_cal_s) pairs.push_back({{"pair", {key.first, key.second}}, {"tau_cal_s", tau}});
    return {{"source", cal.source}, {"pairs", pairs}};
}

json stats_json(const std::vector<ErrorStats>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"quantity", r.quantity},
                       {"rmse_m", jnum(r.rmse_m)},
                       {"bias_m", jnum(r.bias_m)},
                       {"std_m", jnum(r.std_m)},
                       {"n_trials", r.n_trials}});
    }
    return out;
}

json summary_json(const MonteCarloSummary& s) {
    json failures = json::object();
    for (const auto& [stage, n] : s.failures_by_stage) failures[stage] = n;
    return {{"n_trials", s.n_trials},
            {"n_failed", s.n_failed},
            {"failures_by_stage", failures},
            {"localization", stats_json(s.localization)},
            {"median_null_depth_db", jnum(s.median_null_depth_db)},
            {"median_coherent_gain", jnum(s.median_coherent_gain)},
            {"median_focus_only_coherent_gain", jnum(s.median_focus_only_gain)},
            {"mean_focus_power_db", jnum(s.mean_focus_power_db)},
            {"mean_null_power_db", jnum(s.mean_null_power_db)}};
}

std::string trials_csv(const ScenarioConfig& config, const std::vector<RunReport>& trials) {
    const auto ids = config.node_ids();
    std::ostringstream os;
    os << "trial,status,failed_stage,d01_m,d02_m,d12_m";
    for (int id : ids) os << ",x" << id << "_m,y" << id << "_m";
    for (int id : ids) os << ",residual_offset" << id << "_s";
    os << ",focus_power_db,null_power_db,null_depth_db,coherent_gain,focus_only_coherent_gain,constraint_residual\n";
    for (const auto& r : trials) {
        os << r.trial << ',' << (r.ok() ? "ok" : "failed") << ',' << r.failed_stage;
        if (!r.ok()) {
            os << '\n';
            continue;
        }
        os << ',' << num(r.ranges.d01) << ',' << num(r.ranges.d02) << ',' << num(r.ranges.d12);
        for (int id : ids) {
            const auto p = r.geometry.at(id);
            os << ',' << num(p.x) << ',' << num(p.y);
        }
        for (int id : ids) {
            auto it = r.residual_offset_s.find(id);
            os << ',' << (it == r.residual_offset_s.end() ? std::string() : num(it->second));
        }
        os << ',' << num(10.0 * std::log10(r.power.focus_power)) << ','
           << (r.has_null ? num(10.0 * std::log10(r.power.null_power)) : std::string()) << ','
           << (r.has_null ? num(r.power.null_depth_db) : std::string()) << ',' << num(r.coherent_gain) << ','
           << num(r.focus_only_coherent_gain) << ',' << num(r.constraint_residual) << '\n';
    }
    return os.str();
}

std::string exchanges_jsonl(const std::vector<RunReport>& trials) {
    std::string out;
    for (const auto& r : trials) {
        for (const auto& e : r.exchanges) {
            json rec = {{"trial", r.trial},
                        {"pair", {e.quad.reference_id, e.quad.remote_id}},
                        {"quad", quad_json(e.quad)},
                        {"estimates",
                         {{"prop_delay_s", e.est_delay_s}, {"clock_offset_s", e.est_offset_s}, {"range_m", e.range_m}}},
                        {"truth",
                         {{"range_m", e.truth.range_m},
                          {"one_way_delay_s", e.truth.one_way_delay_s},
                          {"clock_offset_s", e.truth.clock_offset_s}}},
                        {"mode", std::string(to_string(r.mode))},
                        {"seed", r.seed}};
            out += rec.dump() + '\n';
        }
    }
    return out;
}

std::string beam_jsonl(const std::vector<RunReport>& trials) {
    std::string out;
    for (const auto& r : trials) {
        json rec = {{"trial", r.trial}, {"status", r.ok() ? "ok" : "failed"}};
        if (!r.ok()) {
            rec["failed_stage"] = r.failed_stage;
            rec["error"] = r.error;
        } else {
            json w = json::array();
            for (Eigen::Index n = 0; n < r.weights.w.size(); ++n) {
                w.push_back({r.weights.w(n).real(), r.weights.w(n).imag()});
            }
            rec["weights"] = w;
            rec["normalization"] = r.weights.normalization;
            rec["focus_power"] = jnum(r.power.focus_power);
            rec["null_power"] = r.has_null ? jnum(r.power.null_power) : json(nullptr);
            rec["null_depth_db"] = r.has_null ? jnum(r.power.null_depth_db) : json(nullptr);
            rec["coherent_gain"] = jnum(r.coherent_gain);
            rec["focus_only_coherent_gain"] = jnum(r.focus_only_coherent_gain);
            rec["constraint_residual"] = jnum(r.constraint_residual);
        }
        out += rec.dump() + '\n';
    }
    return out;
}

std::string power_map_csv(const PowerMap& map) {
    std::string out = "x,y,power_db\n";
    char buf[96];
    for (std::size_t iy = 0; iy < map.ny; ++iy) {
        for (std::size_t ix = 0; ix < map.nx; ++ix) {
            const auto p = map.point(ix, iy);
            const double v = map.at(ix, iy);
            const double db = v > 0.0 ? 10.0 * std::log10(v) : -400.0;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x, p.y, db);
            out += buf;
        }
    }
    return out;
}

std::string rmse_of(const MonteCarloSummary& s, const std::string& q) {
    for (const auto& r : s.localization) {
        if (r.quantity == q) return num(r.rmse_m);
    }
    return {};
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "axis,value,n_trials,n_failed,d01_rmse_m,d02_rmse_m,d12_rmse_m,y1_rmse_m,x2_rmse_m,y2_rmse_m,"
          "median_null_depth_db,median_coherent_gain,median_focus_only_coherent_gain,mean_focus_power_db\n";
    for (const auto& p : points) {
        const auto& s = p.summary;
        os << p.axis << ',' << num(p.value) << ',' << s.n_trials << ',' << s.n_failed;
        for (const char* q : {"d01", "d02", "d12", "y1", "x2", "y2"}) os << ',' << rmse_of(s, q);
        os << ',' << num(s.median_null_depth_db) << ',' << num(s.median_coherent_gain) << ','
           << num(s.median_focus_only_gain) << ',' << num(s.mean_focus_power_db) << '\n';
    }
    return os.str();
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
    std::array<char, 1 << 16> buf{};
    while (is) {
        is.read(buf.data(), buf.size());
        if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::string hex;
    char byte[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

std::vector<std::string> emit_outputs(const OutputBundle& bundle, const std::filesystem::path& out_dir) {
    Writer w(out_dir);

    json summary = {{"command", bundle.command},
                    {"scenario", bundle.config.name},
                    {"seed", bundle.config.seed},
                    {"mode", std::string(to_string(bundle.config.mode))}};
    if (bundle.calibration) summary["calibration"] = calibration_json(*bundle.calibration);
    if (bundle.summary) summary["monte_carlo"] = summary_json(*bundle.summary);
    if (!bundle.sweep.empty()) {
        json points = json::array();
        for (const auto& p : bundle.sweep) {
            json entry = summary_json(p.summary);
            entry["axis"] = p.axis;
            entry["value"] = p.value;
            points.push_back(entry);
        }
        summary["sweep"] = points;
    }
    w.write("summary.json", summary.dump(2) + '\n');

    if (bundle.calibration) w.write("calibration.json", calibration_json(*bundle.calibration).dump(2) + '\n');

    if (!bundle.trials.empty()) {
        w.write("trials.csv", trials_csv(bundle.config, bundle.trials));
        w.write("exchanges.jsonl", exchanges_jsonl(bundle.trials));
        w.write("beam_metrics.jsonl", beam_jsonl(bundle.trials));
        for (const auto& r : bundle.trials) {
            if (r.map) {
                w.write("power_map.csv", power_map_csv(*r.map));
                break;
            }
        }
        for (const auto& r : bundle.trials) {
            for (const auto& [name, wf] : r.waveforms) {
                const std::string rel = "waveforms/trial" + std::to_string(r.trial) + "_" + name + ".cf32";
                try {
                    fs::create_directories(out_dir / "waveforms");
                    dump_waveform(wf, name, out_dir / rel);
                } catch (const std::exception& e) {
                    throw IoError(std::string("cannot write ") + (out_dir / rel).string() + ": " + e.what());
                }
                w.record(rel);
                w.record(rel + ".json");
            }
        }
    }
    if (bundle.summary && !bundle.summary->localization.empty()) {
        std::ostringstream os;
        write_error_csv(os, bundle.summary->localization);
        w.write("localization_metrics.csv", os.str());
    }
    if (!bundle.sweep.empty()) w.write("sweep.csv", sweep_csv(bundle.sweep));

    json files = json::array();
    for (const auto& rel : w.files()) {
        const fs::path path = out_dir / rel;
        std::error_code ec;
        const auto size = fs::file_size(path, ec);
        if (ec) throw IoError("cannot stat " + path.string() + ": " + ec.message());
        files.push_back({{"path", rel}, {"sha256", sha256_file(path)}, {"bytes", size}});
    }
    json manifest = {{"command", bundle.command},
                     {"scenario", bundle.config.name},
                     {"seed", bundle.config.seed},
                     {"wall_time_s", bundle.wall_time_s},
                     {"files", files}};
    w.write("manifest.json", manifest.dump(2) + '\n');
    return w.files();
}

}  // namespace dbf
