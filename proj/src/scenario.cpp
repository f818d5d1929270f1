#include "dbf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dbf/errors.hpp"
#include "json.hpp"

namespace dbf {

using nlohmann::json;

std::string_view to_string(SimulationMode mode) {
    return mode == SimulationMode::WaveformLevel ? "waveform" : "abstract";
}

std::string_view to_string(Objective objective) { return objective == Objective::Focus ? "focus" : "null"; }

const NodeSpec& ScenarioConfig::node(int id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [id](const NodeSpec& n) { return n.id == id; });
    if (it == nodes.end()) throw ValidationError("scenario has no node with id " + std::to_string(id));
    return *it;
}

std::vector<int> ScenarioConfig::node_ids() const {
    std::vector<int> ids;
    ids.reserve(nodes.size());
    for (const auto& n : nodes) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

NodePairKey make_pair_key(int a, int b) { return a < b ? NodePairKey{a, b} : NodePairKey{b, a}; }

double GroundTruth::range(int a, int b) const {
    auto it = ranges.find(make_pair_key(a, b));
    if (it == ranges.end()) {
        throw ValidationError("no ground-truth range for pair " + std::to_string(a) + "-" + std::to_string(b));
    }
    return it->second;
}

GroundTruth ground_truth(const ScenarioConfig& config) {
    GroundTruth truth;
    for (const auto& n : config.nodes) truth.positions[n.id] = n.true_position;
    for (const auto& a : config.nodes) {
        for (const auto& b : config.nodes) {
            if (a.id < b.id) {
                truth.ranges[{a.id, b.id}] = euclidean_range(a.true_position, b.true_position);
            }
        }
    }
    return truth;
}

void validate(const ScenarioConfig& config) {
    auto fail = [](const std::string& what) { throw ValidationError(what); };
    if (config.nodes.empty()) fail("scenario has no nodes");
    std::set<int> ids;
    for (const auto& n : config.nodes) {
        const std::string tag = "node " + std::to_string(n.id);
        if (!ids.insert(n.id).second) fail("duplicate node id " + std::to_string(n.id));
        if (!is_finite(n.true_position)) fail(tag + ": position not finite");
        if (!is_finite(n.lever_arm)) fail(tag + ": lever_arm not finite");
        if (!(n.hardware_delay_s >= 0.0) || !std::isfinite(n.hardware_delay_s)) fail(tag + ": hardware_delay_s < 0");
        for (auto bit : n.ask_pattern) {
            if (bit > 1) fail(tag + ": ask_pattern entries must be 0 or 1");
        }
        try {
            validate(n.clock);
        } catch (const ValidationError& e) {
            fail(tag + ": " + e.what());
        }
    }
    if (!ids.contains(0)) fail("scenario has no primary node (id 0)");

    if (config.receivers.empty()) fail("scenario has no receivers");
    std::set<int> rx_ids;
    for (std::size_t i = 0; i < config.receivers.size(); ++i) {
        const auto& r = config.receivers[i];
        if (!rx_ids.insert(r.id).second) fail("duplicate receiver id " + std::to_string(r.id));
        if (!is_finite(r.true_position)) fail("receiver " + std::to_string(r.id) + ": position not finite");
        for (std::size_t j = 0; j < i; ++j) {
            if (config.receivers[j].true_position == r.true_position) {
                fail("receivers " + std::to_string(config.receivers[j].id) + " and " + std::to_string(r.id) +
                     " share a position");
            }
        }
    }

    std::size_t pattern_len = 0;
    bool any_pattern = false;
    for (const auto& n : config.nodes) {
        if (n.ask_pattern.empty()) continue;
        if (any_pattern && n.ask_pattern.size() != pattern_len) fail("ask_pattern lengths differ between nodes");
        pattern_len = n.ask_pattern.size();
        any_pattern = true;
    }

    if (!(config.carrier_beam_hz > 0.0) || !std::isfinite(config.carrier_beam_hz)) fail("carrier_beam_hz must be > 0");
    try {
        validate(config.sync_waveform);
        validate(config.beam_waveform);
    } catch (const SynthesisError& e) {
        fail(e.what());
    }
    if (config.sync_waveform.kind == WaveformKind::ASK || config.sync_waveform.kind == WaveformKind::CW) {
        fail("sync_waveform must be a pulse kind (two_tone, lfm, dual_lfm)");
    }
    try {
        validate(config.channel);
    } catch (const ValidationError& e) {
        fail(std::string("channel: ") + e.what());
    }
    for (const auto& l : config.channel.links) {
        if (!ids.contains(l.a) || !ids.contains(l.b)) {
            fail("channel link " + std::to_string(l.a) + "-" + std::to_string(l.b) + " references an unknown node");
        }
    }
}

// ---------------------------------------------------------------------------
// JSON reading. Every object is read through a Reader that records which keys
// were consumed so unknown keys can be rejected with their full path.

namespace {

class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ParseError(path_ + ": expected object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        if (!j_.contains(key)) throw ParseError(field(key) + ": missing required field");
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key) { return as_number(at(key), field(key)); }

    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    /// null means +infinity (noise disabled).
    double snr(const std::string& key) {
        const auto& v = at(key);
        if (v.is_null()) return std::numeric_limits<double>::infinity();
        return as_number(v, field(key));
    }

    std::string string(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_string()) throw ParseError(field(key) + ": expected string");
        return v.get<std::string>();
    }

    int integer(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_integer()) throw ParseError(field(key) + ": expected integer");
        return v.get<int>();
    }

    std::uint64_t uint64(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ParseError(field(key) + ": expected non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    const json& array(const std::string& key) {
        const auto& v = at(key);
        if (!v.is_array()) throw ParseError(field(key) + ": expected array");
        return v;
    }

    Reader object(const std::string& key) { return Reader(at(key), field(key)); }

    [[nodiscard]] std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.contains(it.key())) throw ParseError(field(it.key()) + ": unknown key");
        }
    }

    static double as_number(const json& v, const std::string& where) {
        if (!v.is_number()) throw ParseError(where + ": expected number");
        return v.get<double>();
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Position2D read_position(Reader r) {
    Position2D p{r.number("x"), r.number("y")};
    r.finish();
    return p;
}

ClockModel read_clock(Reader r) {
    ClockModel c;
    c.offset_s = r.number_or("offset_s", 0.0);
    c.drift_ppb = r.number_or("drift_ppb", 0.0);
    c.timestamp_jitter_s = r.number_or("timestamp_jitter_s", 0.0);
    c.pps_alignment_s = r.number_or("pps_alignment_s", 0.0);
    r.finish();
    return c;
}

WaveformSpec read_waveform(Reader r) {
    WaveformSpec w;
    try {
        w.kind = waveform_kind_from_string(r.string("kind"));
    } catch (const ParseError& e) {
        throw ParseError(r.field("kind") + ": " + e.what());
    }
    w.carrier_hz = r.number("carrier_hz");
    w.bandwidth_hz = r.number("bandwidth_hz");
    w.duration_s = r.number("duration_s");
    w.amplitude = r.number_or("amplitude", 1.0);
    w.rise_fall_s = r.number_or("rise_fall_s", 0.0);
    w.sample_rate_hz = r.number("sample_rate_hz");
    w.initial_phase_rad = r.number_or("initial_phase_rad", 0.0);
    w.data_rate_hz = r.number_or("data_rate_hz", 0.0);
    r.finish();
    return w;
}

std::vector<std::uint8_t> read_bits(const json& arr, const std::string& where) {
    std::vector<std::uint8_t> bits;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& b = arr[i];
        if (!b.is_number_integer() || (b.get<int>() != 0 && b.get<int>() != 1)) {
            throw ParseError(where + "[" + std::to_string(i) + "]: expected 0 or 1");
        }
        bits.push_back(static_cast<std::uint8_t>(b.get<int>()));
    }
    return bits;
}

NodeSpec read_node(Reader r) {
    NodeSpec n;
    n.id = r.integer("id");
    n.true_position = read_position(r.object("position"));
    if (r.has("clock")) n.clock = read_clock(r.object("clock"));
    n.hardware_delay_s = r.number_or("hardware_delay_s", 0.0);
    if (r.has("lever_arm")) n.lever_arm = read_position(r.object("lever_arm"));
    if (r.has("ask_pattern")) n.ask_pattern = read_bits(r.array("ask_pattern"), r.field("ask_pattern"));
    r.finish();
    return n;
}

ReceiverSpec read_receiver(Reader r) {
    ReceiverSpec rx;
    rx.id = r.integer("id");
    rx.true_position = read_position(r.object("position"));
    const auto obj = r.string("objective");
    if (obj == "focus") {
        rx.objective = Objective::Focus;
    } else if (obj == "null") {
        rx.objective = Objective::Null;
    } else {
        throw ParseError(r.field("objective") + ": expected \"focus\" or \"null\"");
    }
    r.finish();
    return rx;
}

ChannelModel read_channel(Reader r) {
    ChannelModel c;
    c.snr_db = r.has("snr_db") ? r.snr("snr_db") : std::numeric_limits<double>::infinity();
    if (r.has("links")) {
        const auto& arr = r.array("links");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Reader l(arr[i], r.field("links") + "[" + std::to_string(i) + "]");
            LinkSnr link;
            link.a = l.integer("a");
            link.b = l.integer("b");
            link.snr_db = l.snr("snr_db");
            l.finish();
            c.links.push_back(link);
        }
    }
    if (r.has("multipath")) {
        const auto& arr = r.array("multipath");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Reader t(arr[i], r.field("multipath") + "[" + std::to_string(i) + "]");
            MultipathTap tap{t.number("excess_delay_s"), t.number("relative_amplitude")};
            t.finish();
            c.multipath.push_back(tap);
        }
    }
    c.abstract_timestamp_sigma_s = r.number_or("abstract_timestamp_sigma_s", 0.0);
    r.finish();
    return c;
}

json snr_json(double snr_db) { return std::isinf(snr_db) ? json(nullptr) : json(snr_db); }

json position_json(Position2D p) { return {{"x", p.x}, {"y", p.y}}; }

json waveform_json(const WaveformSpec& w) {
    return {{"kind", std::string(to_string(w.kind))},
            {"carrier_hz", w.carrier_hz},
            {"bandwidth_hz", w.bandwidth_hz},
            {"duration_s", w.duration_s},
            {"amplitude", w.amplitude},
            {"rise_fall_s", w.rise_fall_s},
            {"sample_rate_hz", w.sample_rate_hz},
            {"initial_phase_rad", w.initial_phase_rad},
            {"data_rate_hz", w.data_rate_hz}};
}

}  // namespace

ScenarioConfig load_scenario(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    Reader r(doc, "");
    ScenarioConfig cfg;
    if (r.has("name")) cfg.name = r.string("name");
    const auto& nodes = r.array("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        cfg.nodes.push_back(read_node(Reader(nodes[i], "nodes[" + std::to_string(i) + "]")));
    }
    const auto& rxs = r.array("receivers");
    for (std::size_t i = 0; i < rxs.size(); ++i) {
        cfg.receivers.push_back(read_receiver(Reader(rxs[i], "receivers[" + std::to_string(i) + "]")));
    }
    cfg.sync_waveform = read_waveform(r.object("sync_waveform"));
    cfg.beam_waveform = read_waveform(r.object("beam_waveform"));
    cfg.channel = read_channel(r.object("channel"));
    cfg.carrier_beam_hz = r.number("carrier_beam_hz");
    cfg.seed = r.uint64("seed");
    const auto mode = r.string("mode");
    if (mode == "waveform") {
        cfg.mode = SimulationMode::WaveformLevel;
    } else if (mode == "abstract") {
        cfg.mode = SimulationMode::AbstractError;
    } else {
        throw ParseError("mode: expected \"waveform\" or \"abstract\"");
    }
    r.finish();
    validate(cfg);
    return cfg;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto cfg = load_scenario(ss.str());
    if (cfg.name.empty()) cfg.name = std::filesystem::path(path).stem().string();
    return cfg;
}

std::string serialize_scenario(const ScenarioConfig& config) {
    json doc;
    doc["name"] = config.name;
    doc["nodes"] = json::array();
    for (const auto& n : config.nodes) {
        doc["nodes"].push_back({{"id", n.id},
                                {"position", position_json(n.true_position)},
                                {"clock",
                                 {{"offset_s", n.clock.offset_s},
                                  {"drift_ppb", n.clock.drift_ppb},
                                  {"timestamp_jitter_s", n.clock.timestamp_jitter_s},
                                  {"pps_alignment_s", n.clock.pps_alignment_s}}},
                                {"hardware_delay_s", n.hardware_delay_s},
                                {"lever_arm", position_json(n.lever_arm)},
                                {"ask_pattern", n.ask_pattern}});
    }
    doc["receivers"] = json::array();
    for (const auto& rx : config.receivers) {
        doc["receivers"].push_back({{"id", rx.id},
                                    {"position", position_json(rx.true_position)},
                                    {"objective", std::string(to_string(rx.objective))}});
    }
    doc["sync_waveform"] = waveform_json(config.sync_waveform);
    doc["beam_waveform"] = waveform_json(config.beam_waveform);
    json links = json::array();
    for (const auto& l : config.channel.links) links.push_back({{"a", l.a}, {"b", l.b}, {"snr_db", snr_json(l.snr_db)}});
    json taps = json::array();
    for (const auto& t : config.channel.multipath) {
        taps.push_back({{"excess_delay_s", t.excess_delay_s}, {"relative_amplitude", t.relative_amplitude}});
    }
    doc["channel"] = {{"snr_db", snr_json(config.channel.snr_db)},
                      {"links", links},
                      {"multipath", taps},
                      {"abstract_timestamp_sigma_s", config.channel.abstract_timestamp_sigma_s}};
    doc["carrier_beam_hz"] = config.carrier_beam_hz;
    doc["seed"] = config.seed;
    doc["mode"] = std::string(to_string(config.mode));
    return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Builtin experiment layouts.

const std::vector<std::vector<std::uint8_t>>& table_ask_patterns() {
    static const std::vector<std::vector<std::uint8_t>> patterns = {
        {0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0},
        {0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0},
        {0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 0},
    };
    return patterns;
}

namespace {

ScenarioConfig base_layout(std::string name, Position2D node2, Position2D rx0, Position2D rx1, std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.name = std::move(name);

    const Position2D positions[3] = {{0.0, 0.0}, {0.0, 1.85}, node2};
    const double hw_delay[3] = {10e-9, 12e-9, 8e-9};
    for (int i = 0; i < 3; ++i) {
        NodeSpec n;
        n.id = i;
        n.true_position = positions[i];
        n.hardware_delay_s = hw_delay[i];
        n.clock.timestamp_jitter_s = 300e-15;
        // GNSS PPS brings the secondaries within 100 ns of the primary.
        n.clock.pps_alignment_s = i == 0 ? 0.0 : 100e-9;
        n.ask_pattern = table_ask_patterns()[static_cast<std::size_t>(i)];
        cfg.nodes.push_back(n);
    }
    cfg.receivers = {{0, rx0, Objective::Focus}, {1, rx1, Objective::Null}};

    cfg.sync_waveform = WaveformSpec{.kind = WaveformKind::DualLFM,
                                     .carrier_hz = 4.8e9,
                                     .bandwidth_hz = 40e6,
                                     .duration_s = 10.0e-6,
                                     .amplitude = 1.0,
                                     .rise_fall_s = 5e-9,
                                     .sample_rate_hz = 200e6};
    cfg.beam_waveform = WaveformSpec{.kind = WaveformKind::ASK,
                                     .carrier_hz = 2.1e9,
                                     .bandwidth_hz = 40e6,
                                     .duration_s = 10.0e-6,
                                     .amplitude = 1.0,
                                     .rise_fall_s = 5e-9,
                                     .sample_rate_hz = 200e6,
                                     .data_rate_hz = 1.5e6};
    cfg.channel.snr_db = 30.0;
    cfg.channel.abstract_timestamp_sigma_s = 10e-12;
    cfg.carrier_beam_hz = 2.1e9;
    cfg.seed = seed;
    cfg.mode = SimulationMode::WaveformLevel;
    return cfg;
}

}  // namespace

std::vector<ScenarioConfig> builtin_scenarios() {
    const Position2D rx0{0.8, 5.07};
    const Position2D rx1{1.3, 5.07};
    std::vector<ScenarioConfig> out;
    out.push_back(base_layout("calibration", {1.53, 1.03}, rx0, rx1, 1000));

    const Position2D exp_a_node2[4] = {{1.93, 1.06}, {1.71, 1.09}, {1.49, 1.04}, {1.16, 1.05}};
    for (int i = 0; i < 4; ++i) {
        out.push_back(base_layout("exp-a-pos" + std::to_string(i + 1), exp_a_node2[i], rx0, rx1,
                                  1001 + static_cast<std::uint64_t>(i)));
    }

    const std::pair<Position2D, Position2D> exp_b_rx[4] = {
        {{0.8, 5.07}, {1.3, 5.07}}, {{0.9, 5.07}, {1.4, 5.07}}, {{1.0, 5.07}, {1.5, 5.07}}, {{0.1, 5.07}, {1.6, 5.07}}};
    for (int i = 0; i < 4; ++i) {
        out.push_back(base_layout("exp-b-pos" + std::to_string(i + 1), {1.16, 1.05}, exp_b_rx[i].first,
                                  exp_b_rx[i].second, 2001 + static_cast<std::uint64_t>(i)));
    }
    return out;
}

std::optional<ScenarioConfig> find_builtin(std::string_view name) {
    for (auto& s : builtin_scenarios()) {
        if (s.name == name) return s;
    }
    return std::nullopt;
}

}  // namespace dbf
