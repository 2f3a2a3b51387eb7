#pragma once

// Scenario files: one JSON document describing the deployment, radio models,
// and per-experiment knobs. Loading merges the user's file over a complete
// default tree, then applies command-line overrides, so the resolved document
// always carries every field. That resolved document is embedded verbatim in
// the run manifest, and a manifest fed back in as a scenario reproduces the
// run bit for bit.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "apps.hpp"
#include "errors.hpp"
#include "linkmodel.hpp"
#include "phy.hpp"
#include "protocol.hpp"
#include "units.hpp"

namespace igesim {

using json = nlohmann::json;

inline json default_scenario_json() {
    return json{
        {"name", "testbed19"},
        {"topology",
         {{"layout", "testbed19"},
          {"n", 19},
          {"spacing_m", 10.0},
          {"row_spacing_m", 2.0},
          {"path_loss_exponent", 2.2},
          {"ref_gain_db_at_1m", -40.0},
          {"shadowing_sigma_db", 1.0},
          {"seed", 7}}},
        {"phy",
         {{"modulation_index", 0.5},
          {"symbol_time_s", 1e-6},
          {"sampling_period_s", 1e-6},
          {"samples_per_packet", 1200},
          {"rx_floor_dbm", -90.0},
          {"rx_ceiling_dbm", -20.0},
          {"rssi_quantum_db", 1.0},
          {"tx_accuracy_db", 1.0},
          {"rx_accuracy_db", 2.0},
          {"saturation_enabled", true},
          {"quantization_enabled", true},
          {"floor_clamp_enabled", true},
          {"agc_overreaction_enabled", true},
          {"agc_suppression", 0.8},
          {"agc_clip_headroom_db", 1.0}}},
        {"capture",
         {{"delta_cap_db", 3.0},
          {"logistic_width_db", 1.0},
          {"noise_floor_dbm", -72.0},
          {"snr_min_db", 5.0},
          {"different_data_penalty_db", 3.0}}},
        {"noise",
         {{"enabled", true},
          {"tx_accuracy_db", 1.0},
          {"rx_accuracy_db", 2.0},
          {"jitter_sigma_db", 0.2}}},
        {"round", {{"n_tx", 4}, {"update_interval_rounds", 50}, {"ige_passes", 3}}},
        {"power_set_dbm", json::array({-20.0, -16.0, -8.0, -4.0, 0.0})},
        {"min_adjust_mw", 0.4},
        {"seeds", json::array({42})},
        {"flood",
         {{"schemes", json::array({"optimized", "random", "fixed"})},
          {"rounds", 3000},
          {"fixed_power_mw", 1.0},
          {"bootstrap_power_mw", 1.0}}},
        {"sweep_dp",
         {{"values_mw", json::array({0.1, 0.2, 0.4, 0.8})},
          {"processes", 500},
          {"base_cycle_dbm", json::array({0.0, 0.0, -8.0})},
          {"perfect_capture", true}}},
        {"linearity",
         {{"trials", 1000},
          {"max_senders", 5},
          {"gain_db", -60.0},
          {"tx_power_dbm", 0.0},
          {"cfo_min_hz", -50000.0},
          {"cfo_max_hz", 50000.0},
          {"beat_cycles_us", json::array({200.0, 240.0, 300.0, 400.0})},
          {"saturation_sweep_dbm",
           json::array({-32.0, -30.0, -28.0, -26.0, -24.0, -22.0, -21.0})}}},
        {"estimate",
         {{"count", 2000},
          {"n", 6},
          {"base_dbm", -4.0},
          {"delta_rel_min", 1e-4},
          {"delta_rel_max", 0.9},
          {"noise_sigma_db", 0.2},
          {"h_db_min", -80.0},
          {"h_db_max", -40.0}}},
        {"convergecast",
         {{"channels", 37},
          {"trials", 10000},
          {"tx_power_dbm", 0.0},
          {"sinr_floor_db", 10.0},
          {"estimate_source", "bootstrap"}}},
        {"p2p",
         {{"pairs",
           json::array({json::array({7, 13}), json::array({8, 14}), json::array({9, 15}),
                        json::array({10, 16}), json::array({11, 17}),
                        json::array({12, 18})})},
          {"initial_map_size", 12},
          {"rounds", 4000},
          {"window_packets", 20},
          {"exclusion_loss_rate", 0.5},
          {"min_channels", 2},
          {"tx_power_dbm", 0.0},
          {"sinr_floor_db", 10.0},
          {"estimate_source", "bootstrap"}}},
        {"overhead",
         {{"n_s", 10}, {"n_r", 3}, {"b", 71}, {"hop_sizes", json::array({3, 3, 3})}}},
    };
}

// --set key=value with dotted paths; the value is parsed as JSON when it is
// valid JSON (numbers, booleans, arrays), and taken as a string otherwise.
inline void apply_override(json& tree, const std::string& keyval) {
    const auto eq = keyval.find('=');
    if (eq == std::string::npos || eq == 0)
        throw InvalidInput("override must look like key.path=value: " + keyval);
    const std::string path = keyval.substr(0, eq);
    const std::string raw = keyval.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &tree;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw InvalidInput("override has an empty path segment: " + keyval);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

// Merge the user's document over the defaults and apply overrides. A manifest
// produced by an earlier run (carrying the resolved document under
// "scenario") can be fed back in directly.
inline json resolve_scenario(json file_json, const std::vector<std::string>& overrides) {
    if (file_json.contains("scenario") && file_json["scenario"].is_object())
        file_json = file_json["scenario"];
    json resolved = default_scenario_json();
    resolved.merge_patch(file_json);
    for (const auto& kv : overrides) apply_override(resolved, kv);
    return resolved;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return json::parse(buf.str());
}

inline json make_manifest(const std::string& subcommand, const json& resolved_scenario) {
    return json{{"subcommand", subcommand}, {"scenario", resolved_scenario}};
}

// Typed view over the resolved document.
struct Scenario {
    json raw;
    std::string name;

    TopologyParams topo_params;
    std::uint64_t topology_seed = 0;
    PhyConfig phy;
    CaptureConfig capture;
    NoiseConfig noise;
    int n_tx = 4;
    int update_interval_rounds = 50;
    int ige_passes = 3;
    std::vector<double> power_set_mw;
    double min_adjust_mw = 0.4;
    std::vector<std::uint64_t> seeds;

    struct Flood {
        std::vector<Scheme> schemes;
        long rounds = 0;
        double fixed_power_mw = 1.0;
        double bootstrap_power_mw = 1.0;
    } flood;

    struct SweepDp {
        std::vector<double> values_mw;
        long processes = 0;
        std::vector<double> base_cycle_mw;
        bool perfect_capture = true;
    } sweep_dp;

    struct Linearity {
        long trials = 0;
        int max_senders = 2;
        double gain_db = -60.0;
        double tx_power_dbm = 0.0;
        double cfo_min_hz = 0.0;
        double cfo_max_hz = 0.0;
        std::vector<double> beat_cycles_us;
        std::vector<double> saturation_sweep_dbm;
    } linearity;

    struct EstimateStudy {
        long count = 0;
        int n = 0;
        double base_mw = 0.0;
        double delta_rel_min = 0.0;
        double delta_rel_max = 0.0;
        double noise_sigma_db = 0.0;
        double h_db_min = 0.0;
        double h_db_max = 0.0;
    } estimate;

    struct Convergecast {
        int channels = 0;
        long trials = 0;
        double tx_power_mw = 0.0;
        double sinr_floor_db = 0.0;
        bool estimate_from_bootstrap = true;
    } convergecast;

    struct P2p {
        std::vector<std::pair<int, int>> pairs;
        int initial_map_size = 0;
        long rounds = 0;
        AfhThresholds thresholds;
        double tx_power_mw = 0.0;
        double sinr_floor_db = 0.0;
        bool estimate_from_bootstrap = true;
    } p2p;

    struct Overhead {
        int n_s = 0, n_r = 0, b = 0;
        std::vector<int> hop_sizes;
    } overhead;
};

namespace scenario_detail {

inline Layout layout_from_string(const std::string& s) {
    if (s == "grid") return Layout::Grid;
    if (s == "line") return Layout::Line;
    if (s == "testbed19") return Layout::Testbed19;
    throw InvalidInput("unknown topology layout: " + s);
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "optimized") return Scheme::OptimizedFlooding;
    if (s == "flooding-plus-ige") return Scheme::FloodingPlusIGE;
    if (s == "random") return Scheme::RandomPower;
    if (s == "fixed") return Scheme::FixedPower;
    throw InvalidInput("unknown scheme: " + s);
}

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::OptimizedFlooding: return "optimized";
        case Scheme::FloodingPlusIGE: return "flooding-plus-ige";
        case Scheme::RandomPower: return "random";
        case Scheme::FixedPower: return "fixed";
    }
    return "unknown";
}

} // namespace scenario_detail

inline Scenario parse_scenario(const json& resolved) {
    Scenario sc;
    sc.raw = resolved;
    sc.name = resolved.at("name").get<std::string>();

    const json& t = resolved.at("topology");
    sc.topo_params.layout = scenario_detail::layout_from_string(t.at("layout").get<std::string>());
    sc.topo_params.n = t.at("n").get<int>();
    sc.topo_params.spacing_m = t.at("spacing_m").get<double>();
    sc.topo_params.row_spacing_m = t.at("row_spacing_m").get<double>();
    sc.topo_params.path_loss_exponent = t.at("path_loss_exponent").get<double>();
    sc.topo_params.ref_gain_db_at_1m = t.at("ref_gain_db_at_1m").get<double>();
    sc.topo_params.shadowing_sigma_db = t.at("shadowing_sigma_db").get<double>();
    sc.topology_seed = t.at("seed").get<std::uint64_t>();

    const json& p = resolved.at("phy");
    sc.phy.modulation_index = p.at("modulation_index").get<double>();
    sc.phy.symbol_time_s = p.at("symbol_time_s").get<double>();
    sc.phy.sampling_period_s = p.at("sampling_period_s").get<double>();
    sc.phy.samples_per_packet = p.at("samples_per_packet").get<int>();
    sc.phy.rx_floor_dbm = p.at("rx_floor_dbm").get<double>();
    sc.phy.rx_ceiling_dbm = p.at("rx_ceiling_dbm").get<double>();
    sc.phy.rssi_quantum_db = p.at("rssi_quantum_db").get<double>();
    sc.phy.tx_accuracy_db = p.at("tx_accuracy_db").get<double>();
    sc.phy.rx_accuracy_db = p.at("rx_accuracy_db").get<double>();
    sc.phy.saturation_enabled = p.at("saturation_enabled").get<bool>();
    sc.phy.quantization_enabled = p.at("quantization_enabled").get<bool>();
    sc.phy.floor_clamp_enabled = p.at("floor_clamp_enabled").get<bool>();
    sc.phy.agc_overreaction_enabled = p.at("agc_overreaction_enabled").get<bool>();
    sc.phy.agc_suppression = p.at("agc_suppression").get<double>();
    sc.phy.agc_clip_headroom_db = p.at("agc_clip_headroom_db").get<double>();

    const json& c = resolved.at("capture");
    sc.capture.delta_cap_db = c.at("delta_cap_db").get<double>();
    sc.capture.logistic_width_db = c.at("logistic_width_db").get<double>();
    sc.capture.noise_floor_dbm = c.at("noise_floor_dbm").get<double>();
    sc.capture.snr_min_db = c.at("snr_min_db").get<double>();
    sc.capture.different_data_penalty_db = c.at("different_data_penalty_db").get<double>();

    const json& nz = resolved.at("noise");
    sc.noise.enabled = nz.at("enabled").get<bool>();
    sc.noise.tx_accuracy_db = nz.at("tx_accuracy_db").get<double>();
    sc.noise.rx_accuracy_db = nz.at("rx_accuracy_db").get<double>();
    sc.noise.jitter_sigma_db = nz.at("jitter_sigma_db").get<double>();

    sc.n_tx = resolved.at("round").at("n_tx").get<int>();
    sc.update_interval_rounds = resolved.at("round").at("update_interval_rounds").get<int>();
    sc.ige_passes = resolved.at("round").at("ige_passes").get<int>();
    for (double dbm : resolved.at("power_set_dbm").get<std::vector<double>>())
        sc.power_set_mw.push_back(dbm_to_mw(dbm));
    sc.min_adjust_mw = resolved.at("min_adjust_mw").get<double>();
    sc.seeds = resolved.at("seeds").get<std::vector<std::uint64_t>>();
    if (sc.seeds.empty()) throw InvalidInput("scenario: seed list must not be empty");

    const json& f = resolved.at("flood");
    for (const auto& s : f.at("schemes").get<std::vector<std::string>>())
        sc.flood.schemes.push_back(scenario_detail::scheme_from_string(s));
    sc.flood.rounds = f.at("rounds").get<long>();
    sc.flood.fixed_power_mw = f.at("fixed_power_mw").get<double>();
    sc.flood.bootstrap_power_mw = f.at("bootstrap_power_mw").get<double>();

    const json& sw = resolved.at("sweep_dp");
    sc.sweep_dp.values_mw = sw.at("values_mw").get<std::vector<double>>();
    sc.sweep_dp.processes = sw.at("processes").get<long>();
    for (double dbm : sw.at("base_cycle_dbm").get<std::vector<double>>())
        sc.sweep_dp.base_cycle_mw.push_back(dbm_to_mw(dbm));
    sc.sweep_dp.perfect_capture = sw.at("perfect_capture").get<bool>();

    const json& lin = resolved.at("linearity");
    sc.linearity.trials = lin.at("trials").get<long>();
    sc.linearity.max_senders = lin.at("max_senders").get<int>();
    sc.linearity.gain_db = lin.at("gain_db").get<double>();
    sc.linearity.tx_power_dbm = lin.at("tx_power_dbm").get<double>();
    sc.linearity.cfo_min_hz = lin.at("cfo_min_hz").get<double>();
    sc.linearity.cfo_max_hz = lin.at("cfo_max_hz").get<double>();
    sc.linearity.beat_cycles_us = lin.at("beat_cycles_us").get<std::vector<double>>();
    sc.linearity.saturation_sweep_dbm =
        lin.at("saturation_sweep_dbm").get<std::vector<double>>();

    const json& est = resolved.at("estimate");
    sc.estimate.count = est.at("count").get<long>();
    sc.estimate.n = est.at("n").get<int>();
    sc.estimate.base_mw = dbm_to_mw(est.at("base_dbm").get<double>());
    sc.estimate.delta_rel_min = est.at("delta_rel_min").get<double>();
    sc.estimate.delta_rel_max = est.at("delta_rel_max").get<double>();
    sc.estimate.noise_sigma_db = est.at("noise_sigma_db").get<double>();
    sc.estimate.h_db_min = est.at("h_db_min").get<double>();
    sc.estimate.h_db_max = est.at("h_db_max").get<double>();

    const json& cc = resolved.at("convergecast");
    sc.convergecast.channels = cc.at("channels").get<int>();
    sc.convergecast.trials = cc.at("trials").get<long>();
    sc.convergecast.tx_power_mw = dbm_to_mw(cc.at("tx_power_dbm").get<double>());
    sc.convergecast.sinr_floor_db = cc.at("sinr_floor_db").get<double>();
    sc.convergecast.estimate_from_bootstrap =
        cc.at("estimate_source").get<std::string>() == "bootstrap";

    const json& pp = resolved.at("p2p");
    for (const auto& pair : pp.at("pairs")) {
        if (!pair.is_array() || pair.size() != 2)
            throw InvalidInput("scenario: each p2p pair must be [tx, rx]");
        sc.p2p.pairs.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
    sc.p2p.initial_map_size = pp.at("initial_map_size").get<int>();
    sc.p2p.rounds = pp.at("rounds").get<long>();
    sc.p2p.thresholds.window_packets = pp.at("window_packets").get<int>();
    sc.p2p.thresholds.exclusion_loss_rate = pp.at("exclusion_loss_rate").get<double>();
    sc.p2p.thresholds.min_channels = pp.at("min_channels").get<int>();
    sc.p2p.tx_power_mw = dbm_to_mw(pp.at("tx_power_dbm").get<double>());
    sc.p2p.sinr_floor_db = pp.at("sinr_floor_db").get<double>();
    sc.p2p.estimate_from_bootstrap = pp.at("estimate_source").get<std::string>() == "bootstrap";

    const json& ov = resolved.at("overhead");
    sc.overhead.n_s = ov.at("n_s").get<int>();
    sc.overhead.n_r = ov.at("n_r").get<int>();
    sc.overhead.b = ov.at("b").get<int>();
    sc.overhead.hop_sizes = ov.at("hop_sizes").get<std::vector<int>>();

    return sc;
}

// Capture settings that never drop a packet; used where an experiment needs
// the link layer out of the way.
inline CaptureConfig reliable_capture(const CaptureConfig& base) {
    CaptureConfig c = base;
    c.delta_cap_db = -1e9;
    c.snr_min_db = -1e9;
    return c;
}

} // namespace igesim
