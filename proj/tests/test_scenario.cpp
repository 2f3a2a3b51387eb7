#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "igesim/errors.hpp"
#include "igesim/scenario.hpp"
#include "igesim/units.hpp"

using namespace igesim;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

// Run the packaged binary with the given arguments, capturing exit code and
// combined output.
RunResult run_cli(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "igesim_cli_test_output.txt";
    const std::string cmd = std::string(IGESIM_BIN) + " " + args + " > " + log.string() +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream buf;
    buf << in.rdbuf();
    res.output = buf.str();
    fs::remove(log);
    return res;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("igesim_scenario_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("default scenario parses into the documented operating point") {
    const Scenario sc = parse_scenario(default_scenario_json());
    CHECK(sc.name == "testbed19");
    CHECK(sc.topo_params.layout == Layout::Testbed19);
    CHECK(sc.topo_params.n == 19);
    CHECK(sc.topo_params.path_loss_exponent == 2.2);
    CHECK(sc.topology_seed == 7);
    CHECK(sc.capture.noise_floor_dbm == -72.0);
    CHECK(sc.noise.enabled);
    CHECK(sc.n_tx == 4);
    CHECK(sc.update_interval_rounds == 50);
    CHECK(sc.ige_passes == 3);
    REQUIRE(sc.power_set_mw.size() == 5);
    CHECK(sc.power_set_mw.front() == dbm_to_mw(-20.0));
    CHECK(sc.power_set_mw.back() == 1.0);
    CHECK(std::is_sorted(sc.power_set_mw.begin(), sc.power_set_mw.end()));
    CHECK(sc.min_adjust_mw == 0.4);
    CHECK(sc.seeds == std::vector<std::uint64_t>{42});
    REQUIRE(sc.flood.schemes.size() == 3);
    CHECK(sc.flood.schemes[0] == Scheme::OptimizedFlooding);
    CHECK(sc.flood.rounds == 3000);
    CHECK(sc.sweep_dp.values_mw == std::vector<double>{0.1, 0.2, 0.4, 0.8});
    REQUIRE(sc.sweep_dp.base_cycle_mw.size() == 3);
    CHECK(sc.sweep_dp.base_cycle_mw[2] == dbm_to_mw(-8.0));
    CHECK(sc.linearity.trials == 1000);
    CHECK(sc.linearity.beat_cycles_us == std::vector<double>{200.0, 240.0, 300.0, 400.0});
    CHECK(sc.estimate.count == 2000);
    CHECK(sc.estimate.base_mw == dbm_to_mw(-4.0));
    CHECK(sc.convergecast.channels == 37);
    CHECK(sc.convergecast.tx_power_mw == 1.0);
    CHECK(sc.convergecast.estimate_from_bootstrap);
    REQUIRE(sc.p2p.pairs.size() == 6);
    CHECK(sc.p2p.pairs.front() == std::pair<int, int>(7, 13));
    CHECK(sc.p2p.initial_map_size == 12);
    CHECK(sc.p2p.thresholds.window_packets == 20);
    CHECK(sc.overhead.n_s == 10);
    CHECK(sc.overhead.hop_sizes == std::vector<int>{3, 3, 3});
}

TEST_CASE("user documents override defaults field by field") {
    json file = {{"name", "custom"}, {"topology", {{"n", 7}, {"layout", "line"}}}};
    const json resolved = resolve_scenario(file, {});
    CHECK(resolved["name"] == "custom");
    CHECK(resolved["topology"]["n"] == 7);
    CHECK(resolved["topology"]["layout"] == "line");
    // Untouched siblings keep their defaults.
    CHECK(resolved["topology"]["spacing_m"] == 10.0);
    CHECK(resolved["round"]["n_tx"] == 4);

    // Command-line overrides outrank the file.
    const json forced = resolve_scenario(file, {"topology.n=9", "round.n_tx=2"});
    CHECK(forced["topology"]["n"] == 9);
    CHECK(forced["round"]["n_tx"] == 2);
}

TEST_CASE("overrides parse JSON values and fall back to strings") {
    json tree = default_scenario_json();
    apply_override(tree, "round.n_tx=8");
    CHECK(tree["round"]["n_tx"] == 8);
    apply_override(tree, "noise.enabled=false");
    CHECK(tree["noise"]["enabled"] == false);
    apply_override(tree, "power_set_dbm=[-10,0]");
    CHECK(tree["power_set_dbm"] == json::array({-10, 0}));
    apply_override(tree, "name=alternate");
    CHECK(tree["name"] == "alternate");
    apply_override(tree, "fresh.path=3"); // creates intermediate objects
    CHECK(tree["fresh"]["path"] == 3);

    CHECK_THROWS_AS(apply_override(tree, "no_equals_sign"), InvalidInput);
    CHECK_THROWS_AS(apply_override(tree, "=5"), InvalidInput);
    CHECK_THROWS_AS(apply_override(tree, "a..b=1"), InvalidInput);
}

TEST_CASE("a manifest round-trips to the identical resolved document") {
    const json resolved = resolve_scenario({{"name", "roundtrip"}}, {"round.ige_passes=2"});
    const json manifest = make_manifest("flood", resolved);
    CHECK(manifest["subcommand"] == "flood");
    REQUIRE(manifest.contains("scenario"));
    const json again = resolve_scenario(manifest, {});
    CHECK(again == resolved);
}

TEST_CASE("scheme and layout names map both ways") {
    using scenario_detail::scheme_from_string;
    using scenario_detail::scheme_name;
    for (Scheme s : {Scheme::OptimizedFlooding, Scheme::FloodingPlusIGE, Scheme::RandomPower,
                     Scheme::FixedPower})
        CHECK(scheme_from_string(scheme_name(s)) == s);
    CHECK_THROWS_AS(scheme_from_string("bogus"), InvalidInput);
    CHECK_THROWS_AS(scenario_detail::layout_from_string("ring"), InvalidInput);
}

TEST_CASE("reliable capture disables the decode thresholds only") {
    CaptureConfig base;
    base.noise_floor_dbm = -72.0;
    const CaptureConfig c = reliable_capture(base);
    CHECK(c.snr_min_db == -1e9);
    CHECK(c.delta_cap_db == -1e9);
    CHECK(c.noise_floor_dbm == -72.0);
    CHECK(c.logistic_width_db == base.logistic_width_db);
}

TEST_CASE("malformed scenarios are rejected with context") {
    json no_seeds = default_scenario_json();
    no_seeds["seeds"] = json::array();
    CHECK_THROWS_AS(parse_scenario(no_seeds), InvalidInput);

    json bad_pair = default_scenario_json();
    bad_pair["p2p"]["pairs"] = json::array({json::array({1, 2, 3})});
    CHECK_THROWS_AS(parse_scenario(bad_pair), InvalidInput);

    json bad_scheme = default_scenario_json();
    bad_scheme["flood"]["schemes"] = json::array({"warp"});
    CHECK_THROWS_AS(parse_scenario(bad_scheme), InvalidInput);
}

TEST_CASE("cli: overhead prints the exact counters and writes a manifest") {
    const fs::path out = fresh_dir("overhead");
    const RunResult res = run_cli("overhead --out " + out.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("O_our=486, O_other=252, T_our=0, T_other=10") !=
          std::string::npos);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "overhead.csv"));
    CHECK(fs::exists(out / "summary.json"));

    const json manifest = load_json_file((out / "manifest.json").string());
    CHECK(manifest["subcommand"] == "overhead");
    CHECK(manifest["scenario"]["overhead"]["b"] == 71);
    fs::remove_all(out);
}

TEST_CASE("cli: exit codes distinguish usage, config, and io failures") {
    CHECK(run_cli("frobnicate").exit_code == 2);          // unknown subcommand
    CHECK(run_cli("overhead --no-such-flag").exit_code == 2);
    const fs::path out = fresh_dir("exitcodes");
    CHECK(run_cli("overhead --scenario /nonexistent/path.json --out " + out.string())
              .exit_code == 4);                           // unreadable file
    CHECK(run_cli("overhead --set overhead.b=seventy --out " + out.string()).exit_code ==
          3);                                             // type error in config
    CHECK(run_cli("overhead --set overhead.b=0 --out " + out.string()).exit_code == 3);
    fs::remove_all(out);
}

TEST_CASE("cli: published scenario files resolve and parse") {
    for (const char* name : {"testbed19.json", "linearity_ideal.json", "sweep_dp.json",
                             "convergecast.json", "p2p_reset.json"}) {
        const fs::path path = fs::path(IGESIM_SCENARIO_DIR) / name;
        REQUIRE(fs::exists(path));
        const json resolved = resolve_scenario(load_json_file(path.string()), {});
        CHECK_NOTHROW(parse_scenario(resolved));
    }
}
