#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "igesim/errors.hpp"
#include "igesim/linkmodel.hpp"
#include "igesim/rng.hpp"
#include "igesim/units.hpp"

using namespace igesim;

TEST_CASE("interference graph starts unknown and stores symmetric entries on demand") {
    InterferenceGraph g(3);
    CHECK(g.n == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK_FALSE(g.has(i, j));
    g.gain(0, 2) = 1e-6;
    CHECK(g.has(0, 2));
    CHECK_FALSE(g.has(2, 0));
    CHECK(g.gain_db(0, 2) == Catch::Approx(-60.0));
}

TEST_CASE("testbed layout places 19 nodes in three hop columns") {
    TopologyParams p;
    p.layout = Layout::Testbed19;
    p.spacing_m = 10.0;
    p.row_spacing_m = 2.0;
    auto [topo, truth] = generate_topology(p, 7);

    REQUIRE(topo.n() == 19);
    CHECK(topo.hops() == 3);
    CHECK(topo.hop_of[0] == 0);
    for (int v = 1; v <= 6; ++v) CHECK(topo.hop_of[static_cast<std::size_t>(v)] == 1);
    for (int v = 7; v <= 12; ++v) CHECK(topo.hop_of[static_cast<std::size_t>(v)] == 2);
    for (int v = 13; v <= 18; ++v) CHECK(topo.hop_of[static_cast<std::size_t>(v)] == 3);

    // Initiator centered on the column, columns one hop-spacing apart.
    CHECK(topo.positions[0][0] == 0.0);
    CHECK(topo.positions[0][1] == Catch::Approx(5.0));
    CHECK(topo.positions[1][0] == Catch::Approx(10.0));
    CHECK(topo.positions[1][1] == Catch::Approx(0.0));
    CHECK(topo.positions[18][0] == Catch::Approx(30.0));
    CHECK(topo.positions[18][1] == Catch::Approx(10.0));

    const auto by_hop = topo.nodes_by_hop();
    REQUIRE(by_hop.size() == 4);
    CHECK(by_hop[0] == std::vector<int>{0});
    CHECK(by_hop[1].size() == 6);
    CHECK(by_hop[2].size() == 6);
    CHECK(by_hop[3].size() == 6);
}

TEST_CASE("testbed tree follows the deployed parent rule") {
    TopologyParams p;
    p.layout = Layout::Testbed19;
    auto [topo, truth] = generate_topology(p, 7);

    CHECK(topo.parent[0] == -1);
    for (int v = 1; v <= 6; ++v) CHECK(topo.parent[static_cast<std::size_t>(v)] == 0);
    // Even column-h nodes adopt nodes i+5 and i+6 of the next column.
    CHECK(topo.parent[7] == 2);
    CHECK(topo.parent[8] == 2);
    CHECK(topo.parent[9] == 4);
    CHECK(topo.parent[10] == 4);
    CHECK(topo.parent[11] == 6);
    CHECK(topo.parent[12] == 6);
    CHECK(topo.parent[13] == 8);
    CHECK(topo.parent[14] == 8);
    CHECK(topo.parent[15] == 10);
    CHECK(topo.parent[16] == 10);
    CHECK(topo.parent[17] == 12);
    CHECK(topo.parent[18] == 12);

    CHECK(topo.children[8] == std::vector<int>{13, 14});
    CHECK(topo.children[0] == std::vector<int>{1, 2, 3, 4, 5, 6});
    for (int v = 13; v <= 18; ++v) CHECK(topo.children[static_cast<std::size_t>(v)].empty());
}

TEST_CASE("line and grid layouts hop as expected") {
    TopologyParams line;
    line.layout = Layout::Line;
    line.n = 5;
    auto [lt, lg] = generate_topology(line, 1);
    REQUIRE(lt.n() == 5);
    for (int v = 0; v < 5; ++v) {
        CHECK(lt.hop_of[static_cast<std::size_t>(v)] == v);
        CHECK(lt.parent[static_cast<std::size_t>(v)] == v - 1);
    }

    TopologyParams grid;
    grid.layout = Layout::Grid;
    grid.n = 9;
    auto [gt, gg] = generate_topology(grid, 1);
    REQUIRE(gt.n() == 9);
    CHECK(gt.hops() == 2);
    // Hops follow the Chebyshev ring around the corner initiator.
    CHECK(gt.hop_of[0] == 0);
    CHECK(gt.hop_of[4] == 1);  // (1,1)
    CHECK(gt.hop_of[8] == 2);  // (2,2)
    CHECK(gt.parent[0] == -1);
    const auto by_hop = gt.nodes_by_hop();
    CHECK(by_hop[1].size() == 3);
    CHECK(by_hop[2].size() == 5);
}

TEST_CASE("zero-shadowing gains reproduce the log-distance law") {
    TopologyParams p;
    p.layout = Layout::Line;
    p.n = 4;
    p.spacing_m = 10.0;
    p.path_loss_exponent = 2.2;
    p.ref_gain_db_at_1m = -40.0;
    p.shadowing_sigma_db = 0.0;
    auto [topo, g] = generate_topology(p, 123);

    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i == j) continue;
            const double dist = std::abs(i - j) * 10.0;
            const double expected = -40.0 - 10.0 * 2.2 * std::log10(dist);
            CHECK(g.gain_db(i, j) == Catch::Approx(expected).margin(1e-12));
        }
    }
}

TEST_CASE("gains cap at unity for very short links") {
    TopologyParams p;
    p.layout = Layout::Line;
    p.n = 2;
    p.spacing_m = 1.0;
    p.ref_gain_db_at_1m = 10.0; // would exceed 0 dB at one meter
    p.shadowing_sigma_db = 0.0;
    auto [topo, g] = generate_topology(p, 1);
    CHECK(g.gain(0, 1) == 1.0);
}

TEST_CASE("shadowing is reciprocal and seed-deterministic") {
    TopologyParams p;
    p.layout = Layout::Testbed19;
    p.shadowing_sigma_db = 3.0;
    auto [t1, g1] = generate_topology(p, 42);
    auto [t2, g2] = generate_topology(p, 42);
    auto [t3, g3] = generate_topology(p, 43);

    int diffs = 0;
    for (int i = 0; i < g1.n; ++i) {
        for (int j = 0; j < g1.n; ++j) {
            if (i == j) continue;
            CHECK(g1.gain(i, j) == g1.gain(j, i)); // reciprocity, exact
            REQUIRE(g1.gain(i, j) == g2.gain(i, j));
            if (g1.gain(i, j) != g3.gain(i, j)) ++diffs;
        }
    }
    CHECK(diffs > 0);
}

TEST_CASE("path-loss exponent is validated") {
    TopologyParams p;
    p.path_loss_exponent = 1.2;
    CHECK_THROWS_AS(generate_topology(p, 1), InvalidInput);
    p.path_loss_exponent = 6.5;
    CHECK_THROWS_AS(generate_topology(p, 1), InvalidInput);
}

TEST_CASE("capture success probability is the logistic law") {
    CHECK(capture_success_probability(3.0, 3.0, 1.0) == Catch::Approx(0.5));
    CHECK(capture_success_probability(4.0, 3.0, 1.0) ==
          Catch::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(capture_success_probability(53.0, 3.0, 1.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(capture_success_probability(-47.0, 3.0, 1.0) == Catch::Approx(0.0).margin(1e-12));
    // Width scales the transition.
    CHECK(capture_success_probability(5.0, 3.0, 2.0) ==
          Catch::Approx(capture_success_probability(4.0, 3.0, 1.0)));
}

TEST_CASE("single-sender reception clears the SNR threshold") {
    CaptureConfig cap;
    cap.noise_floor_dbm = -100.0;
    cap.snr_min_db = 5.0;
    Rng rng(1);

    // -40 dBm over a -100 dBm floor: 60 dB margin, always decodes.
    for (int i = 0; i < 200; ++i) {
        const PacketOutcome out = receive_outcome({{4, dbm_to_mw(-40.0)}}, true, cap, rng);
        REQUIRE(out.received);
        CHECK(out.dominant_sender == 4);
        CHECK(out.power_delta_db == Catch::Approx(60.0).margin(1e-9));
    }
    // 40 dB below the floor: never decodes.
    for (int i = 0; i < 200; ++i)
        REQUIRE_FALSE(receive_outcome({{4, dbm_to_mw(-140.0)}}, true, cap, rng).received);
}

TEST_CASE("capture picks the strongest sender against the residual") {
    CaptureConfig cap;
    cap.noise_floor_dbm = -100.0;
    Rng rng(1);

    const double strong = dbm_to_mw(-40.0);
    const double weak = dbm_to_mw(-70.0);
    const PacketOutcome out = receive_outcome({{9, weak}, {3, strong}}, true, cap, rng);
    CHECK(out.dominant_sender == 3);
    const double expected_delta =
        mw_to_dbm(strong) - mw_to_dbm(weak + dbm_to_mw(-100.0));
    CHECK(out.power_delta_db == Catch::Approx(expected_delta).margin(1e-9));
    CHECK(out.received); // ~30 dB over the 3 dB capture threshold

    // Equal contributions: the tie goes to the lower sender id.
    const PacketOutcome tie = receive_outcome({{6, strong}, {2, strong}}, true, cap, rng);
    CHECK(tie.dominant_sender == 2);
    CHECK(tie.power_delta_db < 0.0); // parity: the other sender is equal power
}

TEST_CASE("different payloads deepen the required capture margin") {
    CaptureConfig cap;
    cap.noise_floor_dbm = -100.0;
    cap.delta_cap_db = 3.0;
    cap.different_data_penalty_db = 3.0;
    cap.logistic_width_db = 1.0;

    // Power delta pinned between the two thresholds: same-data succeeds
    // almost surely, different-data almost never (4.5 dB sits 1.5 widths
    // from each, logistic(+-1.5) ~ 0.82/0.18) - compare frequencies.
    const double delta_target = 4.5;
    const double strong = dbm_to_mw(-40.0);
    const double rest = dbm_to_mw(-40.0 - delta_target) - dbm_to_mw(-100.0);
    Rng rng(2);
    int same_ok = 0, diff_ok = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) {
        if (receive_outcome({{0, strong}, {1, rest}}, true, cap, rng).received) ++same_ok;
        if (receive_outcome({{0, strong}, {1, rest}}, false, cap, rng).received) ++diff_ok;
    }
    const double p_same = capture_success_probability(delta_target, 3.0, 1.0);
    const double p_diff = capture_success_probability(delta_target, 6.0, 1.0);
    CHECK(static_cast<double>(same_ok) / trials == Catch::Approx(p_same).margin(0.02));
    CHECK(static_cast<double>(diff_ok) / trials == Catch::Approx(p_diff).margin(0.02));
}

TEST_CASE("receive_outcome rejects an empty contribution list") {
    CaptureConfig cap;
    Rng rng(1);
    CHECK_THROWS_AS(receive_outcome({}, true, cap, rng), InvalidInput);
}

TEST_CASE("channel similarity is the top-two incoming gain gap") {
    InterferenceGraph g(4);
    g.gain(0, 3) = db_to_gain(-50.0);
    g.gain(1, 3) = db_to_gain(-58.0);
    g.gain(2, 3) = db_to_gain(-71.0);
    CHECK(channel_similarity(g, 3) == Catch::Approx(8.0).margin(1e-9));

    InterferenceGraph sparse(4);
    sparse.gain(0, 3) = db_to_gain(-50.0);
    CHECK_THROWS_AS(channel_similarity(sparse, 3), InvalidInput);
}
