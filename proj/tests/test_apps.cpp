#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "igesim/apps.hpp"
#include "igesim/errors.hpp"
#include "igesim/linkmodel.hpp"
#include "igesim/units.hpp"

using namespace igesim;

namespace {

// Two parallel links (0 -> 1, 2 -> 3) with an adjustable cross-gain, the
// smallest fixture where grouping has a real decision to make.
InterferenceGraph parallel_pairs(double cross_gain) {
    InterferenceGraph g(4);
    g.gain(0, 1) = 1e-5;
    g.gain(2, 3) = 1e-5;
    g.gain(0, 3) = cross_gain;
    g.gain(2, 1) = cross_gain;
    return g;
}

const std::vector<double> kUnitPower = {1.0, 1.0, 1.0, 1.0};

Topology line_topology(int n) {
    TopologyParams params;
    params.layout = Layout::Line;
    params.n = n;
    params.shadowing_sigma_db = 0.0;
    return generate_topology(params, 1).first;
}

// Chain gains strong enough that a lone transmission always decodes.
InterferenceGraph chain_gains(int n) {
    InterferenceGraph g(n);
    for (int v = 0; v + 1 < n; ++v) {
        g.gain(v + 1, v) = 1e-6;
        g.gain(v, v + 1) = 1e-6;
    }
    return g;
}

} // namespace

TEST_CASE("admissibility: endpoint sharing disqualifies a set outright") {
    const InterferenceGraph g = parallel_pairs(1e-9);
    const std::vector<Link> links = {{0, 1}, {1, 3}, {2, 3}, {0, 3}};
    // Shared sender-side node 1 / receiver 3 / sender==receiver collisions.
    CHECK_FALSE(apps_detail::group_admissible(g, links, {0, 1}, -100.0, kUnitPower, 1e-10));
    CHECK_FALSE(apps_detail::group_admissible(g, links, {1, 2}, -100.0, kUnitPower, 1e-10));
    CHECK_FALSE(apps_detail::group_admissible(g, links, {2, 3}, -100.0, kUnitPower, 1e-10));
}

TEST_CASE("admissibility: the SINR floor decides disjoint sets") {
    const std::vector<Link> links = {{0, 1}, {2, 3}};
    // Cross-gain -90 dB: SINR = -50 - 10log10(1e-9 + 1e-10) ~ 39.6 dB.
    CHECK(apps_detail::group_admissible(parallel_pairs(1e-9), links, {0, 1}, 10.0, kUnitPower,
                                        1e-10));
    // Cross-gain as strong as the desired link: SINR ~ 0 dB.
    CHECK_FALSE(apps_detail::group_admissible(parallel_pairs(1e-5), links, {0, 1}, 10.0,
                                              kUnitPower, 1e-10));
    // A missing cross-link counts as zero interference.
    InterferenceGraph isolated(4);
    isolated.gain(0, 1) = 1e-5;
    isolated.gain(2, 3) = 1e-5;
    CHECK(apps_detail::group_admissible(isolated, links, {0, 1}, 10.0, kUnitPower, 1e-10));
    // Each link alone still answers to the floor.
    InterferenceGraph weak(4);
    weak.gain(0, 1) = 1e-12; // -120 dBm received vs -100 dBm noise
    CHECK_FALSE(apps_detail::group_admissible(weak, {{0, 1}}, {0}, 10.0, kUnitPower, 1e-10));
}

TEST_CASE("subset search walks k-combinations in lexicographic order") {
    // Three links where only {0, 2} is admissible as a pair: link 1 shares a
    // node with link 0 and battles link 2's receiver.
    InterferenceGraph g(6);
    g.gain(0, 1) = 1e-5;
    g.gain(1, 2) = 1e-5;
    g.gain(4, 5) = 1e-5;
    const std::vector<Link> links = {{0, 1}, {1, 2}, {4, 5}};
    const std::vector<double> powers(6, 1.0);
    std::vector<int> out;
    REQUIRE(apps_detail::first_admissible_subset(g, links, {0, 1, 2}, 2, 10.0, powers,
                                                 1e-10, out));
    CHECK(out == std::vector<int>{0, 2});
    // Asking for all three can't work: 0 and 1 share node 1.
    CHECK_FALSE(apps_detail::first_admissible_subset(g, links, {0, 1, 2}, 3, 10.0, powers,
                                                     1e-10, out));
}

TEST_CASE("grouping merges compatible links and isolates the rest") {
    const std::vector<Link> links = {{0, 1}, {2, 3}};

    const auto merged = group_links(parallel_pairs(1e-9), links, 10.0, kUnitPower);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].members == links);

    const auto split = group_links(parallel_pairs(1e-5), links, 10.0, kUnitPower);
    REQUIRE(split.size() == 2);
    CHECK(split[0].members == std::vector<Link>{{0, 1}});
    CHECK(split[1].members == std::vector<Link>{{2, 3}});

    // A link too weak to pass even alone still lands in a group of its own.
    InterferenceGraph weak = parallel_pairs(1e-9);
    weak.gain(0, 1) = 1e-12;
    const auto kept = group_links(weak, links, 10.0, kUnitPower);
    REQUIRE(kept.size() == 2);
    std::size_t members = 0;
    for (const auto& grp : kept) members += grp.members.size();
    CHECK(members == links.size());
}

TEST_CASE("grouping validates its inputs") {
    const InterferenceGraph g = parallel_pairs(1e-9);
    CHECK_THROWS_AS(group_links(g, std::vector<Link>(21, Link{0, 1}), 10.0, kUnitPower),
                    InvalidInput);
    CHECK_THROWS_AS(group_links(g, {{0, 1}}, 10.0, {1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(group_links(g, {{0, 2}}, 10.0, kUnitPower), InvalidInput); // no gain
    CHECK_THROWS_AS(group_links(g, {{0, 0}}, 10.0, kUnitPower), InvalidInput);
    CHECK_THROWS_AS(group_links(g, {{0, 7}}, 10.0, kUnitPower), InvalidInput);
}

TEST_CASE("channel allocation splits the band evenly with remainder first") {
    std::vector<LinkGroup> groups(3);
    const auto sets = allocate_channels(groups, 37);
    REQUIRE(sets.size() == 3);
    CHECK(sets[0].size() == 13);
    CHECK(sets[1].size() == 12);
    CHECK(sets[2].size() == 12);
    std::vector<int> all;
    for (const auto& s : sets) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    for (int c = 0; c < 37; ++c) REQUIRE(all[static_cast<std::size_t>(c)] == c);

    CHECK_THROWS_AS(allocate_channels({}, 37), AllocationError);
    CHECK_THROWS_AS(allocate_channels(std::vector<LinkGroup>(3), 2), AllocationError);
}

TEST_CASE("convergecast drains a clean chain completely") {
    const Topology tree = line_topology(3);
    const InterferenceGraph truth = chain_gains(3);

    const ConvergecastResult base =
        simulate_convergecast(tree, truth, truth, ConvergecastScheme::Baseline, 37, 50, 5);
    CHECK(base.success_prob == 1.0);
    REQUIRE(base.collected.size() == 50);
    for (double c : base.collected) CHECK(c == 1.0);
    CHECK(base.channel_sets.empty());

    const ConvergecastResult ige =
        simulate_convergecast(tree, truth, truth, ConvergecastScheme::IgeBased, 37, 50, 5);
    CHECK(ige.success_prob == 1.0);
    // Adjacent chain links share a node, so they cannot group together.
    REQUIRE(ige.groups.size() == 2);
    REQUIRE(ige.channel_sets.size() == 2);
    CHECK(ige.channel_sets[0].size() + ige.channel_sets[1].size() == 37);
}

TEST_CASE("convergecast is reproducible and validates its inputs") {
    const Topology tree = line_topology(3);
    const InterferenceGraph truth = chain_gains(3);
    const ConvergecastResult a =
        simulate_convergecast(tree, truth, truth, ConvergecastScheme::Baseline, 4, 200, 9);
    const ConvergecastResult b =
        simulate_convergecast(tree, truth, truth, ConvergecastScheme::Baseline, 4, 200, 9);
    CHECK(a.success_prob == b.success_prob);
    CHECK(a.collected == b.collected);

    CHECK_THROWS_AS(simulate_convergecast(tree, truth, truth, ConvergecastScheme::Baseline, 0,
                                          10, 1),
                    InvalidInput);
    CHECK_THROWS_AS(simulate_convergecast(tree, truth, truth, ConvergecastScheme::Baseline, 4,
                                          0, 1),
                    InvalidInput);
    const Topology big = line_topology(64);
    const InterferenceGraph big_truth = chain_gains(64);
    CHECK_THROWS_AS(simulate_convergecast(big, big_truth, big_truth,
                                          ConvergecastScheme::Baseline, 4, 10, 1),
                    InvalidInput);
}

TEST_CASE("channel map: windowed exclusion, clamped index, reset") {
    const AfhThresholds th{0.5, 3, 2};
    ChannelMap map;
    map.available = {0, 1, 2};
    map.increment = 1;

    // No verdict until the window is full; then strictly-above-rate trips it.
    CHECK_FALSE(map.record(1, true, th));
    CHECK_FALSE(map.record(1, true, th));
    CHECK(map.record(1, true, th)); // 3/3
    CHECK_FALSE(map.record(2, true, th));
    CHECK_FALSE(map.record(2, false, th));
    CHECK_FALSE(map.record(2, false, th)); // 1/3 under the rate
    // Rolling window: the oldest loss falls out.
    CHECK_FALSE(map.record(2, true, th));  // window now {false, false, true}

    // Exactly at the rate is not enough.
    const AfhThresholds even{0.5, 4, 2};
    ChannelMap map2;
    map2.available = {0};
    CHECK_FALSE(map2.record(0, true, even));
    CHECK_FALSE(map2.record(0, false, even));
    CHECK_FALSE(map2.record(0, true, even));
    CHECK_FALSE(map2.record(0, false, even)); // 2/4 == rate

    map.index = 2;
    map.exclude(1);
    CHECK(map.available == std::vector<int>{0, 2});
    CHECK(map.index == 0); // clamped into the shrunken map
    map.reset({0, 1, 2});
    CHECK(map.available == std::vector<int>{0, 1, 2});
    CHECK(map.index == 0);

    map.index = 0;
    map.increment = 3;
    map.hop();
    CHECK(map.index == 0); // (0 + 3) mod 3
    map.increment = 5;
    map.hop();
    CHECK(map.index == 2);
    CHECK(map.current() == 2);
}

TEST_CASE("isolated pairs never lose packets or reset") {
    InterferenceGraph truth(4);
    truth.gain(0, 1) = 1e-5;
    truth.gain(2, 3) = 1e-5;
    const std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}};
    const AfhThresholds th;

    const P2pResult res =
        simulate_p2p_afh(truth, truth, pairs, AfhScheme::Traditional, 12, 300, th, 3);
    REQUIRE(res.pdr.size() == 2);
    CHECK(res.pdr[0] == 1.0);
    CHECK(res.pdr[1] == 1.0);
    CHECK(res.resets.empty());
    for (const auto& trace : res.loss_trace) {
        REQUIRE(trace.size() == 300);
        CHECK(trace.back() == 0);
    }
    // Traditional hopping starts from the full shared map.
    std::vector<int> full(12);
    for (int c = 0; c < 12; ++c) full[static_cast<std::size_t>(c)] = c;
    for (const auto& m : res.initial_maps) CHECK(m == full);
}

TEST_CASE("interference-aware hopping partitions the initial maps") {
    // Cross gains as strong as the desired links: the pairs must not share
    // channels, so each starts from its own half of the band.
    const InterferenceGraph truth = parallel_pairs(1e-5);
    const std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}};
    const P2pResult res = simulate_p2p_afh(truth, truth, pairs, AfhScheme::IgeAssisted, 12,
                                           200, AfhThresholds{}, 3);
    REQUIRE(res.initial_maps.size() == 2);
    CHECK(res.initial_maps[0].size() == 6);
    CHECK(res.initial_maps[1].size() == 6);
    std::vector<int> all = res.initial_maps[0];
    all.insert(all.end(), res.initial_maps[1].begin(), res.initial_maps[1].end());
    std::sort(all.begin(), all.end());
    for (int c = 0; c < 12; ++c) REQUIRE(all[static_cast<std::size_t>(c)] == c);
    // Disjoint maps mean the pairs never collide at all.
    CHECK(res.pdr[0] == 1.0);
    CHECK(res.pdr[1] == 1.0);
}

TEST_CASE("hopping campaigns are reproducible") {
    const InterferenceGraph truth = parallel_pairs(1e-5);
    const std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}};
    const P2pResult a = simulate_p2p_afh(truth, truth, pairs, AfhScheme::Traditional, 12, 400,
                                         AfhThresholds{}, 8);
    const P2pResult b = simulate_p2p_afh(truth, truth, pairs, AfhScheme::Traditional, 12, 400,
                                         AfhThresholds{}, 8);
    CHECK(a.pdr == b.pdr);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.resets == b.resets);
    // Cumulative traces never decrease, and the final count matches the PDR.
    for (std::size_t i = 0; i < a.loss_trace.size(); ++i) {
        const auto& trace = a.loss_trace[i];
        for (std::size_t r = 1; r < trace.size(); ++r) REQUIRE(trace[r] >= trace[r - 1]);
        CHECK(a.pdr[i] == 1.0 - static_cast<double>(trace.back()) / 400.0);
    }
}

TEST_CASE("point-to-point hopping validates its inputs") {
    const InterferenceGraph truth = parallel_pairs(1e-9);
    const AfhThresholds th; // min_channels = 2
    CHECK_THROWS_AS(simulate_p2p_afh(truth, truth, {}, AfhScheme::Traditional, 12, 10, th, 1),
                    InvalidInput);
    CHECK_THROWS_AS(simulate_p2p_afh(truth, truth, {{0, 1}}, AfhScheme::Traditional, 1, 10,
                                     th, 1),
                    InvalidInput);
    CHECK_THROWS_AS(simulate_p2p_afh(truth, truth, {{0, 9}}, AfhScheme::Traditional, 12, 10,
                                     th, 1),
                    InvalidInput);
    CHECK_THROWS_AS(simulate_p2p_afh(truth, truth, {{0, 1}, {1, 2}}, AfhScheme::Traditional,
                                     12, 10, th, 1),
                    InvalidInput);
    CHECK_THROWS_AS(simulate_p2p_afh(truth, truth, {{0, 2}}, AfhScheme::Traditional, 12, 10,
                                     th, 1),
                    InvalidInput); // no gain for the pair
}
