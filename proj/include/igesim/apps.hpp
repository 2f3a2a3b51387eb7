#pragma once

// Two consumers of an estimated interference graph. The first schedules a
// convergecast: directed links are packed into groups whose members tolerate
// each other (every receiver keeps SINR above a floor when the whole group
// transmits at once), each group gets a private slice of the channel space,
// and concurrent transfers then only ever share a channel with links that
// were proven compatible. The second drives adaptive frequency hopping for
// independent point-to-point pairs: traditionally every pair hops over one
// shared map and discovers conflicts by blacklisting lossy channels at run
// time; with the graph available, mutually interfering pairs are separated
// into disjoint channel allocations up front and the same AFH machinery runs
// inside each allocation.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linkmodel.hpp"
#include "rng.hpp"
#include "units.hpp"

namespace igesim {

struct Link {
    int sender = -1;
    int receiver = -1;
    bool operator==(const Link& other) const {
        return sender == other.sender && receiver == other.receiver;
    }
};

struct LinkGroup {
    std::vector<Link> members; // in input order
    double sinr_floor_db = 0.0;
};

namespace apps_detail {

// A group is admissible when its links are pairwise endpoint-disjoint (a node
// cannot serve two links in one slot) and every member's SINR under full
// co-group activity clears the floor. A missing cross-gain counts as zero
// interference: the pair is simply out of range of each other.
inline bool group_admissible(const InterferenceGraph& graph, const std::vector<Link>& links,
                             const std::vector<int>& member_idx, double sinr_floor_db,
                             const std::vector<double>& tx_powers_mw, double noise_floor_mw) {
    for (std::size_t a = 0; a < member_idx.size(); ++a) {
        const Link& la = links[static_cast<std::size_t>(member_idx[a])];
        for (std::size_t b = a + 1; b < member_idx.size(); ++b) {
            const Link& lb = links[static_cast<std::size_t>(member_idx[b])];
            if (la.sender == lb.sender || la.receiver == lb.receiver ||
                la.sender == lb.receiver || la.receiver == lb.sender)
                return false;
        }
    }
    for (std::size_t a = 0; a < member_idx.size(); ++a) {
        const Link& la = links[static_cast<std::size_t>(member_idx[a])];
        double interference = noise_floor_mw;
        for (std::size_t b = 0; b < member_idx.size(); ++b) {
            if (b == a) continue;
            const Link& lb = links[static_cast<std::size_t>(member_idx[b])];
            if (graph.has(lb.sender, la.receiver))
                interference += graph.gain(lb.sender, la.receiver) *
                                tx_powers_mw[static_cast<std::size_t>(lb.sender)];
        }
        const double desired = graph.gain(la.sender, la.receiver) *
                               tx_powers_mw[static_cast<std::size_t>(la.sender)];
        if (10.0 * std::log10(desired / interference) < sinr_floor_db) return false;
    }
    return true;
}

// First admissible k-subset of `pool` in lexicographic order, if any.
inline bool first_admissible_subset(const InterferenceGraph& graph,
                                    const std::vector<Link>& links,
                                    const std::vector<int>& pool, std::size_t k,
                                    double sinr_floor_db,
                                    const std::vector<double>& tx_powers_mw,
                                    double noise_floor_mw, std::vector<int>& out) {
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    for (;;) {
        out.clear();
        for (std::size_t i : pick) out.push_back(pool[i]);
        if (group_admissible(graph, links, out, sinr_floor_db, tx_powers_mw, noise_floor_mw))
            return true;
        // advance to the next k-combination
        std::size_t i = k;
        while (i-- > 0) {
            if (pick[i] + (k - i) < pool.size()) {
                ++pick[i];
                for (std::size_t j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0) return false;
        }
    }
}

} // namespace apps_detail

// Greedy grouping: repeatedly extract the largest admissible set of ungrouped
// links (ties resolved by lexicographic link order) until none remain. The
// per-step search is exhaustive, which caps the practical link count.
inline std::vector<LinkGroup> group_links(const InterferenceGraph& graph,
                                          const std::vector<Link>& links,
                                          double sinr_floor_db,
                                          const std::vector<double>& tx_powers_mw,
                                          double noise_floor_mw = 1e-10) {
    if (links.size() > 20)
        throw InvalidInput("group_links: exhaustive grouping is limited to 20 links");
    if (tx_powers_mw.size() != static_cast<std::size_t>(graph.n))
        throw InvalidInput("group_links: tx power list must cover every node");
    for (const Link& l : links) {
        if (l.sender < 0 || l.sender >= graph.n || l.receiver < 0 || l.receiver >= graph.n ||
            l.sender == l.receiver || !graph.has(l.sender, l.receiver))
            throw InvalidInput("group_links: link (" + std::to_string(l.sender) + " -> " +
                               std::to_string(l.receiver) + ") not present in the graph");
    }

    std::vector<int> pool(links.size());
    for (std::size_t i = 0; i < links.size(); ++i) pool[i] = static_cast<int>(i);

    std::vector<LinkGroup> groups;
    std::vector<int> chosen;
    while (!pool.empty()) {
        bool found = false;
        for (std::size_t k = pool.size(); k >= 1 && !found; --k)
            found = apps_detail::first_admissible_subset(graph, links, pool, k, sinr_floor_db,
                                                         tx_powers_mw, noise_floor_mw, chosen);
        // A link too weak to clear the floor even alone still needs a slot of
        // its own; grouping must terminate regardless.
        if (!found) chosen.assign(1, pool.front());
        LinkGroup group;
        group.sinr_floor_db = sinr_floor_db;
        for (int idx : chosen) group.members.push_back(links[static_cast<std::size_t>(idx)]);
        groups.push_back(std::move(group));
        std::vector<int> rest;
        for (int idx : pool)
            if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end())
                rest.push_back(idx);
        pool = std::move(rest);
    }
    return groups;
}

// Contiguous even split of the channel space; the remainder goes one channel
// per group starting from the first. Disjoint by construction, union covers
// every channel.
inline std::vector<std::vector<int>> allocate_channels(const std::vector<LinkGroup>& groups,
                                                       int total_channels) {
    const int g = static_cast<int>(groups.size());
    if (g == 0) throw AllocationError("allocate_channels: no groups");
    if (total_channels < g)
        throw AllocationError("allocate_channels: more groups than channels");
    const int base = total_channels / g;
    const int remainder = total_channels % g;
    std::vector<std::vector<int>> sets(static_cast<std::size_t>(g));
    int next = 0;
    for (int i = 0; i < g; ++i) {
        const int count = base + (i < remainder ? 1 : 0);
        for (int c = 0; c < count; ++c) sets[static_cast<std::size_t>(i)].push_back(next++);
    }
    return sets;
}

enum class ConvergecastScheme { Baseline, IgeBased };

struct ConvergecastOptions {
    double tx_power_mw = 1.0;
    double sinr_floor_db = 10.0;
    double noise_floor_mw = 1e-10;
    CaptureConfig capture;
};

struct ConvergecastResult {
    double success_prob = 0.0;        // all data reached the root
    std::vector<double> collected;    // per trial: fraction of nodes gathered
    std::vector<std::vector<int>> channel_sets; // per group (IgeBased only)
    std::vector<LinkGroup> groups;
};

// Leaf-to-root collection without retransmissions. Hops drain farthest first;
// within a drain step every parent polls its k-th child simultaneously, so
// concurrency is cross-parent only. Each transmitter picks a channel per
// packet — Baseline from the shared pool, IgeBased from its link's group
// allocation — and co-channel transfers are resolved by the capture model
// with different payloads. A transfer only counts if the decoded packet is
// the one the parent was polling for.
inline ConvergecastResult simulate_convergecast(const Topology& tree,
                                                const InterferenceGraph& truth,
                                                const InterferenceGraph& estimated,
                                                ConvergecastScheme scheme, int total_channels,
                                                long trials, std::uint64_t seed,
                                                const ConvergecastOptions& opts = {}) {
    const int n = tree.n();
    if (n < 2 || n > 63) throw InvalidInput("convergecast: node count must be in [2, 63]");
    if (total_channels < 1) throw InvalidInput("convergecast: need >= 1 channel");
    if (trials < 1) throw InvalidInput("convergecast: need >= 1 trial");

    std::vector<Link> links;
    const auto by_hop = tree.nodes_by_hop();
    for (int h = tree.hops(); h >= 1; --h)
        for (int v : by_hop[static_cast<std::size_t>(h)])
            links.push_back(Link{v, tree.parent[static_cast<std::size_t>(v)]});

    ConvergecastResult result;
    std::vector<int> group_of(links.size(), 0);
    if (scheme == ConvergecastScheme::IgeBased) {
        const std::vector<double> powers(static_cast<std::size_t>(n), opts.tx_power_mw);
        result.groups = group_links(estimated, links, opts.sinr_floor_db, powers,
                                    opts.noise_floor_mw);
        result.channel_sets = allocate_channels(result.groups, total_channels);
        for (std::size_t i = 0; i < links.size(); ++i)
            for (std::size_t g = 0; g < result.groups.size(); ++g)
                if (std::find(result.groups[g].members.begin(), result.groups[g].members.end(),
                              links[i]) != result.groups[g].members.end())
                    group_of[i] = static_cast<int>(g);
    }

    // The drain schedule is fixed across trials: for each hop (deepest first),
    // parents poll their children in index order; slot t of that drain step
    // carries every parent's t-th child.
    std::vector<std::vector<std::size_t>> slots;
    for (int h = tree.hops(); h >= 1; --h) {
        std::size_t max_children = 0;
        for (int p : by_hop[static_cast<std::size_t>(h - 1)])
            max_children = std::max(max_children,
                                    tree.children[static_cast<std::size_t>(p)].size());
        for (std::size_t t = 0; t < max_children; ++t) {
            std::vector<std::size_t> slot;
            for (int p : by_hop[static_cast<std::size_t>(h - 1)]) {
                const auto& kids = tree.children[static_cast<std::size_t>(p)];
                if (t >= kids.size()) continue;
                const Link want{kids[t], p};
                for (std::size_t i = 0; i < links.size(); ++i)
                    if (links[i] == want) slot.push_back(i);
            }
            if (!slot.empty()) slots.push_back(std::move(slot));
        }
    }

    Rng rng(seed);
    const int root = by_hop.front().front();
    long successes = 0;
    result.collected.reserve(static_cast<std::size_t>(trials));
    const std::uint64_t all_mask = (static_cast<std::uint64_t>(1) << n) - 1;
    std::vector<std::uint64_t> data(static_cast<std::size_t>(n));
    std::vector<int> channel(links.size());
    std::vector<std::pair<int, double>> contribs;
    for (long trial = 0; trial < trials; ++trial) {
        for (int v = 0; v < n; ++v)
            data[static_cast<std::size_t>(v)] = static_cast<std::uint64_t>(1) << v;
        for (const auto& slot : slots) {
            for (std::size_t i : slot) {
                if (scheme == ConvergecastScheme::Baseline) {
                    channel[i] = static_cast<int>(rng.uniform_int(
                        static_cast<std::uint64_t>(total_channels)));
                } else {
                    const auto& set =
                        result.channel_sets[static_cast<std::size_t>(group_of[i])];
                    channel[i] = set[rng.uniform_int(set.size())];
                }
            }
            for (std::size_t i : slot) {
                const Link& link = links[i];
                contribs.clear();
                for (std::size_t j : slot) {
                    const Link& other = links[j];
                    if (channel[j] != channel[i] || other.sender == link.receiver) continue;
                    if (!truth.has(other.sender, link.receiver)) continue;
                    contribs.emplace_back(other.sender,
                                          opts.tx_power_mw *
                                              truth.gain(other.sender, link.receiver));
                }
                if (contribs.empty()) continue;
                const PacketOutcome out = receive_outcome(contribs, false, opts.capture, rng);
                if (out.received && out.dominant_sender == link.sender)
                    data[static_cast<std::size_t>(link.receiver)] |=
                        data[static_cast<std::size_t>(link.sender)];
            }
        }
        const std::uint64_t gathered = data[static_cast<std::size_t>(root)];
        if (gathered == all_mask) ++successes;
        int reached = 0;
        for (int v = 0; v < n; ++v)
            if (gathered & (static_cast<std::uint64_t>(1) << v)) ++reached;
        result.collected.push_back(static_cast<double>(reached) / n);
    }
    result.success_prob = static_cast<double>(successes) / static_cast<double>(trials);
    return result;
}

enum class AfhScheme { Traditional, IgeAssisted };

struct AfhThresholds {
    double exclusion_loss_rate = 0.5; // over a full window
    int window_packets = 20;
    int min_channels = 2; // below this the map resets
};

// Per-pair hopping state: the live channel map plus a bounded loss window per
// channel. Hopping follows index = (index + increment) mod |map| with an odd
// per-pair increment, so two pairs with aligned sequences keep colliding on
// the same channels until exclusions or a reset break the lockstep.
struct ChannelMap {
    std::vector<int> available;
    std::map<int, std::deque<bool>> loss_window;
    int index = 0;
    int increment = 1;

    int current() const { return available[static_cast<std::size_t>(index)]; }

    void hop() {
        index = static_cast<int>((index + increment) %
                                 static_cast<int>(available.size()));
    }

    // Returns true when the loss rate over a full window trips the threshold.
    bool record(int channel, bool lost, const AfhThresholds& th) {
        auto& win = loss_window[channel];
        win.push_back(lost);
        if (static_cast<int>(win.size()) > th.window_packets) win.pop_front();
        if (static_cast<int>(win.size()) < th.window_packets) return false;
        int losses = 0;
        for (bool l : win)
            if (l) ++losses;
        return static_cast<double>(losses) / th.window_packets > th.exclusion_loss_rate;
    }

    void exclude(int channel) {
        available.erase(std::remove(available.begin(), available.end(), channel),
                        available.end());
        loss_window.erase(channel);
        if (!available.empty())
            index = static_cast<int>(index % static_cast<int>(available.size()));
    }

    void reset(const std::vector<int>& initial) {
        available = initial;
        loss_window.clear();
        index = 0;
    }
};

struct AfhOptions {
    double tx_power_mw = 1.0;
    double sinr_floor_db = 10.0;
    double noise_floor_mw = 1e-10;
    CaptureConfig capture;
};

struct P2pResult {
    std::vector<double> pdr;                   // per pair
    std::vector<std::vector<long>> loss_trace; // per pair, cumulative per round
    std::vector<std::pair<int, long>> resets;  // (pair, round) map-reset events
    std::vector<std::vector<int>> initial_maps;
};

// Distributed point-to-point pairs hopping concurrently, one packet per pair
// per round. Channels whose windowed loss rate exceeds the threshold are
// blacklisted; a map that runs out of channels resets to its initial set and
// convergence starts over. IgeAssisted first partitions the initial map
// between interference groups so that pairs proven incompatible never share a
// channel; the AFH dynamics afterwards are identical.
inline P2pResult simulate_p2p_afh(const InterferenceGraph& truth,
                                  const InterferenceGraph& estimated,
                                  const std::vector<std::pair<int, int>>& pairs,
                                  AfhScheme scheme, int initial_map_size, long rounds,
                                  const AfhThresholds& th, std::uint64_t seed,
                                  const AfhOptions& opts = {}) {
    if (pairs.empty()) throw InvalidInput("p2p: need >= 1 pair");
    if (initial_map_size < th.min_channels)
        throw InvalidInput("p2p: initial map smaller than the reset minimum");
    std::vector<int> seen;
    for (const auto& [tx, rx] : pairs) {
        for (int v : {tx, rx}) {
            if (v < 0 || v >= truth.n) throw InvalidInput("p2p: pair node out of range");
            if (std::find(seen.begin(), seen.end(), v) != seen.end())
                throw InvalidInput("p2p: pairs must use disjoint node sets");
            seen.push_back(v);
        }
        if (!truth.has(tx, rx))
            throw InvalidInput("p2p: pair (" + std::to_string(tx) + " -> " +
                               std::to_string(rx) + ") has no channel gain");
    }

    const std::size_t np = pairs.size();
    std::vector<std::vector<int>> initial(np);
    if (scheme == AfhScheme::Traditional) {
        std::vector<int> shared(static_cast<std::size_t>(initial_map_size));
        for (int c = 0; c < initial_map_size; ++c) shared[static_cast<std::size_t>(c)] = c;
        for (auto& m : initial) m = shared;
    } else {
        std::vector<Link> links;
        for (const auto& [tx, rx] : pairs) links.push_back(Link{tx, rx});
        const std::vector<double> powers(static_cast<std::size_t>(truth.n), opts.tx_power_mw);
        const auto groups =
            group_links(estimated, links, opts.sinr_floor_db, powers, opts.noise_floor_mw);
        const auto sets = allocate_channels(groups, initial_map_size);
        for (std::size_t i = 0; i < np; ++i)
            for (std::size_t g = 0; g < groups.size(); ++g)
                if (std::find(groups[g].members.begin(), groups[g].members.end(), links[i]) !=
                    groups[g].members.end())
                    initial[i] = sets[g];
    }

    Rng rng(seed);
    std::vector<ChannelMap> maps(np);
    for (std::size_t i = 0; i < np; ++i) {
        maps[i].available = initial[i];
        maps[i].index = static_cast<int>(rng.uniform_int(initial[i].size()));
        // odd increment, as in BLE channel-selection hopping
        maps[i].increment =
            1 + 2 * static_cast<int>(rng.uniform_int(
                        static_cast<std::uint64_t>(initial_map_size)));
    }

    P2pResult result;
    result.pdr.assign(np, 0.0);
    result.loss_trace.assign(np, {});
    result.initial_maps = initial;
    std::vector<long> losses(np, 0);
    std::vector<int> channel(np);
    std::vector<std::pair<int, double>> contribs;
    for (long round = 0; round < rounds; ++round) {
        for (std::size_t i = 0; i < np; ++i) {
            maps[i].hop();
            channel[i] = maps[i].current();
        }
        for (std::size_t i = 0; i < np; ++i) {
            const auto& [tx, rx] = pairs[i];
            contribs.clear();
            contribs.emplace_back(tx, opts.tx_power_mw * truth.gain(tx, rx));
            for (std::size_t j = 0; j < np; ++j) {
                if (j == i || channel[j] != channel[i]) continue;
                const int other_tx = pairs[j].first;
                if (truth.has(other_tx, rx))
                    contribs.emplace_back(other_tx,
                                          opts.tx_power_mw * truth.gain(other_tx, rx));
            }
            const PacketOutcome out = receive_outcome(contribs, false, opts.capture, rng);
            const bool lost = !(out.received && out.dominant_sender == tx);
            if (lost) ++losses[i];
            result.loss_trace[i].push_back(losses[i]);
            if (maps[i].record(channel[i], lost, th)) {
                maps[i].exclude(channel[i]);
                if (static_cast<int>(maps[i].available.size()) < th.min_channels) {
                    maps[i].reset(initial[i]);
                    result.resets.emplace_back(static_cast<int>(i), round);
                }
            }
        }
    }
    for (std::size_t i = 0; i < np; ++i)
        result.pdr[i] = 1.0 - static_cast<double>(losses[i]) / static_cast<double>(rounds);
    return result;
}

} // namespace igesim
