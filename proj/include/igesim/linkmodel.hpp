#pragma once

// Network-level ground truth: node placement, log-distance path loss with
// shadowing, and the per-slot reception law. Packet success under concurrent
// senders follows the capture effect — the strongest contribution decodes when
// its margin over everything else (the "power delta") clears a threshold,
// smoothed by a logistic so near-threshold slots are probabilistic rather
// than cliff-edged.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "units.hpp"

namespace igesim {

// Dense matrix of linear power gains, sender-major: gain(i, j) attenuates
// node i's transmit power at listener j. NaN marks an unknown/absent link
// (estimated graphs are partial; ground truth is full off-diagonal).
struct InterferenceGraph {
    int n = 0;
    std::vector<double> gains; // row-major n*n

    InterferenceGraph() = default;
    explicit InterferenceGraph(int n_nodes)
        : n(n_nodes),
          gains(static_cast<std::size_t>(n_nodes) * static_cast<std::size_t>(n_nodes),
                std::numeric_limits<double>::quiet_NaN()) {}

    double gain(int i, int j) const { return gains[static_cast<std::size_t>(i) * n + j]; }
    double& gain(int i, int j) { return gains[static_cast<std::size_t>(i) * n + j]; }
    bool has(int i, int j) const { return !std::isnan(gain(i, j)); }
    double gain_db(int i, int j) const { return gain_to_db(gain(i, j)); }
};

struct Topology {
    std::vector<std::array<double, 2>> positions; // meters
    std::vector<int> hop_of;                      // initiator at hop 0
    std::vector<int> parent;                      // -1 for the initiator
    std::vector<std::vector<int>> children;

    int n() const { return static_cast<int>(hop_of.size()); }
    int hops() const {
        int d = 0;
        for (int h : hop_of) d = std::max(d, h);
        return d;
    }
    std::vector<std::vector<int>> nodes_by_hop() const {
        std::vector<std::vector<int>> by_hop(static_cast<std::size_t>(hops()) + 1);
        for (int v = 0; v < n(); ++v) by_hop[static_cast<std::size_t>(hop_of[v])].push_back(v);
        return by_hop;
    }
};

enum class Layout { Grid, Line, Testbed19 };

struct TopologyParams {
    Layout layout = Layout::Testbed19;
    int n = 19;                   // Line/Grid node count (Grid: rounded to k*k)
    double spacing_m = 10.0;      // Line/Grid spacing; Testbed19 hop-column spacing
    double row_spacing_m = 2.0;   // Testbed19 in-column spacing
    double path_loss_exponent = 2.0;
    double ref_gain_db_at_1m = -40.0;
    double shadowing_sigma_db = 3.0;
};

namespace linkmodel_detail {

inline void fill_gains(InterferenceGraph& g, const std::vector<std::array<double, 2>>& pos,
                       const TopologyParams& p, Rng& rng) {
    const int n = g.n;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dx = pos[i][0] - pos[j][0];
            const double dy = pos[i][1] - pos[j][1];
            const double dist = std::sqrt(dx * dx + dy * dy);
            // Shadowing is drawn per node pair: the channel is reciprocal.
            const double shadow =
                p.shadowing_sigma_db > 0.0 ? rng.normal(0.0, p.shadowing_sigma_db) : 0.0;
            const double db =
                p.ref_gain_db_at_1m - 10.0 * p.path_loss_exponent * std::log10(dist) + shadow;
            const double lin = std::min(db_to_gain(db), 1.0);
            g.gain(i, j) = lin;
            g.gain(j, i) = lin;
        }
    }
}

} // namespace linkmodel_detail

// Synthetic deployments. Line: a chain with one node per hop. Grid: k*k lattice
// with the initiator in a corner, hops by Chebyshev ring. Testbed19: 19 nodes —
// initiator plus three 6-node hop columns; the convergecast tree attaches the
// two column-(h+1) nodes i+5 and i+6 to each even column-h node i, mirroring
// the deployed testbed's parent rule (node 8 -> {13, 14}).
inline std::pair<Topology, InterferenceGraph> generate_topology(const TopologyParams& params,
                                                                std::uint64_t seed) {
    if (params.path_loss_exponent < 1.5 || params.path_loss_exponent > 6.0)
        throw InvalidInput("generate_topology: path-loss exponent outside [1.5, 6]");

    Topology topo;
    switch (params.layout) {
    case Layout::Line: {
        if (params.n < 2) throw InvalidInput("generate_topology: Line needs >= 2 nodes");
        for (int v = 0; v < params.n; ++v) {
            topo.positions.push_back({v * params.spacing_m, 0.0});
            topo.hop_of.push_back(v);
            topo.parent.push_back(v - 1);
        }
        break;
    }
    case Layout::Grid: {
        int k = static_cast<int>(std::round(std::sqrt(static_cast<double>(params.n))));
        if (k < 2) throw InvalidInput("generate_topology: Grid needs >= 4 nodes");
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c) {
                topo.positions.push_back({c * params.spacing_m, r * params.spacing_m});
                topo.hop_of.push_back(std::max(r, c));
                if (r == 0 && c == 0)
                    topo.parent.push_back(-1);
                else if (c >= r)
                    topo.parent.push_back(r * k + (c - 1));
                else
                    topo.parent.push_back((r - 1) * k + c);
            }
        break;
    }
    case Layout::Testbed19: {
        const double mid = 2.5 * params.row_spacing_m;
        topo.positions.push_back({0.0, mid}); // initiator
        topo.hop_of.push_back(0);
        topo.parent.push_back(-1);
        for (int hop = 1; hop <= 3; ++hop) {
            for (int r = 0; r < 6; ++r) {
                topo.positions.push_back({hop * params.spacing_m, r * params.row_spacing_m});
                topo.hop_of.push_back(hop);
            }
        }
        topo.parent.resize(19, -1);
        for (int v = 1; v <= 6; ++v) topo.parent[static_cast<std::size_t>(v)] = 0;
        for (int v = 2; v <= 12; v += 2) {
            topo.parent[static_cast<std::size_t>(v + 5)] = v;
            topo.parent[static_cast<std::size_t>(v + 6)] = v;
        }
        break;
    }
    default:
        throw InvalidInput("generate_topology: unknown layout");
    }

    topo.children.assign(topo.positions.size(), {});
    for (int v = 0; v < topo.n(); ++v)
        if (topo.parent[static_cast<std::size_t>(v)] >= 0)
            topo.children[static_cast<std::size_t>(topo.parent[static_cast<std::size_t>(v)])]
                .push_back(v);

    InterferenceGraph graph(topo.n());
    Rng rng(seed);
    linkmodel_detail::fill_gains(graph, topo.positions, params, rng);
    return {std::move(topo), std::move(graph)};
}

struct CaptureConfig {
    double delta_cap_db = 3.0;      // power-delta margin for capture
    double logistic_width_db = 1.0; // smoothing width of the success law
    double noise_floor_dbm = -100.0;
    double snr_min_db = 5.0;                // single-sender decode threshold
    double different_data_penalty_db = 3.0; // collisions need a deeper margin
};

struct PacketOutcome {
    bool received = false;
    int dominant_sender = -1;
    double power_delta_db = 0.0;
};

inline double capture_success_probability(double delta_db, double threshold_db, double width_db) {
    return 1.0 / (1.0 + std::exp(-(delta_db - threshold_db) / width_db));
}

// Per-slot reception decision. `contributions` maps sender id to its mean
// received power at this listener (mW).
inline PacketOutcome receive_outcome(const std::vector<std::pair<int, double>>& contributions,
                                     bool same_data, const CaptureConfig& capture, Rng& rng) {
    if (contributions.empty()) throw InvalidInput("receive_outcome: no contributions");
    const double noise_mw = dbm_to_mw(capture.noise_floor_dbm);

    int strongest = contributions.front().first;
    double strongest_mw = contributions.front().second;
    double total_mw = 0.0;
    for (const auto& [id, mw] : contributions) {
        total_mw += mw;
        if (mw > strongest_mw || (mw == strongest_mw && id < strongest)) {
            strongest = id;
            strongest_mw = mw;
        }
    }

    PacketOutcome out;
    out.dominant_sender = strongest;
    out.power_delta_db = mw_to_dbm(strongest_mw) - mw_to_dbm(total_mw - strongest_mw + noise_mw);

    double threshold = capture.snr_min_db;
    if (contributions.size() > 1) {
        threshold = capture.delta_cap_db;
        if (!same_data) threshold += capture.different_data_penalty_db;
    }
    const double p =
        capture_success_probability(out.power_delta_db, threshold, capture.logistic_width_db);
    out.received = rng.bernoulli(p);
    return out;
}

// Gap in dB between the strongest and second-strongest incoming gain — the
// "channel similarity" of a node; small gaps mean no sender can dominate.
inline double channel_similarity(const InterferenceGraph& graph, int node) {
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    int count = 0;
    for (int i = 0; i < graph.n; ++i) {
        if (i == node || !graph.has(i, node)) continue;
        ++count;
        const double g = graph.gain(i, node);
        if (g > best) {
            second = best;
            best = g;
        } else if (g > second) {
            second = g;
        }
    }
    if (count < 2) throw InvalidInput("channel_similarity: node has fewer than 2 incoming links");
    return gain_to_db(best) - gain_to_db(second);
}

} // namespace igesim
