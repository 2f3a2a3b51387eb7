#pragma once

// Time-slotted concurrent-transmission flooding with embedded gain
// estimation. Each round the initiator floods one packet; every node that
// decodes it rebroadcasts for n_tx consecutive slots, so hop h's first
// transmission lands near slot h and listeners see each hop join the
// superposition one slot apart. That staggering is what makes cross-hop
// decoupling work: RSS(slot of hop h) - RSS(slot before) isolates hop h's
// contribution as long as the earlier transmitter set carried over unchanged.
//
// A measurement campaign interleaves flooding-alone rounds with short
// estimation bursts (one power adjustment per hop per round, diagonal
// adjustment matrix per hop). Receivers report per-slot mean RSS; the sink
// solves one least-squares system per (receiver, upstream hop) and the result
// feeds the max-min power allocator. Estimation failure keeps the previous
// graph untouched.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "estimator.hpp"
#include "linkmodel.hpp"
#include "phy.hpp"
#include "powerctrl.hpp"
#include "rng.hpp"
#include "units.hpp"

namespace igesim {

enum class NodeMode : std::uint8_t { Transmit, Listen, Idle };

enum class Scheme { OptimizedFlooding, FloodingPlusIGE, RandomPower, FixedPower };

struct RoundConfig {
    int n_tx = 4;
    int total_hops = 0;
    int slots_per_round = 0;       // n_tx + 2*total_hops
    int update_interval_rounds = 50;
    int ige_rounds = 0;            // ige_passes * max hop size among adjusting hops

    static RoundConfig for_topology(const Topology& topo, int n_tx = 4,
                                    int update_interval = 50, int ige_passes = 3) {
        if (ige_passes < 1) throw InvalidInput("round config: ige_passes must be >= 1");
        RoundConfig rc;
        rc.n_tx = n_tx;
        rc.total_hops = topo.hops();
        rc.slots_per_round = n_tx + 2 * rc.total_hops;
        rc.update_interval_rounds = update_interval;
        const auto by_hop = topo.nodes_by_hop();
        // Hops 0..d-1 adjust (the last hop's outgoing gains are recovered by
        // symmetry, so it never perturbs). One pass = one round per node of the
        // largest adjusting hop; extra passes repeat the schedule so the
        // regressions keep surplus rows when lossy rounds void some readings.
        int pass = 0;
        for (int h = 0; h < rc.total_hops; ++h)
            pass = std::max(pass,
                            static_cast<int>(by_hop[static_cast<std::size_t>(h)].size()));
        rc.ige_rounds = ige_passes * pass;
        return rc;
    }

    void validate() const {
        if (n_tx < 1) throw InvalidInput("round config: n_tx must be >= 1");
        if (total_hops < 1) throw InvalidInput("round config: need >= 1 hop");
        if (slots_per_round < n_tx + 2)
            throw InvalidInput("round config: too few slots per round");
        if (ige_rounds < 1) throw InvalidInput("round config: ige_rounds must be >= 1");
        if (update_interval_rounds < 1)
            throw InvalidInput("round config: update interval must be >= 1");
    }
};

// Per-device accuracy offsets are drawn once per campaign (a radio's power
// error is a property of the unit, not of the packet); per-measurement jitter
// rides on top. Estimation always works with nominal powers, so the fixed
// offsets surface as realistic gain biases rather than averaging away.
struct NoiseConfig {
    bool enabled = true;
    double tx_accuracy_db = 1.0;  // per-device offset ~ U(-a, a)
    double rx_accuracy_db = 2.0;  // per-device offset ~ U(-a, a)
    double jitter_sigma_db = 0.2; // fresh per RSS reading

    static NoiseConfig noiseless() { return NoiseConfig{false, 0.0, 0.0, 0.0}; }
};

struct DeviceNoise {
    std::vector<double> tx_gain;      // linear multiplier on radiated power
    std::vector<double> rx_offset_db; // additive error on the RSS reading
};

inline DeviceNoise make_device_noise(int n, const NoiseConfig& cfg, Rng& rng) {
    DeviceNoise dn;
    dn.tx_gain.assign(static_cast<std::size_t>(n), 1.0);
    dn.rx_offset_db.assign(static_cast<std::size_t>(n), 0.0);
    if (!cfg.enabled) return dn;
    for (int v = 0; v < n; ++v) {
        dn.tx_gain[static_cast<std::size_t>(v)] =
            db_to_gain(rng.uniform(-cfg.tx_accuracy_db, cfg.tx_accuracy_db));
        dn.rx_offset_db[static_cast<std::size_t>(v)] =
            rng.uniform(-cfg.rx_accuracy_db, cfg.rx_accuracy_db);
    }
    return dn;
}

// One flooding round: who did what each slot, what listeners measured, and
// when each node first decoded the packet (-1 = never; the initiator
// originates, so its slot is -1 as well).
struct CommGraph {
    int n = 0;
    int slots = 0;
    std::vector<NodeMode> mode; // slot-major, slots*n
    std::vector<double> rss_mw; // slot-major; NaN while transmitting
    std::vector<int> reception_slot;
    int initiator = 0;

    NodeMode mode_at(int slot, int node) const {
        return mode[static_cast<std::size_t>(slot) * static_cast<std::size_t>(n) +
                    static_cast<std::size_t>(node)];
    }
    bool listening(int slot, int node) const { return mode_at(slot, node) == NodeMode::Listen; }
    double rss_at_mw(int slot, int node) const {
        return rss_mw[static_cast<std::size_t>(slot) * static_cast<std::size_t>(n) +
                      static_cast<std::size_t>(node)];
    }
    double rss_at_dbm(int slot, int node) const { return mw_to_dbm(rss_at_mw(slot, node)); }
};

// Measurement-chain model for one RSS reading. Noiseless mode returns the
// exact linear sum (the additivity studies need machine-precision readings);
// otherwise the reading passes through the receiver's fixed offset, Gaussian
// jitter, the ceiling clamp, 1 dB register quantization, and the sensitivity
// floor, in that order.
inline double measure_rss_mw(double sum_mw, int rx, const PhyConfig& phy,
                             const NoiseConfig& noise, const DeviceNoise& devices,
                             double thermal_floor_mw, Rng& rng) {
    if (!noise.enabled) return sum_mw;
    double dbm = mw_to_dbm(sum_mw + thermal_floor_mw) +
                 devices.rx_offset_db[static_cast<std::size_t>(rx)] +
                 rng.normal(0.0, noise.jitter_sigma_db);
    dbm = std::min(dbm, phy.rx_ceiling_dbm);
    dbm = quantize_dbm(dbm, phy.rssi_quantum_db);
    dbm = std::max(dbm, phy.rx_floor_dbm);
    return dbm_to_mw(dbm);
}

// One flooding round. Normally a node relays opportunistically for n_tx slots
// starting right after its reception. With `slotted` set (measurement rounds)
// hop z relays only inside its scheduled window [z, z+n_tx), and only if it
// already held the packet when the window opened: the per-slot transmitter
// sets then follow the hop schedule exactly, which is what makes adjacent-slot
// RSS subtraction attribute power to a single hop.
inline CommGraph run_round(const InterferenceGraph& truth, const Topology& topo,
                           const std::vector<double>& plan_mw, const RoundConfig& rc,
                           const PhyConfig& phy, const CaptureConfig& capture,
                           const NoiseConfig& noise, const DeviceNoise& devices, Rng& rng,
                           bool slotted = false) {
    rc.validate();
    const int n = topo.n();
    if (static_cast<int>(plan_mw.size()) != n)
        throw InvalidInput("run_round: power plan length mismatch");

    CommGraph cg;
    cg.n = n;
    cg.slots = rc.slots_per_round;
    cg.mode.assign(static_cast<std::size_t>(cg.slots) * static_cast<std::size_t>(n),
                   NodeMode::Listen);
    cg.rss_mw.assign(static_cast<std::size_t>(cg.slots) * static_cast<std::size_t>(n),
                     std::numeric_limits<double>::quiet_NaN());
    cg.reception_slot.assign(static_cast<std::size_t>(n), -1);
    cg.initiator = topo.nodes_by_hop().front().front();

    const double thermal_mw = dbm_to_mw(capture.noise_floor_dbm);
    std::vector<int> transmitters;
    std::vector<std::pair<int, double>> contribs;
    for (int s = 0; s < cg.slots; ++s) {
        transmitters.clear();
        for (int v = 0; v < n; ++v) {
            const int rec = cg.reception_slot[static_cast<std::size_t>(v)];
            bool active;
            if (v == cg.initiator) {
                active = s < rc.n_tx;
            } else if (slotted) {
                const int z = topo.hop_of[static_cast<std::size_t>(v)];
                active = rec >= 0 && rec < z && s >= z && s < z + rc.n_tx;
            } else {
                active = rec >= 0 && rec < s && s <= rec + rc.n_tx;
            }
            if (active) transmitters.push_back(v);
        }
        for (int t : transmitters)
            cg.mode[static_cast<std::size_t>(s) * static_cast<std::size_t>(n) +
                    static_cast<std::size_t>(t)] = NodeMode::Transmit;

        for (int v = 0; v < n; ++v) {
            if (cg.mode_at(s, v) == NodeMode::Transmit) continue;
            contribs.clear();
            double sum_mw = 0.0;
            for (int t : transmitters) {
                if (!truth.has(t, v)) continue;
                const double p = plan_mw[static_cast<std::size_t>(t)] *
                                 devices.tx_gain[static_cast<std::size_t>(t)] *
                                 truth.gain(t, v);
                contribs.emplace_back(t, p);
                sum_mw += p;
            }
            cg.rss_mw[static_cast<std::size_t>(s) * static_cast<std::size_t>(n) +
                      static_cast<std::size_t>(v)] =
                measure_rss_mw(sum_mw, v, phy, noise, devices, thermal_mw, rng);
            if (v != cg.initiator && cg.reception_slot[static_cast<std::size_t>(v)] < 0 &&
                !contribs.empty()) {
                const PacketOutcome out = receive_outcome(contribs, true, capture, rng);
                if (out.received) cg.reception_slot[static_cast<std::size_t>(v)] = s;
            }
        }
    }
    return cg;
}

// Power attributable to the hop that joined between the two slots. A negative
// difference means the reading was corrupted (upstream set changed or noise
// exceeded the new hop's contribution); it clamps to zero and is flagged.
inline double decouple_cross_hop(double rss_prev_mw, double rss_cur_mw,
                                 bool* clamped = nullptr) {
    if (rss_prev_mw < 0.0 || rss_cur_mw < 0.0)
        throw InvalidInput("decouple_cross_hop: negative power");
    const double diff = rss_cur_mw - rss_prev_mw;
    if (clamped != nullptr) *clamped = diff < 0.0;
    return diff < 0.0 ? 0.0 : diff;
}

// What one node sends back to the sink after a measurement round: its
// reception slot plus one raw RSS reading per upstream hop. A hop-i node
// therefore reports i readings; the initiator reports nothing.
struct MeasurementReport {
    std::vector<int> reception_slot;          // per node
    std::vector<std::vector<double>> rss_dbm; // per node, one entry per upstream hop

    static int bits_for(int count) { // index width for `count` distinct values
        int bits = 0;
        while ((1 << bits) < count) ++bits;
        return bits;
    }

    long bits(int n_s, int b, const std::vector<int>& hop_of) const {
        long total = 0;
        for (int hop : hop_of)
            if (hop > 0) total += bits_for(n_s) + static_cast<long>(hop) * bits_for(b);
        return total;
    }
};

struct OverheadReport {
    long o_our_bits = 0;
    long o_other_bits = 0;
    long t_our_slots = 0;
    long t_other_slots = 0;
};

// Bit/slot cost of reporting measurements for one full estimation process,
// against a strawman that serializes one transmitter per slot and ships every
// pairwise reading. hop_sizes lists hops 1..d; the initiator tier is implied.
inline OverheadReport reporting_overhead(int n_s, int n_r, int b,
                                         const std::vector<int>& hop_sizes) {
    if (n_s < 1 || n_r < 1 || b < 1)
        throw InvalidInput("reporting_overhead: counts must be positive");
    for (int h : hop_sizes)
        if (h < 1) throw InvalidInput("reporting_overhead: hop sizes must be positive");

    const long slot_bits = MeasurementReport::bits_for(n_s);
    const long rss_bits = MeasurementReport::bits_for(b);
    OverheadReport report;
    long upstream = 1; // nodes at hops strictly above hop i, starting with the initiator
    for (std::size_t i = 0; i < hop_sizes.size(); ++i) {
        const long ni = hop_sizes[i];
        const long tier = static_cast<long>(i) + 1;
        report.o_our_bits += n_r * ni * slot_bits + n_r * tier * ni * rss_bits;
        report.o_other_bits += rss_bits * ni * upstream;
        upstream += ni;
    }
    report.t_our_slots = 0;       // reports ride on the flooding rounds themselves
    report.t_other_slots = upstream; // strawman: one dedicated slot per node
    return report;
}

// Sequential power-adjustment schedule. In estimation round k, the k-th node
// of every adjusting hop moves to a different power level; everyone else holds
// base. The move chosen is the smallest in-set step of at least min_adjust_mw
// (ties prefer the higher resulting level), keeping the flood as close to the
// optimized plan as the identifiability requirement allows.
struct AdjustmentPlan {
    std::vector<std::vector<double>> delta_by_hop; // [hop][k], k < hop size
    int rounds = 0;
};

inline AdjustmentPlan build_ige_schedule(const std::vector<int>& hop_sizes,
                                         const std::vector<double>& base_powers_mw,
                                         double min_adjust_mw,
                                         const std::vector<double>& power_set_mw) {
    if (min_adjust_mw <= 0.0) throw InvalidInput("schedule: min_adjust must be positive");
    if (power_set_mw.empty()) throw InvalidInput("schedule: empty power set");
    std::size_t total = 0;
    for (int h : hop_sizes) {
        if (h < 1) throw InvalidInput("schedule: hop sizes must be positive");
        total += static_cast<std::size_t>(h);
    }
    if (base_powers_mw.size() != total)
        throw InvalidInput("schedule: base power list does not match hop sizes");

    auto in_set = [&](double p) {
        for (double q : power_set_mw)
            if (std::abs(q - p) <= 1e-12 * std::max(1.0, std::abs(q))) return true;
        return false;
    };

    AdjustmentPlan plan;
    plan.delta_by_hop.resize(hop_sizes.size());
    std::size_t flat = 0;
    for (std::size_t h = 0; h < hop_sizes.size(); ++h) {
        std::vector<double> bases, deltas;
        for (int k = 0; k < hop_sizes[h]; ++k, ++flat) {
            const double base = base_powers_mw[flat];
            if (!in_set(base))
                throw InvalidInput("schedule: base power not in the power set");
            double best = 0.0;
            bool found = false;
            for (double q : power_set_mw) {
                const double d = q - base;
                if (std::abs(d) < min_adjust_mw) continue;
                if (!found || std::abs(d) < std::abs(best) ||
                    (std::abs(d) == std::abs(best) && d > best)) {
                    best = d;
                    found = true;
                }
            }
            if (!found)
                throw SchedulingError(
                    "schedule: no in-set adjustment of at least the minimum step",
                    static_cast<int>(flat));
            bases.push_back(base);
            deltas.push_back(best);
        }
        if (full_rank_condition(bases, deltas) != RankVerdict::FullRank)
            throw SchedulingError("schedule: hop " + std::to_string(h) +
                                      " adjustment matrix is singular",
                                  -1);
        plan.delta_by_hop[h] = std::move(deltas);
        plan.rounds = std::max(plan.rounds, hop_sizes[h]);
    }
    return plan;
}

// Everything an estimation process or campaign needs, minus the mutable state.
struct ProtocolContext {
    const Topology* topo = nullptr;
    const InterferenceGraph* truth = nullptr;
    RoundConfig round;
    PhyConfig phy;
    CaptureConfig capture;
    NoiseConfig noise;
    std::vector<double> power_set_mw;
    double min_adjust_mw = 0.398107;
    double h_min = 1e-9; // rx floor over max tx power
    double h_max = 1.0;  // rx ceiling over min tx power

    void validate() const {
        if (topo == nullptr || truth == nullptr)
            throw InvalidInput("protocol context: topology/graph not set");
        round.validate();
        if (power_set_mw.empty() ||
            !std::is_sorted(power_set_mw.begin(), power_set_mw.end()))
            throw InvalidInput("protocol context: power set must be ascending, non-empty");
    }
};

enum class SystemStatus : std::uint8_t { Estimated, Skipped, Failed };

// One least-squares system per (receiver, upstream hop) pair.
struct SystemOutcome {
    int receiver = -1;
    int upstream_hop = -1;
    int valid_rows = 0;
    int dropped_senders = 0; // all-zero columns excluded from the solve
    SystemStatus status = SystemStatus::Skipped;
};

struct IgeOutcome {
    InterferenceGraph graph{0}; // updated on success, previous verbatim on failure
    bool success = false;
    int systems_estimated = 0;
    int systems_skipped = 0; // receiver never heard that hop: out of range
    int systems_failed = 0;  // too few valid rows or rank-deficient
    std::vector<SystemOutcome> systems;
    std::vector<CommGraph> rounds;
    std::vector<MeasurementReport> reports;
};

namespace protocol_detail {

// First slot in which any node of the given hop transmitted, or -1. Read off
// the recorded modes rather than inferred from reception slots, so it stays
// correct under both relay disciplines.
inline int hop_measurement_slot(const CommGraph& cg, const std::vector<int>& hop_nodes,
                                int hop) {
    if (hop == 0) return 0;
    for (int s = 0; s < cg.slots; ++s)
        for (int v : hop_nodes)
            if (cg.mode_at(s, v) == NodeMode::Transmit) return s;
    return -1;
}

inline void slot_transmitters(const CommGraph& cg, int slot, std::vector<int>& out) {
    out.clear();
    if (slot < 0) return;
    for (int v = 0; v < cg.n; ++v)
        if (cg.mode_at(slot, v) == NodeMode::Transmit) out.push_back(v);
}

// The decoupling subtraction is only meaningful when every transmitter from
// the previous slot carried over and the only newcomers belong to the hop
// being measured.
inline bool transition_clean(const std::vector<int>& prev, const std::vector<int>& cur,
                             const std::vector<int>& hop_of, int hop) {
    for (int t : prev)
        if (std::find(cur.begin(), cur.end(), t) == cur.end()) return false;
    for (int t : cur)
        if (std::find(prev.begin(), prev.end(), t) == prev.end() &&
            hop_of[static_cast<std::size_t>(t)] != hop)
            return false;
    return true;
}

} // namespace protocol_detail

// One estimation process: ige_rounds adjusted flooding rounds, then one
// least-squares solve per (receiver, upstream hop). Gains from systems that
// come out full rank replace the previous estimates; a system with too few
// valid rows or a rank deficiency keeps its previous gains, and the process
// only counts as a success when no system failed. A receiver that never heard
// a hop at all is skipped as out of range rather than failed.
inline IgeOutcome run_ige_process(const ProtocolContext& ctx, const DeviceNoise& devices,
                                  const std::vector<double>& base_plan_mw,
                                  const InterferenceGraph& previous, Rng& rng) {
    ctx.validate();
    const Topology& topo = *ctx.topo;
    const auto by_hop = topo.nodes_by_hop();
    const int d = topo.hops();
    const int n = topo.n();

    std::vector<int> hop_sizes;
    std::vector<double> bases;
    for (int h = 0; h < d; ++h) {
        hop_sizes.push_back(static_cast<int>(by_hop[static_cast<std::size_t>(h)].size()));
        for (int v : by_hop[static_cast<std::size_t>(h)])
            bases.push_back(base_plan_mw[static_cast<std::size_t>(v)]);
    }
    const AdjustmentPlan schedule =
        build_ige_schedule(hop_sizes, bases, ctx.min_adjust_mw, ctx.power_set_mw);

    // Realized transmit powers per round: base plus that round's adjustments.
    // Rounds cycle through the one-pass schedule, so with ige_rounds beyond one
    // pass every node re-adjusts and the systems collect surplus rows.
    std::vector<std::vector<double>> round_plan(
        static_cast<std::size_t>(ctx.round.ige_rounds), base_plan_mw);
    for (int k = 0; k < ctx.round.ige_rounds; ++k) {
        const int j = k % schedule.rounds;
        for (int h = 0; h < d; ++h)
            if (j < static_cast<int>(schedule.delta_by_hop[static_cast<std::size_t>(h)].size())) {
                const int v = by_hop[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
                round_plan[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)] +=
                    schedule.delta_by_hop[static_cast<std::size_t>(h)][static_cast<std::size_t>(j)];
            }
    }

    IgeOutcome out;
    out.graph = previous;
    for (int k = 0; k < ctx.round.ige_rounds; ++k) {
        out.rounds.push_back(run_round(*ctx.truth, topo,
                                       round_plan[static_cast<std::size_t>(k)], ctx.round,
                                       ctx.phy, ctx.capture, ctx.noise, devices, rng,
                                       /*slotted=*/true));

        MeasurementReport rep;
        rep.reception_slot = out.rounds.back().reception_slot;
        rep.rss_dbm.assign(static_cast<std::size_t>(n), {});
        out.reports.push_back(std::move(rep));
    }

    std::vector<int> prev_tx, cur_tx;
    for (int r = 0; r < n; ++r) {
        const int hop_r = topo.hop_of[static_cast<std::size_t>(r)];
        for (int u = 0; u < hop_r; ++u) {
            const auto& hop_nodes = by_hop[static_cast<std::size_t>(u)];
            const int nu = static_cast<int>(hop_nodes.size());
            std::vector<double> rows, b;
            for (int k = 0; k < ctx.round.ige_rounds; ++k) {
                const CommGraph& cg = out.rounds[static_cast<std::size_t>(k)];
                const int s = protocol_detail::hop_measurement_slot(cg, hop_nodes, u);
                if (s < 0 || !cg.listening(s, r)) continue;
                if (u > 0 && !cg.listening(s - 1, r)) continue;
                protocol_detail::slot_transmitters(cg, u > 0 ? s - 1 : -1, prev_tx);
                protocol_detail::slot_transmitters(cg, s, cur_tx);
                if (!protocol_detail::transition_clean(prev_tx, cur_tx, topo.hop_of, u)) continue;

                const double prev_mw = u > 0 ? cg.rss_at_mw(s - 1, r) : 0.0;
                b.push_back(decouple_cross_hop(prev_mw, cg.rss_at_mw(s, r)));
                for (int j = 0; j < nu; ++j) {
                    const int sender = hop_nodes[static_cast<std::size_t>(j)];
                    const bool active = std::find(cur_tx.begin(), cur_tx.end(), sender) != cur_tx.end();
                    rows.push_back(active
                                       ? round_plan[static_cast<std::size_t>(k)]
                                                   [static_cast<std::size_t>(sender)]
                                       : 0.0);
                }
                // Record the raw reading pair the sink actually consumed.
                out.reports[static_cast<std::size_t>(k)]
                    .rss_dbm[static_cast<std::size_t>(r)]
                    .push_back(mw_to_dbm(cg.rss_at_mw(s, r)));
            }
            const int m = static_cast<int>(b.size());
            SystemOutcome rec{r, u, m, 0, SystemStatus::Failed};
            if (m == 0) {
                ++out.systems_skipped;
                rec.status = SystemStatus::Skipped;
                out.systems.push_back(rec);
                continue;
            }
            // A sender that never transmitted in a valid round has an all-zero
            // column: structurally unidentifiable, so it drops out of the solve
            // and keeps its previous estimate. The sink can tell from the
            // nominal plans which senders those were.
            std::vector<int> observed;
            for (int j = 0; j < nu; ++j)
                for (int i = 0; i < m; ++i)
                    if (rows[static_cast<std::size_t>(i) * static_cast<std::size_t>(nu) +
                             static_cast<std::size_t>(j)] != 0.0) {
                        observed.push_back(j);
                        break;
                    }
            const int no = static_cast<int>(observed.size());
            rec.dropped_senders = nu - no;
            if (no == 0 || m < no) {
                ++out.systems_failed;
                out.systems.push_back(rec);
                continue;
            }
            TxPowerMatrix P;
            P.m = m;
            P.n = no;
            P.entries.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(no));
            for (int i = 0; i < m; ++i)
                for (int j : observed)
                    P.entries.push_back(
                        rows[static_cast<std::size_t>(i) * static_cast<std::size_t>(nu) +
                             static_cast<std::size_t>(j)]);
            try {
                const GainEstimate est = estimate_gains(P, b, ctx.h_min, ctx.h_max);
                for (int j = 0; j < no; ++j)
                    out.graph.gain(
                        hop_nodes[static_cast<std::size_t>(observed[static_cast<std::size_t>(j)])],
                        r) = est.gains[static_cast<std::size_t>(j)];
                ++out.systems_estimated;
                rec.status = SystemStatus::Estimated;
            } catch (const RankError&) {
                ++out.systems_failed;
            }
            out.systems.push_back(rec);
        }
    }

    out.success = out.systems_failed == 0;
    return out;
}

// Point-to-point bootstrap: one node transmits per slot at a reference power,
// everyone else records RSS, gains follow as reading over power. Takes one
// slot per node; used before the first in-flood estimation process.
inline InterferenceGraph bootstrap_point_to_point(const InterferenceGraph& truth,
                                                  const Topology& topo, const PhyConfig& phy,
                                                  const NoiseConfig& noise,
                                                  const DeviceNoise& devices,
                                                  double ref_power_mw, double thermal_floor_mw,
                                                  Rng& rng) {
    if (ref_power_mw <= 0.0)
        throw InvalidInput("bootstrap: reference power must be positive");
    const int n = topo.n();
    InterferenceGraph est(n);
    for (int t = 0; t < n; ++t) {
        for (int r = 0; r < n; ++r) {
            if (r == t || !truth.has(t, r)) continue;
            const double sum = ref_power_mw * devices.tx_gain[static_cast<std::size_t>(t)] *
                               truth.gain(t, r);
            est.gain(t, r) =
                measure_rss_mw(sum, r, phy, noise, devices, thermal_floor_mw, rng) /
                ref_power_mw;
        }
    }
    return est;
}

struct CampaignMetrics {
    double per_slot_per = 0.0;
    double e2e_per = 0.0;
    double mean_latency_slots = 0.0;
    double ige_success_rate = 1.0;
    std::vector<long> latency_histogram; // index = latency in slots
    std::vector<double> coverage_by_slot;
    long rounds_measured = 0;
    long receive_failures = 0;
    long receive_opportunities = 0;
    long ige_processes = 0;
    long ige_successes = 0;
};

struct CampaignOptions {
    double fixed_power_mw = 1.0;     // FixedPower level, also RandomPower's ceiling pool
    double bootstrap_power_mw = 1.0; // reference power for the point-to-point pass
};

namespace protocol_detail {

// Failed/valid receive opportunities in one round. A valid opportunity is a
// slot where a node that still lacks the packet listens while at least one
// in-range transmitter is active.
inline void count_opportunities(const CommGraph& cg, const InterferenceGraph& truth,
                                long& failures, long& opportunities) {
    for (int v = 0; v < cg.n; ++v) {
        if (v == cg.initiator) continue;
        const int rec = cg.reception_slot[static_cast<std::size_t>(v)];
        const int horizon = rec >= 0 ? rec + 1 : cg.slots;
        for (int s = 0; s < horizon; ++s) {
            if (!cg.listening(s, v)) continue;
            bool reachable = false;
            for (int t = 0; t < cg.n && !reachable; ++t)
                reachable = t != v && cg.mode_at(s, t) == NodeMode::Transmit && truth.has(t, v);
            if (!reachable) continue;
            ++opportunities;
            if (s != rec) ++failures;
        }
    }
}

struct MetricsAccumulator {
    long rounds = 0, failed_rounds = 0, failures = 0, opportunities = 0;
    long latency_sum = 0;
    std::vector<long> latency_hist;
    std::vector<double> coverage;

    void absorb(const CommGraph& cg, const InterferenceGraph& truth) {
        if (latency_hist.empty()) {
            latency_hist.assign(static_cast<std::size_t>(cg.slots) + 1, 0);
            coverage.assign(static_cast<std::size_t>(cg.slots), 0.0);
        }
        ++rounds;
        int latency = 0;
        bool all = true;
        const int others = cg.n - 1;
        for (int v = 0; v < cg.n; ++v) {
            if (v == cg.initiator) continue;
            const int rec = cg.reception_slot[static_cast<std::size_t>(v)];
            if (rec < 0)
                all = false;
            else
                latency = std::max(latency, rec + 1);
        }
        if (!all) {
            ++failed_rounds;
            latency = cg.slots; // a straggler costs the whole round
        }
        ++latency_hist[static_cast<std::size_t>(latency)];
        latency_sum += latency;
        for (int s = 0; s < cg.slots; ++s) {
            int reached = 0;
            for (int v = 0; v < cg.n; ++v) {
                if (v == cg.initiator) continue;
                const int rec = cg.reception_slot[static_cast<std::size_t>(v)];
                if (rec >= 0 && rec <= s) ++reached;
            }
            coverage[static_cast<std::size_t>(s)] += others > 0
                                                         ? static_cast<double>(reached) / others
                                                         : 1.0;
        }
        count_opportunities(cg, truth, failures, opportunities);
    }

    CampaignMetrics finish(long processes, long successes) const {
        CampaignMetrics m;
        m.rounds_measured = rounds;
        m.receive_failures = failures;
        m.receive_opportunities = opportunities;
        m.ige_processes = processes;
        m.ige_successes = successes;
        m.per_slot_per = opportunities > 0
                             ? static_cast<double>(failures) / static_cast<double>(opportunities)
                             : 0.0;
        m.e2e_per = rounds > 0 ? static_cast<double>(failed_rounds) / static_cast<double>(rounds)
                               : 0.0;
        m.mean_latency_slots =
            rounds > 0 ? static_cast<double>(latency_sum) / static_cast<double>(rounds) : 0.0;
        m.ige_success_rate =
            processes > 0 ? static_cast<double>(successes) / static_cast<double>(processes) : 1.0;
        m.latency_histogram = latency_hist;
        m.coverage_by_slot = coverage;
        for (double& c : m.coverage_by_slot) c /= rounds > 0 ? static_cast<double>(rounds) : 1.0;
        return m;
    }
};

} // namespace protocol_detail

// A full measurement campaign under one scheme. The estimation-driven schemes
// bootstrap once, then alternate flooding-alone stretches with estimation
// bursts, re-optimizing powers after every successful process. Statistics are
// taken over flooding-alone rounds, except FloodingPlusIGE which measures the
// perturbed estimation rounds themselves. `rounds` counts measured rounds.
inline CampaignMetrics run_campaign(const ProtocolContext& ctx, Scheme scheme, long rounds,
                                    std::uint64_t seed, const CampaignOptions& opts = {}) {
    ctx.validate();
    if (rounds < 1) throw InvalidInput("campaign: need >= 1 round");
    const Topology& topo = *ctx.topo;
    const int n = topo.n();

    Rng rng(seed);
    const DeviceNoise devices = make_device_noise(n, ctx.noise, rng);
    const double thermal_mw = dbm_to_mw(ctx.capture.noise_floor_dbm);
    const bool uses_ige =
        scheme == Scheme::OptimizedFlooding || scheme == Scheme::FloodingPlusIGE;

    std::vector<double> plan(static_cast<std::size_t>(n), opts.fixed_power_mw);
    InterferenceGraph est(n);
    if (uses_ige) {
        est = bootstrap_point_to_point(*ctx.truth, topo, ctx.phy, ctx.noise, devices,
                                       opts.bootstrap_power_mw, thermal_mw, rng);
        plan = allocate_multihop(est, topo, ctx.power_set_mw, thermal_mw);
    }

    protocol_detail::MetricsAccumulator acc;
    long processes = 0, successes = 0;
    long flooding_since_update = 0;
    while (acc.rounds < rounds) {
        if (uses_ige && flooding_since_update >= ctx.round.update_interval_rounds) {
            const IgeOutcome outcome = run_ige_process(ctx, devices, plan, est, rng);
            ++processes;
            if (outcome.success) {
                ++successes;
                est = outcome.graph;
                plan = allocate_multihop(est, topo, ctx.power_set_mw, thermal_mw);
            }
            if (scheme == Scheme::FloodingPlusIGE)
                for (const CommGraph& cg : outcome.rounds) acc.absorb(cg, *ctx.truth);
            flooding_since_update = 0;
            continue;
        }
        std::vector<double> round_plan = plan;
        if (scheme == Scheme::RandomPower)
            // Relays redraw each round; the source stays at its fixed level —
            // it transmits alone, so randomizing it only severs the first hop.
            for (int v = 0; v < n; ++v)
                if (topo.hop_of[static_cast<std::size_t>(v)] != 0)
                    round_plan[static_cast<std::size_t>(v)] =
                        ctx.power_set_mw[rng.uniform_int(ctx.power_set_mw.size())];
        const CommGraph cg = run_round(*ctx.truth, topo, round_plan, ctx.round, ctx.phy,
                                       ctx.capture, ctx.noise, devices, rng);
        ++flooding_since_update;
        if (scheme != Scheme::FloodingPlusIGE) acc.absorb(cg, *ctx.truth);
    }
    return acc.finish(processes, successes);
}

} // namespace igesim
