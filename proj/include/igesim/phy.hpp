#pragma once

// Received-power model for concurrent same-channel transmissions.
//
// The superposition of K unmodulated-ish GFSK carriers at a listener produces
//   p(t) = sum_k p_k*g_k + 2*sum_{k<l} sqrt(p_k*g_k*p_l*g_l) * cos(2*pi*df'_{k,l}*t + dphi)
// where g_k is the linear power gain of the k-th path and df'_{k,l} the pairwise
// beat frequency ("beating pattern", period 1/df'). When the two senders carry
// different payload bits the GFSK frequency deviation adds +-1/(4*T_sym) per
// sender, shifting the beat by 1/(2*T_sym) — 500 kHz at 1 Msym/s, 1 MHz at 2.
//
// Sampling that pattern runs through four receiver imperfections, in order:
// front-end AGC misbehaviour under ultra-fast beating, saturation at the RSSI
// ceiling, stochastic AGC overshoot transients, 1 dB register quantization,
// and the sensitivity floor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "units.hpp"

namespace igesim {

enum class DataPattern {
    SameAsOthers, // same payload as every other concurrent sender (CT flooding)
    AllOnes,      // constant-1 test payload
    AllZeros,     // constant-0 test payload
    Whitened      // pseudo-random payload (real packets)
};

struct PhyConfig {
    double modulation_index = 0.5;
    double symbol_time_s = 1e-6;   // 1 Msym/s uncoded; 0.5e-6 for the 2M mode
    double sampling_period_s = 1e-6;
    int samples_per_packet = 1200;
    double rx_floor_dbm = -90.0;
    double rx_ceiling_dbm = -20.0;
    double rssi_quantum_db = 1.0;
    double tx_accuracy_db = 1.0; // per-device fixed offset bound
    double rx_accuracy_db = 2.0;

    // Receiver imperfection stages. All on by default; linearity studies in the
    // ideal configuration switch everything off.
    bool saturation_enabled = true;
    bool quantization_enabled = true;
    bool floor_clamp_enabled = true;
    bool agc_overreaction_enabled = true;
    // Different-data (ultra-fast) beating makes the AGC misjudge its gain: the
    // pair's cross term is suppressed and upward excursions above the additive
    // level get clipped. Both effects together push the sampled mean below the
    // additive sum, which is what hardware reports.
    double agc_suppression = 0.8;
    double agc_clip_headroom_db = 1.0;

    static PhyConfig ideal() {
        PhyConfig c;
        c.saturation_enabled = false;
        c.quantization_enabled = false;
        c.floor_clamp_enabled = false;
        c.agc_overreaction_enabled = false;
        return c;
    }
};

struct SenderState {
    double gain = 1.0;        // linear power gain of the path, (0, 1]
    double tx_power_mw = 1.0;
    double cfo_hz = 0.0;      // carrier frequency offset vs. the listener
    double initial_phase_rad = 0.0; // carrier phase + channel phase, folded
    double sync_delay_s = 0.0;      // transmit-start offset from slot start
    DataPattern pattern = DataPattern::SameAsOthers;
};

// AGC output-power overshoot transients. Short spikes ride on beating peaks;
// a long plateau can hold for a fraction of a beating cycle. Probabilities
// default to zero (estimator-facing scenarios); linearity studies enable them.
struct OvershootModel {
    double short_prob = 0.0;       // per beating peak
    double short_gain_db = 4.0;
    int short_duration_samples = 2;
    double long_prob = 0.0;        // per trace
    double long_gain_db = 2.0;
    double long_duration = 0.25;   // fraction of one beating cycle

    bool enabled() const { return short_prob > 0.0 || long_prob > 0.0; }
};

struct RssiTrace {
    std::vector<double> samples_dbm;
    double sampling_period_s = 1e-6;
};

namespace phy_detail {

// Two concurrent senders carry "different data" when their payload bit
// sequences differ symbol by symbol. Constant patterns are shift-invariant, so
// only whitened payloads degrade under symbol-scale desynchronization.
inline bool different_data(const SenderState& k, const SenderState& l, const PhyConfig& cfg) {
    if (k.pattern == DataPattern::SameAsOthers || l.pattern == DataPattern::SameAsOthers)
        return false;
    if (k.pattern != l.pattern) return true;
    if (k.pattern == DataPattern::Whitened &&
        std::abs(k.sync_delay_s - l.sync_delay_s) >= cfg.symbol_time_s)
        return true;
    return false;
}

} // namespace phy_detail

// Pairwise beat frequency. Identical payloads beat at the carrier offset
// difference alone; different payloads add the GFSK deviation split
// 2 * (modulation_index / 2) / symbol_time = 1/(2*T_sym) for index 0.5.
inline double effective_beat_frequency(const SenderState& k, const SenderState& l,
                                       const PhyConfig& cfg) {
    double df = k.cfo_hz - l.cfo_hz;
    if (phy_detail::different_data(k, l, cfg))
        df += 1.0 / (2.0 * cfg.symbol_time_s);
    return df;
}

// Coherence loss of the pairwise cross term under a transmit-start offset.
// Flat at 1 below half a symbol, linear to zero at one symbol; beyond that the
// overlap behaves like different data and is handled by the beat frequency.
inline double sync_attenuation(double delay_delta_s, const PhyConfig& cfg) {
    if (delay_delta_s < 0.0) throw InvalidInput("sync_attenuation: negative delay delta");
    const double half = cfg.symbol_time_s / 2.0;
    if (delay_delta_s <= half) return 1.0;
    if (delay_delta_s >= cfg.symbol_time_s) return 0.0;
    return (cfg.symbol_time_s - delay_delta_s) / half;
}

namespace phy_detail {

// Shared evaluator for the superposed power at time t. `receiver_agc` is true
// when modelling what the sampler sees (cross-term suppression for fast
// beating pairs), false for the pure field quantity.
inline double superposed_power_mw(const std::vector<SenderState>& senders, double t,
                                  const PhyConfig& cfg, bool receiver_agc) {
    if (senders.empty()) throw InvalidInput("superposed power: empty sender list");
    double total = 0.0;
    for (const auto& s : senders) total += s.tx_power_mw * s.gain;
    const std::size_t n = senders.size();
    for (std::size_t a = 0; a + 1 < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const SenderState& k = senders[a];
            const SenderState& l = senders[b];
            const double amp = 2.0 * std::sqrt(k.tx_power_mw * k.gain * l.tx_power_mw * l.gain);
            const double df = effective_beat_frequency(k, l, cfg);
            const double phase = k.initial_phase_rad - l.initial_phase_rad;
            double cross = amp * std::cos(2.0 * std::numbers::pi * df * t + phase);
            if (different_data(k, l, cfg)) {
                if (receiver_agc && cfg.agc_overreaction_enabled) cross *= cfg.agc_suppression;
            } else {
                cross *= sync_attenuation(std::abs(k.sync_delay_s - l.sync_delay_s), cfg);
            }
            total += cross;
        }
    }
    return std::max(total, 0.0); // guard against FP cancellation below zero
}

inline double additive_power_mw(const std::vector<SenderState>& senders) {
    double total = 0.0;
    for (const auto& s : senders) total += s.tx_power_mw * s.gain;
    return total;
}

} // namespace phy_detail

// Instantaneous superposed received power (mW) — the beating pattern itself,
// before any receiver effect.
inline double instantaneous_power(const std::vector<SenderState>& senders, double t,
                                  const PhyConfig& cfg) {
    return phy_detail::superposed_power_mw(senders, t, cfg, /*receiver_agc=*/false);
}

// RSSI sampling of the superposed signal: samples_per_packet readings at
// t = d * sampling_period, d = 1..N, run through the imperfection stages.
inline RssiTrace sample_trace(const std::vector<SenderState>& senders, const PhyConfig& cfg,
                              const OvershootModel& overshoot, std::uint64_t rng_seed) {
    if (senders.empty()) throw InvalidInput("sample_trace: empty sender list");
    Rng rng(rng_seed);

    bool any_fast_pair = false;
    for (std::size_t a = 0; a + 1 < senders.size() && !any_fast_pair; ++a)
        for (std::size_t b = a + 1; b < senders.size(); ++b)
            if (phy_detail::different_data(senders[a], senders[b], cfg)) {
                any_fast_pair = true;
                break;
            }

    const double clip_mw =
        phy_detail::additive_power_mw(senders) * db_to_gain(cfg.agc_clip_headroom_db);

    RssiTrace trace;
    trace.sampling_period_s = cfg.sampling_period_s;
    trace.samples_dbm.reserve(static_cast<std::size_t>(cfg.samples_per_packet));

    for (int d = 1; d <= cfg.samples_per_packet; ++d) {
        const double t = d * cfg.sampling_period_s;
        double mw = phy_detail::superposed_power_mw(senders, t, cfg, /*receiver_agc=*/true);
        if (cfg.agc_overreaction_enabled && any_fast_pair) mw = std::min(mw, clip_mw);
        double dbm = mw_to_dbm(mw);
        if (cfg.saturation_enabled) dbm = std::min(dbm, cfg.rx_ceiling_dbm);
        trace.samples_dbm.push_back(dbm);
    }

    // Overshoot transients are tied to beating: without a sender pair there are
    // no peaks to overshoot on.
    if (overshoot.enabled() && senders.size() >= 2) {
        // Strongest pair sets the beating cycle the AGC reacts to.
        std::size_t pa = 0, pb = 1;
        double best_amp = -1.0;
        for (std::size_t a = 0; a + 1 < senders.size(); ++a) {
            for (std::size_t b = a + 1; b < senders.size(); ++b) {
                const double amp = senders[a].tx_power_mw * senders[a].gain *
                                   senders[b].tx_power_mw * senders[b].gain;
                if (amp > best_amp) {
                    best_amp = amp;
                    pa = a;
                    pb = b;
                }
            }
        }
        const double df = std::abs(effective_beat_frequency(senders[pa], senders[pb], cfg));
        if (df > 0.0) {
            const double trace_end = cfg.samples_per_packet * cfg.sampling_period_s;
            const double phase = senders[pa].initial_phase_rad - senders[pb].initial_phase_rad;
            const double period = 1.0 / df;
            // Peak instants solve cos(2*pi*df*t + phase) = 1.
            double t_peak = -phase / (2.0 * std::numbers::pi * df);
            t_peak -= std::floor(t_peak / period) * period; // first peak in (0, period]
            for (; t_peak <= trace_end; t_peak += period) {
                if (!rng.bernoulli(overshoot.short_prob)) continue;
                auto first = static_cast<long>(std::ceil(t_peak / cfg.sampling_period_s));
                for (long i = std::max(first, 1L);
                     i < first + overshoot.short_duration_samples &&
                     i <= cfg.samples_per_packet;
                     ++i)
                    trace.samples_dbm[static_cast<std::size_t>(i - 1)] += overshoot.short_gain_db;
            }
            if (rng.bernoulli(overshoot.long_prob)) {
                const auto n = static_cast<std::uint64_t>(cfg.samples_per_packet);
                const auto start = static_cast<std::size_t>(rng.uniform_int(n));
                const auto dur = static_cast<std::size_t>(std::max(
                    1.0, std::round(overshoot.long_duration * period / cfg.sampling_period_s)));
                for (std::size_t i = start; i < std::min(start + dur, trace.samples_dbm.size()); ++i)
                    trace.samples_dbm[i] += overshoot.long_gain_db;
            }
        }
    }

    for (auto& dbm : trace.samples_dbm) {
        if (cfg.quantization_enabled) dbm = quantize_dbm(dbm, cfg.rssi_quantum_db);
        if (cfg.floor_clamp_enabled) dbm = std::max(dbm, cfg.rx_floor_dbm);
    }
    return trace;
}

// Mean received power of a trace: average in the linear domain, report once.
inline PowerLevel mean_power(const RssiTrace& trace) {
    if (trace.samples_dbm.empty()) throw InvalidInput("mean_power: empty trace");
    double sum_mw = 0.0;
    for (double dbm : trace.samples_dbm) sum_mw += dbm_to_mw(dbm);
    const double mean = sum_mw / static_cast<double>(trace.samples_dbm.size());
    if (mean <= 0.0) throw InvalidInput("mean_power: zero mean power");
    return PowerLevel::from_mw(mean);
}

// Measured superposed mean over the sum of individually attenuated powers.
// 1.0 means perfect additivity.
inline double power_ratio(double measured_sum_mw, const std::vector<double>& individuals_mw) {
    if (individuals_mw.empty()) throw InvalidInput("power_ratio: no individual powers");
    double denom = 0.0;
    for (double p : individuals_mw) {
        if (p <= 0.0) throw InvalidInput("power_ratio: non-positive individual power");
        denom += p;
    }
    if (denom <= 0.0) throw InvalidInput("power_ratio: zero denominator");
    return measured_sum_mw / denom;
}

} // namespace igesim
