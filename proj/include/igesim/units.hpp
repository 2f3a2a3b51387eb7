#pragma once

// Power units and conversions. Everything in the library carries power either
// as linear milliwatts (for superposition arithmetic) or as dBm (for radio
// bookkeeping); PowerLevel is the boundary type that keeps the two honest.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace igesim {

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double mw_to_dbm(double mw) {
    if (mw <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(mw);
}

// Linear power gain (p_rx/p_tx) <-> dB.
inline double gain_to_db(double gain) { return 10.0 * std::log10(gain); }
inline double db_to_gain(double db) { return std::pow(10.0, db / 10.0); }

// A transmit/receive power level. Stored in milliwatts; constructed from
// either unit. Strictly positive and finite by construction so that the dBm
// form always exists.
class PowerLevel {
public:
    static PowerLevel from_dbm(double dbm) {
        if (!std::isfinite(dbm))
            throw std::invalid_argument("PowerLevel: non-finite dBm value");
        return PowerLevel(dbm_to_mw(dbm));
    }

    static PowerLevel from_mw(double mw) {
        if (!std::isfinite(mw) || mw <= 0.0)
            throw std::invalid_argument("PowerLevel: power must be finite and > 0 mW, got " +
                                        std::to_string(mw));
        return PowerLevel(mw);
    }

    double mw() const { return mw_; }
    double dbm() const { return mw_to_dbm(mw_); }

    friend bool operator==(const PowerLevel& a, const PowerLevel& b) { return a.mw_ == b.mw_; }
    friend bool operator<(const PowerLevel& a, const PowerLevel& b) { return a.mw_ < b.mw_; }

private:
    explicit PowerLevel(double mw) : mw_(mw) {}
    double mw_;
};

// Round-half-away-from-zero to a multiple of `quantum`. This is the RSSI
// register behaviour: -49.5 dBm reads as -50, +0.5 as +1.
inline double quantize_dbm(double dbm, double quantum) {
    if (quantum <= 0.0) throw std::invalid_argument("quantize_dbm: quantum must be > 0");
    if (std::isinf(dbm)) return dbm;
    double steps = std::floor(std::abs(dbm) / quantum + 0.5);
    return std::copysign(steps * quantum, dbm);
}

} // namespace igesim
