#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ofsim/common.hpp"

namespace ofsim {

/// Dual-polarization complex baseband field. |sample|^2 is instantaneous
/// power in W; the record is treated as one period of a periodic signal.
struct DualPolWaveform {
    CVec x;
    CVec y;
    double sample_rate_hz = 0.0;
    double center_freq_hz = 0.0;

    std::size_t size() const { return x.size(); }
    double duration_s() const { return static_cast<double>(x.size()) / sample_rate_hz; }

    /// Mean total power over both polarizations in W.
    double power_w() const;
    double power_mw() const { return power_w() * 1e3; }

    void scale(double amplitude);
    /// Rescales to the given total average power (mW).
    void set_power_mw(double p_mw);

    /// Throws Error unless both polarizations share length and rate.
    void validate() const;
};

/// Binary "FLW1" container: little-endian header (magic "FLW1", sample rate
/// f64, center frequency f64, length u64) followed by interleaved complex64
/// samples of X, then of Y.
void write_flw1(std::ostream& os, const DualPolWaveform& w);
DualPolWaveform read_flw1(std::istream& is);
void save_flw1(const std::string& path, const DualPolWaveform& w);
DualPolWaveform load_flw1(const std::string& path);

}  // namespace ofsim
