#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ofsim/common.hpp"
#include "ofsim/shaping.hpp"
#include "ofsim/waveform.hpp"

namespace ofsim::tx {

/// Digital subcarrier layout of one optical channel. M = 1 is single carrier.
struct SubcarrierPlan {
    int m_subcarriers = 1;
    double aggregate_baud = 32e9;
    double rolloff = 0.05;
    double spacing_hz = 0.0;

    /// Default spacing (R/M)(1 + rolloff).
    static SubcarrierPlan make(int m, double aggregate_baud, double rolloff = 0.05);

    double subcarrier_baud() const { return aggregate_baud / m_subcarriers; }
    /// Frequency offset of subcarrier m: (m - (M-1)/2) * spacing.
    double offset_hz(int m) const;
    /// Two-sided bandwidth occupied by the whole subcarrier comb.
    double occupied_bandwidth_hz() const;
    void validate() const;
};

struct TxImpairments {
    double laser_linewidth_hz = 0.0;
    double iq_skew_s = 0.0;
    int quant_bits = 0;  // 0 disables quantization
    double clip_ratio = 3.0;

    void validate() const;
};

/// One polarization's symbol stream. Pilots are QPSK at unit energy.
struct SymbolFrame {
    CVec symbols;
    std::vector<std::uint8_t> pilot_mask;

    std::size_t n_pilots() const;
    CVec payload() const;
    CVec pilot_values() const;
};

std::size_t pilot_count(std::size_t n_payload, double pilot_rate);

/// Payload length whose frame (payload + pilots) has exactly `frame_length`
/// symbols. Throws Error when no such payload exists.
std::size_t payload_for_frame(std::size_t frame_length, double pilot_rate);

SymbolFrame generate_symbol_frame(const shaping::ShapedFormat& format, std::size_t n_payload,
                                  double pilot_rate, std::uint64_t seed);

/// Root-raised-cosine amplitude response at frequency normalized to the
/// symbol rate. Its square sums to one over symbol-rate aliases.
double rrc_response(double f_over_baud, double rolloff);

/// Periodic RRC pulse shaping done in the frequency domain: N symbols in,
/// n_samples samples out. Samples-per-symbol is n_samples / N.
CVec rrc_shape(const CVec& symbols, std::size_t n_samples, double rolloff);

/// Dual-polarization RRC modulation at `samples_per_symbol` (may be
/// fractional as long as N * sps is an integer).
DualPolWaveform rrc_modulate(const CVec& x, const CVec& y, double symbol_rate, double rolloff,
                             double samples_per_symbol);

/// Circular frequency shift by an exact number of DFT bins. Throws when the
/// shift does not fall on the record's frequency grid.
void shift_frequency(CVec& v, double shift_hz, double sample_rate_hz);

DualPolWaveform subcarrier_mux(const std::vector<DualPolWaveform>& streams,
                               const SubcarrierPlan& plan);

struct WdmChannel {
    DualPolWaveform wave;
    double center_freq_hz = 0.0;
    double slot_width_hz = 0.0;
};

/// Places each channel's spectrum (limited to its slot) into one band field
/// centered at band_center_hz and sampled at band_sample_rate_hz.
DualPolWaveform wdm_mux(const std::vector<WdmChannel>& channels, double band_center_hz,
                        double band_sample_rate_hz);

/// Wiener phase process phi[n] (phi[0] = 0, increment variance
/// 2 pi linewidth / fs) applied to both polarizations.
DualPolWaveform apply_phase_noise(DualPolWaveform w, double linewidth_hz, std::uint64_t seed);

/// Delays the quadrature rail of both polarizations by skew_s using a
/// frequency-domain linear phase.
DualPolWaveform apply_iq_skew(DualPolWaveform w, double skew_s);

/// Clips each rail at clip_ratio times its RMS and rounds to 2^bits uniform
/// mid-rise levels. bits = 0 leaves the waveform untouched.
DualPolWaveform apply_quantization(DualPolWaveform w, int bits, double clip_ratio);

DualPolWaveform apply_impairments(DualPolWaveform w, const TxImpairments& imp, std::uint64_t seed);

/// Smallest aggregate symbol count >= min_symbols that is a multiple of M
/// and puts every subcarrier offset, every extra frequency and every sample
/// rate on an integer grid for a periodic record.
std::size_t grid_symbol_count(const SubcarrierPlan& plan, std::span<const double> sample_rates_hz,
                              std::span<const double> grid_freqs_hz, std::size_t min_symbols);

/// A fully generated optical channel with its transmitted symbols.
struct ChannelSignal {
    DualPolWaveform wave;
    SubcarrierPlan plan;
    std::vector<SymbolFrame> frames_x;  // one per subcarrier
    std::vector<SymbolFrame> frames_y;
};

struct ChannelSpec {
    SubcarrierPlan plan;
    std::size_t symbols_per_subcarrier = 0;  // frame length incl. pilots
    double pilot_rate = 0.02;
    double sample_rate_hz = 80e9;
    double launch_power_mw = 1.0;
};

/// Shaped symbols, pilots, per-subcarrier RRC shaping and subcarrier
/// multiplexing. The result has the requested launch power.
ChannelSignal generate_channel(const shaping::ShapedFormat& format, const ChannelSpec& spec,
                               std::uint64_t seed);

}  // namespace ofsim::tx
