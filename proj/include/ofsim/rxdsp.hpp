#pragma once

#include <cstdint>
#include <vector>

#include "ofsim/txchain.hpp"
#include "ofsim/waveform.hpp"

namespace ofsim::rx {

enum class MimoMode {
    Sc4x4,  // four real tributaries per (sub)carrier
    Mc8x8,  // eight real tributaries of a mirror-frequency subcarrier pair
};

struct RxChainConfig {
    double pilot_rate = 0.02;
    double lms_step = 1e-3;
    int pol_taps = 31;
    int mimo_taps = 51;
    int training_passes = 2;
    MimoMode mimo_mode = MimoMode::Sc4x4;
    bool enable_pol_demux = true;
    bool enable_mimo = true;
    /// Pilots averaged (centered window) per phase estimate; 1 is pilot-wise.
    int cpe_average_pilots = 1;
    double max_freq_offset_hz = 1e9;
    /// Residual MSE (relative to unit symbol energy) above which an adaptive
    /// stage reports non-convergence.
    double convergence_mse = 0.5;

    void validate() const;
};

struct SnrReport {
    std::vector<double> snr_db_per_subcarrier;
    double snr_db_mean = 0.0;
    /// Ratio of total signal to total error power across all subcarriers.
    double snr_db_pooled = 0.0;
    std::size_t n_symbols_used = 0;
};

/// Received symbols of one (sub)carrier, one stream per polarization.
struct PolSymbols {
    CVec x;
    CVec y;
};

inline constexpr double kSnrCapDb = 60.0;

/// Receiver-side Wiener phase rotation emulating a wider LO linewidth. Must
/// be applied before dispersion compensation.
DualPolWaveform emulate_lo_linewidth(DualPolWaveform w, double linewidth_hz, std::uint64_t seed);

/// All-pass removing the dispersion of `length_km` of fiber with D at f0.
DualPolWaveform cd_compensate(DualPolWaveform w, double dispersion_ps_nm_km, double length_km,
                              double f0_hz);

/// Selects the band [offset - bw/2, offset + bw/2] relative to the field's
/// center and resamples it to `out_sample_rate_hz` around that offset.
DualPolWaveform extract_channel(const DualPolWaveform& w, double offset_hz,
                                double out_sample_rate_hz, double bandwidth_hz);

/// Inverse of tx::subcarrier_mux: each subcarrier shifted to baseband and
/// isolated with a brick-wall filter of width `spacing_hz`.
std::vector<DualPolWaveform> subcarrier_demux(const DualPolWaveform& w, const tx::SubcarrierPlan& plan);

/// RRC matched filter and decimation to one sample per symbol.
PolSymbols matched_filter(const DualPolWaveform& w, double symbol_rate, double rolloff);

/// Scales a symbol pair to unit mean energy per polarization.
void normalize_power(PolSymbols& s);

struct AdaptiveResult {
    std::vector<CVec> streams;
    bool converged = false;
    double residual_mse = 0.0;
};

/// Data-aided 2x2 complex butterfly FIR adapted by LMS on the training
/// sequence, then applied with frozen taps.
AdaptiveResult pol_demux_lms(const CVec& x, const CVec& y, const CVec& train_x,
                             const CVec& train_y, const RxChainConfig& cfg);

struct CarrierRecoveryResult {
    CVec symbols;
    double freq_offset_hz = 0.0;
    double pilot_snr_db = 0.0;
    bool low_pilot_snr = false;  // pilot SNR below 0 dB
};

/// Pilot-aided carrier recovery: frequency offset from the pilot phase slope
/// (coarse periodogram search, then linear fit), phase from pilot-wise
/// errors linearly interpolated across the payload.
CarrierRecoveryResult carrier_recovery(const CVec& symbols, const std::vector<std::uint8_t>& pilot_mask,
                                       const CVec& pilot_values, double symbol_rate,
                                       const RxChainConfig& cfg);

/// Real-valued MIMO FIR adapted by data-aided LMS. Streams are complex; each
/// contributes its I and Q rails. Sc4x4 expects 2 streams, Mc8x8 expects 4.
AdaptiveResult real_mimo(const std::vector<CVec>& streams, const RxChainConfig& cfg,
                         const std::vector<CVec>& training);

/// SNR = E|x|^2 / E|x - xhat|^2 per subcarrier (both polarizations pooled);
/// mean taken over subcarriers in the linear domain. Capped at 60 dB.
SnrReport estimate_snr(const std::vector<PolSymbols>& rx, const std::vector<PolSymbols>& tx);

/// Accumulated link state the receiver must undo.
struct ReceiverSetup {
    RxChainConfig chain;
    double cd_dispersion_ps_nm_km = 0.0;
    double cd_length_km = 0.0;
    double f0_hz = 193.775e12;
    double lo_linewidth_hz = 0.0;
    std::uint64_t seed = 0;
};

struct ReceiverOutput {
    SnrReport report;
    std::vector<PolSymbols> payload_rx;
    bool converged = true;
    bool low_pilot_snr = false;
};

/// Full DSP chain on a channel already at baseband: LO emulation, CD
/// compensation, subcarrier demux, matched filter, polarization demux,
/// carrier recovery, real MIMO, SNR.
ReceiverOutput receive(const DualPolWaveform& channel, const tx::ChannelSignal& reference,
                       const ReceiverSetup& setup);

/// Ideal receiver for distortion measurements: CD compensation, matched
/// filter, a memoryless data-aided 2x2 Jones fit per subcarrier and, when
/// phase_window > 1, data-aided phase tracking over that many symbols.
SnrReport ideal_receiver_snr(const DualPolWaveform& channel, const tx::ChannelSignal& reference,
                             double dispersion_ps_nm_km, double length_km, double f0_hz,
                             int phase_window = 0);

}  // namespace ofsim::rx
