#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ofsim/waveform.hpp"

namespace ofsim::fiber {

/// Default fiber class: ultra-low-loss, large effective area. These values are
/// assumptions, not measured parameters of any particular fiber.
inline constexpr double kDefaultAlphaDbPerKm = 0.157;
inline constexpr double kDefaultDispersionPsNmKm = 20.8;
inline constexpr double kDefaultGammaPerWKm = 0.8;

struct FiberSpan {
    double length_km = 55.0;
    double alpha_db_per_km = kDefaultAlphaDbPerKm;
    double dispersion_ps_nm_km = kDefaultDispersionPsNmKm;
    double gamma_per_w_km = kDefaultGammaPerWKm;
    double ref_freq_hz = 193.775e12;

    double loss_db() const { return alpha_db_per_km * length_km; }
    void validate() const;
};

struct LinkConfig {
    std::vector<FiberSpan> spans;  // one loop
    double edfa_noise_figure_db = 5.0;
    bool enable_ase = true;
    int loops = 1;
    bool scramble_per_loop = false;
    int snapshot_every = 1;  // spans between snapshots

    double loop_length_km() const;
    void validate() const;
};

struct SsfmConfig {
    double max_nl_phase_rad = 1e-3;
    int min_steps_per_span = 50;
    /// Output band-edge level (relative to the spectral peak) above which a
    /// span is flagged as aliased, provided the edge also grew during the span.
    double alias_guard_db = 40.0;

    void validate() const;
};

/// beta2 in s^2/m from D in ps/(nm km) at optical frequency f0.
double beta2_from_dispersion(double dispersion_ps_nm_km, double f0_hz);

/// Manakov propagation over one span with a symmetric split-step scheme.
DualPolWaveform propagate_span(DualPolWaveform field, const FiberSpan& span,
                               const SsfmConfig& cfg);

/// Lumped amplifier: sqrt(G) field gain plus, when enabled, circular white
/// Gaussian ASE per polarization with PSD (G-1) h f0 n_sp over the sample rate.
DualPolWaveform amplify(DualPolWaveform field, double gain_db, double nf_db, std::uint64_t seed,
                        bool enable_ase);

/// ASE PSD per polarization (W/Hz) for an amplifier of the given gain and NF.
double ase_psd_w_per_hz(double gain_db, double nf_db, double f0_hz);

/// Population-inversion factor n_sp = NF G / (2 (G - 1)).
double spontaneous_emission_factor(double gain_db, double nf_db);

/// Haar-random SU(2) rotation of the Jones vector.
DualPolWaveform polarization_scramble(DualPolWaveform field, std::uint64_t seed);

struct Snapshot {
    double distance_km = 0.0;
    DualPolWaveform field;
};

/// Loops x spans of propagate_span + amplify(gain = span loss), scrambling
/// at loop boundaries when enabled. `on_snapshot` sees the field every
/// `snapshot_every` spans.
void propagate_link(DualPolWaveform field, const LinkConfig& link, const SsfmConfig& cfg,
                    std::uint64_t seed,
                    const std::function<void(double distance_km, const DualPolWaveform&)>& on_snapshot);

std::vector<Snapshot> propagate_link(DualPolWaveform field, const LinkConfig& link,
                                     const SsfmConfig& cfg, std::uint64_t seed);

/// Dispersion-only propagation (exact all-pass) over length_km.
DualPolWaveform apply_dispersion(DualPolWaveform field, double dispersion_ps_nm_km,
                                 double length_km, double f0_hz);

}  // namespace ofsim::fiber
