#pragma once

#include <string>
#include <vector>

#include "ofsim/common.hpp"

namespace ofsim::model {

/// Nonlinear coefficient at one distance. Powers are in mW, so that the
/// distortion variance is sigma^2[mW] = a_nli * P^3[mW^3].
struct NliFit {
    double a_nli_per_mw2 = 0.0;
    double distance_km = 0.0;
    int m_subcarriers = 1;
    double entropy_bits = 0.0;
    double residual_db = 0.0;  // RMS log residual of a multi-power fit
};

struct SnrModelParams {
    double eta = 1.0;
    double s0 = 1e3;  // back-to-back SNR ceiling, linear
    double f0_hz = 193.775e12;
    double d_s_per_m2 = 20.8e-6;
    double r_baud = 32e9;
    double l_m = 0.0;
    double delta_theta_hz = 0.0;
    double zeta = 3.0;
    int m = 1;
    double a_nli_per_mw2 = 0.0;
    double n0_mw = 0.0;

    void validate() const;
};

struct SnrModelTerms {
    double ceiling = 0.0;  // 1/(eta s0)
    double eepn = 0.0;
    double nli = 0.0;      // nonlinear-threshold term
    double snr = 0.0;      // reciprocal of the sum
};

/// a_nli = sigma^2 / P^3 for a single noiseless measurement.
double fit_anli(double distortion_variance_mw, double launch_power_mw);

/// Fixed-slope least-squares fit of log sigma^2 = 3 log P + log a over
/// several launch powers; residual_db is the RMS residual in dB.
NliFit fit_anli(const std::vector<double>& distortion_variance_mw,
                const std::vector<double>& launch_power_mw);

/// Launch power maximizing P / (sigma_ase^2 + a P^3).
double nlt_power(double a_nli_per_mw2, double sigma_ase2_mw);

/// Per-polarization ASE variance accumulated over n_spans amplifiers, in mW:
/// n_spans (G-1) h f0 n_sp B with n_sp = NF G / (2 (G-1)).
double ase_variance(double nf_db, double span_gain_db, int n_spans, double f0_hz, double bandwidth_hz);

/// EEPN term pi c D R L dtheta / (2 zeta M f0^2), dimensionless.
double eepn_term(const SnrModelParams& p);

SnrModelTerms snr_model_terms(const SnrModelParams& p);

/// Linear SNR: [1/(eta s0) + EEPN + 3/2^(2/3) (a N0^2 / M^2)^(1/3)]^-1.
double snr_model(const SnrModelParams& p);

struct AnliPoint {
    double distance_km = 0.0;
    double a_nli_per_mw2 = 0.0;
};

struct CurvePoint {
    double distance_km = 0.0;
    double a_nli_per_mw2 = 0.0;
    double n0_mw = 0.0;
    SnrModelTerms terms;
};

/// Evaluates the model along `distances_km`. a_nli is interpolated linearly
/// from `anli_table` (which must cover every distance); N0 grows linearly
/// with the number of spans of `span_length_km`, starting from
/// `n0_per_span_mw`.
std::vector<CurvePoint> snr_vs_distance_curve(const SnrModelParams& base,
                                              const std::vector<double>& distances_km,
                                              const std::vector<AnliPoint>& anli_table,
                                              double n0_per_span_mw, double span_length_km);

}  // namespace ofsim::model
