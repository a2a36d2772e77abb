#pragma once

#include <cstdint>
#include <vector>

#include "ofsim/common.hpp"

namespace ofsim::shaping {

/// Square QAM alphabet with Gray labels. Bit i of labels[k] is the i-th bit of
/// point k; the upper half of the bits addresses the I axis, the lower half Q.
struct Constellation {
    std::vector<Complex> points;
    std::vector<std::uint32_t> labels;
    int order = 0;

    int bits_per_symbol() const;
};

struct ShapingDistribution {
    std::vector<double> probabilities;
    double lambda = 0.0;
    double entropy_bits = 0.0;
};

/// A constellation together with the distribution it is normalized under.
struct ShapedFormat {
    Constellation constellation;
    ShapingDistribution distribution;
};

struct MomentReport {
    double mu2 = 0.0;
    double mu4 = 0.0;
    double kurtosis = 0.0;
};

/// Gray-labeled square QAM of the given order (4, 16, 64 or 256), unit
/// average energy under uniform probabilities.
Constellation build_square_qam(int order);

/// Maxwell-Boltzmann shaping: p_i proportional to exp(-lambda |x_i|^2) where x_i
/// are the points of c as given. The returned constellation is rescaled to
/// unit energy under the returned distribution.
ShapedFormat maxwell_boltzmann(const Constellation& c, double lambda);

/// Uniform distribution over c (lambda = 0).
inline ShapedFormat uniform(const Constellation& c) { return maxwell_boltzmann(c, 0.0); }

double entropy_bits(const std::vector<double>& probabilities);

/// Entropy reached in the lambda -> infinity limit (uniform over the
/// minimum-energy points).
double min_entropy_bits(const Constellation& c);

/// Rate lambda for which the Maxwell-Boltzmann distribution on c has the given
/// entropy, to within 1e-6 bits. Throws Error if target is not achievable.
double solve_lambda_for_entropy(const Constellation& c, double target_bits);

/// Convenience: square QAM of `order` shaped to `entropy_bits` (uniform when
/// entropy equals log2(order)).
ShapedFormat shaped_qam(int order, double entropy_bits);

MomentReport moments(const Constellation& c, const ShapingDistribution& d);

/// Monte Carlo bit-metric GMI (bits per 2D symbol) over circular AWGN with
/// noise variance 1/snr, using exact log-sum-exp bit metrics. Clipped to [0, H].
double gmi(const Constellation& c, const ShapingDistribution& d, double snr_linear,
           std::size_t n_samples, std::uint64_t seed);

/// log2(1 + snr) - gmi.
double gap_to_capacity(double snr_linear, double gmi_bits);

}  // namespace ofsim::shaping
