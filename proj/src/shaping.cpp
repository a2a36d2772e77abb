#include "ofsim/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ofsim::shaping {

int Constellation::bits_per_symbol() const
{
    int bits = 0;
    while ((1 << bits) < order) ++bits;
    return bits;
}

Constellation build_square_qam(int order)
{
    if (order != 4 && order != 16 && order != 64 && order != 256)
        throw Error("build_square_qam: unsupported order " + std::to_string(order) +
                    " (expected 4, 16, 64 or 256)");
    int levels = 1;
    int axis_bits = 0;
    while (levels * levels < order) {
        levels *= 2;
        ++axis_bits;
    }

    Constellation c;
    c.order = order;
    c.points.reserve(static_cast<std::size_t>(order));
    c.labels.reserve(static_cast<std::size_t>(order));
    for (int i = 0; i < levels; ++i) {
        for (int q = 0; q < levels; ++q) {
            const double re = 2.0 * i - (levels - 1);
            const double im = 2.0 * q - (levels - 1);
            c.points.emplace_back(re, im);
            const auto gi = static_cast<std::uint32_t>(i ^ (i >> 1));
            const auto gq = static_cast<std::uint32_t>(q ^ (q >> 1));
            c.labels.push_back((gi << axis_bits) | gq);
        }
    }
    double energy = 0.0;
    for (const auto& p : c.points) energy += std::norm(p);
    energy /= order;
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& p : c.points) p *= scale;
    return c;
}

double entropy_bits(const std::vector<double>& probabilities)
{
    double h = 0.0;
    for (double p : probabilities)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

namespace {

std::vector<double> mb_probabilities(const Constellation& c, double lambda)
{
    // Shift exponents by the minimum energy so large lambda does not underflow.
    double e_min = std::norm(c.points.front());
    for (const auto& p : c.points) e_min = std::min(e_min, std::norm(p));
    std::vector<double> prob(c.points.size());
    double z = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
        prob[i] = std::exp(-lambda * (std::norm(c.points[i]) - e_min));
        z += prob[i];
    }
    for (auto& p : prob) p /= z;
    return prob;
}

double mb_entropy(const Constellation& c, double lambda)
{
    return entropy_bits(mb_probabilities(c, lambda));
}

}  // namespace

ShapedFormat maxwell_boltzmann(const Constellation& c, double lambda)
{
    if (!(lambda >= 0.0)) throw Error("maxwell_boltzmann: lambda must be >= 0");
    if (c.points.empty()) throw Error("maxwell_boltzmann: empty constellation");

    ShapedFormat out;
    out.distribution.probabilities = mb_probabilities(c, lambda);
    out.distribution.lambda = lambda;
    out.distribution.entropy_bits = entropy_bits(out.distribution.probabilities);

    double energy = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i)
        energy += out.distribution.probabilities[i] * std::norm(c.points[i]);
    out.constellation = c;
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& p : out.constellation.points) p *= scale;
    return out;
}

double min_entropy_bits(const Constellation& c)
{
    double e_min = std::norm(c.points.front());
    for (const auto& p : c.points) e_min = std::min(e_min, std::norm(p));
    std::size_t count = 0;
    for (const auto& p : c.points)
        if (std::norm(p) <= e_min * (1.0 + 1e-9)) ++count;
    return std::log2(static_cast<double>(count));
}

double solve_lambda_for_entropy(const Constellation& c, double target_bits)
{
    const double h_max = std::log2(static_cast<double>(c.points.size()));
    const double h_min = min_entropy_bits(c);
    if (std::abs(target_bits - h_max) <= 1e-12) return 0.0;
    if (!(target_bits > h_min) || target_bits > h_max)
        throw Error("solve_lambda_for_entropy: target " + std::to_string(target_bits) +
                    " bits outside achievable range (" + std::to_string(h_min) + ", " +
                    std::to_string(h_max) + "]");

    double lo = 0.0;
    double hi = 50.0;
    while (mb_entropy(c, hi) >= target_bits) {
        hi *= 2.0;
        if (hi > 1e12) throw Error("solve_lambda_for_entropy: bracket expansion failed");
    }
    // Entropy is strictly decreasing in lambda.
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double h = mb_entropy(c, mid);
        if (std::abs(h - target_bits) < 1e-10) return mid;
        if (h > target_bits)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

ShapedFormat shaped_qam(int order, double entropy)
{
    const auto qam = build_square_qam(order);
    return maxwell_boltzmann(qam, solve_lambda_for_entropy(qam, entropy));
}

MomentReport moments(const Constellation& c, const ShapingDistribution& d)
{
    if (c.points.size() != d.probabilities.size())
        throw Error("moments: distribution is not attached to this constellation");
    MomentReport r;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const double e = std::norm(c.points[i]);
        r.mu2 += d.probabilities[i] * e;
        r.mu4 += d.probabilities[i] * e * e;
    }
    r.kurtosis = r.mu4 / (r.mu2 * r.mu2);
    return r;
}

double gmi(const Constellation& c, const ShapingDistribution& d, double snr_linear,
           std::size_t n_samples, std::uint64_t seed)
{
    if (!(snr_linear > 0.0)) throw Error("gmi: snr must be positive");
    if (c.points.size() != d.probabilities.size())
        throw Error("gmi: distribution is not attached to this constellation");
    if (n_samples == 0) throw Error("gmi: n_samples must be positive");

    const std::size_t n_points = c.points.size();
    const int n_bits = c.bits_per_symbol();
    std::vector<double> log_prior(n_points);
    for (std::size_t j = 0; j < n_points; ++j)
        log_prior[j] = d.probabilities[j] > 0.0 ? std::log(d.probabilities[j]) : -1e300;

    const double sigma = std::sqrt(0.5 / snr_linear);
    constexpr std::size_t kShard = 1 << 16;
    std::vector<double> metric(n_points);
    std::vector<double> weight(n_points);

    double penalty_nats = 0.0;
    for (std::size_t start = 0, shard = 0; start < n_samples; start += kShard, ++shard) {
        std::mt19937_64 rng(derive_seed(seed, shard));
        std::discrete_distribution<std::size_t> pick(d.probabilities.begin(), d.probabilities.end());
        std::normal_distribution<double> gauss(0.0, sigma);
        const std::size_t end = std::min(n_samples, start + kShard);
        for (std::size_t s = start; s < end; ++s) {
            const std::size_t k = pick(rng);
            const double nr = gauss(rng);
            const double ni = gauss(rng);
            const Complex y = c.points[k] + Complex(nr, ni);

            double m_max = -1e300;
            for (std::size_t j = 0; j < n_points; ++j) {
                metric[j] = log_prior[j] - snr_linear * std::norm(y - c.points[j]);
                m_max = std::max(m_max, metric[j]);
            }
            double total = 0.0;
            for (std::size_t j = 0; j < n_points; ++j) {
                weight[j] = std::exp(metric[j] - m_max);
                total += weight[j];
            }
            const std::uint32_t tx_label = c.labels[k];
            for (int b = 0; b < n_bits; ++b) {
                const std::uint32_t mask = 1u << b;
                double match = 0.0;
                for (std::size_t j = 0; j < n_points; ++j)
                    if ((c.labels[j] & mask) == (tx_label & mask)) match += weight[j];
                penalty_nats += std::log(total / match);
            }
        }
    }
    const double h = d.entropy_bits;
    const double value = h - penalty_nats / (static_cast<double>(n_samples) * std::log(2.0));
    return std::clamp(value, 0.0, h);
}

double gap_to_capacity(double snr_linear, double gmi_bits)
{
    if (!(snr_linear > 0.0)) throw Error("gap_to_capacity: snr must be positive");
    return std::log2(1.0 + snr_linear) - gmi_bits;
}

}  // namespace ofsim::shaping
