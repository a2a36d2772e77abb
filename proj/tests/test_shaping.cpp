#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

#include "ofsim/shaping.hpp"
#include "oracles.hpp"

using namespace ofsim;
using namespace ofsim::shaping;

namespace {

// Unit-energy square QAM energies written out independently of the library.
std::vector<double> qam_energies(int levels)
{
    double e = 0.0;
    std::vector<double> out;
    for (int i = 0; i < levels; ++i)
        for (int q = 0; q < levels; ++q) {
            const double re = 2.0 * i - (levels - 1), im = 2.0 * q - (levels - 1);
            out.push_back(re * re + im * im);
            e += out.back();
        }
    e /= out.size();
    for (auto& v : out) v /= e;
    return out;
}

double popcount_diff(std::uint32_t a, std::uint32_t b) { return std::popcount(a ^ b); }

}  // namespace

TEST_CASE("square QAM construction")
{
    auto qpsk = build_square_qam(4);
    CHECK(qpsk.order == 4);
    for (const auto& p : qpsk.points) {
        CHECK(std::abs(std::abs(p.real()) - 1.0 / std::sqrt(2.0)) < 1e-15);
        CHECK(std::abs(std::abs(p.imag()) - 1.0 / std::sqrt(2.0)) < 1e-15);
    }
    CHECK_THROWS_AS(build_square_qam(8), Error);
    CHECK_THROWS_AS(build_square_qam(32), Error);

    for (int order : {4, 16, 64, 256}) {
        auto c = build_square_qam(order);
        REQUIRE(c.points.size() == static_cast<std::size_t>(order));
        std::set<std::uint32_t> labels(c.labels.begin(), c.labels.end());
        CHECK(labels.size() == c.labels.size());
        CHECK(*labels.rbegin() == static_cast<std::uint32_t>(order - 1));
        double e = 0.0;
        for (const auto& p : c.points) e += std::norm(p);
        CHECK(std::abs(e / order - 1.0) < 1e-12);
        // Gray: nearest horizontal/vertical neighbours differ in exactly one bit.
        const double dmin = std::abs(c.points[0] - c.points[1]);
        for (std::size_t a = 0; a < c.points.size(); ++a)
            for (std::size_t b = a + 1; b < c.points.size(); ++b)
                if (std::abs(std::abs(c.points[a] - c.points[b]) - dmin) < 1e-9)
                    CHECK(popcount_diff(c.labels[a], c.labels[b]) == 1);
    }
}

TEST_CASE("uniform kurtosis values")
{
    auto q4 = uniform(build_square_qam(4));
    CHECK(moments(q4.constellation, q4.distribution).kurtosis == doctest::Approx(1.0).epsilon(1e-14));
    auto q16 = uniform(build_square_qam(16));
    auto m = moments(q16.constellation, q16.distribution);
    CHECK(std::abs(m.kurtosis - 1.32) < 1e-12);
    CHECK(std::abs(m.mu2 - 1.0) < 1e-12);
}

TEST_CASE("Maxwell-Boltzmann distribution")
{
    auto c = build_square_qam(16);
    auto u = maxwell_boltzmann(c, 0.0);
    CHECK(std::abs(u.distribution.entropy_bits - 4.0) < 1e-12);
    CHECK_THROWS_AS(maxwell_boltzmann(c, -0.1), Error);

    auto big = maxwell_boltzmann(c, 200.0);
    CHECK(std::abs(big.distribution.entropy_bits - 2.0) < 1e-6);
    CHECK(std::abs(min_entropy_bits(c) - 2.0) < 1e-12);

    const double lambda = 1.7;
    auto s = maxwell_boltzmann(c, lambda);
    double sum = 0.0, e = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        sum += s.distribution.probabilities[i];
        e += s.distribution.probabilities[i] * std::norm(s.constellation.points[i]);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(std::abs(e - 1.0) < 1e-12);
    // p_i / p_j = exp(-lambda (|x_i|^2 - |x_j|^2)) with the input points.
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        const double ratio = s.distribution.probabilities[i] / s.distribution.probabilities[0];
        const double expect = std::exp(-lambda * (std::norm(c.points[i]) - std::norm(c.points[0])));
        CHECK(std::abs(ratio / expect - 1.0) < 1e-12);
    }
    CHECK(std::abs(s.distribution.entropy_bits - entropy_bits(s.distribution.probabilities)) < 1e-12);
}

TEST_CASE("entropy solver against bisection oracle")
{
    struct Case {
        int order;
        int levels;
        double h;
        double frozen_lambda;
    };
    // Frozen values from an independent double-precision bisection.
    for (auto [order, levels, h, frozen] : {Case{16, 4, 3.0, 2.613070633860361},
                                            Case{64, 8, 5.0, 2.6903004818398557}}) {
        auto c = build_square_qam(order);
        const double lam = solve_lambda_for_entropy(c, h);
        const double oracle_lam = oracle::bisect_lambda(qam_energies(levels), h);
        CHECK(std::abs(lam - oracle_lam) < 1e-6);
        CHECK(std::abs(lam - frozen) < 1e-6);
        CHECK(std::abs(oracle::mb_entropy(qam_energies(levels), lam) - h) < 1e-6);
        CHECK(std::abs(maxwell_boltzmann(c, lam).distribution.entropy_bits - h) < 1e-6);
    }
    auto c16 = build_square_qam(16);
    CHECK(solve_lambda_for_entropy(c16, 4.0) == 0.0);
    CHECK_THROWS_AS(solve_lambda_for_entropy(c16, 4.5), Error);
    CHECK_THROWS_AS(solve_lambda_for_entropy(c16, 2.0), Error);
    CHECK(solve_lambda_for_entropy(build_square_qam(4), 2.0) == 0.0);
    CHECK_THROWS_AS(solve_lambda_for_entropy(build_square_qam(4), 1.5), Error);
}

TEST_CASE("shaped kurtosis against enumeration")
{
    auto f16 = shaped_qam(16, 3.0);
    auto m16 = moments(f16.constellation, f16.distribution);
    CHECK(std::abs(m16.kurtosis - 1.8863604893446688) < 1e-9);
    CHECK(m16.kurtosis > 1.32);
    auto f64 = shaped_qam(64, 5.0);
    CHECK(std::abs(moments(f64.constellation, f64.distribution).kurtosis - 1.8931529673811018) < 1e-9);

    // Independent enumeration of the weighted moments.
    auto en = qam_energies(4);
    const double lam = f16.distribution.lambda;
    double z = 0, m2 = 0, m4 = 0;
    for (double e : en) {
        const double w = std::exp(-lam * e);
        z += w;
        m2 += w * e;
        m4 += w * e * e;
    }
    CHECK(std::abs((m4 / z) / ((m2 / z) * (m2 / z)) - m16.kurtosis) < 1e-12);
}

TEST_CASE("entropy monotone in lambda, kurtosis bounded")
{
    for (int order : {16, 64}) {
        auto c = build_square_qam(order);
        const double k_uniform = moments(c, uniform(c).distribution).kurtosis;
        double prev_h = 1e9, k_max = 0.0;
        for (double lam = 0.0; lam <= 20.0; lam += 0.25) {
            auto s = maxwell_boltzmann(c, lam);
            const double k = moments(s.constellation, s.distribution).kurtosis;
            CHECK(s.distribution.entropy_bits < prev_h);
            CHECK(k >= 1.0);
            CHECK(k <= 2.0);
            k_max = std::max(k_max, k);
            prev_h = s.distribution.entropy_bits;
        }
        // Moderate shaping is more Gaussian-like than uniform; strong shaping
        // collapses onto the four inner points (QPSK, kurtosis 1).
        CHECK(k_max > k_uniform);
        auto strong = maxwell_boltzmann(c, 200.0);
        CHECK(moments(strong.constellation, strong.distribution).kurtosis == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("GMI against Gauss-Hermite quadrature")
{
    auto u16 = uniform(build_square_qam(16));
    const auto& c = u16.constellation;
    struct Case {
        double snr_db, frozen;
    };
    for (auto [snr_db, frozen] : {Case{5.0, 1.931561821644089}, Case{10.0, 3.1635803516167345},
                                  Case{15.0, 3.928523223602345}}) {
        const double snr = db_to_linear(snr_db);
        const double quad = oracle::gmi_quadrature(c.points, c.labels, u16.distribution.probabilities,
                                                   c.bits_per_symbol(), snr);
        CHECK(std::abs(quad - frozen) < 1e-9);
        const double mc = gmi(c, u16.distribution, snr, 400000, 17);
        CHECK(std::abs(mc - quad) < 0.02);
    }
}

TEST_CASE("GMI limits, bounds and determinism")
{
    for (auto f : {uniform(build_square_qam(16)), shaped_qam(16, 3.0), shaped_qam(64, 5.0)}) {
        const double h = f.distribution.entropy_bits;
        CHECK(std::abs(gmi(f.constellation, f.distribution, db_to_linear(60.0), 20000, 1) - h) < 0.01);
        // Shaped bit labels are not equiprobable, so the estimate scatters
        // around 0 even at vanishing SNR; 400k samples keep it below 0.01.
        CHECK(gmi(f.constellation, f.distribution, db_to_linear(-40.0), 400000, 1) < 0.01);
        for (double snr_db = 0.0; snr_db <= 20.0; snr_db += 5.0) {
            const double snr = db_to_linear(snr_db);
            const double g = gmi(f.constellation, f.distribution, snr, 100000, 3);
            CHECK(g <= h + 1e-12);
            CHECK(gap_to_capacity(snr, g) > -0.01);
        }
    }
    auto f = shaped_qam(16, 3.0);
    const double a = gmi(f.constellation, f.distribution, 10.0, 50000, 42);
    const double b = gmi(f.constellation, f.distribution, 10.0, 50000, 42);
    CHECK(a == b);
}

TEST_CASE("gap to capacity")
{
    CHECK(gap_to_capacity(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(gap_to_capacity(3.0, 1.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(gap_to_capacity(0.0, 1.0), Error);
}
