#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ofsim/fft.hpp"
#include "ofsim/fibersim.hpp"
#include "ofsim/rxdsp.hpp"
#include "ofsim/shaping.hpp"
#include "ofsim/txchain.hpp"

using namespace ofsim;

namespace {

DualPolWaveform random_field(std::size_t n, double fs, double power_w, std::uint64_t seed)
{
    // Band-limited Gaussian field occupying half the simulation bandwidth.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    DualPolWaveform w;
    w.sample_rate_hz = fs;
    w.center_freq_hz = 193.775e12;
    for (CVec* pol : {&w.x, &w.y}) {
        CVec s(n);
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(fft::bin_frequency(k, n, fs)) < 0.25 * fs) s[k] = Complex(g(rng), g(rng));
        fft::inverse(s);
        *pol = std::move(s);
    }
    w.set_power_mw(power_w * 1e3);
    return w;
}

double total_energy(const DualPolWaveform& w) { return w.power_w() * static_cast<double>(w.size()); }

fiber::FiberSpan lossless(double d, double gamma, double length_km = 55.0)
{
    fiber::FiberSpan s;
    s.alpha_db_per_km = 0.0;
    s.dispersion_ps_nm_km = d;
    s.gamma_per_w_km = gamma;
    s.length_km = length_km;
    return s;
}

double beta2_oracle(double d_ps_nm_km, double f0)
{
    const double c = 299792458.0;
    const double lam = c / f0;
    return -(d_ps_nm_km * 1e-12 / (1e-9 * 1e3)) * lam * lam / (2 * M_PI * c);
}

}  // namespace

TEST_CASE("beta2 from dispersion")
{
    const double b2 = fiber::beta2_from_dispersion(17.0, kSpeedOfLight / 1550e-9);
    CHECK(std::abs(b2 / beta2_oracle(17.0, kSpeedOfLight / 1550e-9) - 1.0) < 1e-12);
    CHECK(b2 * 1e24 * 1e3 == doctest::Approx(-21.68).epsilon(1e-3));  // ps^2/km
}

TEST_CASE("linear all-pass")
{
    const std::size_t n = 4096;
    const double fs = 80e9, len = 55.0;
    auto in = random_field(n, fs, 1e-3, 1);
    auto out = fiber::propagate_span(in, lossless(20.8, 0.0, len), {});
    const double b2 = beta2_oracle(20.8, in.center_freq_hz);
    const CVec si = fft::forward_copy(in.x), so = fft::forward_copy(out.x);
    double peak = 0;
    for (const auto& v : si) peak = std::max(peak, std::norm(v));
    double acc = 0, mag = 0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::norm(si[k]) < 1e-6 * peak) continue;
        const double w = 2 * M_PI * fft::bin_frequency(k, n, fs);
        const Complex expect = si[k] * std::polar(1.0, 0.5 * b2 * w * w * len * 1e3);
        const double err = std::arg(so[k] / expect);
        acc += err * err;
        mag = std::max(mag, std::abs(std::abs(so[k]) / std::abs(si[k]) - 1.0));
        ++used;
    }
    CHECK(used > n / 3);
    CHECK(std::sqrt(acc / used) < 1e-9);
    CHECK(mag < 1e-9);

    auto d = fiber::apply_dispersion(in, 20.8, len, in.center_freq_hz);
    double diff = 0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(d.x[i] - out.x[i]));
    CHECK(diff < 1e-9 * std::sqrt(in.power_w()));
}

TEST_CASE("self-phase modulation of a CW field")
{
    for (double px : {0.01, 0.05}) {
        const double py = 0.02, gamma = 1.3, len = 80.0;
        DualPolWaveform cw;
        cw.x.assign(64, Complex(std::sqrt(px)));
        cw.y.assign(64, Complex(0.0, std::sqrt(py)));
        cw.sample_rate_hz = 10e9;
        cw.center_freq_hz = 193.775e12;
        auto out = fiber::propagate_span(cw, lossless(0.0, gamma, len), {});
        const double expect = 8.0 / 9.0 * gamma * 1e-3 * (px + py) * len * 1e3;
        for (std::size_t i = 0; i < 64; i += 7) {
            const double phx = std::arg(out.x[i] / cw.x[i]);
            const double phy = std::arg(out.y[i] / cw.y[i]);
            CHECK(std::abs(std::remainder(phx - expect, 2 * M_PI)) < 1e-9);
            CHECK(std::abs(std::remainder(phy - expect, 2 * M_PI)) < 1e-9);
        }
    }
}

TEST_CASE("attenuation only")
{
    auto in = random_field(1024, 80e9, 2e-3, 2);
    fiber::FiberSpan s;
    s.dispersion_ps_nm_km = 0.0;
    s.gamma_per_w_km = 0.0;
    s.alpha_db_per_km = 0.2;
    s.length_km = 70.0;
    auto out = fiber::propagate_span(in, s, {});
    CHECK(std::abs(out.power_w() / in.power_w() / std::pow(10.0, -0.2 * 70.0 / 10.0) - 1.0) < 1e-12);
}

TEST_CASE("energy conservation over a lossless nonlinear link")
{
    auto in = random_field(2048, 80e9, 5e-3, 3);
    fiber::LinkConfig link;
    link.spans.assign(18, lossless(20.8, 0.8));
    link.enable_ase = false;
    auto snaps = fiber::propagate_link(in, link, {}, 1);
    REQUIRE(snaps.size() == 18);
    const double e0 = total_energy(in);
    for (const auto& s : snaps) CHECK(std::abs(total_energy(s.field) / e0 - 1.0) < 1e-6);
}

TEST_CASE("first-order behaviour at weak nonlinearity")
{
    auto in = random_field(1024, 80e9, 10e-3, 4);
    auto lin = fiber::propagate_span(in, lossless(20.8, 0.0), {});
    std::vector<double> errs;
    for (double gamma : {0.02, 0.01, 0.005}) {
        auto out = fiber::propagate_span(in, lossless(20.8, gamma), {});
        double e = 0;
        for (std::size_t i = 0; i < in.size(); ++i) e += std::norm(out.x[i] - lin.x[i]);
        errs.push_back(std::sqrt(e));
    }
    CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.02));
    CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("aliasing is detected")
{
    // Strong SPM on a wide pulse drives energy to the band edge.
    const std::size_t n = 512;
    const double fs = 80e9;
    DualPolWaveform p;
    p.sample_rate_hz = fs;
    p.center_freq_hz = 193.775e12;
    p.x.resize(n);
    p.y.assign(n, Complex{});
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) - n / 2.0) / fs;
        p.x[i] = std::sqrt(10.0) * std::exp(-0.5 * std::pow(t / 20e-12, 2));
    }
    fiber::SsfmConfig cfg;
    cfg.max_nl_phase_rad = 1e-2;
    CHECK_THROWS_AS(fiber::propagate_span(p, lossless(0.0, 0.8, 2.0), cfg), Error);
    cfg.alias_guard_db = 0.0;
    CHECK_NOTHROW(fiber::propagate_span(p, lossless(0.0, 0.8, 2.0), cfg));
}

TEST_CASE("amplifier gain and ASE")
{
    auto in = random_field(1024, 80e9, 1e-3, 5);
    auto same = fiber::amplify(in, 0.0, 5.0, 1, false);
    CHECK(same.x == in.x);
    auto g = fiber::amplify(in, 10.0, 5.0, 1, false);
    CHECK(g.power_w() / in.power_w() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS_AS(fiber::amplify(in, -1.0, 5.0, 1, false), Error);

    CHECK(fiber::spontaneous_emission_factor(80.0, 5.0) == doctest::Approx(db_to_linear(5.0) / 2).epsilon(1e-7));
    const double gain_db = 0.157 * 55, nf_db = 5.0, f0 = 193.775e12;
    const double gl = db_to_linear(gain_db);
    const double psd = (gl - 1) * kPlanck * f0 * db_to_linear(nf_db) * gl / (2 * (gl - 1));
    CHECK(fiber::ase_psd_w_per_hz(gain_db, nf_db, f0) == doctest::Approx(psd).epsilon(1e-12));

    // Noise measured in a signal-free 20 GHz window, ensemble over 50 seeds.
    const std::size_t n = 8192;
    const double fs = 80e9, band = 20e9;
    DualPolWaveform zero;
    zero.x.assign(n, Complex{});
    zero.y.assign(n, Complex{});
    zero.sample_rate_hz = fs;
    zero.center_freq_hz = f0;
    double acc = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto out = fiber::amplify(zero, gain_db, nf_db, seed, true);
        for (const CVec* pol : {&out.x, &out.y}) {
            const CVec s = fft::forward_copy(*pol);
            double p = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double f = fft::bin_frequency(k, n, fs);
                if (f >= 10e9 && f < 10e9 + band) p += std::norm(s[k]);
            }
            acc += p / (static_cast<double>(n) * n);
        }
    }
    CHECK(std::abs(acc / 100 / (psd * band) - 1.0) < 0.05);
}

TEST_CASE("polarization scrambling")
{
    auto in = random_field(1024, 80e9, 1e-3, 6);
    auto out = fiber::polarization_scramble(in, 9);
    CHECK(std::abs(out.power_w() / in.power_w() - 1.0) < 1e-12);
    for (std::size_t i = 0; i < in.size(); i += 13)
        CHECK(std::abs(std::norm(out.x[i]) + std::norm(out.y[i]) -
                       std::norm(in.x[i]) - std::norm(in.y[i])) < 1e-15);

    DualPolWaveform xonly;
    xonly.x.assign(4, Complex(1.0));
    xonly.y.assign(4, Complex{});
    xonly.sample_rate_hz = 1e9;
    double acc = 0;
    const int seeds = 2000;
    for (int s = 0; s < seeds; ++s) acc += std::norm(fiber::polarization_scramble(xonly, s).x[0]);
    CHECK(std::abs(acc / seeds / 0.5 - 1.0) < 0.05);

    fiber::LinkConfig link;
    link.spans.assign(1, lossless(0.0, 0.0, 1.0));
    link.enable_ase = false;
    link.loops = 3;
    auto snaps = fiber::propagate_link(in, link, {}, 1);
    double worst = 0;
    for (std::size_t i = 0; i < in.size(); ++i)
        worst = std::max({worst, std::abs(snaps.back().field.x[i] - in.x[i]),
                          std::abs(snaps.back().field.y[i] - in.y[i])});
    CHECK(worst < 1e-12 * std::sqrt(in.power_w()));
}

TEST_CASE("link snapshots and power budget")
{
    auto in = random_field(1024, 80e9, 1e-3, 7);
    fiber::LinkConfig link;
    link.spans.assign(11, fiber::FiberSpan{});
    link.enable_ase = false;
    link.loops = 2;
    link.snapshot_every = 11;
    link.scramble_per_loop = true;
    auto snaps = fiber::propagate_link(in, link, {}, 3);
    REQUIRE(snaps.size() == 2);
    CHECK(snaps[0].distance_km == doctest::Approx(605.0));
    CHECK(snaps[1].distance_km == doctest::Approx(1210.0));
    for (const auto& s : snaps) CHECK(std::abs(linear_to_db(s.field.power_w() / in.power_w())) < 0.01);

    fiber::LinkConfig one;
    fiber::FiberSpan span;
    span.gamma_per_w_km = 0.0;
    one.spans = {span};
    one.enable_ase = false;
    auto a = fiber::propagate_link(in, one, {}, 5).front().field;
    auto b = fiber::amplify(fiber::propagate_span(in, span, {}), span.loss_db(), 5.0, 0, false);
    CHECK(a.x == b.x);

    one.edfa_noise_figure_db = 2.0;
    one.enable_ase = true;
    CHECK_THROWS_AS(fiber::propagate_link(in, one, {}, 5), Error);
}

TEST_CASE("step-size self-convergence")
{
    auto fmt = shaping::shaped_qam(16, 3.0);
    auto plan = tx::SubcarrierPlan::make(1, 32e9, 0.05);
    auto sig = tx::generate_channel(fmt, {plan, 2048, 0.02, 80e9, dbm_to_mw(4.0)}, 21);
    sig.wave.center_freq_hz = 193.775e12;
    fiber::LinkConfig link;
    link.spans.assign(2, fiber::FiberSpan{});
    link.enable_ase = false;
    std::vector<double> var;
    for (double cap : {1e-3, 5e-4}) {
        fiber::SsfmConfig cfg;
        cfg.max_nl_phase_rad = cap;
        auto out = fiber::propagate_link(sig.wave, link, cfg, 1).back().field;
        auto rep = rx::ideal_receiver_snr(out, sig, 20.8, 110.0, 193.775e12);
        var.push_back(1.0 / db_to_linear(rep.snr_db_pooled));
    }
    CHECK(std::abs(var[1] / var[0] - 1.0) < 0.02);
}
