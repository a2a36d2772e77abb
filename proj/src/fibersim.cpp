#include "ofsim/fibersim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ofsim/fft.hpp"

namespace ofsim::fiber {

void FiberSpan::validate() const
{
    if (!(length_km > 0.0)) throw Error("FiberSpan: length must be positive");
    if (alpha_db_per_km < 0.0) throw Error("FiberSpan: alpha must be >= 0");
    if (gamma_per_w_km < 0.0) throw Error("FiberSpan: gamma must be >= 0");
    if (!(ref_freq_hz > 0.0)) throw Error("FiberSpan: reference frequency must be positive");
}

double LinkConfig::loop_length_km() const
{
    double l = 0.0;
    for (const auto& s : spans) l += s.length_km;
    return l;
}

void LinkConfig::validate() const
{
    if (spans.empty()) throw Error("LinkConfig: no spans");
    for (const auto& s : spans) s.validate();
    if (loops < 1) throw Error("LinkConfig: loops must be >= 1");
    if (snapshot_every < 1) throw Error("LinkConfig: snapshot_every must be >= 1");
    if (enable_ase && edfa_noise_figure_db < 3.0)
        throw Error("LinkConfig: noise figure below the 3 dB quantum limit");
}

void SsfmConfig::validate() const
{
    if (!(max_nl_phase_rad > 0.0)) throw Error("SsfmConfig: max_nl_phase_rad must be positive");
    if (min_steps_per_span < 1) throw Error("SsfmConfig: min_steps_per_span must be >= 1");
}

double beta2_from_dispersion(double dispersion_ps_nm_km, double f0_hz)
{
    const double d_si = dispersion_ps_nm_km * 1e-6;  // s/m^2
    const double lambda = kSpeedOfLight / f0_hz;
    return -d_si * lambda * lambda / (2.0 * kPi * kSpeedOfLight);
}

namespace {

double peak_power(const DualPolWaveform& f)
{
    double p = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) p = std::max(p, std::norm(f.x[i]) + std::norm(f.y[i]));
    return p;
}

/// Mean band-edge bin power over peak bin power, in dB.
double edge_level_db(const DualPolWaveform& f)
{
    const std::size_t n = f.size();
    CVec sx = fft::forward_copy(f.x);
    CVec sy = fft::forward_copy(f.y);
    double peak = 0.0;
    double edge = 0.0;
    std::size_t n_edge = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double p = std::norm(sx[k]) + std::norm(sy[k]);
        peak = std::max(peak, p);
        if (std::abs(static_cast<double>(fft::signed_bin(k, n))) >= 0.45 * static_cast<double>(n)) {
            edge += p;
            ++n_edge;
        }
    }
    if (peak == 0.0 || n_edge == 0) return -400.0;
    return 10.0 * std::log10(std::max(edge / static_cast<double>(n_edge), 1e-300) / peak);
}

class LinearStep {
public:
    LinearStep(std::size_t n, double fs, double beta2, double alpha_np)
        : omega2_(n), alpha_np_(alpha_np), beta2_(beta2)
    {
        for (std::size_t k = 0; k < n; ++k) {
            const double w = 2.0 * kPi * fft::bin_frequency(k, n, fs);
            omega2_[k] = w * w;
        }
    }

    void apply(DualPolWaveform& f, double h)
    {
        if (h <= 0.0) return;
        if (h != cached_h_) {
            op_.resize(omega2_.size());
            const double amp = std::exp(-0.5 * alpha_np_ * h);
            for (std::size_t k = 0; k < op_.size(); ++k)
                op_[k] = std::polar(amp, 0.5 * beta2_ * omega2_[k] * h);
            cached_h_ = h;
        }
        fft::forward(f.x);
        fft::forward(f.y);
        for (std::size_t k = 0; k < op_.size(); ++k) {
            f.x[k] *= op_[k];
            f.y[k] *= op_[k];
        }
        fft::inverse(f.x);
        fft::inverse(f.y);
    }

private:
    std::vector<double> omega2_;
    CVec op_;
    double cached_h_ = -1.0;
    double alpha_np_;
    double beta2_;
};

void nonlinear_step(DualPolWaveform& f, double coeff)
{
    // coeff = (8/9) gamma h_eff
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Complex rot = std::polar(1.0, coeff * (std::norm(f.x[i]) + std::norm(f.y[i])));
        f.x[i] *= rot;
        f.y[i] *= rot;
    }
}

}  // namespace

DualPolWaveform propagate_span(DualPolWaveform field, const FiberSpan& span, const SsfmConfig& cfg)
{
    field.validate();
    span.validate();
    cfg.validate();

    const double length = span.length_km * 1e3;
    const double alpha_np = span.alpha_db_per_km * std::log(10.0) / 10.0 * 1e-3;
    const double gamma = span.gamma_per_w_km * 1e-3;
    const double beta2 = beta2_from_dispersion(span.dispersion_ps_nm_km, span.ref_freq_hz);
    const double nl = 8.0 / 9.0 * gamma;
    const double h_max = length / cfg.min_steps_per_span;

    const bool check_alias = cfg.alias_guard_db > 0.0;
    const double edge_in = check_alias ? edge_level_db(field) : 0.0;

    auto effective = [&](double h) {
        return alpha_np > 0.0 ? 2.0 / alpha_np * std::sinh(0.5 * alpha_np * h) : h;
    };
    auto choose_step = [&](double remaining) {
        double h = h_max;
        const double p = peak_power(field);
        if (nl > 0.0 && p > 0.0) h = std::min(h, cfg.max_nl_phase_rad / (nl * p));
        // Avoid leaving a sliver at the end of the span.
        if (remaining - h < 1e-3 * h) h = remaining;
        return std::min(h, remaining);
    };

    LinearStep linear(field.size(), field.sample_rate_hz, beta2, alpha_np);
    double z = 0.0;
    double h = choose_step(length);
    linear.apply(field, 0.5 * h);
    while (true) {
        if (nl > 0.0) nonlinear_step(field, nl * effective(h));
        z += h;
        const double remaining = length - z;
        if (remaining <= 1e-9 * length) {
            linear.apply(field, 0.5 * h);
            break;
        }
        const double h_next = choose_step(remaining);
        linear.apply(field, 0.5 * (h + h_next));
        h = h_next;
    }

    if (check_alias) {
        const double edge_out = edge_level_db(field);
        if (edge_out > -cfg.alias_guard_db && edge_out > edge_in + 3.0)
            throw Error("propagate_span: spectral energy reached the band edge (aliasing), edge level " +
                        std::to_string(edge_out) + " dB");
    }
    return field;
}

double spontaneous_emission_factor(double gain_db, double nf_db)
{
    const double g = db_to_linear(gain_db);
    const double nf = db_to_linear(nf_db);
    return nf * g / (2.0 * (g - 1.0));
}

double ase_psd_w_per_hz(double gain_db, double nf_db, double f0_hz)
{
    if (gain_db <= 0.0) return 0.0;
    const double g = db_to_linear(gain_db);
    return (g - 1.0) * kPlanck * f0_hz * spontaneous_emission_factor(gain_db, nf_db);
}

DualPolWaveform amplify(DualPolWaveform field, double gain_db, double nf_db, std::uint64_t seed,
                        bool enable_ase)
{
    if (gain_db < 0.0) throw Error("amplify: gain must be >= 0 dB");
    field.validate();
    if (gain_db > 0.0) field.scale(std::sqrt(db_to_linear(gain_db)));
    if (!enable_ase || gain_db == 0.0) return field;
    if (!(field.center_freq_hz > 0.0)) throw Error("amplify: ASE needs an absolute center frequency");

    const double var = ase_psd_w_per_hz(gain_db, nf_db, field.center_freq_hz) * field.sample_rate_hz;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * var));
    for (auto& s : field.x) s += Complex(gauss(rng), gauss(rng));
    for (auto& s : field.y) s += Complex(gauss(rng), gauss(rng));
    return field;
}

DualPolWaveform polarization_scramble(DualPolWaveform field, std::uint64_t seed)
{
    field.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    double q[4];
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& v : q) {
            v = gauss(rng);
            norm += v * v;
        }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    const Complex a(q[0] / norm, q[1] / norm);
    const Complex b(q[2] / norm, q[3] / norm);
    for (std::size_t i = 0; i < field.size(); ++i) {
        const Complex x = field.x[i];
        const Complex y = field.y[i];
        field.x[i] = a * x + b * y;
        field.y[i] = -std::conj(b) * x + std::conj(a) * y;
    }
    return field;
}

void propagate_link(DualPolWaveform field, const LinkConfig& link, const SsfmConfig& cfg,
                    std::uint64_t seed,
                    const std::function<void(double, const DualPolWaveform&)>& on_snapshot)
{
    link.validate();
    double distance = 0.0;
    std::uint64_t span_index = 0;
    for (int loop = 0; loop < link.loops; ++loop) {
        for (const auto& span : link.spans) {
            field = propagate_span(std::move(field), span, cfg);
            field = amplify(std::move(field), span.loss_db(), link.edfa_noise_figure_db,
                            derive_seed(seed, 1, span_index), link.enable_ase);
            distance += span.length_km;
            ++span_index;
            if (span_index % static_cast<std::uint64_t>(link.snapshot_every) == 0 && on_snapshot)
                on_snapshot(distance, field);
        }
        if (link.scramble_per_loop)
            field = polarization_scramble(std::move(field),
                                          derive_seed(seed, 2, static_cast<std::uint64_t>(loop)));
    }
}

std::vector<Snapshot> propagate_link(DualPolWaveform field, const LinkConfig& link,
                                     const SsfmConfig& cfg, std::uint64_t seed)
{
    std::vector<Snapshot> out;
    propagate_link(std::move(field), link, cfg, seed,
                   [&](double d, const DualPolWaveform& f) { out.push_back({d, f}); });
    return out;
}

DualPolWaveform apply_dispersion(DualPolWaveform field, double dispersion_ps_nm_km, double length_km,
                                 double f0_hz)
{
    field.validate();
    if (dispersion_ps_nm_km == 0.0 || length_km == 0.0) return field;
    const double beta2 = beta2_from_dispersion(dispersion_ps_nm_km, f0_hz);
    const double l = length_km * 1e3;
    const std::size_t n = field.size();
    fft::forward(field.x);
    fft::forward(field.y);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2.0 * kPi * fft::bin_frequency(k, n, field.sample_rate_hz);
        const Complex op = std::polar(1.0, 0.5 * beta2 * w * w * l);
        field.x[k] *= op;
        field.y[k] *= op;
    }
    fft::inverse(field.x);
    fft::inverse(field.y);
    return field;
}

}  // namespace ofsim::fiber
