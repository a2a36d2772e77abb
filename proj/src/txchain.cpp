#include "ofsim/txchain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ofsim/fft.hpp"

namespace ofsim::tx {

namespace {

bool is_integer(double v, double tol = 1e-6) { return std::abs(v - std::round(v)) <= tol; }

std::ptrdiff_t exact_bins(double shift_hz, std::size_t n, double fs, const char* what)
{
    const double bins = shift_hz * static_cast<double>(n) / fs;
    if (!is_integer(bins))
        throw Error(std::string(what) + ": frequency " + std::to_string(shift_hz) +
                    " Hz is not on the record's frequency grid");
    return static_cast<std::ptrdiff_t>(std::llround(bins));
}

}  // namespace

SubcarrierPlan SubcarrierPlan::make(int m, double aggregate_baud, double rolloff)
{
    SubcarrierPlan p;
    p.m_subcarriers = m;
    p.aggregate_baud = aggregate_baud;
    p.rolloff = rolloff;
    p.spacing_hz = aggregate_baud / m * (1.0 + rolloff);
    p.validate();
    return p;
}

double SubcarrierPlan::offset_hz(int m) const
{
    return (m - 0.5 * (m_subcarriers - 1)) * spacing_hz;
}

double SubcarrierPlan::occupied_bandwidth_hz() const
{
    return (m_subcarriers - 1) * spacing_hz + subcarrier_baud() * (1.0 + rolloff);
}

void SubcarrierPlan::validate() const
{
    if (m_subcarriers < 1) throw Error("SubcarrierPlan: m_subcarriers must be >= 1");
    if (!(aggregate_baud > 0.0)) throw Error("SubcarrierPlan: aggregate_baud must be positive");
    if (rolloff < 0.0 || rolloff > 1.0) throw Error("SubcarrierPlan: rolloff must lie in [0, 1]");
    if (m_subcarriers > 1 && spacing_hz < subcarrier_baud() * (1.0 + rolloff) * (1.0 - 1e-12))
        throw Error("SubcarrierPlan: spacing smaller than subcarrier bandwidth");
}

void TxImpairments::validate() const
{
    if (laser_linewidth_hz < 0.0 || iq_skew_s < 0.0 || quant_bits < 0 || clip_ratio < 0.0)
        throw Error("TxImpairments: parameters must be non-negative");
}

std::size_t SymbolFrame::n_pilots() const
{
    return static_cast<std::size_t>(std::count(pilot_mask.begin(), pilot_mask.end(), 1));
}

CVec SymbolFrame::payload() const
{
    CVec out;
    out.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i)
        if (!pilot_mask[i]) out.push_back(symbols[i]);
    return out;
}

CVec SymbolFrame::pilot_values() const
{
    CVec out;
    for (std::size_t i = 0; i < symbols.size(); ++i)
        if (pilot_mask[i]) out.push_back(symbols[i]);
    return out;
}

std::size_t pilot_count(std::size_t n_payload, double pilot_rate)
{
    if (pilot_rate < 0.0 || pilot_rate > 0.1) throw Error("pilot_rate must lie in [0, 0.1]");
    return static_cast<std::size_t>(std::llround(pilot_rate * static_cast<double>(n_payload)));
}

std::size_t payload_for_frame(std::size_t frame_length, double pilot_rate)
{
    const auto guess = static_cast<std::size_t>(
        std::llround(static_cast<double>(frame_length) / (1.0 + pilot_rate)));
    for (std::size_t delta = 0; delta < 8; ++delta) {
        for (std::size_t cand : {guess + delta, guess - std::min(guess, delta)}) {
            if (cand >= 1 && cand + pilot_count(cand, pilot_rate) == frame_length) return cand;
        }
    }
    throw Error("payload_for_frame: no payload length yields a frame of " +
                std::to_string(frame_length) + " symbols");
}

SymbolFrame generate_symbol_frame(const shaping::ShapedFormat& format, std::size_t n_payload,
                                  double pilot_rate, std::uint64_t seed)
{
    if (n_payload < 1) throw Error("generate_symbol_frame: n_payload must be >= 1");
    const std::size_t n_pilots = pilot_count(n_payload, pilot_rate);
    const std::size_t total = n_payload + n_pilots;

    SymbolFrame frame;
    frame.symbols.resize(total);
    frame.pilot_mask.assign(total, 0);
    for (std::size_t k = 0; k < n_pilots; ++k) frame.pilot_mask[k * total / n_pilots] = 1;

    std::mt19937_64 rng(seed);
    const auto& probs = format.distribution.probabilities;
    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
    std::uniform_int_distribution<int> quadrant(0, 3);
    const double a = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < total; ++i) {
        if (frame.pilot_mask[i]) {
            const int q = quadrant(rng);
            frame.symbols[i] = Complex((q & 1) ? -a : a, (q & 2) ? -a : a);
        } else {
            frame.symbols[i] = format.constellation.points[pick(rng)];
        }
    }
    return frame;
}

double rrc_response(double f_over_baud, double rolloff)
{
    const double u = std::abs(f_over_baud);
    const double lo = 0.5 * (1.0 - rolloff);
    const double hi = 0.5 * (1.0 + rolloff);
    if (u <= lo) return 1.0;
    if (u >= hi) return 0.0;
    const double rc = 0.5 * (1.0 + std::cos(kPi / rolloff * (u - lo)));
    return std::sqrt(rc);
}

CVec rrc_shape(const CVec& symbols, std::size_t n_samples, double rolloff)
{
    const std::size_t n = symbols.size();
    if (n == 0) throw Error("rrc_shape: no symbols");
    if (static_cast<double>(n_samples) < static_cast<double>(n) * (1.0 + rolloff) - 1e-9)
        throw Error("rrc_shape: output rate below the occupied bandwidth (aliasing)");
    const CVec spec = fft::forward_copy(symbols);
    CVec out(n_samples);
    const double gain = static_cast<double>(n_samples) / static_cast<double>(n);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const auto sk = fft::signed_bin(k, n_samples);
        const double h = rrc_response(static_cast<double>(sk) / static_cast<double>(n), rolloff);
        if (h == 0.0) continue;
        out[k] = gain * h * spec[fft::wrap_bin(sk, n)];
    }
    fft::inverse(out);
    return out;
}

DualPolWaveform rrc_modulate(const CVec& x, const CVec& y, double symbol_rate, double rolloff,
                             double samples_per_symbol)
{
    if (x.size() != y.size()) throw Error("rrc_modulate: polarizations differ in length");
    if (samples_per_symbol < 2.0 * (1.0 + rolloff) - 1e-12)
        throw Error("rrc_modulate: samples_per_symbol must be >= 2(1 + rolloff)");
    const double n_out = samples_per_symbol * static_cast<double>(x.size());
    if (!is_integer(n_out)) throw Error("rrc_modulate: N * samples_per_symbol must be an integer");
    const auto ns = static_cast<std::size_t>(std::llround(n_out));
    DualPolWaveform w;
    w.x = rrc_shape(x, ns, rolloff);
    w.y = rrc_shape(y, ns, rolloff);
    w.sample_rate_hz = symbol_rate * samples_per_symbol;
    return w;
}

void shift_frequency(CVec& v, double shift_hz, double sample_rate_hz)
{
    const std::size_t n = v.size();
    const auto k0 = exact_bins(shift_hz, n, sample_rate_hz, "shift_frequency");
    if (k0 == 0) return;
    const auto kk = fft::wrap_bin(k0, n);
    for (std::size_t i = 0; i < n; ++i) {
        // Reduce the phase index modulo n to keep the argument small.
        const std::size_t idx = (kk * i) % n;
        v[i] *= std::polar(1.0, 2.0 * kPi * static_cast<double>(idx) / static_cast<double>(n));
    }
}

DualPolWaveform subcarrier_mux(const std::vector<DualPolWaveform>& streams,
                               const SubcarrierPlan& plan)
{
    plan.validate();
    if (streams.size() != static_cast<std::size_t>(plan.m_subcarriers))
        throw Error("subcarrier_mux: stream count does not match the plan");
    for (const auto& s : streams) {
        s.validate();
        if (s.size() != streams.front().size() || s.sample_rate_hz != streams.front().sample_rate_hz)
            throw Error("subcarrier_mux: streams differ in length or sample rate");
    }
    DualPolWaveform out;
    out.sample_rate_hz = streams.front().sample_rate_hz;
    out.center_freq_hz = streams.front().center_freq_hz;
    out.x.assign(streams.front().size(), Complex{});
    out.y.assign(streams.front().size(), Complex{});
    if (plan.m_subcarriers > 1 &&
        plan.occupied_bandwidth_hz() > out.sample_rate_hz * (1.0 + 1e-12))
        throw Error("subcarrier_mux: subcarrier comb exceeds the sample rate");
    for (int m = 0; m < plan.m_subcarriers; ++m) {
        CVec sx = streams[static_cast<std::size_t>(m)].x;
        CVec sy = streams[static_cast<std::size_t>(m)].y;
        shift_frequency(sx, plan.offset_hz(m), out.sample_rate_hz);
        shift_frequency(sy, plan.offset_hz(m), out.sample_rate_hz);
        for (std::size_t i = 0; i < sx.size(); ++i) {
            out.x[i] += sx[i];
            out.y[i] += sy[i];
        }
    }
    return out;
}

DualPolWaveform wdm_mux(const std::vector<WdmChannel>& channels, double band_center_hz,
                        double band_sample_rate_hz)
{
    if (channels.empty()) throw Error("wdm_mux: no channels");
    const double duration = channels.front().wave.duration_s();
    const double n_band_d = duration * band_sample_rate_hz;
    if (!is_integer(n_band_d)) throw Error("wdm_mux: band record length is not an integer");
    const auto n_band = static_cast<std::size_t>(std::llround(n_band_d));

    for (std::size_t i = 0; i < channels.size(); ++i) {
        const auto& ch = channels[i];
        ch.wave.validate();
        if (std::abs(ch.wave.duration_s() - duration) > 1e-9 * duration)
            throw Error("wdm_mux: channels differ in record duration");
        if (!(ch.slot_width_hz > 0.0) || ch.slot_width_hz > ch.wave.sample_rate_hz * (1 + 1e-12))
            throw Error("wdm_mux: slot width must be positive and within the channel sample rate");
        const double off = ch.center_freq_hz - band_center_hz;
        if (std::abs(off) + 0.5 * ch.slot_width_hz > 0.5 * band_sample_rate_hz * (1 + 1e-12))
            throw Error("wdm_mux: channel slot exceeds the band sample rate (aliasing)");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& other = channels[j];
            if (std::abs(ch.center_freq_hz - other.center_freq_hz) <
                0.5 * (ch.slot_width_hz + other.slot_width_hz) * (1 - 1e-12))
                throw Error("wdm_mux: channel slots overlap");
        }
    }

    CVec bx(n_band), by(n_band);
    for (const auto& ch : channels) {
        const std::size_t n = ch.wave.size();
        const double bin = ch.wave.sample_rate_hz / static_cast<double>(n);
        const auto k_off = exact_bins(ch.center_freq_hz - band_center_hz, n_band,
                                      band_sample_rate_hz, "wdm_mux");
        const CVec sx = fft::forward_copy(ch.wave.x);
        const CVec sy = fft::forward_copy(ch.wave.y);
        const double scale = static_cast<double>(n_band) / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto sk = fft::signed_bin(k, n);
            if (std::abs(static_cast<double>(sk) * bin) > 0.5 * ch.slot_width_hz) continue;
            const auto dst = fft::wrap_bin(sk + k_off, n_band);
            bx[dst] += scale * sx[k];
            by[dst] += scale * sy[k];
        }
    }
    fft::inverse(bx);
    fft::inverse(by);

    DualPolWaveform out;
    out.x = std::move(bx);
    out.y = std::move(by);
    out.sample_rate_hz = band_sample_rate_hz;
    out.center_freq_hz = band_center_hz;
    return out;
}

DualPolWaveform apply_phase_noise(DualPolWaveform w, double linewidth_hz, std::uint64_t seed)
{
    if (linewidth_hz < 0.0) throw Error("apply_phase_noise: linewidth must be >= 0");
    if (linewidth_hz == 0.0) return w;
    w.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(
        0.0, std::sqrt(2.0 * kPi * linewidth_hz / w.sample_rate_hz));
    double phi = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
        if (n > 0) phi += step(rng);
        const Complex rot = std::polar(1.0, phi);
        w.x[n] *= rot;
        w.y[n] *= rot;
    }
    return w;
}

namespace {

void delay_real(std::vector<double>& rail, double delay_samples)
{
    const std::size_t n = rail.size();
    CVec spec(rail.begin(), rail.end());
    fft::forward(spec);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = static_cast<double>(fft::signed_bin(k, n)) / static_cast<double>(n);
        if (n % 2 == 0 && k == n / 2)
            spec[k] *= std::cos(kPi * delay_samples);  // keeps the rail real
        else
            spec[k] *= std::polar(1.0, -2.0 * kPi * f * delay_samples);
    }
    fft::inverse(spec);
    for (std::size_t i = 0; i < n; ++i) rail[i] = spec[i].real();
}

void skew_pol(CVec& v, double delay_samples)
{
    std::vector<double> q(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) q[i] = v[i].imag();
    delay_real(q, delay_samples);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = Complex(v[i].real(), q[i]);
}

void quantize_pol(CVec& v, int bits, double clip_ratio)
{
    const double rail_rms = std::sqrt(0.5 * mean_power(v));
    if (rail_rms == 0.0) return;
    const double clip = clip_ratio * rail_rms;
    const double levels = std::ldexp(1.0, bits);
    const double step = 2.0 * clip / levels;
    const double max_index = 0.5 * levels - 1.0;
    auto q = [&](double s) {
        const double idx = std::clamp(std::floor(s / step), -0.5 * levels, max_index);
        return (idx + 0.5) * step;
    };
    for (auto& s : v) s = Complex(q(s.real()), q(s.imag()));
}

}  // namespace

DualPolWaveform apply_iq_skew(DualPolWaveform w, double skew_s)
{
    if (skew_s == 0.0) return w;
    w.validate();
    const double d = skew_s * w.sample_rate_hz;
    skew_pol(w.x, d);
    skew_pol(w.y, d);
    return w;
}

DualPolWaveform apply_quantization(DualPolWaveform w, int bits, double clip_ratio)
{
    if (bits < 0) throw Error("apply_quantization: bits must be >= 0");
    if (bits == 0) return w;
    if (!(clip_ratio > 0.0)) throw Error("apply_quantization: clip_ratio must be positive");
    quantize_pol(w.x, bits, clip_ratio);
    quantize_pol(w.y, bits, clip_ratio);
    return w;
}

DualPolWaveform apply_impairments(DualPolWaveform w, const TxImpairments& imp, std::uint64_t seed)
{
    imp.validate();
    w = apply_iq_skew(std::move(w), imp.iq_skew_s);
    w = apply_quantization(std::move(w), imp.quant_bits, imp.clip_ratio);
    w = apply_phase_noise(std::move(w), imp.laser_linewidth_hz, seed);
    return w;
}

std::size_t grid_symbol_count(const SubcarrierPlan& plan, std::span<const double> sample_rates_hz,
                              std::span<const double> grid_freqs_hz, std::size_t min_symbols)
{
    plan.validate();
    const auto m = static_cast<std::size_t>(plan.m_subcarriers);
    std::size_t n = std::max<std::size_t>(m, ((min_symbols + m - 1) / m) * m);
    for (std::size_t iter = 0; iter < 1000000; ++iter, n += m) {
        const double bin = plan.aggregate_baud / static_cast<double>(n);
        bool ok = true;
        for (double fs : sample_rates_hz) ok = ok && is_integer(fs / bin) && (std::llround(fs / bin) % 2 == 0);
        for (int k = 0; ok && k < plan.m_subcarriers; ++k) ok = is_integer(plan.offset_hz(k) / bin);
        for (double f : grid_freqs_hz) ok = ok && is_integer(f / bin);
        if (ok) return n;
    }
    throw Error("grid_symbol_count: no compatible symbol count found");
}

ChannelSignal generate_channel(const shaping::ShapedFormat& format, const ChannelSpec& spec,
                               std::uint64_t seed)
{
    const auto& plan = spec.plan;
    plan.validate();
    const double sps = spec.sample_rate_hz / plan.subcarrier_baud();
    const std::size_t n_payload = payload_for_frame(spec.symbols_per_subcarrier, spec.pilot_rate);

    ChannelSignal sig;
    sig.plan = plan;
    std::vector<DualPolWaveform> streams;
    for (int m = 0; m < plan.m_subcarriers; ++m) {
        const auto mm = static_cast<std::uint64_t>(m);
        sig.frames_x.push_back(generate_symbol_frame(format, n_payload, spec.pilot_rate,
                                                     derive_seed(seed, mm, 0)));
        sig.frames_y.push_back(generate_symbol_frame(format, n_payload, spec.pilot_rate,
                                                     derive_seed(seed, mm, 1)));
        streams.push_back(rrc_modulate(sig.frames_x.back().symbols, sig.frames_y.back().symbols,
                                       plan.subcarrier_baud(), plan.rolloff, sps));
    }
    sig.wave = subcarrier_mux(streams, plan);
    sig.wave.set_power_mw(spec.launch_power_mw);
    return sig;
}

}  // namespace ofsim::tx
