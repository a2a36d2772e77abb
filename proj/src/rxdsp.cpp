#include "ofsim/rxdsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ofsim/fft.hpp"
#include "ofsim/fibersim.hpp"

namespace ofsim::rx {

void RxChainConfig::validate() const
{
    if (pol_taps < 1 || pol_taps % 2 == 0) throw Error("RxChainConfig: pol_taps must be odd");
    if (mimo_taps < 1 || mimo_taps % 2 == 0) throw Error("RxChainConfig: mimo_taps must be odd");
    if (!(lms_step > 0.0 && lms_step < 1.0)) throw Error("RxChainConfig: lms_step must lie in (0, 1)");
    if (training_passes < 1) throw Error("RxChainConfig: training_passes must be >= 1");
    if (cpe_average_pilots < 1) throw Error("RxChainConfig: cpe_average_pilots must be >= 1");
}

DualPolWaveform emulate_lo_linewidth(DualPolWaveform w, double linewidth_hz, std::uint64_t seed)
{
    return tx::apply_phase_noise(std::move(w), linewidth_hz, seed);
}

DualPolWaveform cd_compensate(DualPolWaveform w, double dispersion_ps_nm_km, double length_km,
                              double f0_hz)
{
    return fiber::apply_dispersion(std::move(w), dispersion_ps_nm_km, -length_km, f0_hz);
}

DualPolWaveform extract_channel(const DualPolWaveform& w, double offset_hz, double out_sample_rate_hz,
                                double bandwidth_hz)
{
    w.validate();
    const std::size_t n_in = w.size();
    const double n_out_d = w.duration_s() * out_sample_rate_hz;
    if (std::abs(n_out_d - std::round(n_out_d)) > 1e-6)
        throw Error("extract_channel: output record length is not an integer");
    const auto n_out = static_cast<std::size_t>(std::llround(n_out_d));
    const double bin = w.sample_rate_hz / static_cast<double>(n_in);
    const double k_off_d = offset_hz / bin;
    if (std::abs(k_off_d - std::round(k_off_d)) > 1e-6)
        throw Error("extract_channel: offset is not on the frequency grid");
    const auto k_off = static_cast<std::ptrdiff_t>(std::llround(k_off_d));

    const CVec sx = fft::forward_copy(w.x);
    const CVec sy = fft::forward_copy(w.y);
    DualPolWaveform out;
    out.x.assign(n_out, Complex{});
    out.y.assign(n_out, Complex{});
    const double scale = static_cast<double>(n_out) / static_cast<double>(n_in);
    const double half_bw = 0.5 * std::min(bandwidth_hz, out_sample_rate_hz);
    for (std::size_t k = 0; k < n_out; ++k) {
        const auto sk = fft::signed_bin(k, n_out);
        if (std::abs(static_cast<double>(sk) * bin) > half_bw) continue;
        const auto src = fft::wrap_bin(sk + k_off, n_in);
        out.x[k] = scale * sx[src];
        out.y[k] = scale * sy[src];
    }
    fft::inverse(out.x);
    fft::inverse(out.y);
    out.sample_rate_hz = out_sample_rate_hz;
    out.center_freq_hz = w.center_freq_hz + offset_hz;
    return out;
}

namespace {

void brickwall(CVec& v, double fs, double half_width_hz)
{
    const std::size_t n = v.size();
    fft::forward(v);
    for (std::size_t k = 0; k < n; ++k)
        if (std::abs(fft::bin_frequency(k, n, fs)) > half_width_hz) v[k] = Complex{};
    fft::inverse(v);
}

CVec fold_matched(const CVec& samples, std::size_t n_sym, double rolloff)
{
    const std::size_t ns = samples.size();
    const CVec spec = fft::forward_copy(samples);
    CVec out(n_sym);
    for (std::size_t k = 0; k < ns; ++k) {
        const auto sk = fft::signed_bin(k, ns);
        const double h = tx::rrc_response(static_cast<double>(sk) / static_cast<double>(n_sym), rolloff);
        if (h == 0.0) continue;
        out[fft::wrap_bin(sk, n_sym)] += h * spec[k];
    }
    const double scale = static_cast<double>(n_sym) / static_cast<double>(ns);
    for (auto& v : out) v *= scale;
    fft::inverse(out);
    return out;
}

std::size_t wrap(std::ptrdiff_t i, std::size_t n)
{
    const auto nn = static_cast<std::ptrdiff_t>(n);
    return static_cast<std::size_t>(((i % nn) + nn) % nn);
}

double unwrap_step(double prev, double cur)
{
    double d = cur - prev;
    d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
    return prev + d;
}

}  // namespace

std::vector<DualPolWaveform> subcarrier_demux(const DualPolWaveform& w, const tx::SubcarrierPlan& plan)
{
    plan.validate();
    w.validate();
    std::vector<DualPolWaveform> out;
    if (plan.m_subcarriers == 1) {
        out.push_back(w);
        return out;
    }
    for (int m = 0; m < plan.m_subcarriers; ++m) {
        DualPolWaveform s = w;
        tx::shift_frequency(s.x, -plan.offset_hz(m), w.sample_rate_hz);
        tx::shift_frequency(s.y, -plan.offset_hz(m), w.sample_rate_hz);
        brickwall(s.x, w.sample_rate_hz, 0.5 * plan.spacing_hz);
        brickwall(s.y, w.sample_rate_hz, 0.5 * plan.spacing_hz);
        s.center_freq_hz = w.center_freq_hz + plan.offset_hz(m);
        out.push_back(std::move(s));
    }
    return out;
}

PolSymbols matched_filter(const DualPolWaveform& w, double symbol_rate, double rolloff)
{
    w.validate();
    const double n_sym_d = w.duration_s() * symbol_rate;
    if (std::abs(n_sym_d - std::round(n_sym_d)) > 1e-6)
        throw Error("matched_filter: record does not hold an integer number of symbols");
    const auto n_sym = static_cast<std::size_t>(std::llround(n_sym_d));
    if (static_cast<double>(w.size()) < static_cast<double>(n_sym) * (1.0 + rolloff) - 1e-9)
        throw Error("matched_filter: sample rate below the signal bandwidth");
    return {fold_matched(w.x, n_sym, rolloff), fold_matched(w.y, n_sym, rolloff)};
}

void normalize_power(PolSymbols& s)
{
    const double p = 0.5 * (mean_power(s.x) + mean_power(s.y));
    if (!(p > 0.0)) return;
    const double g = 1.0 / std::sqrt(p);
    for (auto& v : s.x) v *= g;
    for (auto& v : s.y) v *= g;
}

AdaptiveResult pol_demux_lms(const CVec& x, const CVec& y, const CVec& train_x, const CVec& train_y,
                             const RxChainConfig& cfg)
{
    cfg.validate();
    const std::size_t n = x.size();
    if (y.size() != n || train_x.size() != n || train_y.size() != n)
        throw Error("pol_demux_lms: stream and training lengths differ");
    const auto taps = static_cast<std::size_t>(cfg.pol_taps);
    const auto center = static_cast<std::ptrdiff_t>(taps / 2);

    // h[out][in][tap]
    std::array<std::array<CVec, 2>, 2> h;
    for (auto& row : h)
        for (auto& f : row) f.assign(taps, Complex{});
    h[0][0][taps / 2] = 1.0;
    h[1][1][taps / 2] = 1.0;

    const std::array<const CVec*, 2> in{&x, &y};
    const std::array<const CVec*, 2> ref{&train_x, &train_y};
    std::array<CVec, 2> reg{CVec(taps), CVec(taps)};

    auto fill = [&](std::size_t idx) {
        for (std::size_t p = 0; p < 2; ++p)
            for (std::size_t t = 0; t < taps; ++t)
                reg[p][t] = (*in[p])[wrap(static_cast<std::ptrdiff_t>(idx) + center -
                                              static_cast<std::ptrdiff_t>(t), n)];
    };
    auto output = [&](std::size_t o) {
        Complex acc{};
        for (std::size_t p = 0; p < 2; ++p)
            for (std::size_t t = 0; t < taps; ++t) acc += h[o][p][t] * reg[p][t];
        return acc;
    };

    double last_pass_mse = 0.0;
    for (int pass = 0; pass < cfg.training_passes; ++pass) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            fill(i);
            for (std::size_t o = 0; o < 2; ++o) {
                const Complex e = (*ref[o])[i] - output(o);
                acc += std::norm(e);
                const Complex ge = cfg.lms_step * e;
                for (std::size_t p = 0; p < 2; ++p)
                    for (std::size_t t = 0; t < taps; ++t) h[o][p][t] += ge * std::conj(reg[p][t]);
            }
        }
        last_pass_mse = acc / (2.0 * static_cast<double>(n));
    }

    AdaptiveResult res;
    res.streams.assign(2, CVec(n));
    for (std::size_t i = 0; i < n; ++i) {
        fill(i);
        res.streams[0][i] = output(0);
        res.streams[1][i] = output(1);
    }
    res.residual_mse = last_pass_mse;
    res.converged = last_pass_mse < cfg.convergence_mse;
    return res;
}

CarrierRecoveryResult carrier_recovery(const CVec& symbols, const std::vector<std::uint8_t>& pilot_mask,
                                       const CVec& pilot_values, double symbol_rate,
                                       const RxChainConfig& cfg)
{
    const std::size_t n = symbols.size();
    if (pilot_mask.size() != n) throw Error("carrier_recovery: pilot mask length mismatch");
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i)
        if (pilot_mask[i]) pos.push_back(i);
    if (pos.empty()) throw Error("carrier_recovery: no pilots (pilot_rate must be > 0)");
    if (pos.size() != pilot_values.size()) throw Error("carrier_recovery: pilot count mismatch");
    const std::size_t k_pilots = pos.size();

    CVec z(k_pilots);
    for (std::size_t k = 0; k < k_pilots; ++k)
        z[k] = symbols[pos[k]] * std::conj(pilot_values[k]) / std::norm(pilot_values[k]);

    // Coarse frequency search limited to the range pilots resolve unambiguously.
    std::size_t max_gap = n - pos.back() + pos.front();
    for (std::size_t k = 1; k < k_pilots; ++k) max_gap = std::max(max_gap, pos[k] - pos[k - 1]);
    double omega = 0.0;
    if (k_pilots >= 2) {
        const double w_max = std::min(2.0 * kPi * cfg.max_freq_offset_hz / symbol_rate,
                                      kPi / static_cast<double>(max_gap));
        const std::size_t grid = 8 * k_pilots + 1;
        double best = -1.0;
        for (std::size_t g = 0; g < grid; ++g) {
            const double w = -w_max + 2.0 * w_max * static_cast<double>(g) / static_cast<double>(grid - 1);
            Complex acc{};
            for (std::size_t k = 0; k < k_pilots; ++k)
                acc += z[k] * std::polar(1.0, -w * static_cast<double>(pos[k]));
            if (std::abs(acc) > best) {
                best = std::abs(acc);
                omega = w;
            }
        }
        // Refine with a least-squares fit of the unwrapped residual phase.
        std::vector<double> theta(k_pilots);
        for (std::size_t k = 0; k < k_pilots; ++k) {
            const double ph = std::arg(z[k] * std::polar(1.0, -omega * static_cast<double>(pos[k])));
            theta[k] = k == 0 ? ph : unwrap_step(theta[k - 1], ph);
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t k = 0; k < k_pilots; ++k) {
            const auto xk = static_cast<double>(pos[k]);
            sx += xk;
            sy += theta[k];
            sxx += xk * xk;
            sxy += xk * theta[k];
        }
        const double kk = static_cast<double>(k_pilots);
        const double denom = kk * sxx - sx * sx;
        if (denom > 0.0) omega += (kk * sxy - sx * sy) / denom;
    }

    // Pilot-wise phase after frequency removal, optionally window-averaged.
    CVec zr(k_pilots);
    for (std::size_t k = 0; k < k_pilots; ++k)
        zr[k] = z[k] * std::polar(1.0, -omega * static_cast<double>(pos[k]));
    const auto half = static_cast<std::ptrdiff_t>(cfg.cpe_average_pilots / 2);
    std::vector<double> phase(k_pilots);
    for (std::size_t k = 0; k < k_pilots; ++k) {
        Complex acc{};
        for (std::ptrdiff_t d = -half; d <= half; ++d) {
            const auto j = static_cast<std::ptrdiff_t>(k) + d;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(k_pilots)) continue;
            acc += zr[static_cast<std::size_t>(j)];
        }
        const double ph = std::arg(acc);
        phase[k] = k == 0 ? ph : unwrap_step(phase[k - 1], ph);
    }

    CarrierRecoveryResult res;
    res.symbols.resize(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k + 1 < k_pilots && pos[k + 1] <= i) ++k;
        double ph;
        if (i <= pos.front())
            ph = phase.front();
        else if (k + 1 >= k_pilots)
            ph = phase.back();
        else {
            const double t = static_cast<double>(i - pos[k]) / static_cast<double>(pos[k + 1] - pos[k]);
            ph = (1.0 - t) * phase[k] + t * phase[k + 1];
        }
        res.symbols[i] = symbols[i] * std::polar(1.0, -(omega * static_cast<double>(i) + ph));
    }
    res.freq_offset_hz = omega * symbol_rate / (2.0 * kPi);

    // Pilot SNR from adjacent-pilot differences, insensitive to slow phase drift.
    double total = 0.0, diff = 0.0;
    for (std::size_t j = 0; j < k_pilots; ++j) total += std::norm(zr[j]);
    total /= static_cast<double>(k_pilots);
    for (std::size_t j = 1; j < k_pilots; ++j) diff += std::norm(zr[j] - zr[j - 1]);
    const double var = k_pilots > 1 ? 0.5 * diff / static_cast<double>(k_pilots - 1) : 0.0;
    const double sig = total - var;
    if (var <= 0.0)
        res.pilot_snr_db = kSnrCapDb;
    else
        res.pilot_snr_db = sig > 0.0 ? std::min(kSnrCapDb, linear_to_db(sig / var)) : -kSnrCapDb;
    res.low_pilot_snr = res.pilot_snr_db < 0.0;
    return res;
}

AdaptiveResult real_mimo(const std::vector<CVec>& streams, const RxChainConfig& cfg,
                         const std::vector<CVec>& training)
{
    cfg.validate();
    const std::size_t expected = cfg.mimo_mode == MimoMode::Sc4x4 ? 2 : 4;
    if (streams.size() != expected || training.size() != expected)
        throw Error("real_mimo: stream count does not match the MIMO mode");
    const std::size_t n = streams.front().size();
    for (std::size_t s = 0; s < expected; ++s)
        if (streams[s].size() != n || training[s].size() != n)
            throw Error("real_mimo: stream and training lengths differ");

    const std::size_t rails = 2 * expected;
    const auto taps = static_cast<std::size_t>(cfg.mimo_taps);
    const auto center = static_cast<std::ptrdiff_t>(taps / 2);
    std::vector<std::vector<double>> in(rails, std::vector<double>(n));
    std::vector<std::vector<double>> ref(rails, std::vector<double>(n));
    for (std::size_t s = 0; s < expected; ++s)
        for (std::size_t i = 0; i < n; ++i) {
            in[2 * s][i] = streams[s][i].real();
            in[2 * s + 1][i] = streams[s][i].imag();
            ref[2 * s][i] = training[s][i].real();
            ref[2 * s + 1][i] = training[s][i].imag();
        }

    const std::size_t width = rails * taps;
    std::vector<std::vector<double>> w(rails, std::vector<double>(width, 0.0));
    for (std::size_t r = 0; r < rails; ++r) w[r][r * taps + taps / 2] = 1.0;
    std::vector<double> reg(width);

    auto fill = [&](std::size_t idx) {
        for (std::size_t r = 0; r < rails; ++r)
            for (std::size_t t = 0; t < taps; ++t)
                reg[r * taps + t] = in[r][wrap(static_cast<std::ptrdiff_t>(idx) + center -
                                               static_cast<std::ptrdiff_t>(t), n)];
    };
    auto output = [&](std::size_t r) {
        double acc = 0.0;
        const auto& wr = w[r];
        for (std::size_t j = 0; j < width; ++j) acc += wr[j] * reg[j];
        return acc;
    };

    double last_pass_mse = 0.0;
    for (int pass = 0; pass < cfg.training_passes; ++pass) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            fill(i);
            for (std::size_t r = 0; r < rails; ++r) {
                const double e = ref[r][i] - output(r);
                acc += e * e;
                const double ge = cfg.lms_step * e;
                auto& wr = w[r];
                for (std::size_t j = 0; j < width; ++j) wr[j] += ge * reg[j];
            }
        }
        // Per complex symbol: two rails make one symbol's error energy.
        last_pass_mse = acc / (static_cast<double>(expected) * static_cast<double>(n));
    }

    AdaptiveResult res;
    res.streams.assign(expected, CVec(n));
    for (std::size_t i = 0; i < n; ++i) {
        fill(i);
        for (std::size_t s = 0; s < expected; ++s)
            res.streams[s][i] = Complex(output(2 * s), output(2 * s + 1));
    }
    res.residual_mse = last_pass_mse;
    res.converged = last_pass_mse < cfg.convergence_mse;
    return res;
}

SnrReport estimate_snr(const std::vector<PolSymbols>& rx, const std::vector<PolSymbols>& tx)
{
    if (rx.size() != tx.size() || rx.empty()) throw Error("estimate_snr: subcarrier count mismatch");
    SnrReport rep;
    double lin_sum = 0.0;
    double sig_total = 0.0;
    double err_total = 0.0;
    const double cap = db_to_linear(kSnrCapDb);
    for (std::size_t m = 0; m < rx.size(); ++m) {
        if (rx[m].x.size() != tx[m].x.size() || rx[m].y.size() != tx[m].y.size())
            throw Error("estimate_snr: sequence length mismatch");
        double sig = 0.0;
        double err = 0.0;
        for (std::size_t i = 0; i < rx[m].x.size(); ++i) {
            sig += std::norm(tx[m].x[i]);
            err += std::norm(tx[m].x[i] - rx[m].x[i]);
        }
        for (std::size_t i = 0; i < rx[m].y.size(); ++i) {
            sig += std::norm(tx[m].y[i]);
            err += std::norm(tx[m].y[i] - rx[m].y[i]);
        }
        const double snr = err > 0.0 ? std::min(cap, sig / err) : cap;
        rep.snr_db_per_subcarrier.push_back(linear_to_db(snr));
        lin_sum += snr;
        sig_total += sig;
        err_total += err;
        rep.n_symbols_used += rx[m].x.size() + rx[m].y.size();
    }
    rep.snr_db_mean = linear_to_db(lin_sum / static_cast<double>(rx.size()));
    rep.snr_db_pooled = linear_to_db(err_total > 0.0 ? std::min(cap, sig_total / err_total) : cap);
    return rep;
}

namespace {

CVec select(const CVec& v, const std::vector<std::uint8_t>& mask, bool want_pilots)
{
    CVec out;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (static_cast<bool>(mask[i]) == want_pilots) out.push_back(v[i]);
    return out;
}

std::vector<PolSymbols> front_end(const DualPolWaveform& channel, const tx::SubcarrierPlan& plan,
                                  double dispersion, double length_km, double f0, double lo_linewidth,
                                  std::uint64_t seed)
{
    DualPolWaveform w = channel;
    if (lo_linewidth > 0.0) w = emulate_lo_linewidth(std::move(w), lo_linewidth, seed);
    if (dispersion != 0.0 && length_km != 0.0) w = cd_compensate(std::move(w), dispersion, length_km, f0);
    std::vector<PolSymbols> out;
    for (const auto& sub : subcarrier_demux(w, plan)) {
        auto s = matched_filter(sub, plan.subcarrier_baud(), plan.rolloff);
        normalize_power(s);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

ReceiverOutput receive(const DualPolWaveform& channel, const tx::ChannelSignal& reference,
                       const ReceiverSetup& setup)
{
    const auto& cfg = setup.chain;
    cfg.validate();
    const auto& plan = reference.plan;
    const auto m_count = static_cast<std::size_t>(plan.m_subcarriers);
    auto subs = front_end(channel, plan, setup.cd_dispersion_ps_nm_km, setup.cd_length_km, setup.f0_hz,
                          setup.lo_linewidth_hz, setup.seed);

    ReceiverOutput out;
    for (std::size_t m = 0; m < m_count; ++m) {
        const auto& fx = reference.frames_x[m];
        const auto& fy = reference.frames_y[m];
        if (subs[m].x.size() != fx.symbols.size())
            throw Error("receive: recovered symbol count does not match the reference frame");
        if (cfg.enable_pol_demux) {
            auto pd = pol_demux_lms(subs[m].x, subs[m].y, fx.symbols, fy.symbols, cfg);
            out.converged = out.converged && pd.converged;
            subs[m].x = std::move(pd.streams[0]);
            subs[m].y = std::move(pd.streams[1]);
        }
        const double baud = plan.subcarrier_baud();
        auto cx = carrier_recovery(subs[m].x, fx.pilot_mask, fx.pilot_values(), baud, cfg);
        auto cy = carrier_recovery(subs[m].y, fy.pilot_mask, fy.pilot_values(), baud, cfg);
        out.low_pilot_snr = out.low_pilot_snr || cx.low_pilot_snr || cy.low_pilot_snr;
        subs[m].x = std::move(cx.symbols);
        subs[m].y = std::move(cy.symbols);
    }

    if (cfg.enable_mimo) {
        const bool paired = cfg.mimo_mode == MimoMode::Mc8x8 && m_count > 1;
        auto single = cfg;
        single.mimo_mode = MimoMode::Sc4x4;
        for (std::size_t m = 0; m < m_count; ++m) {
            const std::size_t mirror = m_count - 1 - m;
            if (paired && mirror > m) {
                auto res = real_mimo({subs[m].x, subs[m].y, subs[mirror].x, subs[mirror].y}, cfg,
                                     {reference.frames_x[m].symbols, reference.frames_y[m].symbols,
                                      reference.frames_x[mirror].symbols,
                                      reference.frames_y[mirror].symbols});
                out.converged = out.converged && res.converged;
                subs[m].x = std::move(res.streams[0]);
                subs[m].y = std::move(res.streams[1]);
                subs[mirror].x = std::move(res.streams[2]);
                subs[mirror].y = std::move(res.streams[3]);
            } else if (!paired || mirror == m) {
                auto res = real_mimo({subs[m].x, subs[m].y}, single,
                                     {reference.frames_x[m].symbols, reference.frames_y[m].symbols});
                out.converged = out.converged && res.converged;
                subs[m].x = std::move(res.streams[0]);
                subs[m].y = std::move(res.streams[1]);
            }
        }
    }

    std::vector<PolSymbols> tx_payload;
    for (std::size_t m = 0; m < m_count; ++m) {
        const auto& fx = reference.frames_x[m];
        const auto& fy = reference.frames_y[m];
        out.payload_rx.push_back({select(subs[m].x, fx.pilot_mask, false), select(subs[m].y, fy.pilot_mask, false)});
        tx_payload.push_back({fx.payload(), fy.payload()});
    }
    out.report = estimate_snr(out.payload_rx, tx_payload);
    return out;
}

namespace {

/// Removes slowly varying phase with a centered data-aided moving average
/// of t* r over `window` symbols (circular).
void track_phase(CVec& rx, const CVec& tx, int window)
{
    const std::size_t n = rx.size();
    CVec corr(n);
    for (std::size_t i = 0; i < n; ++i) corr[i] = std::conj(tx[i]) * rx[i];
    const auto half = static_cast<std::ptrdiff_t>(window / 2);
    Complex acc{};
    for (std::ptrdiff_t d = -half; d <= half; ++d) acc += corr[wrap(d, n)];
    CVec out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = rx[i] * std::polar(1.0, -std::arg(acc));
        acc += corr[wrap(static_cast<std::ptrdiff_t>(i) + half + 1, n)] -
               corr[wrap(static_cast<std::ptrdiff_t>(i) - half, n)];
    }
    rx = std::move(out);
}

}  // namespace

SnrReport ideal_receiver_snr(const DualPolWaveform& channel, const tx::ChannelSignal& reference,
                             double dispersion_ps_nm_km, double length_km, double f0_hz,
                             int phase_window)
{
    const auto& plan = reference.plan;
    auto subs = front_end(channel, plan, dispersion_ps_nm_km, length_km, f0_hz, 0.0, 0);
    std::vector<PolSymbols> rx_out;
    std::vector<PolSymbols> tx_ref;
    for (std::size_t m = 0; m < subs.size(); ++m) {
        const auto& tx_x = reference.frames_x[m].symbols;
        const auto& tx_y = reference.frames_y[m].symbols;
        const auto& r = subs[m];
        if (r.x.size() != tx_x.size())
            throw Error("ideal_receiver_snr: recovered symbol count does not match the reference");
        // J = (sum t r^H)(sum r r^H)^-1, a memoryless Jones matrix fit.
        Complex a[2][2]{};
        Complex b[2][2]{};
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            const Complex rv[2] = {r.x[i], r.y[i]};
            const Complex tv[2] = {tx_x[i], tx_y[i]};
            for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) {
                    a[p][q] += tv[p] * std::conj(rv[q]);
                    b[p][q] += rv[p] * std::conj(rv[q]);
                }
        }
        const Complex det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        if (std::abs(det) == 0.0) throw Error("ideal_receiver_snr: singular received covariance");
        const Complex inv[2][2] = {{b[1][1] / det, -b[0][1] / det}, {-b[1][0] / det, b[0][0] / det}};
        Complex j[2][2]{};
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) j[p][q] = a[p][0] * inv[0][q] + a[p][1] * inv[1][q];
        PolSymbols fitted{CVec(r.x.size()), CVec(r.x.size())};
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            fitted.x[i] = j[0][0] * r.x[i] + j[0][1] * r.y[i];
            fitted.y[i] = j[1][0] * r.x[i] + j[1][1] * r.y[i];
        }
        if (phase_window > 1) {
            track_phase(fitted.x, tx_x, phase_window);
            track_phase(fitted.y, tx_y, phase_window);
        }
        rx_out.push_back(std::move(fitted));
        tx_ref.push_back({tx_x, tx_y});
    }
    return estimate_snr(rx_out, tx_ref);
}

}  // namespace ofsim::rx
