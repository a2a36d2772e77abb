#include "ofsim/linkmodel.hpp"

#include <algorithm>
#include <cmath>

namespace ofsim::model {

void SnrModelParams::validate() const
{
    if (!(eta > 0.0) || !(s0 > 0.0) || !(f0_hz > 0.0) || !(d_s_per_m2 > 0.0) || !(r_baud > 0.0) ||
        !(l_m > 0.0) || !(zeta > 0.0) || m < 1 || !(n0_mw > 0.0))
        throw Error("SnrModelParams: physical parameters must be positive");
    if (delta_theta_hz < 0.0 || a_nli_per_mw2 < 0.0)
        throw Error("SnrModelParams: linewidth and a_nli must be non-negative");
}

double fit_anli(double distortion_variance_mw, double launch_power_mw)
{
    if (!(distortion_variance_mw > 0.0)) throw Error("fit_anli: distortion variance must be positive");
    if (!(launch_power_mw > 0.0)) throw Error("fit_anli: launch power must be positive");
    return distortion_variance_mw / std::pow(launch_power_mw, 3);
}

NliFit fit_anli(const std::vector<double>& variance_mw, const std::vector<double>& power_mw)
{
    if (variance_mw.size() != power_mw.size() || variance_mw.empty())
        throw Error("fit_anli: variance and power lists must be equal and non-empty");
    double acc = 0.0;
    for (std::size_t i = 0; i < variance_mw.size(); ++i)
        acc += std::log10(fit_anli(variance_mw[i], power_mw[i]));
    const double log_a = acc / static_cast<double>(variance_mw.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < variance_mw.size(); ++i) {
        const double r = 10.0 * (std::log10(variance_mw[i]) - 3.0 * std::log10(power_mw[i]) - log_a);
        ss += r * r;
    }
    NliFit fit;
    fit.a_nli_per_mw2 = std::pow(10.0, log_a);
    fit.residual_db = std::sqrt(ss / static_cast<double>(variance_mw.size()));
    return fit;
}

double nlt_power(double a_nli, double sigma_ase2)
{
    if (!(a_nli > 0.0) || !(sigma_ase2 > 0.0)) throw Error("nlt_power: inputs must be positive");
    return std::cbrt(sigma_ase2 / (2.0 * a_nli));
}

double ase_variance(double nf_db, double span_gain_db, int n_spans, double f0_hz, double bandwidth_hz)
{
    if (!(span_gain_db > 0.0) || n_spans < 1 || !(f0_hz > 0.0) || !(bandwidth_hz > 0.0))
        throw Error("ase_variance: arguments must be positive");
    const double g = db_to_linear(span_gain_db);
    const double n_sp = db_to_linear(nf_db) * g / (2.0 * (g - 1.0));
    return n_spans * (g - 1.0) * kPlanck * f0_hz * n_sp * bandwidth_hz * 1e3;
}

double eepn_term(const SnrModelParams& p)
{
    return kPi * kSpeedOfLight * p.d_s_per_m2 * p.r_baud * p.l_m * p.delta_theta_hz /
           (2.0 * p.zeta * p.m * p.f0_hz * p.f0_hz);
}

SnrModelTerms snr_model_terms(const SnrModelParams& p)
{
    p.validate();
    SnrModelTerms t;
    t.ceiling = 1.0 / (p.eta * p.s0);
    t.eepn = eepn_term(p);
    const double per_sub = p.n0_mw / p.m;
    t.nli = 3.0 / std::pow(2.0, 2.0 / 3.0) * std::cbrt(p.a_nli_per_mw2 * per_sub * per_sub);
    t.snr = 1.0 / (t.ceiling + t.eepn + t.nli);
    return t;
}

double snr_model(const SnrModelParams& p) { return snr_model_terms(p).snr; }

std::vector<CurvePoint> snr_vs_distance_curve(const SnrModelParams& base,
                                              const std::vector<double>& distances_km,
                                              const std::vector<AnliPoint>& anli_table,
                                              double n0_per_span_mw, double span_length_km)
{
    if (anli_table.empty()) throw Error("snr_vs_distance_curve: empty a_nli table");
    if (!(span_length_km > 0.0) || !(n0_per_span_mw > 0.0))
        throw Error("snr_vs_distance_curve: span length and N0 per span must be positive");
    auto table = anli_table;
    std::sort(table.begin(), table.end(),
              [](const AnliPoint& a, const AnliPoint& b) { return a.distance_km < b.distance_km; });

    auto lookup = [&](double d) {
        constexpr double tol = 1e-9;
        if (d < table.front().distance_km - tol || d > table.back().distance_km + tol)
            throw Error("snr_vs_distance_curve: no a_nli entry covers " + std::to_string(d) + " km");
        for (std::size_t i = 0; i + 1 < table.size(); ++i) {
            if (d <= table[i + 1].distance_km + tol) {
                const double span = table[i + 1].distance_km - table[i].distance_km;
                const double t = span > 0.0 ? (d - table[i].distance_km) / span : 0.0;
                return (1.0 - std::clamp(t, 0.0, 1.0)) * table[i].a_nli_per_mw2 +
                       std::clamp(t, 0.0, 1.0) * table[i + 1].a_nli_per_mw2;
            }
        }
        return table.back().a_nli_per_mw2;
    };

    std::vector<CurvePoint> out;
    for (double d : distances_km) {
        SnrModelParams p = base;
        p.l_m = d * 1e3;
        p.a_nli_per_mw2 = lookup(d);
        p.n0_mw = n0_per_span_mw * (d / span_length_km);
        CurvePoint cp;
        cp.distance_km = d;
        cp.a_nli_per_mw2 = p.a_nli_per_mw2;
        cp.n0_mw = p.n0_mw;
        cp.terms = snr_model_terms(p);
        out.push_back(cp);
    }
    return out;
}

}  // namespace ofsim::model
