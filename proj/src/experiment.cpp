#include "ofsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ofsim/report.hpp"
#include "ofsim/toml_lite.hpp"

namespace ofsim::exp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& v)
{
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : "\n") + s;
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : Error("invalid configuration:\n" + join(issues)), issues_(std::move(issues))
{
}

std::string to_string(Scenario s)
{
    switch (s) {
        case Scenario::AnliVsDistance: return "anli_vs_distance";
        case Scenario::SnrVsDistance: return "snr_vs_distance";
        case Scenario::GmiCurve: return "gmi_curve";
        case Scenario::BackToBack: return "backtoback";
    }
    return "?";
}

Scheme parse_scheme(const std::string& text)
{
    if (text == "SC") return {"SC", 1};
    if (text.size() > 2 && text.compare(0, 2, "MC") == 0) {
        int m = 0;
        const char* first = text.data() + 2;
        const char* last = text.data() + text.size();
        auto [p, ec] = std::from_chars(first, last, m);
        if (ec == std::errc() && p == last && m >= 2 && m <= 64) return {text, m};
    }
    throw Error("invalid scheme '" + text + "' (expected SC or MC<M> with 2 <= M <= 64)");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"", {"scenario", "schemes", "seed", "workers", "out_dir", "plots"}},
        {"format", {"order", "entropy_bits"}},
        {"tx",
         {"aggregate_baud", "rolloff", "pilot_rate", "sample_rate_hz", "min_symbols", "channels",
          "slot_width_hz", "band_sample_rate_hz", "launch_power_dbm", "laser_linewidth_hz", "iq_skew_s",
          "quant_bits", "clip_ratio"}},
        {"fiber",
         {"span_length_km", "alpha_db_per_km", "dispersion_ps_nm_km", "gamma_per_w_km", "ref_freq_hz",
          "spans_per_loop", "loops", "scramble_per_loop", "snapshot_every", "noise_figure_db", "ase"}},
        {"ssfm", {"max_nl_phase_rad", "min_steps_per_span", "alias_guard_db"}},
        {"rx",
         {"lms_step", "pol_taps", "mimo_taps", "training_passes", "mimo", "pol_demux", "cpe_average_pilots",
          "max_freq_offset_hz", "convergence_mse", "lo_linewidth_hz"}},
        {"sweep", {"distances_km", "snr_db", "gmi_samples"}},
        {"model", {"eta", "zeta", "s0_db", "anli_table", "anli_csv"}},
    };
    return keys;
}

class Reader {
public:
    explicit Reader(const json& doc) : doc_(doc) {}

    std::vector<std::string> issues;

    void issue(const std::string& field, const std::string& msg) { issues.push_back(field + ": " + msg); }

    void check_unknown()
    {
        if (!doc_.is_object()) {
            issue("<root>", "expected a table");
            return;
        }
        const auto& keys = known_keys();
        for (const auto& [k, v] : doc_.items()) {
            if (keys.count(k) && k != "") {
                if (!v.is_object()) {
                    issue(k, "expected a table");
                    continue;
                }
                for (const auto& [kk, vv] : v.items())
                    if (!keys.at(k).count(kk)) issue(k + "." + kk, "unknown key");
            } else if (!keys.at("").count(k)) {
                issue(k, "unknown key");
            }
        }
    }

    const json* find(const std::string& sec, const std::string& key) const
    {
        const json* t = &doc_;
        if (!sec.empty()) {
            if (!doc_.is_object() || !doc_.contains(sec) || !doc_.at(sec).is_object()) return nullptr;
            t = &doc_.at(sec);
        }
        if (!t->is_object() || !t->contains(key)) return nullptr;
        return &t->at(key);
    }

    static std::string name(const std::string& sec, const std::string& key)
    {
        return sec.empty() ? key : sec + "." + key;
    }

    bool get(const std::string& sec, const std::string& key, double& out)
    {
        const json* v = find(sec, key);
        if (!v) return false;
        if (!v->is_number()) {
            issue(name(sec, key), "expected a number");
            return false;
        }
        out = v->get<double>();
        if (!std::isfinite(out)) {
            issue(name(sec, key), "must be finite");
            return false;
        }
        return true;
    }

    bool get(const std::string& sec, const std::string& key, long long& out)
    {
        const json* v = find(sec, key);
        if (!v) return false;
        if (!v->is_number_integer()) {
            issue(name(sec, key), "expected an integer");
            return false;
        }
        out = v->get<long long>();
        return true;
    }

    bool get(const std::string& sec, const std::string& key, int& out)
    {
        long long v = 0;
        if (!get(sec, key, v)) return false;
        if (v < -1000000000LL || v > 1000000000LL) {
            issue(name(sec, key), "out of range");
            return false;
        }
        out = static_cast<int>(v);
        return true;
    }

    bool get(const std::string& sec, const std::string& key, bool& out)
    {
        const json* v = find(sec, key);
        if (!v) return false;
        if (!v->is_boolean()) {
            issue(name(sec, key), "expected true or false");
            return false;
        }
        out = v->get<bool>();
        return true;
    }

    bool get(const std::string& sec, const std::string& key, std::string& out)
    {
        const json* v = find(sec, key);
        if (!v) return false;
        if (!v->is_string()) {
            issue(name(sec, key), "expected a string");
            return false;
        }
        out = v->get<std::string>();
        return true;
    }

    // A single number is accepted as a one-element list.
    bool get(const std::string& sec, const std::string& key, std::vector<double>& out)
    {
        const json* v = find(sec, key);
        if (!v) return false;
        std::vector<double> r;
        if (v->is_number()) {
            r.push_back(v->get<double>());
        } else if (v->is_array()) {
            for (const auto& e : *v) {
                if (!e.is_number()) {
                    issue(name(sec, key), "expected a list of numbers");
                    return false;
                }
                r.push_back(e.get<double>());
            }
        } else {
            issue(name(sec, key), "expected a number or a list of numbers");
            return false;
        }
        for (double x : r)
            if (!std::isfinite(x)) {
                issue(name(sec, key), "values must be finite");
                return false;
            }
        out = std::move(r);
        return true;
    }

    void require(bool ok, const std::string& field, const std::string& msg)
    {
        if (!ok) issue(field, msg);
    }

private:
    const json& doc_;
};

std::vector<model::AnliPoint> sorted_table(std::vector<model::AnliPoint> t)
{
    std::sort(t.begin(), t.end(),
              [](const auto& a, const auto& b) { return a.distance_km < b.distance_km; });
    return t;
}

bool covers(const std::vector<model::AnliPoint>& t, double d)
{
    if (t.empty()) return false;
    if (t.size() == 1) return std::abs(t.front().distance_km - d) <= 1e-9 * std::max(1.0, d);
    return d >= t.front().distance_km - 1e-9 && d <= t.back().distance_km + 1e-9;
}

double interpolate(const std::vector<model::AnliPoint>& t, double d)
{
    if (t.size() == 1) return t.front().a_nli_per_mw2;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (d <= t[i].distance_km || i + 1 == t.size()) {
            const auto& a = t[i - 1];
            const auto& b = t[i];
            const double w = (d - a.distance_km) / (b.distance_km - a.distance_km);
            return a.a_nli_per_mw2 + std::clamp(w, 0.0, 1.0) * (b.a_nli_per_mw2 - a.a_nli_per_mw2);
        }
    }
    return t.back().a_nli_per_mw2;
}

// Geometric mean over launch powers per (scheme, distance) of an
// anli_vs_distance results file.
std::vector<std::pair<std::string, std::vector<model::AnliPoint>>> anli_from_csv(const std::string& path)
{
    const Table t = read_csv_file(path);
    const auto cs = t.column("scheme"), cd = t.column("distance_km"), ca = t.column("a_nli_per_mw2");
    const bool has_status = t.has("status");
    std::map<std::string, std::map<double, std::pair<double, int>>> acc;
    std::vector<std::string> order;
    for (const auto& r : t.rows) {
        if (has_status && r[t.column("status")] != "ok") continue;
        const double d = std::stod(r[cd]);
        const double a = std::stod(r[ca]);
        if (!(a > 0)) continue;
        if (!acc.count(r[cs])) order.push_back(r[cs]);
        auto& slot = acc[r[cs]][d];
        slot.first += std::log(a);
        slot.second += 1;
    }
    std::vector<std::pair<std::string, std::vector<model::AnliPoint>>> out;
    for (const auto& s : order) {
        std::vector<model::AnliPoint> pts;
        for (const auto& [d, v] : acc[s]) pts.push_back({d, std::exp(v.first / v.second)});
        out.emplace_back(s, std::move(pts));
    }
    if (out.empty()) throw Error("no usable a_nli rows");
    return out;
}

}  // namespace

ExperimentConfig config_from_json(const json& doc, const std::string& base_dir)
{
    ExperimentConfig c;
    Reader r(doc);
    r.check_unknown();

    std::string scenario;
    if (!r.get("", "scenario", scenario)) {
        if (!r.find("", "scenario")) r.issue("scenario", "required");
    } else if (scenario == "anli_vs_distance") {
        c.scenario = Scenario::AnliVsDistance;
    } else if (scenario == "snr_vs_distance") {
        c.scenario = Scenario::SnrVsDistance;
    } else if (scenario == "gmi_curve") {
        c.scenario = Scenario::GmiCurve;
    } else if (scenario == "backtoback") {
        c.scenario = Scenario::BackToBack;
    } else {
        r.issue("scenario", "unknown scenario '" + scenario +
                                "' (anli_vs_distance, snr_vs_distance, gmi_curve, backtoback)");
    }

    if (const json* s = r.find("", "schemes")) {
        std::vector<std::string> labels;
        if (s->is_string()) {
            labels.push_back(s->get<std::string>());
        } else if (s->is_array() && std::all_of(s->begin(), s->end(), [](const json& e) { return e.is_string(); })) {
            for (const auto& e : *s) labels.push_back(e.get<std::string>());
        } else {
            r.issue("schemes", "expected a list of strings");
        }
        c.schemes.clear();
        std::set<std::string> seen;
        for (const auto& l : labels) {
            try {
                c.schemes.push_back(parse_scheme(l));
                if (!seen.insert(l).second) r.issue("schemes", "duplicate scheme '" + l + "'");
            } catch (const Error& e) {
                r.issue("schemes", e.what());
            }
        }
        if (labels.empty() && s->is_array()) r.issue("schemes", "must not be empty");
    }

    long long seed = 1;
    if (r.get("", "seed", seed)) {
        r.require(seed >= 0, "seed", "must be non-negative");
        c.seed = static_cast<std::uint64_t>(seed);
    }
    if (r.get("", "workers", c.workers)) r.require(c.workers >= 1 && c.workers <= 256, "workers", "must be in [1, 256]");
    r.get("", "out_dir", c.out_dir);
    r.get("", "plots", c.plots);

    // Format.
    bool entropy_given = false;
    if (r.get("format", "order", c.qam_order))
        r.require(c.qam_order == 4 || c.qam_order == 16 || c.qam_order == 64 || c.qam_order == 256,
                  "format.order", "must be 4, 16, 64 or 256");
    const bool order_ok = c.qam_order == 4 || c.qam_order == 16 || c.qam_order == 64 || c.qam_order == 256;
    c.entropy_bits = order_ok ? std::log2(static_cast<double>(c.qam_order)) : 0.0;
    if (r.get("format", "entropy_bits", c.entropy_bits)) entropy_given = true;
    if (entropy_given && order_ok) {
        const auto con = shaping::build_square_qam(c.qam_order);
        const double hmax = std::log2(static_cast<double>(c.qam_order));
        const double hmin = shaping::min_entropy_bits(con);
        r.require(c.entropy_bits > hmin && c.entropy_bits <= hmax + 1e-12, "format.entropy_bits",
                  "must be in (" + format_number(hmin) + ", " + format_number(hmax) + "] for " +
                      std::to_string(c.qam_order) + "QAM");
    }

    // Transmitter.
    if (r.get("tx", "aggregate_baud", c.aggregate_baud))
        r.require(c.aggregate_baud > 0, "tx.aggregate_baud", "must be positive");
    if (r.get("tx", "rolloff", c.rolloff))
        r.require(c.rolloff >= 0 && c.rolloff <= 1, "tx.rolloff", "must be in [0, 1]");
    if (r.get("tx", "pilot_rate", c.pilot_rate))
        r.require(c.pilot_rate >= 0 && c.pilot_rate <= 0.5, "tx.pilot_rate", "must be in [0, 0.5]");
    if (r.get("tx", "sample_rate_hz", c.sample_rate_hz))
        r.require(c.sample_rate_hz > 0, "tx.sample_rate_hz", "must be positive");
    long long min_symbols = 0;
    if (r.get("tx", "min_symbols", min_symbols)) {
        r.require(min_symbols >= 64 && min_symbols <= (1LL << 24), "tx.min_symbols", "must be in [64, 2^24]");
        c.min_symbols = static_cast<std::size_t>(std::max(0LL, min_symbols));
    }
    if (r.get("tx", "channels", c.channels))
        r.require(c.channels >= 1 && c.channels % 2 == 1, "tx.channels", "must be a positive odd number");
    if (r.get("tx", "slot_width_hz", c.slot_width_hz))
        r.require(c.slot_width_hz > 0, "tx.slot_width_hz", "must be positive");
    if (r.get("tx", "band_sample_rate_hz", c.band_sample_rate_hz))
        r.require(c.band_sample_rate_hz > 0, "tx.band_sample_rate_hz", "must be positive");
    if (const json* lp = r.find("tx", "launch_power_dbm")) {
        if (lp->is_string()) {
            if (lp->get<std::string>() == "nlt")
                c.launch_at_nlt = true;
            else
                r.issue("tx.launch_power_dbm", "expected a number, a list of numbers or \"nlt\"");
        } else if (r.get("tx", "launch_power_dbm", c.launch_power_dbm)) {
            r.require(!c.launch_power_dbm.empty(), "tx.launch_power_dbm", "must not be empty");
            for (double p : c.launch_power_dbm)
                r.require(p >= -30 && p <= 30, "tx.launch_power_dbm", "values must be in [-30, 30] dBm");
        }
    }
    r.get("tx", "laser_linewidth_hz", c.impairments.laser_linewidth_hz);
    r.get("tx", "iq_skew_s", c.impairments.iq_skew_s);
    r.get("tx", "quant_bits", c.impairments.quant_bits);
    r.get("tx", "clip_ratio", c.impairments.clip_ratio);
    try {
        c.impairments.validate();
    } catch (const Error& e) {
        r.issue("tx", e.what());
    }
    if (c.aggregate_baud > 0 && c.rolloff >= 0 && c.rolloff <= 1) {
        for (const auto& s : c.schemes) {
            const auto plan = tx::SubcarrierPlan::make(s.m, c.aggregate_baud, c.rolloff);
            r.require(plan.occupied_bandwidth_hz() < c.sample_rate_hz, "tx.sample_rate_hz",
                      "must exceed the occupied bandwidth of " + s.label + " (" +
                          format_number(plan.occupied_bandwidth_hz()) + " Hz)");
            if (c.channels > 1)
                r.require(plan.occupied_bandwidth_hz() <= c.slot_width_hz, "tx.slot_width_hz",
                          "narrower than the occupied bandwidth of " + s.label);
        }
    }
    if (c.channels > 1 || c.scenario == Scenario::AnliVsDistance)
        r.require(c.channels * c.slot_width_hz <= c.band_sample_rate_hz, "tx.band_sample_rate_hz",
                  "must be at least channels x slot_width_hz");

    // Fiber.
    r.get("fiber", "span_length_km", c.span.length_km);
    r.get("fiber", "alpha_db_per_km", c.span.alpha_db_per_km);
    r.get("fiber", "dispersion_ps_nm_km", c.span.dispersion_ps_nm_km);
    r.get("fiber", "gamma_per_w_km", c.span.gamma_per_w_km);
    r.get("fiber", "ref_freq_hz", c.span.ref_freq_hz);
    try {
        c.span.validate();
    } catch (const Error& e) {
        r.issue("fiber", e.what());
    }
    if (r.get("fiber", "spans_per_loop", c.spans_per_loop))
        r.require(c.spans_per_loop >= 1, "fiber.spans_per_loop", "must be at least 1");
    if (r.get("fiber", "loops", c.loops)) r.require(c.loops >= 1, "fiber.loops", "must be at least 1");
    r.get("fiber", "scramble_per_loop", c.scramble_per_loop);
    if (r.get("fiber", "snapshot_every", c.snapshot_every))
        r.require(c.snapshot_every >= 1, "fiber.snapshot_every", "must be at least 1");
    r.get("fiber", "noise_figure_db", c.noise_figure_db);
    r.get("fiber", "ase", c.ase);
    r.require(c.noise_figure_db >= 10 * std::log10(2.0) - 1e-12 && c.noise_figure_db <= 20,
              "fiber.noise_figure_db", "must be in [3.01, 20] dB");

    r.get("ssfm", "max_nl_phase_rad", c.ssfm.max_nl_phase_rad);
    r.get("ssfm", "min_steps_per_span", c.ssfm.min_steps_per_span);
    r.get("ssfm", "alias_guard_db", c.ssfm.alias_guard_db);
    try {
        c.ssfm.validate();
    } catch (const Error& e) {
        r.issue("ssfm", e.what());
    }

    // Receiver.
    r.get("rx", "lms_step", c.chain.lms_step);
    r.get("rx", "pol_taps", c.chain.pol_taps);
    r.get("rx", "mimo_taps", c.chain.mimo_taps);
    r.get("rx", "training_passes", c.chain.training_passes);
    r.get("rx", "pol_demux", c.chain.enable_pol_demux);
    r.get("rx", "cpe_average_pilots", c.chain.cpe_average_pilots);
    r.get("rx", "max_freq_offset_hz", c.chain.max_freq_offset_hz);
    r.get("rx", "convergence_mse", c.chain.convergence_mse);
    c.chain.pilot_rate = c.pilot_rate;
    if (r.get("rx", "mimo", c.mimo))
        r.require(c.mimo == "auto" || c.mimo == "4x4" || c.mimo == "8x8" || c.mimo == "off", "rx.mimo",
                  "must be auto, 4x4, 8x8 or off");
    if (c.mimo == "8x8")
        for (const auto& s : c.schemes)
            r.require(s.m % 2 == 0, "rx.mimo", "8x8 needs an even subcarrier count (" + s.label + ")");
    if (r.get("rx", "lo_linewidth_hz", c.lo_linewidths_hz)) {
        r.require(!c.lo_linewidths_hz.empty(), "rx.lo_linewidth_hz", "must not be empty");
        for (double v : c.lo_linewidths_hz) r.require(v >= 0, "rx.lo_linewidth_hz", "must be non-negative");
    }
    const bool needs_dsp = c.scenario == Scenario::SnrVsDistance || c.scenario == Scenario::BackToBack;
    if (needs_dsp) {
        try {
            c.chain.validate();
        } catch (const Error& e) {
            r.issue("rx", e.what());
        }
        r.require(c.pilot_rate > 0, "tx.pilot_rate", "the receiver chain needs pilots");
    }

    // Sweeps.
    if (r.get("sweep", "distances_km", c.distances_km))
        for (double d : c.distances_km) r.require(d > 0, "sweep.distances_km", "must be positive");
    if (r.get("sweep", "snr_db", c.snr_db))
        for (double s : c.snr_db) r.require(s >= -20 && s <= 60, "sweep.snr_db", "must be in [-20, 60] dB");
    long long gmi_samples = 0;
    if (r.get("sweep", "gmi_samples", gmi_samples)) {
        r.require(gmi_samples >= 1000 && gmi_samples <= 100000000LL, "sweep.gmi_samples",
                  "must be in [1000, 1e8]");
        c.gmi_samples = static_cast<std::size_t>(std::max(0LL, gmi_samples));
    }

    // Model.
    if (r.get("model", "eta", c.eta)) r.require(c.eta > 0 && c.eta <= 1, "model.eta", "must be in (0, 1]");
    if (r.get("model", "zeta", c.zeta)) r.require(c.zeta > 0, "model.zeta", "must be positive");
    double s0 = 0;
    if (r.get("model", "s0_db", s0)) c.s0_db = s0;
    if (const json* t = r.find("model", "anli_table")) {
        bool ok = t->is_array();
        std::vector<model::AnliPoint> pts;
        if (ok)
            for (const auto& e : *t) {
                if (!e.is_object() || !e.contains("distance_km") || !e.contains("a_nli_per_mw2") ||
                    !e["distance_km"].is_number() || !e["a_nli_per_mw2"].is_number() || e.size() != 2) {
                    ok = false;
                    break;
                }
                pts.push_back({e["distance_km"].get<double>(), e["a_nli_per_mw2"].get<double>()});
            }
        if (!ok) {
            r.issue("model.anli_table", "expected a list of {distance_km, a_nli_per_mw2} tables");
        } else {
            for (const auto& p : pts) {
                r.require(p.distance_km >= 0, "model.anli_table", "distances must be non-negative");
                r.require(p.a_nli_per_mw2 >= 0, "model.anli_table", "a_nli must be non-negative");
            }
            c.anli_table = sorted_table(pts);
        }
    }
    std::string anli_csv;
    if (r.get("model", "anli_csv", anli_csv)) {
        fs::path p(anli_csv);
        if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
        try {
            c.anli_by_scheme = anli_from_csv(p.string());
        } catch (const Error& e) {
            r.issue("model.anli_csv", p.string() + ": " + e.what());
        } catch (const std::exception& e) {
            r.issue("model.anli_csv", p.string() + ": malformed value (" + e.what() + ")");
        }
    }

    // Scenario-level requirements.
    switch (c.scenario) {
        case Scenario::AnliVsDistance:
            r.require(!c.ase, "fiber.ase", "a_nli is measured on a noiseless link; set ase = false");
            r.require(c.impairments.laser_linewidth_hz == 0, "tx.laser_linewidth_hz",
                      "a_nli is measured without phase noise; set to 0");
            r.require(!c.launch_at_nlt, "tx.launch_power_dbm", "\"nlt\" is not available for a_nli runs");
            break;
        case Scenario::SnrVsDistance: {
            r.require(!c.distances_km.empty(), "sweep.distances_km", "required for snr_vs_distance");
            r.require(c.launch_power_dbm.size() == 1 || c.launch_at_nlt, "tx.launch_power_dbm",
                      "snr_vs_distance takes a single launch power or \"nlt\"");
            const bool any_table = !c.anli_table.empty() || !c.anli_by_scheme.empty();
            if (c.launch_at_nlt)
                r.require(any_table, "model.anli_table", "\"nlt\" launch power needs an a_nli table");
            if (any_table)
                for (const auto& s : c.schemes)
                    for (double d : c.distances_km) {
                        const std::vector<model::AnliPoint>* t = &c.anli_table;
                        for (const auto& [label, pts] : c.anli_by_scheme)
                            if (label == s.label) t = &pts;
                        if (!covers(*t, d)) {
                            r.issue("model.anli_table",
                                    "no a_nli for " + s.label + " at " + format_number(d) + " km");
                            break;
                        }
                    }
            break;
        }
        case Scenario::GmiCurve:
            r.require(!c.snr_db.empty(), "sweep.snr_db", "required for gmi_curve");
            break;
        case Scenario::BackToBack: break;
    }

    if (!r.issues.empty()) throw ConfigError(r.issues);
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    json doc;
    try {
        doc = toml::parse_file(path);
    } catch (const Error& e) {
        throw ConfigError({e.what()});
    }
    return config_from_json(doc, fs::path(path).parent_path().string());
}

json ExperimentConfig::resolved() const
{
    json j;
    j["scenario"] = to_string(scenario);
    j["schemes"] = json::array();
    for (const auto& s : schemes) j["schemes"].push_back(s.label);
    j["seed"] = seed;
    j["workers"] = workers;
    j["out_dir"] = out_dir;
    j["plots"] = plots;
    j["format"] = {{"order", qam_order}, {"entropy_bits", entropy_bits}};
    json lp = launch_at_nlt ? json("nlt") : json(launch_power_dbm);
    j["tx"] = {{"aggregate_baud", aggregate_baud},
               {"rolloff", rolloff},
               {"pilot_rate", pilot_rate},
               {"sample_rate_hz", sample_rate_hz},
               {"min_symbols", min_symbols},
               {"symbols", symbol_count(*this)},
               {"channels", channels},
               {"slot_width_hz", slot_width_hz},
               {"band_sample_rate_hz", band_sample_rate_hz},
               {"launch_power_dbm", lp},
               {"laser_linewidth_hz", impairments.laser_linewidth_hz},
               {"iq_skew_s", impairments.iq_skew_s},
               {"quant_bits", impairments.quant_bits},
               {"clip_ratio", impairments.clip_ratio}};
    j["fiber"] = {{"span_length_km", span.length_km},
                  {"alpha_db_per_km", span.alpha_db_per_km},
                  {"dispersion_ps_nm_km", span.dispersion_ps_nm_km},
                  {"gamma_per_w_km", span.gamma_per_w_km},
                  {"ref_freq_hz", span.ref_freq_hz},
                  {"spans_per_loop", spans_per_loop},
                  {"loops", loops},
                  {"scramble_per_loop", scramble_per_loop},
                  {"snapshot_every", snapshot_every},
                  {"noise_figure_db", noise_figure_db},
                  {"ase", ase}};
    j["ssfm"] = {{"max_nl_phase_rad", ssfm.max_nl_phase_rad},
                 {"min_steps_per_span", ssfm.min_steps_per_span},
                 {"alias_guard_db", ssfm.alias_guard_db}};
    j["rx"] = {{"lms_step", chain.lms_step},
               {"pol_taps", chain.pol_taps},
               {"mimo_taps", chain.mimo_taps},
               {"training_passes", chain.training_passes},
               {"mimo", mimo},
               {"pol_demux", chain.enable_pol_demux},
               {"cpe_average_pilots", chain.cpe_average_pilots},
               {"max_freq_offset_hz", chain.max_freq_offset_hz},
               {"convergence_mse", chain.convergence_mse},
               {"lo_linewidth_hz", lo_linewidths_hz}};
    j["sweep"] = {{"distances_km", distances_km}, {"snr_db", snr_db}, {"gmi_samples", gmi_samples}};
    json table = json::array();
    for (const auto& p : anli_table) table.push_back({{"distance_km", p.distance_km}, {"a_nli_per_mw2", p.a_nli_per_mw2}});
    json by_scheme = json::object();
    for (const auto& [label, pts] : anli_by_scheme) {
        json arr = json::array();
        for (const auto& p : pts) arr.push_back({{"distance_km", p.distance_km}, {"a_nli_per_mw2", p.a_nli_per_mw2}});
        by_scheme[label] = arr;
    }
    j["model"] = {{"eta", eta},
                  {"zeta", zeta},
                  {"s0_db", s0_db ? json(*s0_db) : json("measured back-to-back")},
                  {"anli_table", table},
                  {"anli_by_scheme", by_scheme}};
    return j;
}

// ---------------------------------------------------------------------------
// CSV

std::size_t Table::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error("missing column '" + name + "'");
}

bool Table::has(const std::string& name) const
{
    return std::find(header.begin(), header.end(), name) != header.end();
}

namespace {

void write_field(std::ostream& os, const std::string& f)
{
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
        os << f;
        return;
    }
    os << '"';
    for (char c : f) {
        if (c == '"') os << '"';
        os << c;
    }
    os << '"';
}

void write_row(std::ostream& os, const std::vector<std::string>& row)
{
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        write_field(os, row[i]);
    }
    os << "\r\n";
}

}  // namespace

void write_csv(std::ostream& os, const Table& t)
{
    write_row(os, t.header);
    for (const auto& r : t.rows) {
        if (r.size() != t.header.size()) throw Error("write_csv: row width does not match the header");
        write_row(os, r);
    }
}

Table read_csv(std::istream& is)
{
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool quoted = false, any = false;
    std::size_t i = 0;
    auto end_record = [&] {
        rec.push_back(std::move(field));
        field.clear();
        records.push_back(std::move(rec));
        rec.clear();
        any = false;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
            } else {
                field += c;
            }
            ++i;
            continue;
        }
        if (c == '"') {
            if (!field.empty()) throw Error("read_csv: stray quote inside a field");
            quoted = true;
            any = true;
        } else if (c == ',') {
            rec.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
        } else {
            field += c;
            any = true;
        }
        ++i;
    }
    if (quoted) throw Error("read_csv: unterminated quoted field");
    if (any || !field.empty()) end_record();

    Table t;
    if (records.empty()) throw Error("read_csv: empty input");
    t.header = std::move(records.front());
    for (std::size_t k = 1; k < records.size(); ++k) {
        if (records[k].size() == 1 && records[k][0].empty()) continue;
        if (records[k].size() != t.header.size())
            throw Error("read_csv: record " + std::to_string(k + 1) + " has " +
                        std::to_string(records[k].size()) + " fields, header has " +
                        std::to_string(t.header.size()));
        t.rows.push_back(std::move(records[k]));
    }
    return t;
}

Table read_csv_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    try {
        return read_csv(in);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_number failed");
    return std::string(buf, p);
}

// ---------------------------------------------------------------------------
// Simulation building blocks

namespace {

tx::SubcarrierPlan plan_for(const ExperimentConfig& cfg, const Scheme& s)
{
    return tx::SubcarrierPlan::make(s.m, cfg.aggregate_baud, cfg.rolloff);
}

bool frame_ok(std::size_t frame, double pilot_rate)
{
    try {
        tx::payload_for_frame(frame, pilot_rate);
        return true;
    } catch (const Error&) {
        return false;
    }
}

double f0(const ExperimentConfig& cfg) { return cfg.span.ref_freq_hz; }

}  // namespace

std::size_t symbol_count(const ExperimentConfig& cfg)
{
    std::vector<double> rates{cfg.sample_rate_hz};
    std::vector<double> grid;
    if (cfg.scenario == Scenario::AnliVsDistance || cfg.channels > 1) {
        rates.push_back(cfg.band_sample_rate_hz);
        grid.push_back(cfg.slot_width_hz);
    }
    std::vector<Scheme> schemes = cfg.schemes;
    std::sort(schemes.begin(), schemes.end(), [](const auto& a, const auto& b) { return a.m > b.m; });
    std::size_t n = cfg.min_symbols;
    for (int guard = 0; guard < 100000; ++guard) {
        std::size_t candidate = n;
        bool ok = true;
        for (const auto& s : schemes) {
            const std::size_t g = tx::grid_symbol_count(plan_for(cfg, s), rates, grid, candidate);
            if (g != candidate) {
                candidate = g;
                ok = false;
                break;
            }
            if (cfg.pilot_rate > 0 && !frame_ok(candidate / s.m, cfg.pilot_rate)) {
                ok = false;
                candidate += 1;
                break;
            }
        }
        if (ok) return candidate;
        n = candidate;
    }
    throw Error("no symbol count satisfies the sample-rate and frequency grids");
}

shaping::ShapedFormat make_format(const ExperimentConfig& cfg)
{
    return shaping::shaped_qam(cfg.qam_order, cfg.entropy_bits);
}

namespace {

tx::ChannelSignal make_channel(const ExperimentConfig& cfg, const Scheme& scheme, const shaping::ShapedFormat& fmt,
                               std::size_t n, double power_mw, std::uint64_t seed)
{
    tx::ChannelSpec spec;
    spec.plan = plan_for(cfg, scheme);
    spec.symbols_per_subcarrier = n / static_cast<std::size_t>(scheme.m);
    spec.pilot_rate = cfg.pilot_rate;
    spec.sample_rate_hz = cfg.sample_rate_hz;
    spec.launch_power_mw = power_mw;
    auto sig = tx::generate_channel(fmt, spec, seed);
    sig.wave.center_freq_hz = f0(cfg);
    return sig;
}

}  // namespace

std::vector<AnliSample> measure_anli(const ExperimentConfig& cfg, const Scheme& scheme, double launch_power_dbm,
                                     std::uint64_t seed)
{
    const std::size_t n = symbol_count(cfg);
    const auto fmt = make_format(cfg);
    const double p_mw = dbm_to_mw(launch_power_dbm);
    const int cut = cfg.channels / 2;
    std::vector<tx::WdmChannel> chans;
    tx::ChannelSignal reference;
    for (int c = 0; c < cfg.channels; ++c) {
        auto sig = make_channel(cfg, scheme, fmt, n, p_mw, derive_seed(seed, 1, static_cast<std::uint64_t>(c)));
        const double offset = (c - cut) * cfg.slot_width_hz;
        chans.push_back({sig.wave, f0(cfg) + offset, cfg.slot_width_hz});
        if (c == cut) reference = std::move(sig);
    }
    auto band = tx::wdm_mux(chans, f0(cfg), cfg.band_sample_rate_hz);
    band.center_freq_hz = f0(cfg);

    fiber::LinkConfig link;
    link.spans.assign(static_cast<std::size_t>(cfg.spans_per_loop), cfg.span);
    link.edfa_noise_figure_db = cfg.noise_figure_db;
    link.enable_ase = false;
    link.loops = cfg.loops;
    link.scramble_per_loop = cfg.scramble_per_loop;
    link.snapshot_every = cfg.snapshot_every;

    std::vector<AnliSample> out;
    fiber::propagate_link(band, link, cfg.ssfm, derive_seed(seed, 2), [&](double d, const DualPolWaveform& f) {
        const auto ch = rx::extract_channel(f, 0.0, cfg.sample_rate_hz, cfg.slot_width_hz);
        const auto rep = rx::ideal_receiver_snr(ch, reference, cfg.span.dispersion_ps_nm_km, d, f0(cfg));
        const double snr = db_to_linear(rep.snr_db_pooled);
        out.push_back({d, rep.snr_db_pooled, 1.0 / (snr * p_mw * p_mw)});
    });
    return out;
}

double ase_n0_mw(const ExperimentConfig& cfg, double distance_km)
{
    const double per_span = 2.0 * model::ase_variance(cfg.noise_figure_db, cfg.span.loss_db(), 1, f0(cfg),
                                                      cfg.aggregate_baud);
    return per_span * distance_km / cfg.span.length_km;
}

double anli_at(const ExperimentConfig& cfg, const Scheme& scheme, double distance_km)
{
    const std::vector<model::AnliPoint>* t = &cfg.anli_table;
    for (const auto& [label, pts] : cfg.anli_by_scheme)
        if (label == scheme.label) t = &pts;
    if (t->empty()) return 0.0;
    if (!covers(*t, distance_km))
        throw Error("no a_nli for " + scheme.label + " at " + format_number(distance_km) + " km");
    return interpolate(*t, distance_km);
}

rx::RxChainConfig chain_for(const ExperimentConfig& cfg, const Scheme& scheme)
{
    auto c = cfg.chain;
    c.pilot_rate = cfg.pilot_rate;
    if (cfg.mimo == "off") {
        c.enable_mimo = false;
    } else if (cfg.mimo == "4x4") {
        c.mimo_mode = rx::MimoMode::Sc4x4;
    } else if (cfg.mimo == "8x8") {
        c.mimo_mode = rx::MimoMode::Mc8x8;
    } else {
        c.mimo_mode = scheme.m > 1 && scheme.m % 2 == 0 ? rx::MimoMode::Mc8x8 : rx::MimoMode::Sc4x4;
    }
    return c;
}

namespace {

tx::ChannelSignal transmit(const ExperimentConfig& cfg, const Scheme& scheme, double power_mw, std::uint64_t seed)
{
    auto sig = make_channel(cfg, scheme, make_format(cfg), symbol_count(cfg), power_mw, derive_seed(seed, 1));
    sig.wave = tx::apply_impairments(std::move(sig.wave), cfg.impairments, derive_seed(seed, 2));
    sig.wave.set_power_mw(power_mw);
    return sig;
}

void add_white_noise(DualPolWaveform& w, double noise_mw_in_band, double symbol_rate, std::uint64_t seed)
{
    if (noise_mw_in_band <= 0) return;
    const double var_per_pol_w = 0.5 * noise_mw_in_band * 1e-3 * w.sample_rate_hz / symbol_rate;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, std::sqrt(var_per_pol_w / 2.0));
    for (CVec* pol : {&w.x, &w.y})
        for (auto& s : *pol) s += Complex(g(rng), g(rng));
}

}  // namespace

rx::ReceiverOutput simulate_link_point(const ExperimentConfig& cfg, const Scheme& scheme, const LinkPoint& point,
                                       std::uint64_t seed)
{
    const double p_mw = dbm_to_mw(point.launch_power_dbm);
    auto sig = transmit(cfg, scheme, p_mw, seed);
    auto w = fiber::apply_dispersion(sig.wave, cfg.span.dispersion_ps_nm_km, point.distance_km, f0(cfg));
    const double a = anli_at(cfg, scheme, point.distance_km);
    const double noise = ase_n0_mw(cfg, point.distance_km) + a * p_mw * p_mw * p_mw + point.extra_noise_mw;
    add_white_noise(w, noise, cfg.aggregate_baud, derive_seed(seed, 3));
    rx::ReceiverSetup setup;
    setup.chain = chain_for(cfg, scheme);
    setup.cd_dispersion_ps_nm_km = cfg.span.dispersion_ps_nm_km;
    setup.cd_length_km = point.distance_km;
    setup.f0_hz = f0(cfg);
    setup.lo_linewidth_hz = point.lo_linewidth_hz;
    setup.seed = derive_seed(seed, 4);
    return rx::receive(w, sig, setup);
}

rx::ReceiverOutput back_to_back(const ExperimentConfig& cfg, const Scheme& scheme, std::uint64_t seed)
{
    auto sig = transmit(cfg, scheme, 1.0, seed);
    rx::ReceiverSetup setup;
    setup.chain = chain_for(cfg, scheme);
    setup.f0_hz = f0(cfg);
    setup.seed = derive_seed(seed, 4);
    return rx::receive(sig.wave, sig, setup);
}

double nlt_launch_mw(double a_channel_per_mw2, double n0_mw)
{
    return model::nlt_power(a_channel_per_mw2, n0_mw);
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

using Rows = std::vector<std::vector<std::string>>;

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn)
{
    const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

std::string status_of(const std::exception& e) { return std::string("error: ") + e.what(); }

std::string fmt(double v) { return format_number(v); }

struct Progress {
    const std::function<void(const std::string&)>& fn;
    std::mutex m;
    void operator()(const std::string& s)
    {
        if (!fn) return;
        std::lock_guard lock(m);
        fn(s);
    }
};

RunOutput run_anli(const ExperimentConfig& cfg, Progress& progress)
{
    RunOutput out;
    out.table.header = {"scheme",        "m_subcarriers", "entropy_bits", "kurtosis", "launch_power_dbm",
                        "distance_km",   "snr_db",        "a_nli_per_mw2", "a_nli_db_per_mw2", "status"};
    const auto format = make_format(cfg);
    const double kurt = shaping::moments(format.constellation, format.distribution).kurtosis;
    const std::size_t np = cfg.launch_power_dbm.size();
    const std::size_t tasks = cfg.schemes.size() * np;
    std::vector<Rows> rows(tasks);
    std::vector<std::uint64_t> seeds(tasks);
    parallel_for(tasks, cfg.workers, [&](std::size_t i) {
        const auto& s = cfg.schemes[i / np];
        const double p = cfg.launch_power_dbm[i % np];
        seeds[i] = derive_seed(cfg.seed, 10, i % np);
        auto base = [&](std::vector<std::string> tail) {
            std::vector<std::string> r{s.label, std::to_string(s.m), fmt(cfg.entropy_bits), fmt(kurt), fmt(p)};
            r.insert(r.end(), tail.begin(), tail.end());
            return r;
        };
        try {
            for (const auto& a : measure_anli(cfg, s, p, seeds[i]))
                rows[i].push_back(base({fmt(a.distance_km), fmt(a.snr_db), fmt(a.a_nli_per_mw2),
                                        fmt(linear_to_db(a.a_nli_per_mw2)), "ok"}));
        } catch (const std::exception& e) {
            rows[i].push_back(base({"", "", "", "", status_of(e)}));
        }
        progress(s.label + " at " + fmt(p) + " dBm done");
    });
    for (std::size_t i = 0; i < tasks; ++i) {
        for (auto& r : rows[i]) out.table.rows.push_back(std::move(r));
        out.seeds.push_back({{"scheme", cfg.schemes[i / np].label},
                             {"launch_power_dbm", cfg.launch_power_dbm[i % np]},
                             {"seed", seeds[i]}});
    }
    return out;
}

const std::vector<std::string>& snr_header()
{
    static const std::vector<std::string> h{
        "scheme",      "m_subcarriers", "entropy_bits", "lo_linewidth_hz", "distance_km",  "launch_power_dbm",
        "source",      "snr_db",        "a_nli_per_mw2", "n0_mw",          "term_ceiling", "term_eepn",
        "term_nli",    "status"};
    return h;
}

// Back-to-back ceiling per scheme: from the config or measured.
std::vector<double> ceilings(const ExperimentConfig& cfg, json& seeds)
{
    std::vector<double> s0(cfg.schemes.size());
    for (std::size_t i = 0; i < cfg.schemes.size(); ++i) {
        if (cfg.s0_db) {
            s0[i] = db_to_linear(*cfg.s0_db);
            continue;
        }
        const auto seed = derive_seed(cfg.seed, 20);
        s0[i] = db_to_linear(back_to_back(cfg, cfg.schemes[i], seed).report.snr_db_pooled);
        seeds.push_back({{"scheme", cfg.schemes[i].label}, {"purpose", "back_to_back_ceiling"}, {"seed", seed}});
    }
    return s0;
}

std::vector<std::string> model_row(const ExperimentConfig& cfg, const Scheme& s, double s0, double lw, double d)
{
    const double a_ch = anli_at(cfg, s, d);
    const double n0 = ase_n0_mw(cfg, d);
    model::SnrModelParams p;
    p.eta = cfg.eta;
    p.s0 = s0;
    p.f0_hz = f0(cfg);
    p.d_s_per_m2 = cfg.span.dispersion_ps_nm_km * 1e-6;
    p.r_baud = cfg.aggregate_baud;
    p.l_m = d * 1e3;
    p.delta_theta_hz = lw;
    p.zeta = cfg.zeta;
    p.m = s.m;
    p.a_nli_per_mw2 = a_ch * s.m * s.m;
    p.n0_mw = n0;
    const auto t = model::snr_model_terms(p);
    const double p_dbm = a_ch > 0 ? mw_to_dbm(nlt_launch_mw(a_ch, n0)) : std::nan("");
    return {s.label, std::to_string(s.m), fmt(cfg.entropy_bits), fmt(lw), fmt(d), a_ch > 0 ? fmt(p_dbm) : "",
            "model", fmt(linear_to_db(t.snr)), fmt(a_ch), fmt(n0), fmt(t.ceiling), fmt(t.eepn), fmt(t.nli), "ok"};
}

RunOutput run_snr(const ExperimentConfig& cfg, bool simulate, Progress& progress)
{
    RunOutput out;
    out.table.header = snr_header();
    const auto s0 = ceilings(cfg, out.seeds);
    const std::size_t nl = cfg.lo_linewidths_hz.size(), nd = cfg.distances_km.size();
    const std::size_t tasks = cfg.schemes.size() * nl * nd;
    std::vector<Rows> rows(tasks);
    std::vector<std::uint64_t> seeds(tasks);
    parallel_for(tasks, cfg.workers, [&](std::size_t i) {
        const std::size_t si = i / (nl * nd), li = (i / nd) % nl, di = i % nd;
        const auto& s = cfg.schemes[si];
        const double lw = cfg.lo_linewidths_hz[li], d = cfg.distances_km[di];
        seeds[i] = derive_seed(cfg.seed, 21, li, di);
        const std::vector<std::string> key{s.label, std::to_string(s.m), fmt(cfg.entropy_bits), fmt(lw), fmt(d)};
        auto error_row = [&](const std::string& source, const std::exception& e) {
            auto r = key;
            for (const char* v : {"", source.c_str(), "", "", "", "", "", ""}) r.emplace_back(v);
            r.push_back(status_of(e));
            return r;
        };
        if (simulate) {
            try {
                const double a_ch = anli_at(cfg, s, d);
                const double n0 = ase_n0_mw(cfg, d);
                const double p_dbm =
                    cfg.launch_at_nlt ? mw_to_dbm(nlt_launch_mw(a_ch, n0)) : cfg.launch_power_dbm.front();
                const auto res = simulate_link_point(cfg, s, {d, lw, p_dbm, 0.0}, seeds[i]);
                std::string status = "ok";
                if (!res.converged) status = "not converged";
                if (res.low_pilot_snr) status = "low pilot snr";
                auto r = key;
                for (auto v : {fmt(p_dbm), std::string("sim"), fmt(res.report.snr_db_pooled), fmt(a_ch), fmt(n0),
                               std::string(), std::string(), std::string(), status})
                    r.push_back(v);
                rows[i].push_back(std::move(r));
            } catch (const std::exception& e) {
                rows[i].push_back(error_row("sim", e));
            }
        }
        try {
            rows[i].push_back(model_row(cfg, s, s0[si], lw, d));
        } catch (const std::exception& e) {
            rows[i].push_back(error_row("model", e));
        }
        progress(s.label + ", " + fmt(lw) + " Hz, " + fmt(d) + " km done");
    });
    for (std::size_t i = 0; i < tasks; ++i) {
        for (auto& r : rows[i]) out.table.rows.push_back(std::move(r));
        if (simulate)
            out.seeds.push_back({{"scheme", cfg.schemes[i / (nl * nd)].label},
                                 {"lo_linewidth_hz", cfg.lo_linewidths_hz[(i / nd) % nl]},
                                 {"distance_km", cfg.distances_km[i % nd]},
                                 {"seed", seeds[i]}});
    }
    return out;
}

RunOutput run_gmi_curve(const ExperimentConfig& cfg, Progress& progress)
{
    RunOutput out;
    out.table.header = {"order", "entropy_bits", "kurtosis", "snr_db", "gmi_bits", "capacity_bits", "gap_bits", "status"};
    const auto format = make_format(cfg);
    const double kurt = shaping::moments(format.constellation, format.distribution).kurtosis;
    // Common random numbers across SNR points keep the curve smooth.
    const auto seed = derive_seed(cfg.seed, 30);
    std::vector<std::vector<std::string>> rows(cfg.snr_db.size());
    parallel_for(cfg.snr_db.size(), cfg.workers, [&](std::size_t i) {
        const double snr_db = cfg.snr_db[i];
        std::vector<std::string> r{std::to_string(cfg.qam_order), fmt(cfg.entropy_bits), fmt(kurt), fmt(snr_db)};
        try {
            const double snr = db_to_linear(snr_db);
            const double g = shaping::gmi(format.constellation, format.distribution, snr, cfg.gmi_samples, seed);
            for (auto v : {fmt(g), fmt(std::log2(1 + snr)), fmt(shaping::gap_to_capacity(snr, g)), std::string("ok")})
                r.push_back(v);
        } catch (const std::exception& e) {
            for (auto v : {std::string(), std::string(), std::string(), status_of(e)}) r.push_back(v);
        }
        rows[i] = std::move(r);
        progress(fmt(snr_db) + " dB done");
    });
    out.table.rows = std::move(rows);
    out.seeds.push_back({{"purpose", "gmi_monte_carlo"}, {"seed", seed}});
    return out;
}

RunOutput run_b2b(const ExperimentConfig& cfg, Progress& progress)
{
    RunOutput out;
    out.table.header = {"scheme",      "m_subcarriers",          "entropy_bits",           "snr_db",
                        "snr_db_mean", "min_subcarrier_snr_db", "max_subcarrier_snr_db", "status"};
    const auto seed = derive_seed(cfg.seed, 40);
    std::vector<std::vector<std::string>> rows(cfg.schemes.size());
    parallel_for(cfg.schemes.size(), cfg.workers, [&](std::size_t i) {
        const auto& s = cfg.schemes[i];
        std::vector<std::string> r{s.label, std::to_string(s.m), fmt(cfg.entropy_bits)};
        try {
            const auto res = back_to_back(cfg, s, seed);
            const auto& v = res.report.snr_db_per_subcarrier;
            std::string status = "ok";
            if (!res.converged) status = "not converged";
            if (res.low_pilot_snr) status = "low pilot snr";
            for (auto x : {fmt(res.report.snr_db_pooled), fmt(res.report.snr_db_mean),
                           fmt(*std::min_element(v.begin(), v.end())), fmt(*std::max_element(v.begin(), v.end())),
                           status})
                r.push_back(x);
        } catch (const std::exception& e) {
            for (auto x : {std::string(), std::string(), std::string(), std::string(), status_of(e)}) r.push_back(x);
        }
        rows[i] = std::move(r);
        progress(s.label + " done");
    });
    out.table.rows = std::move(rows);
    out.seeds.push_back({{"purpose", "transmitter_and_receiver"}, {"seed", seed}});
    return out;
}

}  // namespace

RunOutput run_simulation(const ExperimentConfig& cfg, const std::function<void(const std::string&)>& progress)
{
    Progress p{progress, {}};
    switch (cfg.scenario) {
        case Scenario::AnliVsDistance: return run_anli(cfg, p);
        case Scenario::SnrVsDistance: return run_snr(cfg, true, p);
        case Scenario::GmiCurve: return run_gmi_curve(cfg, p);
        case Scenario::BackToBack: return run_b2b(cfg, p);
    }
    throw Error("unknown scenario");
}

RunOutput run_model(const ExperimentConfig& cfg)
{
    if (cfg.scenario != Scenario::SnrVsDistance)
        throw ConfigError({"scenario: the model command needs scenario = \"snr_vs_distance\""});
    std::function<void(const std::string&)> none;
    Progress p{none, {}};
    return run_snr(cfg, false, p);
}

RunOutput run_gmi(const ExperimentConfig& cfg)
{
    if (cfg.scenario != Scenario::GmiCurve)
        throw ConfigError({"scenario: the gmi command needs scenario = \"gmi_curve\""});
    std::function<void(const std::string&)> none;
    Progress p{none, {}};
    return run_gmi_curve(cfg, p);
}

// ---------------------------------------------------------------------------
// Outputs

json assumptions(const ExperimentConfig& cfg)
{
    json a = json::array();
    auto add = [&](const std::string& name, double value, const std::string& unit, bool assumption,
                   const std::string& note) {
        a.push_back({{"name", name}, {"value", value}, {"unit", unit}, {"assumption", assumption}, {"note", note}});
    };
    add("fiber.alpha", cfg.span.alpha_db_per_km, "dB/km", true,
        "ultra-low-loss large-area fiber class; not a measured parameter");
    add("fiber.dispersion", cfg.span.dispersion_ps_nm_km, "ps/(nm km)", true,
        "ultra-low-loss large-area fiber class; not a measured parameter");
    add("fiber.gamma", cfg.span.gamma_per_w_km, "1/(W km)", true,
        "ultra-low-loss large-area fiber class; not a measured parameter");
    add("fiber.span_length", cfg.span.length_km, "km", false, "span length");
    add("fiber.reference_frequency", cfg.span.ref_freq_hz, "Hz", true, "carrier frequency of the band center");
    add("edfa.noise_figure", cfg.noise_figure_db, "dB", true, "amplifier noise figure");
    add("ssfm.max_nonlinear_phase", cfg.ssfm.max_nl_phase_rad, "rad", true, "peak nonlinear phase per step");
    add("ssfm.min_steps_per_span", cfg.ssfm.min_steps_per_span, "1", true, "lower bound on steps per span");
    add("ssfm.manakov_factor", 8.0 / 9.0, "1", false, "polarization-averaged Kerr factor");
    add("tx.rolloff", cfg.rolloff, "1", true, "RRC roll-off");
    add("tx.subcarrier_spacing_factor", 1.0 + cfg.rolloff, "1", true, "subcarrier spacing over subcarrier baud");
    add("tx.wdm_slot_width", cfg.slot_width_hz, "Hz", true, "desk-scale channel slot");
    add("tx.aggregate_baud", cfg.aggregate_baud, "Bd", true, "desk-scale symbol rate");
    add("tx.pilot_rate", cfg.pilot_rate, "1", true, "fraction of pilot symbols");
    add("rx.pol_taps", cfg.chain.pol_taps, "1", true, "polarization butterfly taps");
    add("rx.mimo_taps", cfg.chain.mimo_taps, "1", true, "real MIMO taps");
    add("rx.lms_step", cfg.chain.lms_step, "1", true, "LMS step size");
    add("rx.training_passes", cfg.chain.training_passes, "1", true, "LMS passes over the training data");
    add("model.zeta", cfg.zeta, "1", false, "EEPN correction factor");
    add("model.eta", cfg.eta, "1", true, "transceiver implementation factor");
    add("constant.planck", kPlanck, "J s", false, "exact SI value");
    add("constant.speed_of_light", kSpeedOfLight, "m/s", false, "exact SI value");
    add("model.anli_subcarrier_scaling", 2.0, "exponent of M", true,
        "per-subcarrier a_nli = M^2 times the channel-level value");
    return a;
}

void write_outputs(const ExperimentConfig& cfg, const std::string& command, const RunOutput& out, double wall_clock_s)
{
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    const fs::path csv = dir / "results.csv";
    const fs::path tmp = dir / "results.csv.tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write '" + tmp.string() + "'");
        write_csv(f, out.table);
        if (!f) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, csv);

    std::vector<std::string> files{"results.csv", "manifest.json"};
    if (cfg.plots) {
        std::ofstream f(dir / "results.svg", std::ios::binary | std::ios::trunc);
        f << report::plot_results(out.table, to_string(cfg.scenario));
        files.push_back("results.svg");
    }

    json m;
    m["tool"] = "ofsim";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["scenario"] = to_string(cfg.scenario);
    m["config"] = cfg.resolved();
    m["assumptions"] = assumptions(cfg);
    m["seeds"] = {{"master", cfg.seed}, {"tasks", out.seeds}};
    m["rows"] = out.table.rows.size();
    m["outputs"] = files;
    m["wall_clock_s"] = wall_clock_s;
    std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    f << m.dump(2) << "\n";
    if (!f) throw Error("cannot write manifest.json");
}

}  // namespace ofsim::exp
