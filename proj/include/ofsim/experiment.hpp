#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ofsim/fibersim.hpp"
#include "ofsim/linkmodel.hpp"
#include "ofsim/rxdsp.hpp"
#include "ofsim/shaping.hpp"
#include "ofsim/txchain.hpp"

namespace ofsim::exp {

/// Validation failure; `issues` holds one "field: message" entry per problem.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

enum class Scenario { AnliVsDistance, SnrVsDistance, GmiCurve, BackToBack };

std::string to_string(Scenario s);

/// "SC" is one carrier; "MC<M>" is M digital subcarriers.
struct Scheme {
    std::string label;
    int m = 1;
};

/// Throws Error for anything other than "SC" or "MC<M>" with M >= 2.
Scheme parse_scheme(const std::string& text);

struct ExperimentConfig {
    Scenario scenario = Scenario::BackToBack;
    std::vector<Scheme> schemes{{"SC", 1}};

    // Modulation format.
    int qam_order = 16;
    double entropy_bits = 4.0;

    // Transmitter and WDM band.
    double aggregate_baud = 32e9;
    double rolloff = 0.05;
    double pilot_rate = 0.02;
    double sample_rate_hz = 80e9;
    std::size_t min_symbols = 5120;
    int channels = 1;
    double slot_width_hz = 40e9;
    double band_sample_rate_hz = 240e9;
    std::vector<double> launch_power_dbm{0.0};
    bool launch_at_nlt = false;
    tx::TxImpairments impairments;

    // Link.
    fiber::FiberSpan span;
    int spans_per_loop = 10;
    int loops = 1;
    bool scramble_per_loop = false;
    int snapshot_every = 1;
    double noise_figure_db = 5.0;
    bool ase = false;
    fiber::SsfmConfig ssfm;

    // Receiver.
    rx::RxChainConfig chain;
    std::string mimo = "auto";  // auto | 4x4 | 8x8 | off
    std::vector<double> lo_linewidths_hz{0.0};

    // Sweeps.
    std::vector<double> distances_km;
    std::vector<double> snr_db;
    std::size_t gmi_samples = 200000;

    // Analytic model.
    double eta = 1.0;
    double zeta = 3.0;
    std::optional<double> s0_db;  // measured back-to-back when absent
    /// Channel-level a_nli per distance, shared by all schemes unless a
    /// scheme has its own entry in anli_by_scheme.
    std::vector<model::AnliPoint> anli_table;
    std::vector<std::pair<std::string, std::vector<model::AnliPoint>>> anli_by_scheme;

    std::uint64_t seed = 1;
    std::string out_dir = "out";
    int workers = 1;
    bool plots = false;

    /// Fully resolved configuration (defaults filled in) for manifests.
    nlohmann::json resolved() const;
};

/// Builds a validated config from a parsed TOML tree. Unknown keys and bad
/// values are all reported together in one ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

/// Rectangular table of already formatted cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const;  // throws when absent
    bool has(const std::string& name) const;
};

/// RFC 4180 output (CRLF line ends, quoting when needed).
void write_csv(std::ostream& os, const Table& t);
Table read_csv(std::istream& is);
Table read_csv_file(const std::string& path);

/// Locale-independent shortest round-trip formatting of a double.
std::string format_number(double v);

/// Symbol count (whole channel, all subcarriers) compatible with every
/// sample rate, subcarrier offset and WDM slot of the configuration.
std::size_t symbol_count(const ExperimentConfig& cfg);

shaping::ShapedFormat make_format(const ExperimentConfig& cfg);

struct AnliSample {
    double distance_km = 0.0;
    double snr_db = 0.0;
    double a_nli_per_mw2 = 0.0;
};

/// Noiseless WDM propagation of `cfg.channels` channels using `scheme`,
/// ideal reception of the center channel at every snapshot.
std::vector<AnliSample> measure_anli(const ExperimentConfig& cfg, const Scheme& scheme,
                                     double launch_power_dbm, std::uint64_t seed);

/// ASE variance over `distance_km` in the signal band (both
/// polarizations, mW).
double ase_n0_mw(const ExperimentConfig& cfg, double distance_km);

/// Channel-level a_nli for a scheme, interpolated in distance from the
/// config tables (0 when no table is configured).
double anli_at(const ExperimentConfig& cfg, const Scheme& scheme, double distance_km);

rx::RxChainConfig chain_for(const ExperimentConfig& cfg, const Scheme& scheme);

struct LinkPoint {
    double distance_km = 0.0;
    double lo_linewidth_hz = 0.0;
    double launch_power_dbm = 0.0;
    double extra_noise_mw = 0.0;  // additional white noise in the signal band
};

/// Emulated link: dispersion over the distance, ASE and Gaussian nonlinear
/// noise as white noise, LO linewidth at the receiver, then the full DSP
/// chain.
rx::ReceiverOutput simulate_link_point(const ExperimentConfig& cfg, const Scheme& scheme,
                                       const LinkPoint& point, std::uint64_t seed);

/// Impairment-free channel straight into the receiver chain.
rx::ReceiverOutput back_to_back(const ExperimentConfig& cfg, const Scheme& scheme, std::uint64_t seed);

/// Launch power (mW) at the nonlinear threshold for a channel-level a_nli
/// and total ASE variance; independent of the subcarrier count.
double nlt_launch_mw(double a_channel_per_mw2, double n0_mw);

struct RunOutput {
    Table table;
    nlohmann::json seeds = nlohmann::json::array();
};

/// Runs the configured scenario. `progress` (optional) receives one line per
/// finished sweep point.
RunOutput run_simulation(const ExperimentConfig& cfg,
                         const std::function<void(const std::string&)>& progress = {});
RunOutput run_model(const ExperimentConfig& cfg);
RunOutput run_gmi(const ExperimentConfig& cfg);

/// Every physical constant and default the run relies on, flagged by
/// whether it is an assumption of this simulator.
nlohmann::json assumptions(const ExperimentConfig& cfg);

/// Writes results.csv (atomically, via rename), manifest.json and, when
/// cfg.plots is set, results.svg into cfg.out_dir.
void write_outputs(const ExperimentConfig& cfg, const std::string& command, const RunOutput& out,
                   double wall_clock_s);

inline constexpr const char* kToolVersion = "0.3.0";

}  // namespace ofsim::exp
