#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ofsim/experiment.hpp"
#include "ofsim/report.hpp"

using namespace ofsim;

namespace {

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
    bool quiet = false;
};

void add_run_options(CLI::App* app, RunOptions& o)
{
    app->add_option("config", o.config, "experiment config (TOML)")->required()->check(CLI::ExistingFile);
    app->add_option("--seed", o.seed, "master seed (overrides the config)");
    app->add_option("--workers", o.workers, "concurrent sweep points (overrides OFSIM_WORKERS and the config)")
        ->check(CLI::Range(1, 256));
    app->add_option("--out", o.out, "output directory (overrides OFSIM_OUT_DIR and the config)");
    app->add_flag("--quiet", o.quiet, "no progress output");
}

exp::ExperimentConfig resolve(const RunOptions& o)
{
    auto cfg = exp::load_config(o.config);
    if (const char* env = std::getenv("OFSIM_OUT_DIR"); env && *env) cfg.out_dir = env;
    if (const char* env = std::getenv("OFSIM_WORKERS"); env && *env) {
        try {
            std::size_t used = 0;
            const int w = std::stoi(env, &used);
            if (used != std::string(env).size() || w < 1 || w > 256) throw std::invalid_argument("range");
            cfg.workers = w;
        } catch (const std::exception&) {
            throw exp::ConfigError({"OFSIM_WORKERS: must be an integer in [1, 256]"});
        }
    }
    if (o.seed) cfg.seed = *o.seed;
    if (o.workers) cfg.workers = *o.workers;
    if (o.out) cfg.out_dir = *o.out;
    return cfg;
}

int run(const std::string& command, const RunOptions& o)
{
    const auto cfg = resolve(o);
    const auto t0 = std::chrono::steady_clock::now();
    exp::RunOutput out;
    if (command == "simulate") {
        out = exp::run_simulation(cfg, [&](const std::string& s) {
            if (!o.quiet) std::cerr << "  " << s << "\n";
        });
    } else if (command == "model") {
        out = exp::run_model(cfg);
    } else {
        out = exp::run_gmi(cfg);
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    exp::write_outputs(cfg, command, out, wall);

    std::size_t failed = 0;
    if (out.table.has("status"))
        for (const auto& r : out.table.rows)
            if (r[out.table.column("status")] != "ok") ++failed;
    if (!o.quiet)
        std::cerr << "wrote " << out.table.rows.size() << " rows to "
                  << (std::filesystem::path(cfg.out_dir) / "results.csv").string() << " in " << wall << " s\n";
    if (failed) std::cerr << "warning: " << failed << " rows have a non-ok status\n";
    return 0;
}

int run_report(const std::vector<std::string>& paths, const std::string& svg_dir)
{
    std::vector<std::pair<std::string, exp::Table>> files;
    for (const auto& p : paths) files.emplace_back(p, exp::read_csv_file(p));
    const auto merged = report::merge(files);

    if (merged.has("scheme")) {
        std::cout << "# scheme comparison\r\n";
        exp::write_csv(std::cout, report::scheme_delta(merged));
    }
    if (files.size() > 1) {
        std::cout << "# file comparison\r\n";
        exp::write_csv(std::cout, report::file_delta(files));
    }
    if (!svg_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(svg_dir);
        for (const auto& [name, t] : files) {
            std::ofstream f(fs::path(svg_dir) / (fs::path(name).stem().string() + ".svg"), std::ios::binary);
            f << report::plot_results(t, name);
        }
        if (files.size() > 1) {
            std::ofstream f(fs::path(svg_dir) / "merged.svg", std::ios::binary);
            f << report::plot_results(merged, "merged");
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ofsim: coherent optical transmission experiments"};
    app.set_version_flag("--version", exp::kToolVersion);
    app.require_subcommand(1);

    RunOptions sim, mod, gmi;
    add_run_options(app.add_subcommand("simulate", "run the configured scenario"), sim);
    add_run_options(app.add_subcommand("model", "evaluate the analytic SNR model"), mod);
    add_run_options(app.add_subcommand("gmi", "GMI versus SNR curve"), gmi);

    std::vector<std::string> csvs;
    std::string svg_dir;
    auto* rep = app.add_subcommand("report", "compare result files");
    rep->add_option("csv", csvs, "results.csv files")->required()->check(CLI::ExistingFile);
    rep->add_option("--svg", svg_dir, "directory for SVG plots");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("simulate")) return run("simulate", sim);
        if (app.got_subcommand("model")) return run("model", mod);
        if (app.got_subcommand("gmi")) return run("gmi", gmi);
        return run_report(csvs, svg_dir);
    } catch (const exp::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
