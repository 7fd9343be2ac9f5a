// Command-line front end. Four subcommands map onto the experiment drivers:
//
//   run-convergence   quantum vs classical characteristic functions per eps
//   run-hartree       grid mean-field flow with conservation tracking
//   check-invariants  fast identity checks, one line per check
//   plot              re-render a stored result table as svg
//
// Exit codes: 0 success, 1 runtime or invariant failure, 2 configuration
// error (bad flags, unreadable or invalid config, unknown extension).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mflab/experiments.hpp"

namespace {

mflab::ExperimentConfig load_or_default(const std::string& path) {
    if (path.empty()) {
        mflab::ExperimentConfig cfg;
        cfg.validate();
        return cfg;
    }
    return mflab::load_config(path);
}

int run(CLI::App& app, const std::string& config_path, std::uint64_t seed, const std::string& table_path,
        const std::string& kind, const std::string& out_path) {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();

    if (name == "plot") {
        std::ifstream in(table_path);
        if (!in) throw mflab::ConfigError("plot: cannot open " + table_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        std::istringstream is(buf.str());
        mflab::ResultTable table =
            kind == "convergence" ? mflab::read_summary_csv(is) : mflab::read_result_csv(is);
        std::ostringstream svg;
        mflab::plot(svg, table, kind);
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw mflab::ConfigError("plot: cannot open " + out_path + " for writing");
        out << svg.str();
        std::cout << "wrote " << out_path << "\n";
        return 0;
    }

    mflab::ExperimentConfig cfg = load_or_default(config_path);
    if (sub->count("--seed") > 0) cfg.seed = seed;

    if (name == "run-convergence") {
        mflab::ResultTable table = mflab::run_convergence(cfg);
        mflab::write_convergence_outputs(cfg, table);
        for (const auto& s : table.summary)
            std::cout << mflab::strf("eps=%-8g sup_error=%.6e w2=%.6e\n", s.eps, s.sup_error, s.w2);
        std::cout << "wrote " << cfg.output_dir << "/results.csv, summary.csv, convergence.svg\n";
        return 0;
    }
    if (name == "run-hartree") {
        mflab::HartreeRun result = mflab::run_hartree(cfg);
        std::cout << mflab::strf("mass_drift=%.6e energy_drift=%.6e\n", result.trajectory.mass_drift,
                                 result.trajectory.energy_drift);
        mflab::write_hartree_outputs(cfg, result);
        std::cout << "wrote " << cfg.output_dir << "/results.csv, summary.csv, trajectory.csv, hartree.svg\n";
        return 0;
    }
    return mflab::check_invariants(cfg, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale laboratory for many-body quantum dynamics and its mean-field limit"};
    app.require_subcommand(1);

    std::string config_path, table_path, kind, out_path = "plot.svg";
    std::uint64_t seed = 0;

    CLI::App* conv = app.add_subcommand("run-convergence", "characteristic-function convergence sweep");
    CLI::App* hart = app.add_subcommand("run-hartree", "grid mean-field flow with conservation tracking");
    CLI::App* inv = app.add_subcommand("check-invariants", "fast identity checks across the modules");
    for (CLI::App* sub : {conv, hart, inv}) {
        sub->add_option("--config", config_path, "TOML or JSON experiment configuration");
        sub->add_option("--seed", seed, "override the configured random seed");
    }

    CLI::App* plt = app.add_subcommand("plot", "render a stored result table as svg");
    plt->add_option("--table", table_path, "results.csv or summary.csv produced by a runner")->required();
    plt->add_option("--kind", kind, "convergence (summary table) or hartree (result table)")
        ->required()
        ->check(CLI::IsMember({"convergence", "hartree"}));
    plt->add_option("--out", out_path, "output svg path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run(app, config_path, seed, table_path, kind, out_path);
    } catch (const mflab::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
