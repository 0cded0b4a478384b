#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dobotc/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSynthesis = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitIo = 5;

void print_comparison(const std::vector<dobotc::ComparisonRow>& rows) {
    std::printf("%-32s %14s %12s %14s %14s %12s\n", "variant", "cost_J", "rms_error",
                "tail_amplitude", "observer_tail", "tail_ratio");
    for (const auto& row : rows) {
        std::printf("%-32s %14.6g %12.6g %14.6g %14.6g %12.6g\n", row.label.c_str(),
                    row.metrics.cost_J, row.metrics.rms_error, row.metrics.tail_amplitude,
                    row.metrics.observer_tail, row.tail_ratio);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Disturbance-observer-based optimal output tracking toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string variants_text = "observer=on,compensator=off;observer=on,compensator=on";
    std::string data_path;

    auto* synthesize = app.add_subcommand("synthesize", "Run gain/observer/compensator design "
                                                        "and print the certificates");
    synthesize->add_option("--config", config_path, "Scenario config file")->required();

    auto* simulate = app.add_subcommand("simulate", "Run the closed-loop scenario and write "
                                                    "trajectory.csv plus summary.json");
    simulate->add_option("--config", config_path, "Scenario config file")->required();
    simulate->add_option("--out", out_dir, "Output directory");

    auto* compare = app.add_subcommand("compare", "Run controller variants and print a "
                                                  "comparison table");
    compare->add_option("--config", config_path, "Scenario config file")->required();
    compare->add_option("--variants", variants_text,
                        "Semicolon-separated list, e.g. "
                        "\"observer=on,compensator=off;observer=on,compensator=on\"");

    auto* fit = app.add_subcommand("fit", "Compute the NRMSE fit percentage of the configured "
                                          "model against measured data");
    fit->add_option("--config", config_path, "Scenario config file")->required();
    fit->add_option("--data", data_path, "CSV with columns t,u1..um,y")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        const dobotc::ScenarioConfig config = dobotc::load_scenario(config_path);
        if (synthesize->parsed()) {
            const dobotc::SummaryReport report = dobotc::run_synthesize(config);
            std::cout << dobotc::summary_to_json(report, config).dump(2) << "\n";
        } else if (simulate->parsed()) {
            const dobotc::SummaryReport report = dobotc::run_simulate(config, out_dir);
            std::cout << "wrote " << out_dir << "/trajectory.csv and " << out_dir
                      << "/summary.json\n";
            if (report.run_metrics) {
                std::cout << "cost_J = " << report.run_metrics->cost_J
                          << ", tail_amplitude = " << report.run_metrics->tail_amplitude << "\n";
            }
        } else if (compare->parsed()) {
            const auto variants = dobotc::parse_variants(variants_text);
            print_comparison(dobotc::run_compare(config, variants));
        } else if (fit->parsed()) {
            const double percent = dobotc::run_fit(config, data_path);
            std::printf("fit = %.6f %%\n", percent);
        }
        return kExitOk;
    } catch (const dobotc::ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const dobotc::DimensionError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const dobotc::ParameterError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const dobotc::DivergenceError& err) {
        std::cerr << "simulation error: " << err.what() << "\n";
        return kExitDivergence;
    } catch (const dobotc::IoError& err) {
        std::cerr << "io error: " << err.what() << "\n";
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& err) {
        std::cerr << "io error: " << err.what() << "\n";
        return kExitIo;
    } catch (const std::runtime_error& err) {
        // SynthesisError, StabilizabilityError, SingularEquationError, NumericalError.
        std::cerr << "synthesis error: " << err.what() << "\n";
        return kExitSynthesis;
    }
}
