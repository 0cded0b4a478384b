#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dobotc/simulate.hpp"

namespace dobotc {

inline constexpr const char* kToolVersion = "0.1.0";

/// Parsed scenario description. Unknown keys anywhere in the config file are
/// rejected at parse time; every matrix is validated for shape consistency.
struct ScenarioConfig {
    LtiPlant plant;
    ReferenceGen reference;
    double q_e = 1.0;
    Matrix R; // m x m, expanded from a scalar when the file gives one

    std::optional<Matrix> observer_L; // absent = observer off
    bool compensator_on = false;
    std::optional<std::vector<int>> compensator_channels;

    DisturbanceSignal disturbance; // channel count q (zeros when absent)
    SimConfig sim;
    std::uint64_t seed = 1;
};

ScenarioConfig parse_scenario(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const ScenarioConfig& config);

struct SummaryReport {
    std::string tool_version;
    Spectrum closed_loop_spectrum;
    double are_residual = 0.0;
    double dc_tracking_residual = 0.0;
    std::optional<Spectrum> observer_spectrum;
    std::optional<double> theorem2_residual;
    std::optional<Matrix> compensation_gain;
    std::optional<Metrics> run_metrics;
};

nlohmann::json summary_to_json(const SummaryReport& report, const ScenarioConfig& config);

/// Steps 1-7 of the staged observer-based design procedure; certificates only,
/// no simulation. Synthesis failures carry the number of the failing step.
SummaryReport run_synthesize(const ScenarioConfig& config);

/// Full pipeline; writes <out_dir>/trajectory.csv and <out_dir>/summary.json.
SummaryReport run_simulate(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                           Trajectory* trajectory_out = nullptr);

struct VariantSpec {
    bool observer_on = true;
    bool compensator_on = true;
    std::string label() const;
};

struct ComparisonRow {
    std::string label;
    Metrics metrics;
    double tail_ratio = 1.0; // tail amplitude relative to the first variant
};

std::vector<ComparisonRow> run_compare(const ScenarioConfig& config,
                                       const std::vector<VariantSpec>& variants);

// "observer=on,compensator=off;observer=on,compensator=on"
std::vector<VariantSpec> parse_variants(const std::string& text);

struct FitData {
    std::vector<double> t;
    std::vector<Vector> u;
    std::vector<double> y;
};

/// NRMSE goodness of fit in percent: 100 (1 - ||y - yhat|| / ||y - mean(y)||),
/// with yhat from an open-loop run driven by the recorded inputs under
/// zero-order hold, starting at x = 0.
double fit_percent(const LtiPlant& plant, const FitData& data);

double run_fit(const ScenarioConfig& config, const std::filesystem::path& data_csv);

/// Seeded synthetic input/output data for fit self-tests; the outputs come
/// from the same zero-order-hold integration used by fit_percent.
FitData generate_fit_data(const LtiPlant& plant, std::uint64_t seed, std::size_t samples,
                          double dt);

FitData read_fit_csv(const std::filesystem::path& path, Eigen::Index expected_inputs);
void write_fit_csv(const std::filesystem::path& path, const FitData& data);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

} // namespace dobotc
