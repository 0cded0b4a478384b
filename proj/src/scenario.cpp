#include "dobotc/scenario.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/LU>

namespace dobotc {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const char* where,
                         std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError(std::string(where) + ": unknown key \"" + it.key() + "\"");
        }
    }
}

const json& require_key(const json& obj, const char* where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ConfigError(std::string(where) + ": missing required key \"" + key + "\"");
    }
    return *it;
}

double as_number(const json& j, const char* where) {
    if (!j.is_number()) {
        throw ConfigError(std::string(where) + ": expected a number");
    }
    return j.get<double>();
}

Matrix as_matrix(const json& j, const char* where) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw ConfigError(std::string(where) + ": expected a row-major nested array");
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(std::string(where) + ": ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = as_number(row[static_cast<std::size_t>(c)], where);
        }
    }
    if (!all_finite(m)) {
        throw ConfigError(std::string(where) + ": matrix entries must be finite");
    }
    return m;
}

Vector as_vector(const json& j, const char* where) {
    if (!j.is_array()) {
        throw ConfigError(std::string(where) + ": expected an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = as_number(j[static_cast<std::size_t>(i)], where);
    }
    return v;
}

std::vector<int> as_int_list(const json& j, const char* where) {
    if (!j.is_array()) {
        throw ConfigError(std::string(where) + ": expected an array of integers");
    }
    std::vector<int> out;
    for (const auto& item : j) {
        if (!item.is_number_integer()) {
            throw ConfigError(std::string(where) + ": expected integer entries");
        }
        out.push_back(item.get<int>());
    }
    return out;
}

LtiPlant parse_plant(const json& j) {
    if (!j.is_object()) throw ConfigError("plant: expected an object");
    reject_unknown_keys(j, "plant", {"preset", "A", "B_u", "B_d", "C_o", "disturbance_columns"});

    LtiPlant plant;
    if (j.contains("preset")) {
        if (j.contains("A") || j.contains("B_u") || j.contains("B_d") || j.contains("C_o")) {
            throw ConfigError("plant: preset and explicit matrices are mutually exclusive");
        }
        const std::string name = j.at("preset").get<std::string>();
        if (name != "slot-die") {
            throw ConfigError("plant: unknown preset \"" + name + "\"");
        }
        plant = slot_die_plant();
    } else {
        plant.A = as_matrix(require_key(j, "plant", "A"), "plant.A");
        plant.B_u = as_matrix(require_key(j, "plant", "B_u"), "plant.B_u");
        plant.C_o = as_matrix(require_key(j, "plant", "C_o"), "plant.C_o");
        plant.B_d = j.contains("B_d") ? as_matrix(j.at("B_d"), "plant.B_d") : plant.B_u;
    }
    if (j.contains("disturbance_columns")) {
        try {
            plant = mask_disturbance_columns(plant,
                                             as_int_list(j.at("disturbance_columns"),
                                                         "plant.disturbance_columns"));
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("plant.disturbance_columns: ") + err.what());
        }
    }
    try {
        check_dimensions(plant);
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }
    return plant;
}

ReferenceGen parse_reference(const json& j) {
    if (!j.is_object()) throw ConfigError("reference: expected an object");
    reject_unknown_keys(j, "reference", {"y_d", "G", "H", "v0"});
    ReferenceGen ref;
    if (j.contains("y_d")) {
        if (j.size() != 1) {
            throw ConfigError("reference: y_d and explicit G/H/v0 are mutually exclusive");
        }
        ref = constant_reference(as_number(j.at("y_d"), "reference.y_d"));
    } else {
        ref.G = as_matrix(require_key(j, "reference", "G"), "reference.G");
        ref.H = as_matrix(require_key(j, "reference", "H"), "reference.H");
        ref.v0 = as_vector(require_key(j, "reference", "v0"), "reference.v0");
    }
    try {
        check_dimensions(ref);
    } catch (const std::invalid_argument& err) {
        throw ConfigError(err.what());
    }
    return ref;
}

DisturbanceTerm parse_term(const json& j, const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected a term object");
    const std::string type = require_key(j, where, "type").get<std::string>();
    if (type == "constant") {
        reject_unknown_keys(j, where, {"type", "offset"});
        return DisturbanceTerm::constant(as_number(require_key(j, where, "offset"), where));
    }
    if (type == "sinusoid") {
        reject_unknown_keys(j, where, {"type", "amplitude", "omega", "phase"});
        const double amplitude = as_number(require_key(j, where, "amplitude"), where);
        const double omega = as_number(require_key(j, where, "omega"), where);
        const double phase = j.contains("phase") ? as_number(j.at("phase"), where) : 0.0;
        return DisturbanceTerm::sinusoid(amplitude, omega, phase);
    }
    if (type == "step") {
        reject_unknown_keys(j, where, {"type", "level", "start"});
        return DisturbanceTerm::step(as_number(require_key(j, where, "level"), where),
                                     as_number(require_key(j, where, "start"), where));
    }
    throw ConfigError(std::string(where) + ": unknown term type \"" + type + "\"");
}

DisturbanceSignal parse_disturbance(const json& j, Eigen::Index q) {
    if (!j.is_array()) {
        throw ConfigError("disturbance: expected an array of per-channel term lists");
    }
    if (static_cast<Eigen::Index>(j.size()) != q) {
        std::ostringstream msg;
        msg << "disturbance: must list exactly q = " << q << " channels, got " << j.size();
        throw ConfigError(msg.str());
    }
    DisturbanceSignal signal;
    for (std::size_t c = 0; c < j.size(); ++c) {
        const json& channel = j[c];
        if (!channel.is_array()) {
            throw ConfigError("disturbance: each channel must be an array of terms");
        }
        std::vector<DisturbanceTerm> terms;
        for (const auto& term : channel) {
            terms.push_back(parse_term(term, "disturbance term"));
        }
        signal.channels.push_back(std::move(terms));
    }
    return signal;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json spectrum_to_json(const Spectrum& s) {
    json out = json::array();
    for (const auto& v : s.values) out.push_back(json::array({v.real(), v.imag()}));
    return out;
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

} // namespace

ScenarioConfig parse_scenario(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown_keys(j, "config",
                        {"plant", "reference", "weights", "observer", "compensator",
                         "disturbance", "sim", "seed"});

    ScenarioConfig config;
    config.plant = parse_plant(require_key(j, "config", "plant"));
    config.reference = parse_reference(require_key(j, "config", "reference"));

    const json& weights = require_key(j, "config", "weights");
    reject_unknown_keys(weights, "weights", {"Q_e", "R"});
    config.q_e = as_number(require_key(weights, "weights", "Q_e"), "weights.Q_e");
    const json& r_spec = require_key(weights, "weights", "R");
    const Eigen::Index m = config.plant.input_dim();
    if (r_spec.is_number()) {
        config.R = r_spec.get<double>() * Matrix::Identity(m, m);
    } else {
        config.R = as_matrix(r_spec, "weights.R");
        if (config.R.rows() != m || config.R.cols() != m) {
            throw ConfigError("weights.R: must be m x m");
        }
    }

    if (j.contains("observer")) {
        const json& obs = j.at("observer");
        if (obs.is_string()) {
            if (obs.get<std::string>() != "off") {
                throw ConfigError("observer: expected \"off\" or an object with key L");
            }
        } else {
            reject_unknown_keys(obs, "observer", {"L"});
            config.observer_L = as_matrix(require_key(obs, "observer", "L"), "observer.L");
        }
    }

    if (j.contains("compensator")) {
        const json& comp = j.at("compensator");
        if (comp.is_string()) {
            const std::string s = comp.get<std::string>();
            if (s == "on") {
                config.compensator_on = true;
            } else if (s == "off") {
                config.compensator_on = false;
            } else {
                throw ConfigError("compensator: expected \"on\", \"off\" or an object");
            }
        } else {
            reject_unknown_keys(comp, "compensator", {"input_channels"});
            config.compensator_on = true;
            config.compensator_channels =
                as_int_list(require_key(comp, "compensator", "input_channels"),
                            "compensator.input_channels");
        }
    }

    if (j.contains("disturbance")) {
        config.disturbance = parse_disturbance(j.at("disturbance"),
                                               config.plant.disturbance_dim());
    } else {
        config.disturbance = DisturbanceSignal::zero(config.plant.disturbance_dim());
    }

    const json& sim = require_key(j, "config", "sim");
    reject_unknown_keys(sim, "sim", {"t_end", "dt", "x0", "z0"});
    config.sim.t_end = as_number(require_key(sim, "sim", "t_end"), "sim.t_end");
    config.sim.dt = as_number(require_key(sim, "sim", "dt"), "sim.dt");
    if (!(config.sim.dt > 0.0) || config.sim.dt > config.sim.t_end) {
        throw ConfigError("sim: require 0 < dt <= t_end");
    }
    if (config.sim.t_end / config.sim.dt > 1e8) {
        throw ConfigError("sim: t_end/dt exceeds the 1e8 step guard");
    }
    if (sim.contains("x0")) {
        config.sim.x0 = as_vector(sim.at("x0"), "sim.x0");
        if (config.sim.x0.size() != config.plant.state_dim()) {
            throw ConfigError("sim.x0: size must equal the state dimension");
        }
    } else {
        config.sim.x0 = Vector::Zero(config.plant.state_dim());
    }
    if (sim.contains("z0")) {
        Vector z0 = as_vector(sim.at("z0"), "sim.z0");
        if (z0.size() != config.plant.disturbance_dim()) {
            throw ConfigError("sim.z0: size must equal the disturbance dimension");
        }
        config.sim.z0 = z0;
    }

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) {
            throw ConfigError("seed: expected a non-negative integer");
        }
        config.seed = j.at("seed").get<std::uint64_t>();
    }

    config.sim.observer_enabled = config.observer_L.has_value();
    config.sim.compensator_enabled = config.compensator_on;

    if (config.observer_L.has_value() &&
        (config.observer_L->rows() != config.plant.disturbance_dim() ||
         config.observer_L->cols() != config.plant.state_dim())) {
        throw ConfigError("observer.L: must be q x n");
    }
    return config;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& err) {
        throw ConfigError(std::string("config parse error: ") + err.what());
    }
    return parse_scenario(j);
}

json scenario_to_json(const ScenarioConfig& config) {
    json j;
    j["plant"] = {{"A", matrix_to_json(config.plant.A)},
                  {"B_u", matrix_to_json(config.plant.B_u)},
                  {"B_d", matrix_to_json(config.plant.B_d)},
                  {"C_o", matrix_to_json(config.plant.C_o)}};
    j["reference"] = {{"G", matrix_to_json(config.reference.G)},
                      {"H", matrix_to_json(config.reference.H)},
                      {"v0", vector_to_json(config.reference.v0)}};
    j["weights"] = {{"Q_e", config.q_e}, {"R", matrix_to_json(config.R)}};
    if (config.observer_L.has_value()) {
        j["observer"] = {{"L", matrix_to_json(*config.observer_L)}};
    } else {
        j["observer"] = "off";
    }
    if (config.compensator_channels.has_value()) {
        j["compensator"] = {{"input_channels", *config.compensator_channels}};
    } else {
        j["compensator"] = config.compensator_on ? "on" : "off";
    }
    json channels = json::array();
    for (const auto& channel : config.disturbance.channels) {
        json terms = json::array();
        for (const auto& term : channel) {
            switch (term.kind) {
                case DisturbanceTerm::Kind::constant:
                    terms.push_back({{"type", "constant"}, {"offset", term.offset}});
                    break;
                case DisturbanceTerm::Kind::sinusoid:
                    terms.push_back({{"type", "sinusoid"},
                                     {"amplitude", term.amplitude},
                                     {"omega", term.omega},
                                     {"phase", term.phase}});
                    break;
                case DisturbanceTerm::Kind::step:
                    terms.push_back(
                        {{"type", "step"}, {"level", term.level}, {"start", term.start}});
                    break;
            }
        }
        channels.push_back(std::move(terms));
    }
    j["disturbance"] = std::move(channels);
    j["sim"] = {{"t_end", config.sim.t_end},
                {"dt", config.sim.dt},
                {"x0", vector_to_json(config.sim.x0)}};
    if (config.sim.z0.has_value()) {
        j["sim"]["z0"] = vector_to_json(*config.sim.z0);
    }
    j["seed"] = config.seed;
    return j;
}

namespace {

struct SynthesisProducts {
    TrackingGain gain;
    std::optional<ObserverDesign> observer;
    std::optional<CompensatorGain> compensator;
};

// Staged design: parameters -> baseline controller -> observer ->
// assumptions -> compensation -> estimation-error stability -> composite.
// Failures are reported with the number of the step that raised them.
SynthesisProducts run_design_procedure(const ScenarioConfig& config) {
    auto step_error = [](int step, const char* label, const std::exception& err) {
        std::ostringstream msg;
        msg << "procedure step " << step << " (" << label << "): " << err.what();
        return SynthesisError(msg.str());
    };

    // Step 1: system parameters.
    try {
        check_dimensions(config.plant);
        check_dimensions(config.reference);
    } catch (const std::exception& err) {
        throw step_error(1, "system parameters", err);
    }

    SynthesisProducts out;
    // Step 2: baseline tracking controller.
    try {
        out.gain = lqr_tracking_gain(config.plant, config.reference, config.q_e, config.R);
    } catch (const std::exception& err) {
        throw step_error(2, "baseline controller", err);
    }

    // Step 3: disturbance observer candidate.
    if (config.observer_L.has_value()) {
        try {
            out.observer = make_observer_candidate(config.plant, *config.observer_L);
        } catch (const std::exception& err) {
            throw step_error(3, "observer design", err);
        }
    }

    // Step 4: the configured disturbance classes (constant, sinusoid, step)
    // are bounded with bounded derivative between switching instants, so the
    // boundedness assumption holds structurally; slow variation relative to
    // the observer dynamics is reported through metrics, not asserted.

    // Step 5: disturbance compensation gain.
    if (config.observer_L.has_value() || config.compensator_on) {
        try {
            out.compensator =
                config.compensator_channels.has_value()
                    ? compensator_gain(config.plant, out.gain, *config.compensator_channels)
                    : compensator_gain(config.plant, out.gain);
        } catch (const std::exception& err) {
            throw step_error(5, "disturbance compensation", err);
        }
    }

    // Step 6: estimation-error stability.
    if (out.observer.has_value() && !out.observer->error_spectrum.is_hurwitz()) {
        std::ostringstream detail;
        detail << "-L*B_d is not Hurwitz; spectrum {";
        for (std::size_t i = 0; i < out.observer->error_spectrum.values.size(); ++i) {
            const auto& v = out.observer->error_spectrum.values[i];
            detail << (i ? ", " : "") << v.real() << (v.imag() < 0 ? "-" : "+")
                   << std::abs(v.imag()) << "i";
        }
        detail << "}";
        const std::runtime_error err(detail.str());
        throw step_error(6, "estimation-error stability", err);
    }

    // Step 7: composite controller assembly happens at simulation time; the
    // certificates above are re-verified when the report is emitted.
    return out;
}

SummaryReport build_summary(const ScenarioConfig& config, const SynthesisProducts& products,
                            const std::optional<Metrics>& metrics_opt) {
    const LtiPlant& plant = config.plant;
    const TrackingGain& gain = products.gain;

    SummaryReport report;
    report.tool_version = kToolVersion;

    // Certificates are recomputed from the synthesized matrices rather than
    // copied from construction time.
    const Matrix a_cl = plant.A - plant.B_u * gain.Kx;
    report.closed_loop_spectrum = eigenvalues(a_cl);
    const Matrix q_plant = plant.C_o.transpose() * config.q_e * plant.C_o;
    report.are_residual =
        (plant.A.transpose() * gain.P11 + gain.P11 * plant.A -
         gain.P11 * plant.B_u * config.R.llt().solve(plant.B_u.transpose() * gain.P11) + q_plant)
            .norm();
    report.dc_tracking_residual =
        (plant.C_o * a_cl.partialPivLu().solve(Matrix(plant.B_u * gain.Kv)) - config.reference.H)
            .norm();
    if (products.observer.has_value()) {
        report.observer_spectrum = eigenvalues(Matrix(-products.observer->L * plant.B_d));
    }
    if (products.compensator.has_value()) {
        report.theorem2_residual =
            (plant.C_o *
             a_cl.partialPivLu().solve(Matrix(plant.B_d + plant.B_u * products.compensator->u_d)))
                .norm();
        report.compensation_gain = products.compensator->u_d;
    }
    report.run_metrics = metrics_opt;
    return report;
}

} // namespace

json summary_to_json(const SummaryReport& report, const ScenarioConfig& config) {
    json j;
    j["tool_version"] = report.tool_version;
    j["certificates"] = {
        {"closed_loop_eigenvalues", spectrum_to_json(report.closed_loop_spectrum)},
        {"are_residual", report.are_residual},
        {"dc_tracking_residual", report.dc_tracking_residual},
    };
    j["certificates"]["observer_eigenvalues"] =
        report.observer_spectrum ? spectrum_to_json(*report.observer_spectrum) : json();
    j["certificates"]["theorem2_residual_norm"] =
        report.theorem2_residual ? json(*report.theorem2_residual) : json();
    j["certificates"]["compensation_gain"] =
        report.compensation_gain ? matrix_to_json(*report.compensation_gain) : json();
    if (report.run_metrics) {
        j["metrics"] = {{"cost_J", report.run_metrics->cost_J},
                        {"rms_error", report.run_metrics->rms_error},
                        {"tail_amplitude", report.run_metrics->tail_amplitude},
                        {"observer_tail", report.run_metrics->observer_tail},
                        {"settling_time", report.run_metrics->settling_time
                                              ? json(*report.run_metrics->settling_time)
                                              : json("not settled")}};
    } else {
        j["metrics"] = json();
    }
    j["config"] = scenario_to_json(config);
    return j;
}

SummaryReport run_synthesize(const ScenarioConfig& config) {
    const SynthesisProducts products = run_design_procedure(config);
    return build_summary(config, products, std::nullopt);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    if (traj.size() == 0) {
        throw ParameterError("write_trajectory_csv: empty trajectory");
    }
    const Eigen::Index n = traj.x.front().size();
    const Eigen::Index p = traj.v.front().size();
    const Eigen::Index m = traj.u.front().size();
    const Eigen::Index q = traj.w.front().size();

    out << "t";
    for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
    for (Eigen::Index i = 1; i <= p; ++i) out << ",v" << i;
    for (Eigen::Index i = 1; i <= m; ++i) out << ",u" << i;
    for (Eigen::Index i = 1; i <= m; ++i) out << ",uc" << i;
    out << ",y,yd,e";
    for (Eigen::Index i = 1; i <= q; ++i) out << ",w" << i;
    for (Eigen::Index i = 1; i <= q; ++i) out << ",what" << i;
    for (Eigen::Index i = 1; i <= q; ++i) out << ",e0" << i;
    out << "\n";

    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << format_double(traj.t[k]);
        auto put = [&](const Vector& v) {
            for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
        };
        put(traj.x[k]);
        put(traj.v[k]);
        put(traj.u[k]);
        put(traj.u_c[k]);
        out << ',' << format_double(traj.y[k]) << ',' << format_double(traj.y_d[k]) << ','
            << format_double(traj.e[k]);
        put(traj.w[k]);
        put(traj.w_hat[k]);
        put(traj.e0[k]);
        out << "\n";
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

SummaryReport run_simulate(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                           Trajectory* trajectory_out) {
    const SynthesisProducts products = run_design_procedure(config);

    Trajectory traj = simulate_closed_loop(config.plant, config.reference, products.gain,
                                           products.observer, products.compensator,
                                           config.disturbance, config.sim);
    const Metrics run_metrics = metrics(traj, config.q_e, config.R);
    const SummaryReport report = build_summary(config, products, run_metrics);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create output directory: " + out_dir.string());
    }
    write_trajectory_csv(out_dir / "trajectory.csv", traj);

    std::ofstream summary(out_dir / "summary.json");
    if (!summary) {
        throw IoError("cannot open for writing: " + (out_dir / "summary.json").string());
    }
    summary << summary_to_json(report, config).dump(2) << "\n";
    if (!summary) {
        throw IoError("write failed: " + (out_dir / "summary.json").string());
    }

    if (trajectory_out) *trajectory_out = std::move(traj);
    return report;
}

std::string VariantSpec::label() const {
    std::string s = "observer=";
    s += observer_on ? "on" : "off";
    s += ",compensator=";
    s += compensator_on ? "on" : "off";
    return s;
}

std::vector<ComparisonRow> run_compare(const ScenarioConfig& config,
                                       const std::vector<VariantSpec>& variants) {
    if (variants.empty()) {
        throw ConfigError("compare: variant list must not be empty");
    }
    std::vector<ComparisonRow> rows;
    for (const VariantSpec& variant : variants) {
        ScenarioConfig variant_config = config;
        if (variant.observer_on && !config.observer_L.has_value()) {
            throw ConfigError("compare: variant requires an observer but the config has none");
        }
        if (!variant.observer_on) variant_config.observer_L.reset();
        variant_config.compensator_on = variant.compensator_on;
        variant_config.sim.observer_enabled = variant.observer_on;
        variant_config.sim.compensator_enabled = variant.compensator_on;

        const SynthesisProducts products = run_design_procedure(variant_config);
        Trajectory traj = simulate_closed_loop(variant_config.plant, variant_config.reference,
                                               products.gain, products.observer,
                                               products.compensator, variant_config.disturbance,
                                               variant_config.sim);
        ComparisonRow row;
        row.label = variant.label();
        row.metrics = metrics(traj, variant_config.q_e, variant_config.R);
        rows.push_back(std::move(row));
    }
    const double base_tail = rows.front().metrics.tail_amplitude;
    for (auto& row : rows) {
        if (base_tail > 0.0) {
            row.tail_ratio = row.metrics.tail_amplitude / base_tail;
        } else {
            row.tail_ratio = row.metrics.tail_amplitude > 0.0
                                 ? std::numeric_limits<double>::infinity()
                                 : 1.0;
        }
    }
    return rows;
}

std::vector<VariantSpec> parse_variants(const std::string& text) {
    std::vector<VariantSpec> variants;
    std::stringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ';')) {
        if (token.empty()) continue;
        VariantSpec spec;
        std::stringstream fields(token);
        std::string field;
        while (std::getline(fields, field, ',')) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("variants: expected key=value, got \"" + field + "\"");
            }
            const std::string key = field.substr(0, eq);
            const std::string value = field.substr(eq + 1);
            bool on = false;
            if (value == "on") {
                on = true;
            } else if (value == "off") {
                on = false;
            } else {
                throw ConfigError("variants: value must be on or off, got \"" + value + "\"");
            }
            if (key == "observer") {
                spec.observer_on = on;
            } else if (key == "compensator") {
                spec.compensator_on = on;
            } else {
                throw ConfigError("variants: unknown key \"" + key + "\"");
            }
        }
        variants.push_back(spec);
    }
    if (variants.empty()) {
        throw ConfigError("compare: variant list must not be empty");
    }
    return variants;
}

namespace {

// Shared ZOH integration so fit and its synthetic generator agree exactly.
std::vector<double> open_loop_outputs(const LtiPlant& plant, const std::vector<double>& t,
                                      const std::vector<Vector>& u) {
    std::vector<double> yhat(t.size());
    Vector x = Vector::Zero(plant.state_dim());
    yhat[0] = (plant.C_o * x)(0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const double span = t[k + 1] - t[k];
        const Vector& u_k = u[k];
        StateDerivative f = [&](double, const Vector& s) {
            return Vector(plant.A * s + plant.B_u * u_k);
        };
        const int substeps = std::max(1, static_cast<int>(std::ceil(span / 1e-3)));
        const double h = span / substeps;
        for (int s = 0; s < substeps; ++s) {
            x = rk4_step(f, t[k] + s * h, x, h);
        }
        yhat[k + 1] = (plant.C_o * x)(0);
    }
    return yhat;
}

} // namespace

double fit_percent(const LtiPlant& plant, const FitData& data) {
    check_dimensions(plant);
    if (data.t.size() < 2 || data.t.size() != data.u.size() || data.t.size() != data.y.size()) {
        throw ConfigError("fit: data must contain at least two aligned samples");
    }
    for (std::size_t k = 0; k + 1 < data.t.size(); ++k) {
        if (!(data.t[k + 1] > data.t[k])) {
            throw ConfigError("fit: data error, time column must be strictly increasing");
        }
    }
    for (const auto& u : data.u) {
        if (u.size() != plant.input_dim()) {
            throw ConfigError("fit: input column count does not match the model");
        }
    }

    const std::vector<double> yhat = open_loop_outputs(plant, data.t, data.u);

    double mean = 0.0;
    for (double y : data.y) mean += y;
    mean /= static_cast<double>(data.y.size());

    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < data.y.size(); ++k) {
        num += (data.y[k] - yhat[k]) * (data.y[k] - yhat[k]);
        den += (data.y[k] - mean) * (data.y[k] - mean);
    }
    if (den == 0.0) {
        throw ConfigError("fit: data error, output has zero variance");
    }
    return 100.0 * (1.0 - std::sqrt(num / den));
}

double run_fit(const ScenarioConfig& config, const std::filesystem::path& data_csv) {
    const FitData data = read_fit_csv(data_csv, config.plant.input_dim());
    return fit_percent(config.plant, data);
}

FitData generate_fit_data(const LtiPlant& plant, std::uint64_t seed, std::size_t samples,
                          double dt) {
    check_dimensions(plant);
    if (samples < 2 || !(dt > 0.0)) {
        throw ParameterError("generate_fit_data: need at least two samples and dt > 0");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);

    FitData data;
    data.t.resize(samples);
    data.u.resize(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        data.t[k] = static_cast<double>(k) * dt;
        Vector u(plant.input_dim());
        for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = uniform(rng);
        data.u[k] = u;
    }
    data.y = open_loop_outputs(plant, data.t, data.u);
    return data;
}

FitData read_fit_csv(const std::filesystem::path& path, Eigen::Index expected_inputs) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open data file: " + path.string());
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw ConfigError("fit: data error, empty file");
    }
    std::string expected = "t";
    for (Eigen::Index i = 1; i <= expected_inputs; ++i) expected += ",u" + std::to_string(i);
    expected += ",y";
    if (header != expected) {
        throw ConfigError("fit: data error, header must be \"" + expected + "\"");
    }

    FitData data;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("fit: data error, non-numeric cell \"" + cell + "\"");
            }
        }
        if (static_cast<Eigen::Index>(values.size()) != expected_inputs + 2) {
            throw ConfigError("fit: data error, wrong column count");
        }
        data.t.push_back(values.front());
        Vector u(expected_inputs);
        for (Eigen::Index i = 0; i < expected_inputs; ++i) u(i) = values[1 + i];
        data.u.push_back(u);
        data.y.push_back(values.back());
    }
    return data;
}

void write_fit_csv(const std::filesystem::path& path, const FitData& data) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    const Eigen::Index m = data.u.empty() ? 0 : data.u.front().size();
    out << "t";
    for (Eigen::Index i = 1; i <= m; ++i) out << ",u" << i;
    out << ",y\n";
    for (std::size_t k = 0; k < data.t.size(); ++k) {
        out << format_double(data.t[k]);
        for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(data.u[k](i));
        out << ',' << format_double(data.y[k]) << "\n";
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

} // namespace dobotc
