#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dobotc/synthesis.hpp"

namespace dobotc {

struct DisturbanceTerm {
    enum class Kind { constant, sinusoid, step };
    Kind kind = Kind::constant;
    double offset = 0.0;    // constant
    double amplitude = 0.0; // sinusoid: amplitude * sin(omega * t + phase)
    double omega = 0.0;
    double phase = 0.0;
    double level = 0.0;     // step: level for t >= start
    double start = 0.0;

    static DisturbanceTerm constant(double offset);
    static DisturbanceTerm sinusoid(double amplitude, double omega, double phase = 0.0);
    static DisturbanceTerm step(double level, double start);

    double eval(double t) const;
};

/// Per-channel sums of constant/sinusoid/step terms; channel count = q.
struct DisturbanceSignal {
    std::vector<std::vector<DisturbanceTerm>> channels;

    static DisturbanceSignal zero(Eigen::Index q);
    Eigen::Index channel_count() const { return static_cast<Eigen::Index>(channels.size()); }
};

Vector evaluate_disturbance(const DisturbanceSignal& signal, double t);

struct SimConfig {
    double t_end = 20.0;
    double dt = 1e-3;
    Vector x0;                     // empty means zero
    bool observer_enabled = true;
    bool compensator_enabled = true;
    std::optional<Vector> z0;      // default: z0 = -L x0 so that w_hat(0) = 0
};

/// Time-gridded record of one closed-loop run. The identities
/// e = y - y_d and e0 = w - w_hat hold exactly at every step.
struct Trajectory {
    std::vector<double> t;
    std::vector<Vector> x, v, u, u_c, w, w_hat, e0;
    std::vector<double> y, y_d, e;

    std::size_t size() const { return t.size(); }
};

struct Metrics {
    double cost_J = 0.0;
    double rms_error = 0.0;
    double tail_amplitude = 0.0;            // max |e| over the final 20% of the horizon
    double observer_tail = 0.0;             // max ||e0|| over the final 20%
    std::optional<double> settling_time;    // first t after which |e| stays below 2% of |y_d|
};

using StateDerivative = std::function<Vector(double, const Vector&)>;

/// Classical fourth-order Runge-Kutta update.
Vector rk4_step(const StateDerivative& f, double t, const Vector& s, double h);

Trajectory simulate_closed_loop(const LtiPlant& plant, const ReferenceGen& ref,
                                const TrackingGain& gain,
                                const std::optional<ObserverDesign>& observer,
                                const std::optional<CompensatorGain>& compensator,
                                const DisturbanceSignal& disturbance, const SimConfig& cfg);

/// Trapezoidal integral of e' Q_e e + u_c' R u_c over the trajectory grid.
double cost_J(const Trajectory& traj, double q_e, const Matrix& R);

Metrics metrics(const Trajectory& traj, double q_e, const Matrix& R);

} // namespace dobotc
