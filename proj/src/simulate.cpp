#include "dobotc/simulate.hpp"

#include <cmath>
#include <sstream>

namespace dobotc {

DisturbanceTerm DisturbanceTerm::constant(double offset) {
    DisturbanceTerm t;
    t.kind = Kind::constant;
    t.offset = offset;
    return t;
}

DisturbanceTerm DisturbanceTerm::sinusoid(double amplitude, double omega, double phase) {
    DisturbanceTerm t;
    t.kind = Kind::sinusoid;
    t.amplitude = amplitude;
    t.omega = omega;
    t.phase = phase;
    return t;
}

DisturbanceTerm DisturbanceTerm::step(double level, double start) {
    DisturbanceTerm t;
    t.kind = Kind::step;
    t.level = level;
    t.start = start;
    return t;
}

double DisturbanceTerm::eval(double t) const {
    switch (kind) {
        case Kind::constant: return offset;
        case Kind::sinusoid: return amplitude * std::sin(omega * t + phase);
        case Kind::step: return t >= start ? level : 0.0;
    }
    return 0.0;
}

DisturbanceSignal DisturbanceSignal::zero(Eigen::Index q) {
    DisturbanceSignal s;
    s.channels.resize(static_cast<std::size_t>(q));
    return s;
}

Vector evaluate_disturbance(const DisturbanceSignal& signal, double t) {
    Vector w = Vector::Zero(signal.channel_count());
    for (std::size_t c = 0; c < signal.channels.size(); ++c) {
        double sum = 0.0;
        for (const auto& term : signal.channels[c]) sum += term.eval(t);
        w(static_cast<Eigen::Index>(c)) = sum;
    }
    return w;
}

Vector rk4_step(const StateDerivative& f, double t, const Vector& s, double h) {
    if (!(h > 0.0)) {
        throw ParameterError("rk4_step: step size must be positive");
    }
    auto eval = [&](double tau, const Vector& state) {
        Vector d = f(tau, state);
        if (!d.allFinite()) {
            std::ostringstream msg;
            msg << "rk4_step: non-finite derivative at t = " << tau;
            throw NumericalError(msg.str());
        }
        return d;
    };
    const Vector k1 = eval(t, s);
    const Vector k2 = eval(t + 0.5 * h, s + 0.5 * h * k1);
    const Vector k3 = eval(t + 0.5 * h, s + 0.5 * h * k2);
    const Vector k4 = eval(t + h, s + h * k3);
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory simulate_closed_loop(const LtiPlant& plant, const ReferenceGen& ref,
                                const TrackingGain& gain,
                                const std::optional<ObserverDesign>& observer,
                                const std::optional<CompensatorGain>& compensator,
                                const DisturbanceSignal& disturbance, const SimConfig& cfg) {
    check_dimensions(plant);
    check_dimensions(ref);

    const Eigen::Index n = plant.state_dim();
    const Eigen::Index m = plant.input_dim();
    const Eigen::Index p = ref.dim();
    const Eigen::Index q = plant.disturbance_dim();

    if (gain.Kx.rows() != m || gain.Kx.cols() != n || gain.Kv.rows() != m || gain.Kv.cols() != p) {
        throw DimensionError("simulate_closed_loop: tracking gain does not match plant/reference");
    }

    DisturbanceSignal signal = disturbance;
    if (signal.channels.empty()) signal = DisturbanceSignal::zero(q);
    if (signal.channel_count() != q) {
        throw DimensionError("simulate_closed_loop: disturbance channel count must equal q");
    }

    if (!(cfg.dt > 0.0) || cfg.dt > cfg.t_end) {
        throw ParameterError("simulate_closed_loop: require 0 < dt <= t_end");
    }
    const double step_estimate = cfg.t_end / cfg.dt;
    if (step_estimate > 1e8) {
        throw ParameterError("simulate_closed_loop: t_end/dt exceeds the 1e8 step guard");
    }
    const long steps = std::lround(step_estimate);

    const bool obs_on = observer.has_value() && cfg.observer_enabled;
    const bool comp_on = compensator.has_value() && cfg.compensator_enabled && obs_on;
    if (obs_on && (observer->L.rows() != q || observer->L.cols() != n)) {
        throw DimensionError("simulate_closed_loop: observer gain does not match plant");
    }
    if (compensator.has_value() &&
        (compensator->u_d.rows() != m || compensator->u_d.cols() != q)) {
        throw DimensionError("simulate_closed_loop: compensator gain does not match plant");
    }

    Vector x0 = cfg.x0.size() ? cfg.x0 : Vector(Vector::Zero(n));
    if (x0.size() != n) {
        throw DimensionError("simulate_closed_loop: x0 size must equal the state dimension");
    }

    // Packed integration state: [x; v; z]. z present only with the observer on.
    const Eigen::Index dim = n + p + (obs_on ? q : 0);
    Vector state(dim);
    state.head(n) = x0;
    state.segment(n, p) = ref.v0;
    if (obs_on) {
        if (cfg.z0.has_value()) {
            if (cfg.z0->size() != q) {
                throw DimensionError("simulate_closed_loop: z0 size must equal q");
            }
            state.tail(q) = *cfg.z0;
        } else {
            state.tail(q) = -observer->L * x0;
        }
    }

    const Matrix L = obs_on ? observer->L : Matrix(0, 0);
    auto control = [&](const Vector& s) -> std::pair<Vector, Vector> {
        const Vector x = s.head(n);
        const Vector v = s.segment(n, p);
        Vector u_c = -gain.Kx * x - gain.Kv * v;
        Vector u = u_c;
        if (comp_on) {
            const Vector w_hat = s.tail(q) + L * x;
            u += compensator->u_d * w_hat;
        }
        return {u, u_c};
    };

    StateDerivative dynamics = [&](double t, const Vector& s) {
        const Vector x = s.head(n);
        const Vector v = s.segment(n, p);
        const auto [u, u_c] = control(s);
        const Vector w = evaluate_disturbance(signal, t);
        Vector ds(dim);
        ds.head(n) = plant.A * x + plant.B_u * u + plant.B_d * w;
        ds.segment(n, p) = ref.G * v;
        if (obs_on) {
            const Vector z = s.tail(q);
            ds.tail(q) = -L * plant.B_d * z - L * (plant.B_d * (L * x) + plant.A * x + plant.B_u * u);
        }
        return ds;
    };

    Trajectory traj;
    traj.t.reserve(static_cast<std::size_t>(steps + 1));

    auto record = [&](double t, const Vector& s) {
        const Vector x = s.head(n);
        const Vector v = s.segment(n, p);
        const auto [u, u_c] = control(s);
        const Vector w = evaluate_disturbance(signal, t);
        const Vector w_hat = obs_on ? Vector(s.tail(q) + L * x) : Vector(Vector::Zero(q));
        const double y = (plant.C_o * x)(0);
        const double y_d = (ref.H * v)(0);
        traj.t.push_back(t);
        traj.x.push_back(x);
        traj.v.push_back(v);
        traj.u.push_back(u);
        traj.u_c.push_back(u_c);
        traj.y.push_back(y);
        traj.y_d.push_back(y_d);
        traj.e.push_back(y - y_d);
        traj.w.push_back(w);
        traj.w_hat.push_back(w_hat);
        traj.e0.push_back(w - w_hat);
    };

    record(0.0, state);
    for (long i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        state = rk4_step(dynamics, t, state, cfg.dt);
        const double t_next = static_cast<double>(i + 1) * cfg.dt;
        if (!state.allFinite() || state.head(n).lpNorm<Eigen::Infinity>() > 1e12) {
            std::ostringstream msg;
            msg << "simulate_closed_loop: state diverged at t = " << t_next
                << "; check the synthesis certificates";
            throw DivergenceError(msg.str());
        }
        record(t_next, state);
    }
    return traj;
}

double cost_J(const Trajectory& traj, double q_e, const Matrix& R) {
    if (traj.size() < 2) return 0.0;
    auto integrand = [&](std::size_t i) {
        const double e = traj.e[i];
        return q_e * e * e + (traj.u_c[i].transpose() * R * traj.u_c[i])(0);
    };
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        acc += 0.5 * (traj.t[i + 1] - traj.t[i]) * (integrand(i) + integrand(i + 1));
    }
    return acc;
}

Metrics metrics(const Trajectory& traj, double q_e, const Matrix& R) {
    if (traj.size() == 0) {
        throw ParameterError("metrics: empty trajectory");
    }
    Metrics out;
    out.cost_J = cost_J(traj, q_e, R);

    double sum_sq = 0.0;
    for (double e : traj.e) sum_sq += e * e;
    out.rms_error = std::sqrt(sum_sq / static_cast<double>(traj.size()));

    const double t_end = traj.t.back();
    const double tail_start = 0.8 * t_end;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.t[i] >= tail_start) {
            out.tail_amplitude = std::max(out.tail_amplitude, std::abs(traj.e[i]));
            out.observer_tail = std::max(out.observer_tail, traj.e0[i].norm());
        }
    }

    // Last index violating the 2% band determines the settling time.
    std::size_t last_violation = traj.size(); // sentinel: none
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (std::abs(traj.e[i]) > 0.02 * std::abs(traj.y_d[i])) last_violation = i;
    }
    if (last_violation == traj.size()) {
        out.settling_time = traj.t.front();
    } else if (last_violation + 1 < traj.size()) {
        out.settling_time = traj.t[last_violation + 1];
    } // else: never settles within the horizon
    return out;
}

} // namespace dobotc
