#pragma once

// Time-domain simulation of the cascade
//   drive voltage -> electrode lift K/(s(Ts+1)) -> arc length -> circuit maps,
// open loop or closed around the secondary impedance.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "arcplant/arc_circuit.hpp"
#include "arcplant/errors.hpp"
#include "arcplant/hydraulics.hpp"

namespace arcplant::sim {

using arc::CircuitParams;
using hydraulics::PlantLTI;

struct PlantState {
    double t = 0.0;  ///< s
    double L = 0.0;  ///< mm
    double v = 0.0;  ///< mm/s
};

/// Exact zero-order-hold update of  v' = (K u - v) / T,  L' = v.
inline PlantState step_state(const PlantState& s, double u, const PlantLTI& lti, double dt) {
    const double decay = -std::expm1(-dt / lti.T);  // 1 - e^(-dt/T)
    const double forced = lti.K * u;
    PlantState next;
    next.t = s.t + dt;
    next.v = s.v + (forced - s.v) * decay;
    next.L = s.L + s.v * lti.T * decay + forced * (dt - lti.T * decay);
    return next;
}

/// Classical fourth-order Runge-Kutta step of the same ODE, u held over dt.
inline PlantState step_state_rk4(const PlantState& s, double u, const PlantLTI& lti, double dt) {
    const double forced = lti.K * u;
    auto accel = [&](double v) { return (forced - v) / lti.T; };

    const double l1 = s.v;
    const double a1 = accel(s.v);
    const double l2 = s.v + 0.5 * dt * a1;
    const double a2 = accel(l2);
    const double l3 = s.v + 0.5 * dt * a2;
    const double a3 = accel(l3);
    const double l4 = s.v + dt * a3;
    const double a4 = accel(l4);

    PlantState next;
    next.t = s.t + dt;
    next.L = s.L + dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    next.v = s.v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    return next;
}

struct Breakpoint {
    double t = 0.0;
    double value = 0.0;

    bool operator==(const Breakpoint&) const = default;
};

/// Right-continuous piecewise-constant signal. Before the first breakpoint
/// the caller-provided fallback applies.
class PiecewiseConstant {
public:
    PiecewiseConstant() = default;
    explicit PiecewiseConstant(std::vector<Breakpoint> points) : points_(std::move(points)) {
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!std::isfinite(points_[i].t) || !std::isfinite(points_[i].value) || points_[i].t < 0.0) {
                throw ConfigError("schedule breakpoints must be finite with t >= 0");
            }
            if (i > 0 && !(points_[i].t > points_[i - 1].t)) {
                throw ConfigError("schedule breakpoint times must be strictly increasing");
            }
        }
    }

    /// `slack` widens each breakpoint to absorb grid rounding (t_k = k*dt).
    double value_at(double t, double fallback, double slack = 0.0) const {
        double v = fallback;
        for (const auto& p : points_) {
            if (p.t <= t + slack) v = p.value;
            else break;
        }
        return v;
    }

    bool empty() const { return points_.empty(); }
    const std::vector<Breakpoint>& points() const { return points_; }

    bool operator==(const PiecewiseConstant&) const = default;

private:
    std::vector<Breakpoint> points_;
};

struct ConstantInput {
    double u = 0.0;
    bool operator==(const ConstantInput&) const = default;
};
struct StepInput {
    double u = 0.0;
    double t0 = 0.0;
    bool operator==(const StepInput&) const = default;
};
struct ScheduleInput {
    PiecewiseConstant u;  ///< zero before the first breakpoint
    bool operator==(const ScheduleInput&) const = default;
};
/// Drive voltage comes from the controller.
struct ClosedLoopInput {
    bool operator==(const ClosedLoopInput&) const = default;
};

using InputProgram = std::variant<ConstantInput, StepInput, ScheduleInput, ClosedLoopInput>;

enum class ControllerKind { None, P, PI };

inline std::string_view to_string(ControllerKind k) {
    switch (k) {
        case ControllerKind::None: return "none";
        case ControllerKind::P: return "p";
        case ControllerKind::PI: return "pi";
    }
    return "none";
}

/// P/PI law on the impedance error e = Z* - Z. Positive gains lift the
/// electrode when the arc is too short (Z below setpoint).
struct ControllerConfig {
    ControllerKind kind = ControllerKind::None;
    double kp = 0.0;         ///< V/ohm
    double ki = 0.0;         ///< V/(ohm*s)
    double setpoint = 0.0;   ///< Z*, ohm
    double u_min = -10.0;    ///< V
    double u_max = 10.0;     ///< V
    bool anti_windup = true;

    void validate() const {
        if (!std::isfinite(kp) || !std::isfinite(ki)) throw ConfigError("controller gains must be finite");
        if (!std::isfinite(u_min) || !std::isfinite(u_max) || !(u_min < u_max)) {
            throw ConfigError("controller requires u_min < u_max");
        }
        if (kind != ControllerKind::None && !(std::isfinite(setpoint) && setpoint > 0.0)) {
            throw ConfigError("controller setpoint must be a positive impedance");
        }
    }

    bool operator==(const ControllerConfig&) const = default;
};

struct Scenario {
    PlantLTI lti;
    CircuitParams circuit;
    InputProgram input = ConstantInput{};
    /// Additive arc-length offset in mm; a change of level moves the arc
    /// length instantly (scrap movement).
    PiecewiseConstant disturbance;
    /// Melting-stage progression; circuit.beta applies before the first entry.
    PiecewiseConstant beta_schedule;
    double dt = 1e-3;      ///< s
    double t_end = 1.0;    ///< s
    double L0 = 0.0;       ///< mm
    int decimation = 1;    ///< record every n-th step
    double z_noise_sigma = 0.0;  ///< ohm, on the controller's Z measurement
    std::uint64_t seed = 1;

    bool operator==(const Scenario&) const = default;
};

struct Sample {
    double t = 0.0;   ///< s
    double u = 0.0;   ///< V, applied over [t, t + dt)
    double L = 0.0;   ///< mm
    double v = 0.0;   ///< mm/s
    double Ua = 0.0;  ///< V
    double I = 0.0;   ///< A
    double Z = 0.0;   ///< ohm

    bool operator==(const Sample&) const = default;
};

struct Trajectory {
    std::vector<Sample> samples;
    std::uint64_t scenario_hash = 0;
    std::size_t clamp_events = 0;   ///< entries into a clamped state
    double clamped_time = 0.0;      ///< s spent at L = 0 or L = L_max

    bool operator==(const Trajectory&) const = default;
};

enum class Integrator { ExactZoh, Rk4 };

inline std::string_view to_string(Integrator i) { return i == Integrator::Rk4 ? "rk4" : "zoh"; }

namespace detail {

class Fnv1a {
public:
    void add(double x) { add(std::bit_cast<std::uint64_t>(x)); }
    void add(std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            hash_ ^= (x >> (8 * i)) & 0xffU;
            hash_ *= 0x100000001b3ULL;
        }
    }
    void add(const PiecewiseConstant& pc) {
        add(static_cast<std::uint64_t>(pc.points().size()));
        for (const auto& p : pc.points()) {
            add(p.t);
            add(p.value);
        }
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

inline double time_slack(double dt) { return 1e-9 * dt; }

}  // namespace detail

/// Stable 64-bit digest of everything that influences a run.
inline std::uint64_t scenario_hash(const Scenario& sc, const ControllerConfig& ctrl) {
    detail::Fnv1a h;
    h.add(sc.lti.K);
    h.add(sc.lti.T);
    const auto& c = sc.circuit;
    for (double x : {c.U1, c.kT, c.Xr, c.XT, c.X2, c.R2, c.alpha, c.beta}) h.add(x);
    h.add(c.E2 ? *c.E2 : -1.0);
    h.add(static_cast<std::uint64_t>(sc.input.index()));
    std::visit(
        [&](const auto& in) {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, ConstantInput>) {
                h.add(in.u);
            } else if constexpr (std::is_same_v<T, StepInput>) {
                h.add(in.u);
                h.add(in.t0);
            } else if constexpr (std::is_same_v<T, ScheduleInput>) {
                h.add(in.u);
            }
        },
        sc.input);
    h.add(sc.disturbance);
    h.add(sc.beta_schedule);
    for (double x : {sc.dt, sc.t_end, sc.L0, sc.z_noise_sigma}) h.add(x);
    h.add(static_cast<std::uint64_t>(sc.decimation));
    h.add(sc.seed);
    h.add(static_cast<std::uint64_t>(ctrl.kind));
    for (double x : {ctrl.kp, ctrl.ki, ctrl.setpoint, ctrl.u_min, ctrl.u_max}) h.add(x);
    h.add(static_cast<std::uint64_t>(ctrl.anti_windup));
    return h.value();
}

inline std::size_t step_count(const Scenario& sc) {
    return static_cast<std::size_t>(std::floor(sc.t_end / sc.dt + 1e-9));
}

/// Rejects inconsistent scenarios before a run starts.
inline void validate(const Scenario& sc, const ControllerConfig& ctrl) {
    sc.lti.validate();
    sc.circuit.validate();
    ctrl.validate();
    if (!(std::isfinite(sc.dt) && sc.dt > 0.0)) throw ConfigError("dt must be > 0");
    if (sc.dt > sc.lti.T / 5.0 * (1.0 + 1e-12)) {
        throw ConfigError("dt=" + std::to_string(sc.dt) + " s exceeds T/5=" + std::to_string(sc.lti.T / 5.0) + " s");
    }
    if (!(std::isfinite(sc.t_end) && sc.t_end >= sc.dt)) throw ConfigError("t_end must be >= dt");
    if (sc.decimation < 1) throw ConfigError("decimation must be >= 1");
    if (!(std::isfinite(sc.z_noise_sigma) && sc.z_noise_sigma >= 0.0)) {
        throw ConfigError("z_noise_sigma must be >= 0");
    }
    for (const auto& p : sc.beta_schedule.points()) {
        if (!(p.value > 0.0)) throw ConfigError("beta schedule values must be > 0");
        arc::valid_arc_range(sc.circuit.with_beta(p.value));
    }

    const CircuitParams initial = sc.circuit.with_beta(sc.beta_schedule.value_at(0.0, sc.circuit.beta));
    const arc::ArcRange range = arc::valid_arc_range(initial);
    if (!(sc.L0 >= range.L_min && sc.L0 <= range.L_max)) {
        throw ConfigError("L0=" + std::to_string(sc.L0) + " mm outside valid arc range [0, " +
                          std::to_string(range.L_max) + "]");
    }

    const bool closed = std::holds_alternative<ClosedLoopInput>(sc.input);
    if (closed && ctrl.kind == ControllerKind::None) {
        throw ConfigError("closed-loop input requires a controller (kind p or pi)");
    }
    if (!closed && ctrl.kind != ControllerKind::None) {
        throw ConfigError("controller configured but the input program is open loop");
    }
    if (closed) {
        // Achievable impedances are [Z(0), inf) for every beta the run visits.
        std::vector<double> betas{initial.beta};
        for (const auto& p : sc.beta_schedule.points()) betas.push_back(p.value);
        for (double b : betas) {
            const double z_floor = arc::impedance(0.0, sc.circuit.with_beta(b));
            if (ctrl.setpoint < z_floor) {
                throw ConfigError("setpoint " + std::to_string(ctrl.setpoint) +
                                  " ohm is below the minimum achievable impedance " + std::to_string(z_floor) +
                                  " ohm (beta=" + std::to_string(b) + ")");
            }
        }
    }
}

namespace detail {

class ImpedanceController {
public:
    explicit ImpedanceController(const ControllerConfig& cfg) : cfg_(cfg) {}

    double update(double z_measured, double dt) {
        const double e = cfg_.setpoint - z_measured;
        if (!std::isfinite(e)) return e > 0.0 ? cfg_.u_max : cfg_.u_min;
        double candidate = integral_;
        if (cfg_.kind == ControllerKind::PI) candidate += e * dt;
        const double raw = cfg_.kp * e + cfg_.ki * candidate;
        const double u = std::clamp(raw, cfg_.u_min, cfg_.u_max);
        // Conditional integration: hold the integrator while saturated and
        // the error pushes further into saturation.
        const bool winding = (raw > cfg_.u_max && e > 0.0) || (raw < cfg_.u_min && e < 0.0);
        if (!(cfg_.anti_windup && winding)) integral_ = candidate;
        return u;
    }

private:
    ControllerConfig cfg_;
    double integral_ = 0.0;
};

inline double open_loop_input(const InputProgram& program, double t, double slack) {
    return std::visit(
        [&](const auto& in) -> double {
            using T = std::decay_t<decltype(in)>;
            if constexpr (std::is_same_v<T, ConstantInput>) {
                return in.u;
            } else if constexpr (std::is_same_v<T, StepInput>) {
                return t + slack >= in.t0 ? in.u : 0.0;
            } else if constexpr (std::is_same_v<T, ScheduleInput>) {
                return in.u.value_at(t, 0.0, slack);
            } else {
                return 0.0;
            }
        },
        program);
}

}  // namespace detail

/// Runs the scenario with the chosen plant integrator. Both integrators share
/// the sampling, controller, clamping and disturbance handling.
inline Trajectory run(const Scenario& sc, const ControllerConfig& ctrl, Integrator integrator) {
    validate(sc, ctrl);

    const double slack = detail::time_slack(sc.dt);
    const std::size_t steps = step_count(sc);
    const bool closed = std::holds_alternative<ClosedLoopInput>(sc.input);

    Trajectory traj;
    traj.scenario_hash = scenario_hash(sc, ctrl);
    traj.samples.reserve(steps / static_cast<std::size_t>(sc.decimation) + 1);

    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    detail::ImpedanceController controller(ctrl);

    double beta = sc.beta_schedule.value_at(0.0, sc.circuit.beta);
    CircuitParams circuit = sc.circuit.with_beta(beta);
    double L_max = arc::valid_arc_range(circuit).L_max;
    double offset = 0.0;
    bool clamped = false;

    PlantState state{0.0, sc.L0, 0.0};

    // Returns true when the arc length had to be pulled back into range.
    auto clamp_state = [&]() {
        if (state.L < 0.0) {
            state.L = 0.0;
            if (state.v < 0.0) state.v = 0.0;
            return true;
        }
        if (state.L > L_max) {
            state.L = L_max;
            if (state.v > 0.0) state.v = 0.0;
            return true;
        }
        return false;
    };

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * sc.dt;
        state.t = t;
        bool clamped_now = false;

        const double b = sc.beta_schedule.value_at(t, sc.circuit.beta, slack);
        if (b != beta) {
            beta = b;
            circuit = sc.circuit.with_beta(beta);
            L_max = arc::valid_arc_range(circuit).L_max;
            clamped_now |= clamp_state();
        }
        const double d = sc.disturbance.value_at(t, 0.0, slack);
        if (d != offset) {
            state.L += d - offset;
            offset = d;
            clamped_now |= clamp_state();
        }

        const arc::ArcOperatingPoint op = arc::operating_point(state.L, circuit);

        double u = 0.0;
        if (closed) {
            double z_meas = op.Z;
            if (sc.z_noise_sigma > 0.0) z_meas += sc.z_noise_sigma * noise(rng);
            u = controller.update(z_meas, sc.dt);
        } else {
            u = detail::open_loop_input(sc.input, t, slack);
        }

        if (k % static_cast<std::size_t>(sc.decimation) == 0) {
            traj.samples.push_back({t, u, state.L, state.v, op.Ua, op.I, op.Z});
        }
        if (k == steps) break;

        state = integrator == Integrator::Rk4 ? step_state_rk4(state, u, sc.lti, sc.dt)
                                              : step_state(state, u, sc.lti, sc.dt);
        clamped_now |= clamp_state();

        if (clamped_now) {
            if (!clamped) ++traj.clamp_events;
            traj.clamped_time += sc.dt;
        }
        clamped = clamped_now;
    }
    return traj;
}

/// Primary integrator: exact zero-order-hold discretisation.
inline Trajectory simulate(const Scenario& sc, const ControllerConfig& ctrl = {}) {
    return run(sc, ctrl, Integrator::ExactZoh);
}

/// Independent RK4 integration of the continuous plant, for cross-checks.
inline Trajectory rk4_reference(const Scenario& sc, const ControllerConfig& ctrl = {}) {
    return run(sc, ctrl, Integrator::Rk4);
}

}  // namespace arcplant::sim
