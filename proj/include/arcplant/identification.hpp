#pragma once

// Step-response identification of the lift velocity loop and the
// normalised-RMSE fit metric used to validate the model against field data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "arcplant/errors.hpp"
#include "arcplant/sim_engine.hpp"

namespace arcplant::ident {

enum class Channel { Velocity, Position, Current };

inline std::string_view to_string(Channel c) {
    switch (c) {
        case Channel::Velocity: return "v_mm_s";
        case Channel::Position: return "L_mm";
        case Channel::Current: return "I_A";
    }
    return "?";
}

inline std::optional<Channel> parse_channel(std::string_view name) {
    if (name == "v_mm_s") return Channel::Velocity;
    if (name == "L_mm") return Channel::Position;
    if (name == "I_A") return Channel::Current;
    return std::nullopt;
}

/// Fraction of the final value reached after one time constant (63.2%).
inline const double kTimeConstantFraction = -std::expm1(-1.0);

struct StepRecord {
    std::vector<double> t;  ///< s; the step is applied at t.front()
    std::vector<double> y;
    double u_step = 0.0;    ///< V
    Channel channel = Channel::Velocity;

    void validate() const {
        if (t.size() != y.size()) throw DataError("step record: t and y lengths differ");
        if (t.size() < 20) throw DataError("step record needs at least 20 samples");
        if (!(std::isfinite(u_step) && u_step != 0.0)) throw DataError("step magnitude must be nonzero");
        const double dt = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
        if (!(dt > 0.0)) throw DataError("step record time must increase");
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (std::abs((t[i] - t[i - 1]) - dt) > 1e-6 * dt) throw DataError("step record is not uniformly sampled");
        }
        for (double v : y) {
            if (!std::isfinite(v)) throw DataError("step record contains non-finite values");
        }
    }
};

enum class StepIdMethod { CrossingRule, LeastSquares };

inline std::string_view to_string(StepIdMethod m) {
    return m == StepIdMethod::LeastSquares ? "least_squares" : "crossing_63_2";
}

struct StepIdResult {
    double K_hat = 0.0;          ///< mm/(s*V)
    double T_hat = 0.0;          ///< s
    StepIdMethod method = StepIdMethod::CrossingRule;
    double residual_rms = 0.0;   ///< response units
    double K_crossing = 0.0;     ///< steady-state estimate before refinement
    double T_crossing = 0.0;     ///< 63.2% crossing estimate before refinement
};

inline double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

namespace detail {

inline double stddev(std::span<const double> x) {
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return x.size() > 1 ? std::sqrt(acc / static_cast<double>(x.size() - 1)) : 0.0;
}

/// Centred moving average; the window shrinks at the record edges.
inline std::vector<double> moving_average(std::span<const double> y, std::size_t width) {
    const std::size_t half = width / 2;
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(y.size(), i + half + 1);
        out[i] = mean(y.subspan(lo, hi - lo));
    }
    return out;
}

struct FirstOrderFit {
    double K = 0.0;
    double sse = 0.0;
};

/// Best gain for a fixed time constant (the model is linear in K).
inline FirstOrderFit fit_gain(std::span<const double> tau, std::span<const double> y, double u, double T) {
    double sy = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double phi = -std::expm1(-tau[i] / T);
        sy += y[i] * phi;
        ss += phi * phi;
    }
    FirstOrderFit f;
    f.K = sy / (u * ss);
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const double r = y[i] - f.K * u * -std::expm1(-tau[i] / T);
        f.sse += r * r;
    }
    return f;
}

}  // namespace detail

inline constexpr std::size_t kSmoothingWidth = 5;
inline constexpr double kSteadyStateBand = 0.02;
inline constexpr double kSteadyStateTailFraction = 0.2;

/// Estimates K and T of v(s)/U(s) = K/(Ts+1) from a velocity step record.
///
/// The steady state is the mean of the last 20% of samples and must not drift
/// by more than the 2% band (widened by the tail noise level). T starts from
/// the 63.2% crossing of the 5-sample moving average, interpolated in
/// log(1 - y/y_ss), and is then refined by least squares over (K, T) when
/// `refine` is set and the optimum lies inside the search bracket.
inline StepIdResult identify_step(const StepRecord& rec, bool refine = true) {
    rec.validate();
    if (rec.channel != Channel::Velocity) {
        throw DataError("identify_step expects a velocity (v_mm_s) record, got " + std::string(to_string(rec.channel)));
    }
    const std::size_t n = rec.y.size();
    const std::span<const double> y(rec.y);

    std::vector<double> tau(n);
    for (std::size_t i = 0; i < n; ++i) tau[i] = rec.t[i] - rec.t.front();

    const std::size_t n_tail = std::max<std::size_t>(
        4, static_cast<std::size_t>(std::floor(kSteadyStateTailFraction * static_cast<double>(n))));
    const auto tail = y.subspan(n - n_tail);
    const double y_ss = mean(tail);
    const double tail_sd = detail::stddev(tail);
    const double peak = *std::max_element(y.begin(), y.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });

    if (y_ss == 0.0 || std::abs(y_ss) <= 1e-9 * std::abs(peak) || std::abs(y_ss) <= 3.0 * tail_sd) {
        throw DataError("step too short: no steady state reached");
    }

    const std::size_t half = n_tail / 2;
    const double early = mean(tail.first(half));
    const double late = mean(tail.subspan(half));
    const double drift = late - early;
    const double allowed = kSteadyStateBand * std::abs(y_ss) + 3.0 * tail_sd * std::sqrt(2.0 / static_cast<double>(half));
    if (std::abs(drift) > allowed) {
        if ((drift > 0.0) == (y_ss > 0.0)) throw DataError("step too short: response still settling");
        throw DataError("not a first-order response: tail moves away from its final value");
    }

    // Work on the response normalised to a positive final value of 1.
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] / y_ss;
    const std::vector<double> smooth = detail::moving_average(r, kSmoothingWidth);

    const double band = kSteadyStateBand + 4.0 * tail_sd / std::abs(y_ss);
    if (*std::max_element(smooth.begin(), smooth.end()) > 1.0 + band) {
        throw DataError("not a first-order response: overshoot beyond the noise band");
    }

    const double K0 = y_ss / rec.u_step;
    if (!(K0 > 0.0)) throw DataError("not a first-order response: response opposes the drive");

    std::size_t hit = 0;
    while (hit < n && smooth[hit] < kTimeConstantFraction) ++hit;
    if (hit == 0 || hit == n) throw DataError("not a first-order response: no 63.2% crossing");

    const double r_lo = smooth[hit - 1];
    const double r_hi = smooth[hit];
    double T0 = 0.0;
    if (r_hi < 1.0) {
        const double z_lo = std::log1p(-r_lo);
        const double z_hi = std::log1p(-r_hi);
        T0 = tau[hit - 1] + (-1.0 - z_lo) * (tau[hit] - tau[hit - 1]) / (z_hi - z_lo);
    } else {
        T0 = tau[hit - 1] + (kTimeConstantFraction - r_lo) * (tau[hit] - tau[hit - 1]) / (r_hi - r_lo);
    }
    if (!(T0 > 0.0)) throw DataError("not a first-order response: non-positive time constant");

    StepIdResult res;
    res.K_crossing = K0;
    res.T_crossing = T0;
    res.K_hat = K0;
    res.T_hat = T0;
    res.method = StepIdMethod::CrossingRule;

    if (refine) {
        const double lo = std::log(T0 / 10.0);
        const double hi = std::log(T0 * 10.0);
        auto objective = [&](double log_T) { return detail::fit_gain(tau, y, rec.u_step, std::exp(log_T)).sse; };
        const auto [log_T, sse] =
            boost::math::tools::brent_find_minima(objective, lo, hi, std::numeric_limits<double>::digits / 2);
        const bool interior = log_T > lo + 1e-6 && log_T < hi - 1e-6;
        const double T_ls = std::exp(log_T);
        const double K_ls = detail::fit_gain(tau, y, rec.u_step, T_ls).K;
        if (interior && std::isfinite(sse) && K_ls > 0.0) {
            res.K_hat = K_ls;
            res.T_hat = T_ls;
            res.method = StepIdMethod::LeastSquares;
        }
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - res.K_hat * rec.u_step * -std::expm1(-tau[i] / res.T_hat);
        sse += e * e;
    }
    res.residual_rms = std::sqrt(sse / static_cast<double>(n));
    return res;
}

struct FitReport {
    double fit_percent = 0.0;
    double rmse = 0.0;
    std::size_t n_samples = 0;
    Channel channel = Channel::Current;
    double offset_s = 0.0;  ///< model time shift applied before comparison
};

/// fit = 100 (1 - ||measured - modeled|| / ||measured - mean(measured)||)
///
/// Exactly 100 only for identical series.
inline FitReport fit_percent(std::span<const double> measured, std::span<const double> modeled,
                             Channel channel = Channel::Current) {
    if (measured.size() != modeled.size()) {
        throw DataError("fit: length mismatch (" + std::to_string(measured.size()) + " vs " +
                        std::to_string(modeled.size()) + ")");
    }
    if (measured.size() < 2) throw DataError("fit: need at least 2 samples");
    const double m = mean(measured);
    double err2 = 0.0;
    double dev2 = 0.0;
    bool identical = true;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        identical = identical && measured[i] == modeled[i];
        const double e = measured[i] - modeled[i];
        const double d = measured[i] - m;
        err2 += e * e;
        dev2 += d * d;
    }
    if (!std::isfinite(err2) || !std::isfinite(dev2)) throw DataError("fit: non-finite samples");
    if (dev2 == 0.0) throw DataError("fit: undefined normalization (measured series is constant)");

    FitReport rep;
    rep.channel = channel;
    rep.n_samples = measured.size();
    rep.rmse = std::sqrt(err2 / static_cast<double>(measured.size()));
    rep.fit_percent = 100.0 * (1.0 - std::sqrt(err2) / std::sqrt(dev2));
    // Differences too small to register in err2 (denormal underflow) still count.
    if (!identical && rep.fit_percent >= 100.0) rep.fit_percent = std::nextafter(100.0, 0.0);
    return rep;
}

/// Measured response on arbitrary (increasing) timestamps.
struct FieldSeries {
    std::vector<double> t;
    std::vector<double> y;
    Channel channel = Channel::Current;
};

struct ValidationOptions {
    bool align = true;
    double window_s = 0.5;     ///< offsets searched in [-window, +window]
    std::size_t max_offsets = 1000;  ///< per side
    sim::Integrator integrator = sim::Integrator::ExactZoh;
};

namespace detail {

inline double channel_value(const sim::Sample& s, Channel c) {
    switch (c) {
        case Channel::Velocity: return s.v;
        case Channel::Position: return s.L;
        case Channel::Current: return s.I;
    }
    return s.I;
}

/// Linear interpolation on a uniform grid starting at 0; held at the ends.
inline double interpolate_uniform(std::span<const double> y, double spacing, double t) {
    if (t <= 0.0) return y.front();
    const double pos = t / spacing;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= y.size()) return y.back();
    const double w = pos - static_cast<double>(i);
    return y[i] + w * (y[i + 1] - y[i]);
}

}  // namespace detail

struct ValidationOutcome {
    FitReport report;
    std::vector<double> modeled;  ///< model channel on the field timestamps, best offset applied
};

/// Simulates the scenario, resamples the model channel onto the field
/// timestamps and reports the fit. With alignment enabled the model is
/// shifted by the offset (multiple of the field sample period, |offset| <=
/// window) that maximises the fit; ties keep the smallest shift.
inline ValidationOutcome validate_against_field_detailed(const FieldSeries& field, const sim::Scenario& sc,
                                                         const sim::ControllerConfig& ctrl = {},
                                                         const ValidationOptions& opts = {}) {
    if (field.t.size() != field.y.size()) throw DataError("field series: t and y lengths differ");
    if (field.t.size() < 2) throw DataError("field series needs at least 2 samples");
    for (std::size_t i = 0; i < field.t.size(); ++i) {
        if (!std::isfinite(field.t[i]) || !std::isfinite(field.y[i])) throw DataError("field series has non-finite values");
        if (i > 0 && !(field.t[i] > field.t[i - 1])) throw DataError("field timestamps must be strictly increasing");
    }
    if (!(opts.window_s >= 0.0)) throw ConfigError("alignment window must be >= 0");

    const double window = opts.align ? opts.window_s : 0.0;
    sim::Scenario model_sc = sc;
    model_sc.t_end = std::max(sc.t_end, field.t.back() + window + sc.dt);
    const sim::Trajectory traj = sim::run(model_sc, ctrl, opts.integrator);
    if (traj.clamp_events > 0) {
        throw DomainError("model trajectory leaves the valid arc range during the step");
    }

    std::vector<double> model(traj.samples.size());
    for (std::size_t i = 0; i < model.size(); ++i) model[i] = detail::channel_value(traj.samples[i], field.channel);
    const double spacing = sc.dt * sc.decimation;

    std::vector<double> shifted(field.t.size());
    auto evaluate = [&](double offset) {
        for (std::size_t i = 0; i < field.t.size(); ++i) {
            shifted[i] = detail::interpolate_uniform(model, spacing, field.t[i] - offset);
        }
        FitReport rep = fit_percent(field.y, shifted, field.channel);
        rep.offset_s = offset;
        return rep;
    };

    ValidationOutcome best{evaluate(0.0), shifted};
    if (opts.align && window > 0.0) {
        std::vector<double> gaps(field.t.size() - 1);
        for (std::size_t i = 1; i < field.t.size(); ++i) gaps[i - 1] = field.t[i] - field.t[i - 1];
        std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
        double delta = gaps[gaps.size() / 2];
        auto count = static_cast<std::size_t>(std::floor(window / delta + 1e-9));
        if (count > opts.max_offsets) {
            count = opts.max_offsets;
            delta = window / static_cast<double>(count);
        }
        for (std::size_t k = 1; k <= count; ++k) {
            for (double sign : {1.0, -1.0}) {
                FitReport rep = evaluate(sign * static_cast<double>(k) * delta);
                if (rep.fit_percent > best.report.fit_percent) best = {rep, shifted};
            }
        }
    }
    return best;
}

inline FitReport validate_against_field(const FieldSeries& field, const sim::Scenario& sc,
                                        const sim::ControllerConfig& ctrl = {}, const ValidationOptions& opts = {}) {
    return validate_against_field_detailed(field, sc, ctrl, opts).report;
}

}  // namespace arcplant::ident
