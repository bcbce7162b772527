#pragma once

// Servo-valve / cylinder electrode lift, linearised about the origin
// (Q0 = 0, u0 = 0, Pc0 = 0). Internal force and flow math is SI; the plant
// model (K, T) and the step response are in mm.

#include <cmath>
#include <string>
#include <vector>

#include "arcplant/errors.hpp"

namespace arcplant::hydraulics {

inline constexpr double kMillimetresPerMetre = 1000.0;

struct HydraulicParams {
    double rho = 850.0;    ///< oil density, kg/m^3 (does not enter the model)
    double g = 9.8;        ///< N/kg (cancels in the force balance)
    double m = 7850.0;     ///< electrode mass, kg
    double A = 1.54e-2;    ///< piston area, m^2
    double c = 0.05;       ///< viscous coefficient, N*s/m
    double k1 = 0.0;       ///< flow gain, m^3/(s*V)
    double k2 = 0.0;       ///< flow-pressure coefficient, m^5/(s*N); negative

    void validate() const {
        auto require = [](bool ok, const std::string& what) {
            if (!ok) throw ConfigError("hydraulics: " + what);
        };
        require(std::isfinite(m) && m > 0.0, "m must be > 0");
        require(std::isfinite(A) && A > 0.0, "A must be > 0");
        require(std::isfinite(c) && c >= 0.0, "c must be >= 0");
        require(std::isfinite(k1) && k1 > 0.0, "k1 must be > 0");
        require(std::isfinite(k2), "k2 must be finite");
        if (k2 >= 0.0) {
            throw DomainError("flow-pressure coefficient must be negative (unstable/degenerate plant)");
        }
    }

    /// Table values with k1, k2 back-solved from K = 15 mm/(s*V), T = 0.1 s.
    static HydraulicParams shipped_default() {
        HydraulicParams h;
        h.k1 = 15e-3 * h.A;
        h.k2 = -0.1 * h.A * h.A / h.m;
        return h;
    }

    bool operator==(const HydraulicParams&) const = default;
};

/// Integral-plus-lag plant K / (s (T s + 1)).
struct PlantLTI {
    double K = 0.0;  ///< mm/(s*V)
    double T = 0.0;  ///< s

    void validate() const {
        if (!(std::isfinite(K) && K > 0.0)) throw ConfigError("plant gain K must be > 0");
        if (!(std::isfinite(T) && T > 0.0)) throw ConfigError("plant time constant T must be > 0");
    }

    bool operator==(const PlantLTI&) const = default;
};

struct HydraulicDerivation {
    double Q = 0.0;   ///< m^3/s
    double Pc = 0.0;  ///< P1 - P2, Pa
    double P1 = 0.0;  ///< Pa
    double P2 = 0.0;  ///< Pa
    double F = 0.0;   ///< N
};

/// K = k1 / A, T = -m k2 / A^2. Independent of g, rho and c (c is neglected).
inline PlantLTI derive_lti(const HydraulicParams& h) {
    h.validate();
    PlantLTI lti;
    lti.K = h.k1 / h.A * kMillimetresPerMetre;
    lti.T = -h.m * h.k2 / (h.A * h.A);
    lti.validate();
    return lti;
}

/// Reconstructs flows and pressures for drive voltage u (V) and electrode
/// velocity v (m/s).
inline HydraulicDerivation hydraulic_state(double u, double v, const HydraulicParams& h) {
    h.validate();
    HydraulicDerivation d;
    d.Q = h.A * v;
    d.Pc = (h.A * v - h.k1 * u) / h.k2;
    d.P2 = h.m * h.g / h.A;
    d.P1 = d.Pc + d.P2;
    d.F = h.A * d.Pc + h.m * h.g;
    return d;
}

/// Polynomial ratio, coefficients in descending powers of s.
struct TransferFunction {
    std::vector<double> num;
    std::vector<double> den;

    /// Scales so that the lowest-order nonzero denominator coefficient is 1
    /// (time-constant form).
    TransferFunction normalized() const {
        double scale = 0.0;
        for (auto it = den.rbegin(); it != den.rend(); ++it) {
            if (*it != 0.0) {
                scale = *it;
                break;
            }
        }
        if (scale == 0.0) throw DomainError("transfer function has a zero denominator");
        TransferFunction out = *this;
        for (double& c : out.num) c /= scale;
        for (double& c : out.den) c /= scale;
        return out;
    }

    bool operator==(const TransferFunction&) const = default;
};

struct PlantTransfer {
    TransferFunction position;  ///< L(s)/U(s) = K / (T s^2 + s)
    TransferFunction velocity;  ///< v(s)/U(s) = K / (T s + 1)
};

inline PlantTransfer transfer_function(const PlantLTI& lti) {
    lti.validate();
    return {
        TransferFunction{{lti.K}, {lti.T, 1.0, 0.0}},
        TransferFunction{{lti.K}, {lti.T, 1.0}},
    };
}

/// Position transfer straight from the force balance, before neglecting
/// viscosity: (-k1 A / k2) / (m s^2 + (c - A^2/k2) s), output in mm.
inline TransferFunction force_balance_transfer(const HydraulicParams& h) {
    h.validate();
    return TransferFunction{
        {-h.k1 * h.A / h.k2 * kMillimetresPerMetre},
        {h.m, h.c - h.A * h.A / h.k2, 0.0},
    };
}

struct StepResponse {
    double L = 0.0;  ///< mm
    double v = 0.0;  ///< mm/s
};

/// Closed-form response from rest to a step of u volts applied at t = 0.
inline StepResponse analytic_step(const PlantLTI& lti, double u, double t) {
    if (!(t >= 0.0)) throw DomainError("analytic_step requires t >= 0");
    const double decay = -std::expm1(-t / lti.T);  // 1 - e^(-t/T)
    return {lti.K * u * (t - lti.T * decay), lti.K * u * decay};
}

}  // namespace arcplant::hydraulics
