#pragma once

// Static single-phase furnace circuit: arc length -> arc voltage, arc current
// and secondary-circuit impedance.
//
// Units: arc length in mm, beta in V/mm, everything else SI.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arcplant/errors.hpp"

namespace arcplant::arc {

enum class MeltingStage { Melting, Oxidization, Reviving };

inline constexpr double kMeltingBeta = 12.0;
inline constexpr double kOxidizationBeta = 3.7;
inline constexpr double kRevivingBeta = 1.2;

inline std::string_view to_string(MeltingStage stage) {
    switch (stage) {
        case MeltingStage::Melting: return "melting";
        case MeltingStage::Oxidization: return "oxidization";
        case MeltingStage::Reviving: return "reviving";
    }
    return "unknown";
}

inline std::optional<MeltingStage> parse_stage(std::string_view name) {
    if (name == "melting") return MeltingStage::Melting;
    if (name == "oxidization") return MeltingStage::Oxidization;
    if (name == "reviving") return MeltingStage::Reviving;
    return std::nullopt;
}

/// Arc-voltage gradient attached to a melting stage. The melting stage starts
/// at 12 V/mm and decreases during the stage, so it accepts overrides in
/// (3.7, 12]; the other two stages are fixed.
struct MeltingStagePreset {
    MeltingStage stage = MeltingStage::Melting;
    double beta = kMeltingBeta;

    static MeltingStagePreset of(MeltingStage stage) {
        switch (stage) {
            case MeltingStage::Melting: return {stage, kMeltingBeta};
            case MeltingStage::Oxidization: return {stage, kOxidizationBeta};
            case MeltingStage::Reviving: return {stage, kRevivingBeta};
        }
        return {};
    }

    static MeltingStagePreset with_override(MeltingStage stage, double beta) {
        MeltingStagePreset p{stage, beta};
        p.validate();
        return p;
    }

    void validate() const {
        const bool ok = [&] {
            switch (stage) {
                case MeltingStage::Melting: return beta > kOxidizationBeta && beta <= kMeltingBeta;
                case MeltingStage::Oxidization: return beta == kOxidizationBeta;
                case MeltingStage::Reviving: return beta == kRevivingBeta;
            }
            return false;
        }();
        if (!ok) {
            throw ConfigError("beta=" + std::to_string(beta) + " is not valid for the " +
                              std::string(to_string(stage)) + " stage");
        }
    }

    bool operator==(const MeltingStagePreset&) const = default;
};

struct TapReactance {
    double Xr = 0.0;  ///< reactor, ohms
    double XT = 0.0;  ///< furnace transformer, ohms

    bool operator==(const TapReactance&) const = default;
};

/// User-supplied tap -> (Xr, XT) table. No values ship as physical data.
class TapTable {
public:
    void add(int tap, TapReactance reactance) {
        if (tap <= 0) throw ConfigError("tap index must be a positive integer, got " + std::to_string(tap));
        if (reactance.Xr < 0.0 || reactance.XT < 0.0 || !std::isfinite(reactance.Xr) ||
            !std::isfinite(reactance.XT)) {
            throw ConfigError("tap " + std::to_string(tap) + ": reactances must be finite and >= 0");
        }
        if (!entries_.emplace(tap, reactance).second) {
            throw ConfigError("duplicate tap index " + std::to_string(tap));
        }
    }

    const TapReactance& at(int tap) const {
        auto it = entries_.find(tap);
        if (it == entries_.end()) throw ConfigError("tap " + std::to_string(tap) + " not present in tap table");
        return it->second;
    }

    bool contains(int tap) const { return entries_.count(tap) != 0; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    std::map<int, TapReactance> entries_;
};

/// Electrical constants of one furnace phase.
struct CircuitParams {
    double U1 = 0.0;          ///< primary line voltage, V (required; no default)
    double kT = 0.0;          ///< furnace transformer ratio (required)
    double Xr = 0.0;          ///< reactor reactance, ohm
    double XT = 0.0;          ///< transformer reactance, ohm
    double X2 = 3.0e-3;       ///< secondary reactance, ohm
    double R2 = 0.507e-3;     ///< secondary resistance, ohm
    double alpha = 9.0;       ///< anode-cathode drop, V
    double beta = kMeltingBeta;  ///< arc gradient, V/mm
    /// Secondary phase voltage used in Z = E2 / I. Defaults to the referred
    /// voltage E2' when unset.
    std::optional<double> E2;

    /// X = (Xr + XT) / kT^2 + X2
    double reactance() const { return (Xr + XT) / (kT * kT) + X2; }

    /// E2' = U1 / (sqrt(3) kT)
    double referred_voltage() const { return U1 / (std::sqrt(3.0) * kT); }

    double secondary_voltage() const { return E2 ? *E2 : referred_voltage(); }

    CircuitParams with_beta(double b) const {
        CircuitParams copy = *this;
        copy.beta = b;
        return copy;
    }

    CircuitParams with_taps(TapReactance r) const {
        CircuitParams copy = *this;
        copy.Xr = r.Xr;
        copy.XT = r.XT;
        return copy;
    }

    void validate() const {
        auto require = [](bool ok, const char* what) {
            if (!ok) throw ConfigError(std::string("circuit: ") + what);
        };
        require(std::isfinite(U1) && U1 > 0.0, "U1 must be > 0");
        require(std::isfinite(kT) && kT > 0.0, "kT must be > 0");
        require(std::isfinite(X2) && X2 > 0.0, "X2 must be > 0");
        // R2 = 0 is the lossless limit and stays admissible.
        require(std::isfinite(R2) && R2 >= 0.0, "R2 must be >= 0");
        require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
        require(std::isfinite(beta) && beta > 0.0, "beta must be > 0");
        require(std::isfinite(Xr) && Xr >= 0.0, "Xr must be >= 0");
        require(std::isfinite(XT) && XT >= 0.0, "XT must be >= 0");
        require(reactance() > 0.0, "total reactance must be > 0");
        require(referred_voltage() > 0.0, "referred secondary voltage must be > 0");
        if (E2) require(std::isfinite(*E2) && *E2 > 0.0, "E2 must be > 0");
    }

    bool operator==(const CircuitParams&) const = default;
};

struct ArcOperatingPoint {
    double L = 0.0;   ///< mm
    double Ua = 0.0;  ///< V
    double I = 0.0;   ///< A
    double Z = 0.0;   ///< ohm; +inf when I == 0
};

struct ArcRange {
    double L_min = 0.0;
    double L_max = 0.0;
};

inline double arc_voltage(double L, const CircuitParams& p) {
    if (!(L >= 0.0)) throw DomainError("arc length must be >= 0, got " + std::to_string(L));
    return p.beta * L + p.alpha;
}

inline ArcRange valid_arc_range(const CircuitParams& p) {
    p.validate();
    const double e2 = p.referred_voltage();
    if (e2 <= p.alpha) {
        throw DomainError("supply voltage cannot sustain any arc (E2'=" + std::to_string(e2) +
                          " V <= alpha=" + std::to_string(p.alpha) + " V)");
    }
    return {0.0, (e2 - p.alpha) / p.beta};
}

/// Positive root of E2'^2 = (Ua + I R2)^2 + (I X)^2.
///
/// Evaluated in the rationalised form
///   I = (E2'^2 - Ua^2) / (R2 Ua + sqrt((X^2 + R2^2) E2'^2 - X^2 Ua^2)),
/// which equals the textbook "(-R2 Ua + sqrt(...)) / (X^2 + R2^2)" but does
/// not cancel as I -> 0.
inline double arc_current(double L, const CircuitParams& p) {
    valid_arc_range(p);
    const double ua = arc_voltage(L, p);
    const double e2 = p.referred_voltage();
    // Rounding slack so that L == valid_arc_range(p).L_max maps to I = 0.
    if (ua > e2 * (1.0 + 1e-12)) {
        throw DomainError("arc length beyond sustainable range (L=" + std::to_string(L) + " mm)");
    }
    if (ua >= e2) return 0.0;
    const double x = p.reactance();
    const double z2 = x * x + p.R2 * p.R2;
    const double disc = z2 * e2 * e2 - x * x * ua * ua;
    if (disc < 0.0) {
        throw DomainError("arc length beyond sustainable range (L=" + std::to_string(L) + " mm)");
    }
    const double current = (e2 - ua) * (e2 + ua) / (p.R2 * ua + std::sqrt(disc));
    return current > 0.0 ? current : 0.0;
}

inline double impedance(double L, const CircuitParams& p) {
    const double current = arc_current(L, p);
    if (current <= 0.0) throw DomainError("open-arc impedance undefined (infinite)");
    return p.secondary_voltage() / current;
}

/// Full operating point; Z is +inf at the open-arc boundary instead of
/// throwing so that trajectories can carry the boundary sample.
inline ArcOperatingPoint operating_point(double L, const CircuitParams& p) {
    ArcOperatingPoint op;
    op.L = L;
    op.Ua = arc_voltage(L, p);
    op.I = arc_current(L, p);
    op.Z = op.I > 0.0 ? p.secondary_voltage() / op.I : std::numeric_limits<double>::infinity();
    return op;
}

/// Relative gap kept below L_max by the last sweep sample.
inline constexpr double kSweepEdgeGap = 1e-9;

/// n uniformly spaced points from L = 0 to just below L_max.
inline std::vector<ArcOperatingPoint> characteristic_sweep(const CircuitParams& p, std::size_t n) {
    if (n < 2) throw std::invalid_argument("characteristic_sweep needs n >= 2");
    const ArcRange range = valid_arc_range(p);
    const double top = range.L_max * (1.0 - kSweepEdgeGap);
    std::vector<ArcOperatingPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double L = i + 1 == n ? top : top * static_cast<double>(i) / static_cast<double>(n - 1);
        out.push_back(operating_point(L, p));
    }
    return out;
}

}  // namespace arcplant::arc
