#pragma once

namespace lwlab {

inline constexpr const char* version_string = "0.1.0";

/// SI values (CODATA 2018, exact where the SI defines them so).
namespace si {
inline constexpr double speed_of_light = 299792458.0;           // m/s, exact
inline constexpr double elementary_charge = 1.602176634e-19;    // C, exact
inline constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
inline constexpr double electron_mass = 9.1093837015e-31;       // kg
}  // namespace si

inline constexpr double pi = 3.14159265358979323846;

/// Pinned numerical tolerances. Every comparison a correctness claim rests on
/// uses one of these; tests reference the same constants instead of ad-hoc
/// literals so the contract lives in exactly one place.
namespace tol {
/// Absolute tolerance on the light-cone time root (in time units).
inline constexpr double lightcone_time = 1e-12;
/// Residual |t - s -/+ |x-q(s)|| accepted for a light-cone solve, scaled by (1+|t|).
inline constexpr double lightcone_residual = 1e-10;
/// Relative tolerance target for adaptive/fixed quadratures.
inline constexpr double quadrature_rel = 1e-8;
/// Half-width of the band around |x-q0| = |t| inside which a field sample
/// reports the singular-shell terms.
inline constexpr double shell_band = 1e-9;
/// Speeds are kept below 1 - velocity_margin.
inline constexpr double velocity_margin = 1e-9;
/// Position/momentum gap below which shell coefficients are considered cancelled.
inline constexpr double c1_gap = 1e-12;
/// Base tolerance for matching one-sided trajectory derivatives at t = 0,
/// scaled by (1 + magnitude of the derivatives involved).
inline constexpr double c2_match = 1e-6;
/// Node-to-node continuity required when splicing histories.
inline constexpr double history_continuity = 1e-12;
/// Relative round-trip error allowed through unit conversion.
inline constexpr double unit_roundtrip = 1e-12;
}  // namespace tol

}  // namespace lwlab
