#pragma once

#include <cmath>

#include "lwlab/constants.hpp"
#include "lwlab/vec3.hpp"

namespace lwlab {

/// Conversion between SI and the natural units used internally.
///
/// Internally c = 1 and the Coulomb field of a unit charge is E = 1/r^2
/// (i.e. 4*pi*eps0 = 1). A unit system is fixed by two reference scales:
/// the length unit in metres and the mass unit in kilograms. Everything
/// else follows: time L0/c, charge sqrt(4 pi eps0 M0 c^2 L0), and so on.
///
/// All conversions are plain multiplications, so a round trip loses at most
/// a few ulps.
struct UnitSystem {
    double length_m = 1.0;               // metres per natural length
    double mass_kg = si::electron_mass;  // kilograms per natural mass

    double time_s() const { return length_m / si::speed_of_light; }
    double velocity_mps() const { return si::speed_of_light; }
    double accel_mps2() const {
        return si::speed_of_light * si::speed_of_light / length_m;
    }
    double charge_coulomb() const {
        return std::sqrt(4.0 * pi * si::vacuum_permittivity * mass_kg *
                         si::speed_of_light * si::speed_of_light * length_m);
    }
    double momentum_si() const { return mass_kg * si::speed_of_light; }
    double efield_vpm() const {
        return charge_coulomb() /
               (4.0 * pi * si::vacuum_permittivity * length_m * length_m);
    }
    double bfield_tesla() const { return efield_vpm() / si::speed_of_light; }
    double energy_j() const {
        return mass_kg * si::speed_of_light * si::speed_of_light;
    }
    double power_w() const { return energy_j() / time_s(); }

    // SI -> natural
    double length_to_natural(double m) const { return m / length_m; }
    double time_to_natural(double s) const { return s / time_s(); }
    double mass_to_natural(double kg) const { return kg / mass_kg; }
    double charge_to_natural(double c) const { return c / charge_coulomb(); }
    double velocity_to_natural(double mps) const { return mps / velocity_mps(); }
    double accel_to_natural(double mps2) const { return mps2 / accel_mps2(); }
    double momentum_to_natural(double kgmps) const { return kgmps / momentum_si(); }
    double efield_to_natural(double vpm) const { return vpm / efield_vpm(); }
    double bfield_to_natural(double t) const { return t / bfield_tesla(); }
    double power_to_natural(double w) const { return w / power_w(); }

    // natural -> SI
    double length_to_si(double l) const { return l * length_m; }
    double time_to_si(double t) const { return t * time_s(); }
    double mass_to_si(double m) const { return m * mass_kg; }
    double charge_to_si(double q) const { return q * charge_coulomb(); }
    double velocity_to_si(double v) const { return v * velocity_mps(); }
    double accel_to_si(double a) const { return a * accel_mps2(); }
    double momentum_to_si(double p) const { return p * momentum_si(); }
    double efield_to_si(double e) const { return e * efield_vpm(); }
    double bfield_to_si(double b) const { return b * bfield_tesla(); }
    double power_to_si(double p) const { return p * power_w(); }

    Vec3 length_to_natural(Vec3 m) const { return m / length_m; }
    Vec3 length_to_si(Vec3 l) const { return l * length_m; }
};

/// Default laboratory system: metre lengths, electron masses.
inline UnitSystem lab_units() { return UnitSystem{}; }

}  // namespace lwlab
