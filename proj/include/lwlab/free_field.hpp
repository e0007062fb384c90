#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "lwlab/core.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/quadrature.hpp"

namespace lwlab {

/// Monochromatic plane wave, an exact source-free Maxwell solution:
///   E(x,t) = amplitude * polarization * cos(k.x - |k| t + phase)
///   B(x,t) = k_hat x E
/// polarization must be a unit vector perpendicular to k.
struct PlaneWaveSpec {
    Vec3 k{1, 0, 0};
    Vec3 polarization{0, 1, 0};
    double amplitude = 1.0;
    double phase = 0.0;
};

/// Plane-fronted pulse with Gaussian profile, also exact:
///   E(x,t) = amplitude * exp(-u^2 / (2 width^2)),  u = k_hat.(x - center) - t
///   B(x,t) = k_hat x E
/// amplitude must be perpendicular to direction.
struct GaussianPulseSpec {
    Vec3 direction{1, 0, 0};  // unit propagation direction k_hat
    Vec3 center{};            // pulse plane passes through center at t = 0
    Vec3 amplitude{0, 1, 0};
    double width = 1.0;
};

/// Cauchy data of a free field: value and time derivative at t = 0, as
/// callables. The directional derivative takes the point and the unit
/// direction along which to differentiate the t = 0 slice.
struct CauchySlice {
    std::function<EMFieldValue(const Vec3&)> value;
    std::function<EMFieldValue(const Vec3&, const Vec3&)> directional_derivative;
    std::function<EMFieldValue(const Vec3&)> time_derivative;
};

/// Free-field values and time derivatives tabulated on a uniform grid,
/// interpolated with tensor-product cubic Lagrange stencils (4 points per
/// axis; values O(h^4), gradients O(h^3)).
struct TabulatedCauchyData {
    Vec3 origin{};        // grid point (0,0,0)
    double spacing = 1.0; // uniform in all axes
    int nx = 0, ny = 0, nz = 0;
    std::vector<Vec3> E0, B0, dtE0, dtB0;

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nx) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k);
    }

    /// True if the full interpolation stencil around y lies inside the grid.
    bool covers(const Vec3& y) const {
        const double u[3] = {(y.x - origin.x) / spacing, (y.y - origin.y) / spacing,
                             (y.z - origin.z) / spacing};
        const int n[3] = {nx, ny, nz};
        for (int ax = 0; ax < 3; ++ax) {
            const int i0 = static_cast<int>(std::floor(u[ax])) - 1;
            if (i0 < 0 || i0 + 3 > n[ax] - 1) return false;
        }
        return true;
    }

    /// Sample an analytic slice over a cube centred at `center` with half
    /// edge length `half_extent`, n points per axis.
    static TabulatedCauchyData sample(const CauchySlice& slice, const Vec3& center,
                                      double half_extent, int n) {
        if (n < 4) throw RangeError("TabulatedCauchyData: need at least 4 points per axis");
        TabulatedCauchyData tab;
        tab.nx = tab.ny = tab.nz = n;
        tab.spacing = 2.0 * half_extent / (n - 1);
        tab.origin = center - Vec3{half_extent, half_extent, half_extent};
        const std::size_t total = static_cast<std::size_t>(n) * n * n;
        tab.E0.resize(total);
        tab.B0.resize(total);
        tab.dtE0.resize(total);
        tab.dtB0.resize(total);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) {
                    const Vec3 y = tab.origin + tab.spacing * Vec3{double(i), double(j), double(k)};
                    const EMFieldValue f = slice.value(y);
                    const EMFieldValue ft = slice.time_derivative(y);
                    const std::size_t idx = tab.index(i, j, k);
                    tab.E0[idx] = f.E;
                    tab.B0[idx] = f.B;
                    tab.dtE0[idx] = ft.E;
                    tab.dtB0[idx] = ft.B;
                }
        return tab;
    }

    /// Cubic Lagrange weights at fractional offset s in [0,1), stencil
    /// points at local coordinates {-1, 0, 1, 2}.
    static void lagrange_weights(double s, double w[4], double dw[4]) {
        w[0] = -(s * s * s - 3 * s * s + 2 * s) / 6.0;
        w[1] = (s * s * s - 2 * s * s - s + 2) / 2.0;
        w[2] = -(s * s * s - s * s - 2 * s) / 2.0;
        w[3] = (s * s * s - s) / 6.0;
        dw[0] = -(3 * s * s - 6 * s + 2) / 6.0;
        dw[1] = (3 * s * s - 4 * s - 1) / 2.0;
        dw[2] = -(3 * s * s - 2 * s - 2) / 2.0;
        dw[3] = (3 * s * s - 1) / 6.0;
    }

    struct Stencil {
        int i0[3];
        double w[3][4];
        double dw[3][4];
    };

    Stencil stencil_at(const Vec3& y) const {
        Stencil st;
        const double u[3] = {(y.x - origin.x) / spacing, (y.y - origin.y) / spacing,
                             (y.z - origin.z) / spacing};
        const int n[3] = {nx, ny, nz};
        for (int ax = 0; ax < 3; ++ax) {
            double fl = std::floor(u[ax]);
            int i0 = static_cast<int>(fl) - 1;
            // points exactly on the last node still need a full stencil
            if (i0 + 3 > n[ax] - 1 && u[ax] == fl) {
                i0 -= 1;
                fl -= 1.0;
            }
            if (i0 < 0 || i0 + 3 > n[ax] - 1)
                throw RangeError("TabulatedCauchyData: point outside tabulated region");
            st.i0[ax] = i0;
            lagrange_weights(u[ax] - fl, st.w[ax], st.dw[ax]);
        }
        return st;
    }

    /// Interpolated value and directional derivative (along unit n) of one
    /// tabulated array at y.
    void interpolate(const std::vector<Vec3>& arr, const Stencil& st, const Vec3& n,
                     Vec3& value, Vec3& dirderiv) const {
        value = Vec3{};
        Vec3 g0{}, g1{}, g2{};  // gradient columns: d/dx, d/dy, d/dz
        for (int c = 0; c < 4; ++c)
            for (int b = 0; b < 4; ++b)
                for (int a = 0; a < 4; ++a) {
                    const Vec3& f = arr[index(st.i0[0] + a, st.i0[1] + b, st.i0[2] + c)];
                    const double wa = st.w[0][a], wb = st.w[1][b], wc = st.w[2][c];
                    value += (wa * wb * wc) * f;
                    g0 += (st.dw[0][a] * wb * wc) * f;
                    g1 += (wa * st.dw[1][b] * wc) * f;
                    g2 += (wa * wb * st.dw[2][c]) * f;
                }
        dirderiv = (n.x * g0 + n.y * g1 + n.z * g2) / spacing;
    }

};

/// Cauchy-slice view of tabulated data. The shared_ptr keeps the table alive
/// inside the returned callables without copying it.
inline CauchySlice tabulated_slice(std::shared_ptr<const TabulatedCauchyData> tab) {
    if (!tab) throw ConfigError("free.table", "tabulated data missing");
    return CauchySlice{
        [tab](const Vec3& y) {
            const auto st = tab->stencil_at(y);
            Vec3 e, b, dummy;
            tab->interpolate(tab->E0, st, Vec3{}, e, dummy);
            tab->interpolate(tab->B0, st, Vec3{}, b, dummy);
            return EMFieldValue{e, b};
        },
        [tab](const Vec3& y, const Vec3& n) {
            const auto st = tab->stencil_at(y);
            Vec3 e, b, de, db;
            tab->interpolate(tab->E0, st, n, e, de);
            tab->interpolate(tab->B0, st, n, b, db);
            return EMFieldValue{de, db};
        },
        [tab](const Vec3& y) {
            const auto st = tab->stencil_at(y);
            Vec3 e, b, dummy;
            tab->interpolate(tab->dtE0, st, Vec3{}, e, dummy);
            tab->interpolate(tab->dtB0, st, Vec3{}, b, dummy);
            return EMFieldValue{e, b};
        }};
}

/// Kirchhoff propagation of Cauchy data to (x, t): with r = |t| and M[.] the
/// mean over the sphere of radius r around x,
///   f(x,t) = M[f0] + r * M[n.grad f0] + t * M[dt f0].
/// Exact for solutions of the componentwise wave equation, which free Maxwell
/// fields satisfy. The sphere mean uses a product Gauss rule of the given
/// polar order; for smooth data convergence in the order is spectral.
inline EMFieldValue kirchhoff_propagate(const CauchySlice& slice, const Vec3& x,
                                        double t, int sphere_order = 24) {
    if (t == 0.0) return slice.value(x);
    const double r = std::abs(t);
    const SphereRule rule = SphereRule::product_gauss(sphere_order);
    EMFieldValue acc{};
    for (std::size_t k = 0; k < rule.dirs.size(); ++k) {
        const Vec3& n = rule.dirs[k];
        const Vec3 y = x + r * n;
        EMFieldValue term = slice.value(y);
        term += r * slice.directional_derivative(y, n);
        term += t * slice.time_derivative(y);
        acc += (rule.weights[k] / (4.0 * pi)) * term;
    }
    return acc;
}

/// Source-free contribution to a field configuration.
struct FreeFieldSpec {
    enum class Kind { Zero, PlaneWave, GaussianPulse, Tabulated };

    Kind kind = Kind::Zero;
    PlaneWaveSpec plane;
    GaussianPulseSpec gaussian;
    std::shared_ptr<const TabulatedCauchyData> table;

    /// Debug switch: route analytic kinds through Kirchhoff quadrature
    /// instead of their closed forms (used to validate the propagator).
    bool force_quadrature = false;
    int quadrature_order = 24;

    static FreeFieldSpec zero() { return {}; }

    static FreeFieldSpec plane_wave(const Vec3& k, const Vec3& polarization,
                                    double amplitude, double phase = 0.0) {
        if (norm(k) == 0.0) throw ConfigError("free.k", "wave vector must be nonzero");
        if (std::abs(dot(k, polarization)) > 1e-12 * norm(k) * norm(polarization))
            throw ConfigError("free.polarization", "must be perpendicular to k");
        FreeFieldSpec s;
        s.kind = Kind::PlaneWave;
        s.plane = {k, normalized(polarization), amplitude, phase};
        return s;
    }

    static FreeFieldSpec gaussian_pulse(const Vec3& direction, const Vec3& center,
                                        const Vec3& amplitude, double width) {
        if (norm(direction) == 0.0)
            throw ConfigError("free.direction", "must be nonzero");
        if (std::abs(dot(direction, amplitude)) >
            1e-12 * norm(direction) * (norm(amplitude) + 1e-300))
            throw ConfigError("free.amplitude", "must be perpendicular to direction");
        if (!(width > 0.0)) throw ConfigError("free.width", "must be positive");
        FreeFieldSpec s;
        s.kind = Kind::GaussianPulse;
        s.gaussian = {normalized(direction), center, amplitude, width};
        return s;
    }

    static FreeFieldSpec tabulated(std::shared_ptr<const TabulatedCauchyData> table) {
        FreeFieldSpec s;
        s.kind = Kind::Tabulated;
        s.table = std::move(table);
        return s;
    }
};

inline EMFieldValue plane_wave_value(const PlaneWaveSpec& w, const Vec3& x, double t) {
    const double omega = norm(w.k);
    const double c = w.amplitude * std::cos(dot(w.k, x) - omega * t + w.phase);
    EMFieldValue f;
    f.E = c * w.polarization;
    f.B = cross(w.k / omega, f.E);
    return f;
}

inline CauchySlice plane_wave_slice(const PlaneWaveSpec& w) {
    const double omega = norm(w.k);
    const Vec3 khat = w.k / omega;
    return CauchySlice{
        [w](const Vec3& y) { return plane_wave_value(w, y, 0.0); },
        [w, khat](const Vec3& y, const Vec3& n) {
            const double s = -w.amplitude * std::sin(dot(w.k, y) + w.phase) * dot(w.k, n);
            EMFieldValue f;
            f.E = s * w.polarization;
            f.B = cross(khat, f.E);
            return f;
        },
        [w, omega, khat](const Vec3& y) {
            const double s = w.amplitude * omega * std::sin(dot(w.k, y) + w.phase);
            EMFieldValue f;
            f.E = s * w.polarization;
            f.B = cross(khat, f.E);
            return f;
        }};
}

inline EMFieldValue gaussian_pulse_value(const GaussianPulseSpec& g, const Vec3& x,
                                         double t) {
    const double u = dot(g.direction, x - g.center) - t;
    const double c = std::exp(-u * u / (2.0 * g.width * g.width));
    EMFieldValue f;
    f.E = c * g.amplitude;
    f.B = cross(g.direction, f.E);
    return f;
}

inline CauchySlice gaussian_pulse_slice(const GaussianPulseSpec& g) {
    auto profile_prime = [g](double u) {
        return -u / (g.width * g.width) * std::exp(-u * u / (2.0 * g.width * g.width));
    };
    return CauchySlice{
        [g](const Vec3& y) { return gaussian_pulse_value(g, y, 0.0); },
        [g, profile_prime](const Vec3& y, const Vec3& n) {
            const double u = dot(g.direction, y - g.center);
            const double s = profile_prime(u) * dot(g.direction, n);
            EMFieldValue f;
            f.E = s * g.amplitude;
            f.B = cross(g.direction, f.E);
            return f;
        },
        [g, profile_prime](const Vec3& y) {
            const double u = dot(g.direction, y - g.center);
            const double s = -profile_prime(u);
            EMFieldValue f;
            f.E = s * g.amplitude;
            f.B = cross(g.direction, f.E);
            return f;
        }};
}

/// Value of the free field at (x, t). Analytic kinds use their closed forms
/// unless force_quadrature routes them through kirchhoff_propagate; tabulated
/// data is always propagated by quadrature and throws RangeError if the
/// Kirchhoff sphere leaves the tabulated region.
inline EMFieldValue propagate_free_field(const FreeFieldSpec& spec, const Vec3& x,
                                         double t) {
    switch (spec.kind) {
        case FreeFieldSpec::Kind::Zero:
            return EMFieldValue{};
        case FreeFieldSpec::Kind::PlaneWave:
            if (spec.force_quadrature)
                return kirchhoff_propagate(plane_wave_slice(spec.plane), x, t,
                                           spec.quadrature_order);
            return plane_wave_value(spec.plane, x, t);
        case FreeFieldSpec::Kind::GaussianPulse:
            if (spec.force_quadrature)
                return kirchhoff_propagate(gaussian_pulse_slice(spec.gaussian), x, t,
                                           spec.quadrature_order);
            return gaussian_pulse_value(spec.gaussian, x, t);
        case FreeFieldSpec::Kind::Tabulated:
            return kirchhoff_propagate(tabulated_slice(spec.table), x, t,
                                       spec.quadrature_order);
    }
    throw Error("propagate_free_field: unknown kind");
}

}  // namespace lwlab
