#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lwlab/config.hpp"

// Canned experiments: the three-region Coulomb-front dataset, the quantitative
// two-cloud radiation estimate, and the two-body dynamics presets.

namespace lwlab {

namespace detail {

/// Twelve well-spread unit vectors (icosahedron vertices).
inline const std::array<Vec3, 12>& sphere12() {
    static const std::array<Vec3, 12> dirs = [] {
        const double phi = 0.5 * (1.0 + std::sqrt(5.0));
        const double s = 1.0 / std::sqrt(1.0 + phi * phi);
        std::array<Vec3, 12> d{};
        int k = 0;
        for (double a : {-1.0, 1.0})
            for (double b : {-phi, phi}) {
                d[k++] = s * Vec3{a, b, 0.0};
                d[k++] = s * Vec3{0.0, a, b};
                d[k++] = s * Vec3{b, 0.0, a};
            }
        return d;
    }();
    return dirs;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Coulomb front: a single charge whose initial field is the static Coulomb
// field, so the expanding ball separates the new light-cone field from the
// old Coulomb exterior, with the mismatch carried by the front shells.

struct CoulombFrontOptions {
    Vec3 p0{0.5, 0.0, 0.0};  // actual momentum; 0 makes the dataset pure Coulomb
    double mass = 1.0;
    std::vector<double> times{0.5, 1.0, 1.5};
    int n_per_axis = 9;
    double half_extent = 2.0;
    int threads = 1;
};

struct ShellSampleRow {
    double t = 0.0;
    Vec3 x;
    EMFieldValue actual_coeff;  // shell carried by the actual trajectory
    EMFieldValue aux_coeff;     // shell carried by the auxiliary (Coulomb) data
    EMFieldValue net;
};

struct CoulombFrontData {
    std::shared_ptr<const TrajectoryHistory> actual;
    InitialFieldSpec init;
    std::vector<FieldRow> rows;
    std::vector<ShellSampleRow> shell_report;
};

inline CoulombFrontData scenario_coulomb_front(const CoulombFrontOptions& opts = {}) {
    CoulombFrontData out;
    auto actual = std::make_shared<TrajectoryHistory>(
        TrajectoryHistory::uniform(Vec3{}, opts.p0, opts.mass));
    auto aux = std::make_shared<TrajectoryHistory>(
        TrajectoryHistory::at_rest(Vec3{}, opts.mass));
    out.actual = actual;
    out.init = InitialFieldSpec::from_trajectory(aux);

    const Vec3 h{opts.half_extent, opts.half_extent, opts.half_extent};
    const GridSpec grid = GridSpec::box(-1.0 * h, h, opts.n_per_axis, opts.n_per_axis,
                                        opts.n_per_axis, opts.times);
    EvalOptions eo;
    eo.throw_on_front = false;
    out.rows = evaluate_field_grid(*actual, out.init, grid, eo, opts.threads);

    for (double t : opts.times) {
        for (const Vec3& dir : detail::sphere12()) {
            const Vec3 x = std::abs(t) * dir;  // on the front sphere around q0 = 0
            const FieldSample sample = evaluate_field(*actual, out.init, x, t, eo);
            ShellSampleRow row;
            row.t = t;
            row.x = x;
            for (const auto& [sh, c] : sample.shells) {
                (sh.strength > 0.0 ? row.actual_coeff : row.aux_coeff) += c;
                row.net += c;
            }
            out.shell_report.push_back(row);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Quantitative example: two collimated electron clouds (Z elementary charges
// each); cloud 1 kicked to a large initial acceleration, cloud 2 at distance d
// drifting slowly. Reports the field carried by cloud 1's front at cloud 2,
// the resulting acceleration, the radiated power step, and the rise time set
// by the cloud diameter.

struct PaperExampleOptions {
    double Z = 1e13;            // elementary charges per cloud
    double a1_si = 1e17;        // |initial acceleration of cloud 1|, m/s^2
    double distance_si = 1e2;   // separation, m
    double diameter_si = 1e-2;  // cloud diameter, m
    double v2_si = 1e4;         // |drift velocity of cloud 2|, m/s
};

struct PaperExampleReport {
    // direct SI arithmetic
    double E1x_si = 0.0;        // x-component of cloud 1's field at cloud 2, V/m
    double a2x_si = 0.0;        // induced acceleration, m/s^2
    double P2_si = 0.0;         // radiated-power step, W
    double rise_time_si = 0.0;  // diameter / drift speed, s
    double t_star_si = 0.0;     // front arrival time, s
    // same pipeline through natural units and back (round-trip check)
    double E1x_cross = 0.0;
    double a2x_cross = 0.0;
    double P2_cross = 0.0;
};

inline PaperExampleReport scenario_paper_example(const PaperExampleOptions& o = {}) {
    PaperExampleReport r;
    const double e = si::elementary_charge;
    const double me = si::electron_mass;
    const double c = si::speed_of_light;
    const double eps0 = si::vacuum_permittivity;

    r.E1x_si = (e * o.Z / (4.0 * pi * eps0)) * (-o.a1_si) / (c * c * o.distance_si);
    r.a2x_si = (e / me) * r.E1x_si;
    r.P2_si = (2.0 / 3.0) * (o.Z * o.Z * e * e) * (r.a2x_si * r.a2x_si) /
              (6.0 * pi * eps0 * c * c * c);
    r.rise_time_si = o.diameter_si / o.v2_si;
    r.t_star_si = o.distance_si / c;

    const UnitSystem U = lab_units();
    const double qZ = U.charge_to_natural(o.Z * e);
    const double a1 = U.accel_to_natural(o.a1_si);
    const double d = U.length_to_natural(o.distance_si);
    const double E1 = qZ * (-a1) / d;  // c = 1, 4 pi eps0 = 1
    r.E1x_cross = U.efield_to_si(E1);
    const double a2 = (U.charge_to_natural(e) / U.mass_to_natural(me)) * E1;
    r.a2x_cross = U.accel_to_si(a2);
    // SI Larmor q^2 a^2 / (6 pi eps0 c^3) reads (2/3) q^2 a^2 here, and the
    // power step carries a further 2/3
    r.P2_cross = U.power_to_si((2.0 / 3.0) * (2.0 / 3.0) * qZ * qZ * a2 * a2);
    return r;
}

// ---------------------------------------------------------------------------
// Two-body presets.

enum class TwoBodyPreset { RetardedLine, FSTWindow };

struct TwoBodyOptions {
    bool adapt = false;        // RetardedLine: splice the initial field first
    bool force_trace = false;  // RetardedLine: smeared force scan across the front
    double smear_diameter = 0.01;
};

struct ForceTraceRow {
    double t = 0.0;
    Vec3 force;
};

struct TwoBodyData {
    RunSetup setup;
    SimulationArtifacts artifacts;
    std::vector<ForceTraceRow> force_trace;
    std::optional<SelfConsistentAdaptResult> adapt_result;
};

/// Charge 1 launched at v ~ 0.2 towards a resting charge 2 one unit away,
/// with a resting-Coulomb initial field: (C1) fails, so charge 2 meets a
/// genuine singular front at t* ~ the initial distance.
inline Json retarded_line_config() {
    return Json{
        {"units", "natural"},
        {"horizon", 2.0},
        {"lambda", 1.0},
        {"integrator", Json{{"step", 1e-3}, {"min_separation", 2e-3}}},
        {"charges",
         Json::array(
             {Json{{"m", 1.0},
                   {"e", 0.05},
                   {"q0", {0.0, 0.0, 0.0}},
                   {"p0", {0.2, 0.0, 0.0}},
                   {"initial_field", Json{{"aux", Json{{"kind", "rest"}}}}}},
              Json{{"m", 1.0}, {"e", 0.05}, {"q0", {1.0, 0.0, 0.0}}}})}};
}

/// Symmetric pair at rest in the deep past, solved on [-T, T] with the
/// half-retarded half-advanced coupling by waveform relaxation.
inline Json fst_window_config() {
    return Json{
        {"units", "natural"},
        {"horizon", 0.75},
        {"lambda", 0.5},
        {"integrator", Json{{"step", 5e-3}, {"min_separation", 1e-2}}},
        {"charges",
         Json::array({Json{{"m", 1.0},
                           {"e", 0.1},
                           {"q0", {-0.5, 0.0, 0.0}},
                           {"stripe", Json{{"kind", "rest"}}}},
                      Json{{"m", 1.0},
                           {"e", 0.1},
                           {"q0", {0.5, 0.0, 0.0}},
                           {"stripe", Json{{"kind", "rest"}}}}})}};
}

/// Smeared force on a resting probe at x2 from the RetardedLine charge-1
/// field, scanned across the front arrival; the singular step is resolved
/// into a rise of width ~ diameter(rho).
inline std::vector<ForceTraceRow> front_force_trace(double diameter, const Vec3& x2,
                                                    double e1e2 = 1.0) {
    const double R = 0.5 * diameter;
    const Mollifier rho(R, 1.0);
    auto actual = std::make_shared<TrajectoryHistory>(
        TrajectoryHistory::uniform(Vec3{}, Vec3{0.2, 0.0, 0.0}, 1.0));
    auto aux = std::make_shared<TrajectoryHistory>(TrajectoryHistory::at_rest(Vec3{}, 1.0));
    const InitialFieldSpec init = InitialFieldSpec::from_trajectory(aux);

    const double t_star = norm(x2);  // static probe: front arrives at the distance
    const double half_span = 3.0 * diameter;
    const double dt = R / 8.0;
    std::vector<ForceTraceRow> rows;
    for (double t = t_star - half_span; t <= t_star + half_span + 0.5 * dt; t += dt) {
        const EMFieldValue f = smeared_field(*actual, init, rho, x2, t);
        rows.push_back({t, e1e2 * f.E});  // probe at rest: force = e E
    }
    return rows;
}

inline TwoBodyData scenario_two_body(TwoBodyPreset preset,
                                     const TwoBodyOptions& opts = {}) {
    TwoBodyData out;
    const Json doc = preset == TwoBodyPreset::RetardedLine ? retarded_line_config()
                                                           : fst_window_config();
    out.setup = parse_config(doc);

    if (preset == TwoBodyPreset::RetardedLine && opts.adapt) {
        out.adapt_result = adapt_initial_fields(out.setup.system, out.setup.stripes,
                                                out.setup.inits);
        out.setup.inits = out.adapt_result->inits;
        IntegrationResult res = integrate_retarded(out.setup.system, out.setup.stripes,
                                                   out.setup.inits, out.setup.horizon);
        out.artifacts.histories = std::move(res.histories);
        out.artifacts.events = std::move(res.events);
        out.artifacts.halted = res.halted;
        out.artifacts.halt_reason = res.halt_reason;
        out.artifacts.halt_time = res.halt_time;
    } else {
        out.artifacts = run_simulation(out.setup);
    }

    if (preset == TwoBodyPreset::RetardedLine && opts.force_trace)
        out.force_trace = front_force_trace(opts.smear_diameter, Vec3{1.0, 0.0, 0.0});
    return out;
}

// ---------------------------------------------------------------------------
// Registry.

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"coulomb-front", "paper-example",
                                                "retarded-line", "fst-window"};
    return names;
}

inline Json scenario_manifest(const Json& doc) {
    Json m;
    m["version"] = version_string;
    m["config_sha"] = config_hash(doc);
    m["tolerances"] = manifest_json(RunSetup{})["tolerances"];
    return m;
}

inline void run_scenario_to_directory(const std::string& name,
                                      const std::string& out_dir,
                                      bool si_units = false, int threads = 1) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    if (name == "coulomb-front") {
        CoulombFrontOptions copts;
        copts.threads = threads;
        CoulombFrontData data = scenario_coulomb_front(copts);
        {
            std::ofstream os(fs::path(out_dir) / "field_grid.csv");
            write_field_rows_csv(os, data.rows);
        }
        {
            std::ofstream os(fs::path(out_dir) / "shells.csv");
            os << "t,x,y,z,actual_Ex,actual_Ey,actual_Ez,actual_Bx,actual_By,actual_Bz,"
                  "aux_Ex,aux_Ey,aux_Ez,aux_Bx,aux_By,aux_Bz,"
                  "net_Ex,net_Ey,net_Ez,net_Bx,net_By,net_Bz\n";
            for (const ShellSampleRow& r : data.shell_report) {
                os << format_g17(r.t) << ',' << format_g17(r.x.x) << ','
                   << format_g17(r.x.y) << ',' << format_g17(r.x.z);
                for (const EMFieldValue* f : {&r.actual_coeff, &r.aux_coeff, &r.net})
                    for (double v : {f->E.x, f->E.y, f->E.z, f->B.x, f->B.y, f->B.z})
                        os << ',' << format_g17(v);
                os << '\n';
            }
        }
        std::ofstream os(fs::path(out_dir) / "manifest.json");
        os << scenario_manifest(Json{{"scenario", name}}).dump(2) << '\n';
        return;
    }

    if (name == "paper-example") {
        const PaperExampleReport r = scenario_paper_example();
        Json doc{{"E1x_si", r.E1x_si},
                 {"a2x_si", r.a2x_si},
                 {"P2_si", r.P2_si},
                 {"rise_time_si", r.rise_time_si},
                 {"t_star_si", r.t_star_si},
                 {"E1x_cross", r.E1x_cross},
                 {"a2x_cross", r.a2x_cross},
                 {"P2_cross", r.P2_cross}};
        std::ofstream os(fs::path(out_dir) / "report.json");
        os << doc.dump(2) << '\n';
        std::ofstream ms(fs::path(out_dir) / "manifest.json");
        ms << scenario_manifest(Json{{"scenario", name}}).dump(2) << '\n';
        return;
    }

    if (name == "retarded-line" || name == "fst-window") {
        TwoBodyOptions topts;
        topts.force_trace = (name == "retarded-line");
        TwoBodyData data = scenario_two_body(name == "retarded-line"
                                                 ? TwoBodyPreset::RetardedLine
                                                 : TwoBodyPreset::FSTWindow,
                                             topts);
        data.setup.si_units = si_units;
        write_simulation_outputs(data.artifacts, data.setup, out_dir);
        if (!data.force_trace.empty()) {
            std::ofstream os(fs::path(out_dir) / "force_trace.csv");
            os << "t,Fx,Fy,Fz\n";
            for (const ForceTraceRow& r : data.force_trace)
                os << format_g17(r.t) << ',' << format_g17(r.force.x) << ','
                   << format_g17(r.force.y) << ',' << format_g17(r.force.z) << '\n';
        }
        return;
    }

    throw ConfigError("scenario", "unknown scenario '" + name + "'");
}

}  // namespace lwlab
