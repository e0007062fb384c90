#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "lwlab/compatibility.hpp"
#include "lwlab/constants.hpp"
#include "lwlab/dynamics.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/grid.hpp"
#include "lwlab/io.hpp"
#include "lwlab/units.hpp"

// JSON run configuration: parsing with key-path error messages, solver
// selection, and the run outputs (trajectory CSVs, events JSON, manifest)
// shared by the command-line driver and the canned scenarios.

namespace lwlab {

using Json = nlohmann::json;

namespace cfgdetail {

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(path.empty() ? key : path + "." + key, "missing required key");
    return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline double number_or(const Json& parent, const std::string& key, const std::string& path,
                        double fallback) {
    if (!parent.is_object() || !parent.contains(key)) return fallback;
    return number(parent.at(key), path + "." + key);
}

inline Vec3 vec3_of(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(path, "expected [x, y, z]");
    return Vec3{number(j.at(0), path + "[0]"), number(j.at(1), path + "[1]"),
                number(j.at(2), path + "[2]")};
}

inline Vec3 vec3_or(const Json& parent, const std::string& key, const std::string& path,
                    const Vec3& fallback) {
    if (!parent.is_object() || !parent.contains(key)) return fallback;
    return vec3_of(parent.at(key), path + "." + key);
}

inline std::string string_of(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

}  // namespace cfgdetail

struct RunSetup {
    bool si_units = false;
    UnitSystem units = lab_units();
    SystemConfig system;
    std::vector<std::shared_ptr<const TrajectoryHistory>> stripes;
    std::vector<InitialFieldSpec> inits;
    double horizon = 1.0;
    double t_start = 0.0;  // stripe end time: 0 when marching, -horizon when relaxing
    bool use_relaxation = false;
    std::optional<GridSpec> grid;
    int check_order = 1;
    Json document;  // parsed configuration, for hashing and provenance
};

namespace cfgdetail {

inline FreeFieldSpec parse_free(const Json& j, const std::string& path) {
    const std::string kind = string_of(require(j, "kind", path), path + ".kind");
    if (kind == "zero") return FreeFieldSpec::zero();
    if (kind == "plane_wave")
        return FreeFieldSpec::plane_wave(
            vec3_of(require(j, "k", path), path + ".k"),
            vec3_of(require(j, "polarization", path), path + ".polarization"),
            number(require(j, "amplitude", path), path + ".amplitude"),
            number_or(j, "phase", path, 0.0));
    if (kind == "gaussian_pulse")
        return FreeFieldSpec::gaussian_pulse(
            vec3_of(require(j, "direction", path), path + ".direction"),
            vec3_or(j, "center", path, Vec3{}),
            vec3_of(require(j, "amplitude", path), path + ".amplitude"),
            number(require(j, "width", path), path + ".width"));
    throw ConfigError(path + ".kind", "unknown free-field kind '" + kind + "'");
}

inline std::shared_ptr<const TrajectoryHistory> build_stripe(
    const Json& spec, const std::string& path, double t_start, const Vec3& q0,
    const Vec3& p0, double mass) {
    std::string kind = "inertial";
    if (spec.is_object() && spec.contains("kind"))
        kind = string_of(spec.at("kind"), path + ".kind");
    if (kind == "csv") {
        const std::string file =
            string_of(require(spec, "path", path), path + ".path");
        std::ifstream is(file);
        if (!is) throw ConfigError(path + ".path", "cannot open '" + file + "'");
        TrajectoryHistory tr = read_trajectory_csv(is, mass);
        if (std::abs(tr.t_max() - t_start) > 1e-9 * (1.0 + std::abs(t_start)))
            throw ConfigError(path + ".path",
                              "stripe must end at the run start time");
        return std::make_shared<TrajectoryHistory>(std::move(tr));
    }
    TrajectoryHistory tr(mass);
    if (kind == "rest") {
        tr.append(t_start, q0, Vec3{}, Vec3{});
        tr.past = Extension::frozen();
        tr.future = Extension::frozen();
    } else if (kind == "inertial") {
        tr.append(t_start, q0, p0, Vec3{});
        tr.past = Extension::inertial();
        tr.future = Extension::inertial();
    } else {
        throw ConfigError(path + ".kind", "unknown stripe kind '" + kind + "'");
    }
    return std::make_shared<TrajectoryHistory>(std::move(tr));
}

}  // namespace cfgdetail

/// Parse a configuration document. SI configs are converted to natural units
/// on load (free fields are natural-only).
inline RunSetup parse_config(const Json& doc) {
    using namespace cfgdetail;
    if (!doc.is_object()) throw ConfigError("config", "top level must be an object");
    RunSetup setup;
    setup.document = doc;

    if (doc.contains("units")) {
        const std::string u = string_of(doc.at("units"), "units");
        if (u == "si")
            setup.si_units = true;
        else if (u != "natural")
            throw ConfigError("units", "expected 'natural' or 'si'");
    }
    const UnitSystem& U = setup.units;
    auto in_len = [&](double v) { return setup.si_units ? U.length_to_natural(v) : v; };
    auto in_time = [&](double v) { return setup.si_units ? U.time_to_natural(v) : v; };
    auto in_vec_len = [&](const Vec3& v) {
        return setup.si_units ? U.length_to_natural(v) : v;
    };

    setup.horizon = number(require(doc, "horizon", ""), "horizon");
    setup.horizon = in_time(setup.horizon);
    if (!(setup.horizon > 0.0)) throw ConfigError("horizon", "must be positive");

    SystemConfig& sys = setup.system;
    sys.lambda = number_or(doc, "lambda", "", 1.0);
    if (!(sys.lambda >= 0.0 && sys.lambda <= 1.0))
        throw ConfigError("lambda", "must lie in [0, 1]");

    if (doc.contains("self_force")) {
        const std::string s = string_of(doc.at("self_force"), "self_force");
        if (s == "none")
            sys.self_force = SelfForceModel::None;
        else if (s == "ald")
            sys.self_force = SelfForceModel::AbrahamLorentzDirac;
        else
            throw ConfigError("self_force", "expected 'none' or 'ald'");
    }

    if (doc.contains("rho")) {
        const Json& r = doc.at("rho");
        double radius = number(require(r, "radius", "rho"), "rho.radius");
        radius = in_len(radius);
        const double total = number_or(r, "total_charge", "rho", 1.0);
        if (!(radius > 0.0)) throw ConfigError("rho.radius", "must be positive");
        sys.rho.emplace(radius, total);
    }

    if (doc.contains("integrator")) {
        const Json& ig = doc.at("integrator");
        sys.integrator.step =
            in_time(number_or(ig, "step", "integrator", sys.integrator.step));
        sys.integrator.min_separation = in_len(number_or(
            ig, "min_separation", "integrator", sys.integrator.min_separation));
        if (ig.contains("max_steps"))
            sys.integrator.max_steps =
                static_cast<long>(number(ig.at("max_steps"), "integrator.max_steps"));
    }

    const Json& charges = require(doc, "charges", "");
    if (!charges.is_array() || charges.empty())
        throw ConfigError("charges", "expected a non-empty array");
    const int n = static_cast<int>(charges.size());

    if (doc.contains("coupling")) {
        const Json& cj = doc.at("coupling");
        if (cj.is_string()) {
            const std::string s = cj.get<std::string>();
            if (s == "no_self")
                sys.coupling = CouplingMatrix::no_self(n);
            else if (s == "full")
                sys.coupling = CouplingMatrix::full(n);
            else
                throw ConfigError("coupling", "expected 'no_self', 'full', or a matrix");
        } else if (cj.is_array()) {
            if (static_cast<int>(cj.size()) != n)
                throw ConfigError("coupling", "matrix must be n x n");
            CouplingMatrix m(n);
            for (int i = 0; i < n; ++i) {
                const Json& row = cj.at(i);
                if (!row.is_array() || static_cast<int>(row.size()) != n)
                    throw ConfigError("coupling[" + std::to_string(i) + "]",
                                      "matrix must be n x n");
                for (int j = 0; j < n; ++j)
                    m.at(i, j) = number(row.at(j), "coupling[" + std::to_string(i) +
                                                       "][" + std::to_string(j) + "]");
            }
            sys.coupling = std::move(m);
        } else {
            throw ConfigError("coupling", "expected 'no_self', 'full', or a matrix");
        }
    } else {
        sys.coupling = CouplingMatrix::no_self(n);
    }

    // lambda = 1 without self-coupling marches causally; anything else is a
    // windowed boundary-value solve
    setup.use_relaxation = sys.lambda != 1.0 || sys.coupling.has_self_coupling();
    setup.t_start = setup.use_relaxation ? -setup.horizon : 0.0;

    for (int i = 0; i < n; ++i) {
        const std::string path = "charges[" + std::to_string(i) + "]";
        const Json& cj = charges.at(i);
        double mass = number(require(cj, "m", path), path + ".m");
        double charge = number(require(cj, "e", path), path + ".e");
        Vec3 q0 = vec3_of(require(cj, "q0", path), path + ".q0");
        Vec3 p0 = vec3_or(cj, "p0", path, Vec3{});
        if (setup.si_units) {
            mass = U.mass_to_natural(mass);
            charge = U.charge_to_natural(charge);
            q0 = U.length_to_natural(q0);
            p0 = p0 / U.momentum_si();
        }
        if (!(mass > 0.0)) throw ConfigError(path + ".m", "must be positive");
        sys.masses.push_back(mass);
        sys.charges.push_back(charge);

        const Json stripe_spec = cj.contains("stripe") ? cj.at("stripe") : Json::object();
        auto stripe = cfgdetail::build_stripe(stripe_spec, path + ".stripe",
                                              setup.t_start, q0, p0, mass);
        setup.stripes.push_back(stripe);

        double lam = sys.lambda;
        FreeFieldSpec free = FreeFieldSpec::zero();
        std::shared_ptr<const TrajectoryHistory> aux = stripe;
        if (cj.contains("initial_field")) {
            const Json& f = cj.at("initial_field");
            const std::string fpath = path + ".initial_field";
            lam = number_or(f, "lambda", fpath, lam);
            if (f.contains("free")) {
                if (setup.si_units)
                    throw ConfigError(fpath + ".free",
                                      "free fields are supported in natural units only");
                free = parse_free(f.at("free"), fpath + ".free");
            }
            if (f.contains("aux")) {
                const Json& a = f.at("aux");
                if (a.is_string()) {
                    if (a.get<std::string>() != "stripe")
                        throw ConfigError(fpath + ".aux",
                                          "expected 'stripe' or an object");
                } else {
                    const bool is_csv = a.is_object() && a.contains("kind") &&
                                        a.at("kind").is_string() &&
                                        a.at("kind").get<std::string>() == "csv";
                    if (is_csv && setup.si_units)
                        throw ConfigError(fpath + ".aux",
                                          "csv aux requires natural units");
                    Vec3 aq = q0;  // defaults are already in natural units
                    Vec3 ap{};
                    if (a.contains("q0"))
                        aq = in_vec_len(vec3_of(a.at("q0"), fpath + ".aux.q0"));
                    if (a.contains("p0")) {
                        ap = vec3_of(a.at("p0"), fpath + ".aux.p0");
                        if (setup.si_units) ap = ap / U.momentum_si();
                    }
                    aux = cfgdetail::build_stripe(a, fpath + ".aux", setup.t_start, aq,
                                                  ap, mass);
                }
            }
        }
        setup.inits.push_back(
            InitialFieldSpec::from_trajectory(aux, lam, free, setup.t_start));
    }

    if (doc.contains("grid")) {
        const Json& g = doc.at("grid");
        std::vector<double> times;
        for (const Json& t : require(g, "times", "grid"))
            times.push_back(in_time(number(t, "grid.times[]")));
        if (g.contains("points")) {
            std::vector<Vec3> pts;
            for (const Json& p : g.at("points"))
                pts.push_back(in_vec_len(vec3_of(p, "grid.points[]")));
            setup.grid = GridSpec::list(std::move(pts), std::move(times));
        } else if (g.contains("box")) {
            const Json& b = g.at("box");
            const Vec3 lo = in_vec_len(vec3_of(require(b, "lo", "grid.box"), "grid.box.lo"));
            const Vec3 hi = in_vec_len(vec3_of(require(b, "hi", "grid.box"), "grid.box.hi"));
            const Json& nn = require(b, "n", "grid.box");
            if (!nn.is_array() || nn.size() != 3)
                throw ConfigError("grid.box.n", "expected [nx, ny, nz]");
            setup.grid = GridSpec::box(lo, hi, static_cast<int>(nn.at(0).get<double>()),
                                       static_cast<int>(nn.at(1).get<double>()),
                                       static_cast<int>(nn.at(2).get<double>()),
                                       std::move(times));
        } else {
            throw ConfigError("grid", "expected 'points' or 'box'");
        }
    }

    if (doc.contains("check_order"))
        setup.check_order =
            static_cast<int>(number(doc.at("check_order"), "check_order"));

    sys.free_fields.clear();  // free fields ride on the per-charge initial specs
    setup.system.validate();
    return setup;
}

inline RunSetup load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config", "cannot open '" + path + "'");
    Json doc;
    try {
        is >> doc;
    } catch (const std::exception& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

struct SimulationArtifacts {
    std::vector<TrajectoryHistory> histories;
    std::vector<FrontEvent> events;
    bool halted = false;
    std::string halt_reason;
    double halt_time = std::numeric_limits<double>::quiet_NaN();
    bool used_relaxation = false;
    int relaxation_iterations = 0;
    bool relaxation_converged = false;
    std::vector<double> relaxation_trace;
};

/// Solve the configured system: causal marching for lambda = 1 without
/// self-coupling, windowed relaxation otherwise.
inline SimulationArtifacts run_simulation(const RunSetup& setup) {
    SimulationArtifacts art;
    if (setup.use_relaxation) {
        SystemConfig cfg = setup.system;
        cfg.free_fields.clear();
        for (const auto& init : setup.inits) cfg.free_fields.push_back(init.free_field);
        cfg.free_anchor = setup.t_start;
        RelaxationResult rel =
            integrate_relaxation(cfg, setup.stripes, setup.horizon);
        art.used_relaxation = true;
        art.relaxation_iterations = rel.iterations;
        art.relaxation_converged = rel.converged;
        art.relaxation_trace = rel.trace;
        art.histories = std::move(rel.histories);
    } else {
        IntegrationResult res = integrate_retarded(setup.system, setup.stripes,
                                                   setup.inits, setup.horizon);
        art.histories = std::move(res.histories);
        art.events = std::move(res.events);
        art.halted = res.halted;
        art.halt_reason = res.halt_reason;
        art.halt_time = res.halt_time;
    }
    return art;
}

inline Json events_json(const SimulationArtifacts& art) {
    Json crossings = Json::array();
    for (const FrontEvent& e : art.events)
        crossings.push_back({{"charge", e.charge},
                             {"source", e.source},
                             {"t_star", e.t_star},
                             {"location", {e.location.x, e.location.y, e.location.z}}});
    Json doc;
    doc["front_crossings"] = crossings;
    doc["halt"] = art.halted ? Json{{"reason", art.halt_reason}, {"time", art.halt_time}}
                             : Json(nullptr);
    doc["relaxation"] =
        art.used_relaxation
            ? Json{{"iterations", art.relaxation_iterations},
                   {"converged", art.relaxation_converged},
                   {"trace", art.relaxation_trace}}
            : Json(nullptr);
    return doc;
}

/// FNV-1a over the canonical (sorted-key) dump.
inline std::string config_hash(const Json& doc) {
    const std::string s = doc.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline Json manifest_json(const RunSetup& setup) {
    Json doc;
    doc["version"] = version_string;
    doc["config_sha"] = config_hash(setup.document);
    doc["units"] = setup.si_units ? "si" : "natural";
    doc["tolerances"] = {{"lightcone_time", tol::lightcone_time},
                         {"lightcone_residual", tol::lightcone_residual},
                         {"quadrature_rel", tol::quadrature_rel},
                         {"shell_band", tol::shell_band},
                         {"c1_gap", tol::c1_gap},
                         {"c2_match", tol::c2_match},
                         {"history_continuity", tol::history_continuity},
                         {"unit_roundtrip", tol::unit_roundtrip}};
    return doc;
}

/// Write trajectory_<i>.csv, events.json, and manifest.json under out_dir.
/// SI runs convert the trajectory samples back to SI columns.
inline void write_simulation_outputs(const SimulationArtifacts& art,
                                     const RunSetup& setup, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < art.histories.size(); ++i) {
        std::ofstream os(fs::path(out_dir) / ("trajectory_" + std::to_string(i) + ".csv"));
        if (!setup.si_units) {
            write_trajectory_csv(os, art.histories[i]);
        } else {
            const UnitSystem& U = setup.units;
            os << "t,qx,qy,qz,px,py,pz\n";
            for (const auto& nd : art.histories[i].nodes()) {
                const Vec3 q = U.length_to_si(nd.q);
                const Vec3 p = nd.p * U.momentum_si();
                os << format_g17(U.time_to_si(nd.t)) << ',' << format_g17(q.x) << ','
                   << format_g17(q.y) << ',' << format_g17(q.z) << ','
                   << format_g17(p.x) << ',' << format_g17(p.y) << ','
                   << format_g17(p.z) << '\n';
            }
        }
    }
    {
        std::ofstream os(fs::path(out_dir) / "events.json");
        os << events_json(art).dump(2) << '\n';
    }
    {
        std::ofstream os(fs::path(out_dir) / "manifest.json");
        os << manifest_json(setup).dump(2) << '\n';
    }
}

/// Compatibility report for every charge: stripe-versus-aux state gaps, the
/// jet comparison against a short genuine forward solve, and the net shell
/// coefficient sampled on a small probe sphere.
inline Json check_report_json(const RunSetup& setup) {
    Json charges = Json::array();
    bool all_ok = true;

    // short forward solve for the true initial jets (16 steps is plenty for
    // the jerk stencils)
    std::optional<IntegrationResult> local;
    std::string solve_error;
    if (!setup.use_relaxation) {
        try {
            IntegrationResult r =
                integrate_retarded(setup.system, setup.stripes, setup.inits,
                                   16.0 * setup.system.integrator.step);
            if (!r.halted) local = std::move(r);
        } catch (const Error& e) {
            solve_error = e.what();
        }
    }

    for (std::size_t i = 0; i < setup.stripes.size(); ++i) {
        Json entry;
        entry["index"] = static_cast<int>(i);
        const C1Report c1 = check_c1(*setup.stripes[i], setup.inits[i]);
        entry["c1"] = {
            {"pass", c1.pass},
            {"position_gap", {c1.position_gap.x, c1.position_gap.y, c1.position_gap.z}},
            {"momentum_gap", {c1.momentum_gap.x, c1.momentum_gap.y, c1.momentum_gap.z}}};
        all_ok = all_ok && c1.pass;

        if (local) {
            try {
                const C2Report c2 =
                    check_c2(local->histories[i], setup.inits[i], setup.check_order);
                Json gaps = Json::array();
                for (const DerivativeGap& g : c2.gaps)
                    gaps.push_back({{"order", g.order},
                                    {"gap", g.gap},
                                    {"tolerance", g.tolerance},
                                    {"matched", g.matched}});
                entry["c2"] = {{"requested_order", c2.requested_order},
                               {"smoothness_class",
                                c2.smooth_to_tested_order
                                    ? Json("smooth")
                                    : Json(c2.smoothness_class)},
                               {"gaps", gaps}};
                all_ok = all_ok && c2.smooth_to_tested_order;
            } catch (const Error& e) {
                entry["c2"] = {{"error", e.what()}};
                all_ok = false;
            }
        } else if (!setup.use_relaxation) {
            entry["c2"] = {{"error", solve_error.empty()
                                         ? "local forward solve halted"
                                         : solve_error}};
            all_ok = false;
        }

        // net shell coefficients on a probe sphere of radius 1 natural unit
        const Vec3 q0 = setup.stripes[i]->position(setup.t_start);
        SingularShell sa{q0, setup.stripes[i]->momentum(setup.t_start),
                         setup.stripes[i]->mass(), -1.0, 1.0, 1.0};
        SingularShell sb{setup.inits[i].aux->position(setup.t_start),
                         setup.inits[i].aux->momentum(setup.t_start),
                         setup.inits[i].aux->mass(), -1.0, -1.0, 1.0};
        double worst = 0.0;
        const Vec3 probes[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (const Vec3& d : probes)
            worst = std::max(worst,
                             max_abs(sa.coefficient(q0 + d) + sb.coefficient(q0 + d)));
        entry["net_shell_max"] = worst;
        charges.push_back(std::move(entry));
    }

    Json doc;
    doc["charges"] = std::move(charges);
    doc["compatible"] = all_ok;
    return doc;
}

}  // namespace lwlab
