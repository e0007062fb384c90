// Command-line front end: evaluate initial-value fields on grids, run the
// integrators, check compatibility conditions, and run canned scenarios.
//
// Exit codes: 0 success, 1 configuration error, 2 singular-front halt,
// 3 compatibility failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lwlab/lwlab.hpp"

namespace {

using namespace lwlab;

Json front_event_json(const SingularFrontError& err) {
    Json shells = Json::array();
    for (const SingularShell& sh : err.shells)
        shells.push_back({{"center", {sh.center.x, sh.center.y, sh.center.z}},
                          {"radius", sh.radius},
                          {"sign", sh.sign},
                          {"strength", sh.strength}});
    return Json{{"error", "singular-front"},
                {"t", err.t},
                {"x", {err.x.x, err.x.y, err.x.z}},
                {"shells", shells}};
}

void write_rows(const std::vector<FieldRow>& rows, const std::string& out,
                const std::string& format) {
    std::ofstream os(out);
    if (!os) throw ConfigError("out", "cannot open '" + out + "'");
    if (format == "json")
        write_field_rows_jsonl(os, rows);
    else
        write_field_rows_csv(os, rows);
}

int cmd_evaluate_field(const std::string& config_path, const std::string& out,
                       const std::string& format, int threads) {
    RunSetup setup = load_config_file(config_path);
    if (!setup.grid) throw ConfigError("grid", "evaluate-field requires a grid");

    std::vector<FieldRow> total;
    for (std::size_t i = 0; i < setup.stripes.size(); ++i) {
        EvalOptions eo;  // exact front hits with unbalanced shells throw
        std::vector<FieldRow> rows = evaluate_field_grid(
            *setup.stripes[i], setup.inits[i], *setup.grid, eo, threads);
        if (i == 0) {
            total = std::move(rows);
            continue;
        }
        for (std::size_t k = 0; k < total.size(); ++k) {
            total[k].f += rows[k].f;
            total[k].shell_count += rows[k].shell_count;
            if (rows[k].region == ConeRegion::OnCone ||
                (rows[k].region == ConeRegion::Inside &&
                 total[k].region == ConeRegion::Outside))
                total[k].region = rows[k].region;
        }
    }
    write_rows(total, out, format);
    return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    RunSetup setup = load_config_file(config_path);
    SimulationArtifacts art = run_simulation(setup);
    write_simulation_outputs(art, setup, out_dir);
    if (art.halted && art.halt_reason == "singular-front") return 2;
    return 0;
}

int cmd_check(const std::string& config_path, const std::string& out) {
    RunSetup setup = load_config_file(config_path);
    const Json report = check_report_json(setup);
    if (out.empty()) {
        std::cout << report.dump(2) << '\n';
    } else {
        std::ofstream os(out);
        if (!os) throw ConfigError("out", "cannot open '" + out + "'");
        os << report.dump(2) << '\n';
    }
    return report.at("compatible").get<bool>() ? 0 : 3;
}

int cmd_propagate_free(const std::string& config_path, const std::string& out,
                       const std::string& format) {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("config", "cannot open '" + config_path + "'");
    Json doc;
    try {
        is >> doc;
    } catch (const std::exception& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.contains("free")) throw ConfigError("free", "missing required key");
    if (doc.contains("units") && doc.at("units").is_string() &&
        doc.at("units").get<std::string>() != "natural")
        throw ConfigError("units", "propagate-free supports natural units only");
    const FreeFieldSpec spec = cfgdetail::parse_free(doc.at("free"), "free");

    Json grid_doc{{"horizon", 1.0},
                  {"charges", Json::array({Json{{"m", 1.0}, {"e", 0.0}, {"q0", {0, 0, 0}}}})},
                  {"grid", cfgdetail::require(doc, "grid", "")}};
    const RunSetup grid_setup = parse_config(grid_doc);

    std::vector<FieldRow> rows;
    for (double t : grid_setup.grid->times)
        for (const Vec3& x : grid_setup.grid->points) {
            FieldRow r;
            r.t = t;
            r.x = x;
            r.f = propagate_free_field(spec, x, t);
            r.region = ConeRegion::Outside;  // no front: free fields are smooth
            r.shell_count = 0;
            rows.push_back(r);
        }
    write_rows(rows, out, format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for point-charge electrodynamics"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv", units = "natural";
    int threads = 1;
    std::string scenario_name;

    auto* eval = app.add_subcommand("evaluate-field",
                                    "evaluate the initial-value field on a grid");
    eval->add_option("--config", config_path, "configuration JSON")->required();
    eval->add_option("--out", out_path, "output file")->required();
    eval->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    eval->add_option("--threads", threads, "grid evaluation threads");

    auto* sim = app.add_subcommand("simulate", "integrate the configured system");
    sim->add_option("--config", config_path, "configuration JSON")->required();
    sim->add_option("--out", out_path, "output directory")->required();

    auto* chk = app.add_subcommand("check", "compatibility report for a config");
    chk->add_option("--config", config_path, "configuration JSON")->required();
    chk->add_option("--out", out_path, "report file (default: stdout)");

    auto* scn = app.add_subcommand("scenario", "run a canned scenario");
    scn->add_option("name", scenario_name, "scenario name")->required();
    scn->add_option("--out", out_path, "output directory")->required();
    scn->add_option("--units", units, "natural or si")
        ->check(CLI::IsMember({"natural", "si"}));
    scn->add_option("--threads", threads, "grid evaluation threads");

    auto* fre = app.add_subcommand("propagate-free",
                                   "propagate analytic or tabulated Cauchy data");
    fre->add_option("--config", config_path, "configuration JSON")->required();
    fre->add_option("--out", out_path, "output file")->required();
    fre->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (eval->parsed())
            return cmd_evaluate_field(config_path, out_path, format, threads);
        if (sim->parsed()) return cmd_simulate(config_path, out_path);
        if (chk->parsed()) return cmd_check(config_path, out_path);
        if (scn->parsed()) {
            run_scenario_to_directory(scenario_name, out_path, units == "si", threads);
            return 0;
        }
        if (fre->parsed()) return cmd_propagate_free(config_path, out_path, format);
    } catch (const SingularFrontError& err) {
        std::cout << front_event_json(err).dump(2) << std::endl;
        return 2;
    } catch (const ConfigError& err) {
        std::cerr << err.what() << std::endl;
        return 1;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << std::endl;
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << std::endl;
        return 1;
    }
    return 0;
}
