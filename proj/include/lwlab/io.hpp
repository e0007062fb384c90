#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lwlab/compatibility.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/grid.hpp"
#include "lwlab/trajectory.hpp"

// Plain-text formats: trajectory CSV (t, qx, qy, qz, px, py, pz), field-grid
// CSV and JSON-lines with identical numeric content. All numbers are printed
// with %.17g so values round-trip exactly.

namespace lwlab {

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string region_label(ConeRegion r) {
    switch (r) {
        case ConeRegion::Inside: return "inside";
        case ConeRegion::Outside: return "outside";
        case ConeRegion::OnCone: return "cone";
    }
    return "outside";
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryHistory& tr) {
    os << "t,qx,qy,qz,px,py,pz\n";
    for (const auto& n : tr.nodes())
        os << format_g17(n.t) << ',' << format_g17(n.q.x) << ',' << format_g17(n.q.y)
           << ',' << format_g17(n.q.z) << ',' << format_g17(n.p.x) << ','
           << format_g17(n.p.y) << ',' << format_g17(n.p.z) << '\n';
}

/// Read a trajectory CSV: the mandatory 7 columns, or 10 with trailing
/// ax, ay, az. Without stored accelerations, nodal a is reconstructed from
/// the momentum samples with 3-point finite differences.
inline TrajectoryHistory read_trajectory_csv(std::istream& is, double mass) {
    std::string line;
    if (!std::getline(is, line))
        throw ConfigError("trajectory.csv", "empty file (header row is mandatory)");
    struct Row {
        double t;
        Vec3 q, p, a;
        bool has_a;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("trajectory.csv",
                                  "non-numeric cell on line " + std::to_string(line_no));
            }
        }
        if (vals.size() != 7 && vals.size() != 10)
            throw ConfigError("trajectory.csv", "line " + std::to_string(line_no) +
                                                    ": expected 7 or 10 columns, got " +
                                                    std::to_string(vals.size()));
        Row r;
        r.t = vals[0];
        r.q = {vals[1], vals[2], vals[3]};
        r.p = {vals[4], vals[5], vals[6]};
        r.has_a = vals.size() == 10;
        r.a = r.has_a ? Vec3{vals[7], vals[8], vals[9]} : Vec3{};
        rows.push_back(r);
    }
    if (rows.empty()) throw ConfigError("trajectory.csv", "no data rows");

    TrajectoryHistory tr(mass);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Vec3 a = rows[i].a;
        if (!rows[i].has_a && rows.size() >= 2) {
            // dp/dt from the nearest three samples, then strip to acceleration
            std::size_t base = 0, n_st = 2;
            if (rows.size() >= 3) {
                n_st = 3;
                base = i == 0 ? 0 : (i + 1 == rows.size() ? rows.size() - 3 : i - 1);
            }
            std::vector<double> ts(n_st);
            for (std::size_t j = 0; j < n_st; ++j) ts[j] = rows[base + j].t;
            const auto w = fd_weights(rows[i].t, ts, 1);
            Vec3 pdot{};
            for (std::size_t j = 0; j < n_st; ++j) pdot += w[j] * rows[base + j].p;
            a = accel_from_momentum_rate(rows[i].p, pdot, mass);
        }
        tr.append(rows[i].t, rows[i].q, rows[i].p, a);
    }
    return tr;
}

inline void write_field_rows_csv(std::ostream& os, const std::vector<FieldRow>& rows) {
    os << "t,x,y,z,Ex,Ey,Ez,Bx,By,Bz,region,shell_count\n";
    for (const auto& r : rows)
        os << format_g17(r.t) << ',' << format_g17(r.x.x) << ',' << format_g17(r.x.y)
           << ',' << format_g17(r.x.z) << ',' << format_g17(r.f.E.x) << ','
           << format_g17(r.f.E.y) << ',' << format_g17(r.f.E.z) << ','
           << format_g17(r.f.B.x) << ',' << format_g17(r.f.B.y) << ','
           << format_g17(r.f.B.z) << ',' << region_label(r.region) << ','
           << r.shell_count << '\n';
}

inline void write_field_rows_jsonl(std::ostream& os, const std::vector<FieldRow>& rows) {
    for (const auto& r : rows)
        os << "{\"t\":" << format_g17(r.t) << ",\"x\":" << format_g17(r.x.x)
           << ",\"y\":" << format_g17(r.x.y) << ",\"z\":" << format_g17(r.x.z)
           << ",\"Ex\":" << format_g17(r.f.E.x) << ",\"Ey\":" << format_g17(r.f.E.y)
           << ",\"Ez\":" << format_g17(r.f.E.z) << ",\"Bx\":" << format_g17(r.f.B.x)
           << ",\"By\":" << format_g17(r.f.B.y) << ",\"Bz\":" << format_g17(r.f.B.z)
           << ",\"region\":\"" << region_label(r.region)
           << "\",\"shell_count\":" << r.shell_count << "}\n";
}

}  // namespace lwlab
