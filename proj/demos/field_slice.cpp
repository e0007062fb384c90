// Sample the decomposed field of a moving charge whose initial data was posed
// as if it were at rest. The mismatch rides outward on the light cone of the
// initial time: plot Ex over the slice to watch the front expand.
//
// Usage: demo_field_slice [out.csv] [t1 t2 ...]

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "lwlab/lwlab.hpp"

int main(int argc, char** argv) {
    using namespace lwlab;

    const std::string out = argc > 1 ? argv[1] : "field_slice.csv";
    std::vector<double> times;
    for (int i = 2; i < argc; ++i) times.push_back(std::atof(argv[i]));
    if (times.empty()) times = {0.5, 1.0, 1.5};

    auto actual = std::make_shared<TrajectoryHistory>(
        TrajectoryHistory::uniform(Vec3{}, Vec3{0.5, 0.0, 0.0}, 1.0));
    auto aux = std::make_shared<TrajectoryHistory>(TrajectoryHistory::at_rest(Vec3{}, 1.0));
    const InitialFieldSpec init = InitialFieldSpec::from_trajectory(aux);

    // z = 0 slice; odd counts put sample points on the front circle itself,
    // where the rows keep their shell counts instead of throwing
    const GridSpec grid =
        GridSpec::box(Vec3{-2.0, -2.0, 0.0}, Vec3{2.0, 2.0, 0.0}, 81, 81, 1, times);
    EvalOptions opts;
    opts.throw_on_front = false;

    const std::vector<FieldRow> rows = evaluate_field_grid(*actual, init, grid, opts);

    std::ofstream os(out);
    if (!os) {
        std::fprintf(stderr, "cannot open %s for writing\n", out.c_str());
        return 1;
    }
    write_field_rows_csv(os, rows);

    int on_front = 0;
    for (const auto& r : rows)
        if (r.region == ConeRegion::OnCone) ++on_front;
    std::printf("wrote %zu rows (%d on the front) to %s\n", rows.size(), on_front,
                out.c_str());
    return 0;
}
