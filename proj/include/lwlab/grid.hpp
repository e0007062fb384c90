#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "lwlab/errors.hpp"
#include "lwlab/propagation.hpp"
#include "lwlab/vec3.hpp"

// Sampling the decomposed field over space-time grids, with deterministic
// output independent of the worker count.

namespace lwlab {

struct GridSpec {
    std::vector<double> times;
    std::vector<Vec3> points;

    static GridSpec list(std::vector<Vec3> pts, std::vector<double> ts) {
        if (pts.empty()) throw ConfigError("grid.points", "need at least one point");
        if (ts.empty()) throw ConfigError("grid.times", "need at least one time");
        GridSpec g;
        g.points = std::move(pts);
        g.times = std::move(ts);
        return g;
    }

    static GridSpec box(const Vec3& lo, const Vec3& hi, int nx, int ny, int nz,
                        std::vector<double> ts) {
        if (nx < 1 || ny < 1 || nz < 1)
            throw ConfigError("grid.box.n", "need at least one sample per axis");
        std::vector<Vec3> pts;
        pts.reserve(static_cast<std::size_t>(nx) * ny * nz);
        auto coord = [](double a, double b, int i, int n) {
            return n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1);
        };
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                for (int k = 0; k < nz; ++k)
                    pts.push_back(Vec3{coord(lo.x, hi.x, i, nx), coord(lo.y, hi.y, j, ny),
                                       coord(lo.z, hi.z, k, nz)});
        return list(std::move(pts), std::move(ts));
    }

    std::size_t size() const { return times.size() * points.size(); }
};

struct FieldRow {
    double t = 0.0;
    Vec3 x{};
    EMFieldValue f{};
    ConeRegion region = ConeRegion::Outside;
    int shell_count = 0;
};

/// Evaluate the decomposed field on the full time x point grid. Row order is
/// (time-major, then point order); each row depends only on its own indices,
/// so the result is identical for any worker count.
inline std::vector<FieldRow> evaluate_field_grid(const TrajectoryHistory& actual,
                                                 const InitialFieldSpec& init,
                                                 const GridSpec& grid,
                                                 const EvalOptions& opts = {},
                                                 int threads = 1) {
    if (threads < 1) throw RangeError("evaluate_field_grid: threads must be positive");
    const std::size_t total = grid.size();
    std::vector<FieldRow> rows(total);

    auto fill = [&](std::size_t idx) {
        const std::size_t ti = idx / grid.points.size();
        const std::size_t pi = idx % grid.points.size();
        FieldRow& row = rows[idx];
        row.t = grid.times[ti];
        row.x = grid.points[pi];
        const FieldSample s = evaluate_field(actual, init, row.x, row.t, opts);
        row.f = s.regular;
        row.region = s.region;
        row.shell_count = static_cast<int>(s.shells.size());
    };

    if (threads == 1 || total < 2) {
        for (std::size_t i = 0; i < total; ++i) fill(i);
        return rows;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                fill(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(threads), total));
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return rows;
}

}  // namespace lwlab
