#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsect/volume.hpp"

namespace sparsect::detail {

/// Calls f(flat_index, length_mm) for every voxel the segment a->b crosses
/// with nonzero length. Incremental traversal over voxel boundary planes;
/// plane crossings are recomputed from the integer index at every step so no
/// drift accumulates along long rays.
template <typename F>
void for_each_segment(const Grid3& grid, const Vec3& a, const Vec3& b, F&& f)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    double d[3], lo[3];
    double t_enter = 0.0, t_exit = 1.0;
    for (int k = 0; k < 3; ++k) {
        d[k] = b[k] - a[k];
        lo[k] = grid.origin_mm[k] - 0.5 * grid.spacing_mm[k];
        const double hi = lo[k] + grid.dims[k] * grid.spacing_mm[k];
        if (d[k] == 0.0) {
            if (a[k] <= lo[k] || a[k] >= hi)
                return;
            continue;
        }
        double t0 = (lo[k] - a[k]) / d[k];
        double t1 = (hi - a[k]) / d[k];
        if (t0 > t1)
            std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
    }
    if (!(t_exit > t_enter))
        return;

    const double ray_len = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    const double t_mid = 0.5 * (t_enter + t_exit);
    int idx[3], step[3];
    double t_next[3];
    for (int k = 0; k < 3; ++k) {
        // Entry voxel located from a point just inside the volume.
        const double t_probe = d[k] == 0.0 ? t_mid : t_enter;
        const double p = a[k] + t_probe * d[k];
        int i = static_cast<int>(std::floor((p - lo[k]) / grid.spacing_mm[k]));
        if (d[k] > 0.0 && p - (lo[k] + i * grid.spacing_mm[k]) >= grid.spacing_mm[k])
            ++i;
        i = std::clamp(i, 0, grid.dims[k] - 1);
        idx[k] = i;
        step[k] = d[k] > 0.0 ? 1 : (d[k] < 0.0 ? -1 : 0);
        if (step[k] == 0) {
            t_next[k] = inf;
        } else {
            const double plane = lo[k] + (i + (step[k] > 0 ? 1 : 0)) * grid.spacing_mm[k];
            t_next[k] = (plane - a[k]) / d[k];
        }
    }

    const auto nx = static_cast<std::size_t>(grid.dims[0]);
    const auto nxy = nx * static_cast<std::size_t>(grid.dims[1]);
    double t = t_enter;
    const int max_steps = grid.dims[0] + grid.dims[1] + grid.dims[2] + 3;
    for (int s = 0; s < max_steps; ++s) {
        int k = 0;
        if (t_next[1] < t_next[k])
            k = 1;
        if (t_next[2] < t_next[k])
            k = 2;
        const double t_end = std::min(t_next[k], t_exit);
        if (t_end > t) {
            f(static_cast<std::size_t>(idx[2]) * nxy + static_cast<std::size_t>(idx[1]) * nx +
                  static_cast<std::size_t>(idx[0]),
              (t_end - t) * ray_len);
            t = t_end;
        }
        if (t_next[k] >= t_exit)
            return;
        idx[k] += step[k];
        if (idx[k] < 0 || idx[k] >= grid.dims[k])
            return;
        const double plane = lo[k] + (idx[k] + (step[k] > 0 ? 1 : 0)) * grid.spacing_mm[k];
        t_next[k] = (plane - a[k]) / d[k];
    }
}

}  // namespace sparsect::detail
