#include <cmath>
#include <numbers>

#include "cone_frame.hpp"
#include "sparsect/error.hpp"
#include "sparsect/recon.hpp"

namespace sparsect {

namespace {

// Midpoint-rule angular weights over the closed circle.
std::vector<double> angular_steps(const std::vector<double>& angles)
{
    const std::size_t n = angles.size();
    std::vector<double> w(n);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
        double next = angles[(i + 1) % n];
        double prev = angles[(i + n - 1) % n];
        if (i + 1 == n)
            next += two_pi;
        if (i == 0)
            prev -= two_pi;
        w[i] = 0.5 * (next - prev);
    }
    return w;
}

}  // namespace

Volume3 fdk_backproject(const ProjectionStack& filtered, const Grid3& grid)
{
    grid.validate();
    filtered.validate();
    const auto& g = filtered.geometry;
    if (g.n_views() < 2)
        throw ParameterError("FDK needs at least 2 views");
    const auto dtheta = angular_steps(g.angles_rad);
    const double half_u = 0.5 * (g.nu - 1), half_v = 0.5 * (g.nv - 1);

    std::vector<double> acc(grid.size(), 0.0);
    const int nz = grid.dims[2];
    // Parallel over z slices; each voxel sums its views in index order.
#pragma omp parallel for schedule(static)
    for (int iz = 0; iz < nz; ++iz) {
        for (int view = 0; view < g.n_views(); ++view) {
            const double a = g.angles_rad[static_cast<std::size_t>(view)];
            const double s = std::sin(a), c = std::cos(a);
            const auto proj = filtered.view(view);
            const double scale = 0.5 * dtheta[static_cast<std::size_t>(view)];
            for (int iy = 0; iy < grid.dims[1]; ++iy) {
                for (int ix = 0; ix < grid.dims[0]; ++ix) {
                    const auto p = grid.center_mm(ix, iy, iz);
                    const double depth = g.sod_mm - p[0] * s + p[1] * c;
                    if (depth <= 0.0)
                        continue;
                    const double mag = g.sdd_mm / depth;
                    const double u = mag * (p[0] * c + p[1] * s);
                    const double v = mag * p[2];
                    const double fu = (u - g.u0_mm) / g.du_mm + half_u;
                    const double fv = (v - g.v0_mm) / g.dv_mm + half_v;
                    const int iu = static_cast<int>(std::floor(fu));
                    const int iv = static_cast<int>(std::floor(fv));
                    if (iu < -1 || iv < -1 || iu >= g.nu || iv >= g.nv)
                        continue;
                    const double wu = fu - iu, wv = fv - iv;
                    auto sample = [&](int u_i, int v_i) -> double {
                        if (u_i < 0 || v_i < 0 || u_i >= g.nu || v_i >= g.nv)
                            return 0.0;
                        return proj[static_cast<std::size_t>(v_i) * static_cast<std::size_t>(g.nu) +
                                    static_cast<std::size_t>(u_i)];
                    };
                    const double q = (1 - wv) * ((1 - wu) * sample(iu, iv) + wu * sample(iu + 1, iv)) +
                                     wv * ((1 - wu) * sample(iu, iv + 1) + wu * sample(iu + 1, iv + 1));
                    const double w = g.sod_mm / depth;
                    acc[grid.index(ix, iy, iz)] += scale * w * w * q;
                }
            }
        }
    }
    std::vector<float> out(acc.begin(), acc.end());
    return Volume3(grid, std::move(out));
}

Volume3 fdk(const ProjectionStack& p, const Grid3& grid, Apodization apod)
{
    p.validate();
    if (p.geometry.n_views() < 2)
        throw ParameterError("FDK needs at least 2 views");
    return fdk_backproject(fdk_filter(p, apod), grid);
}

}  // namespace sparsect
