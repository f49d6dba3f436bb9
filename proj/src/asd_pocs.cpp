#include <cmath>

#include "sart_kernel.hpp"
#include "sparsect/error.hpp"
#include "sparsect/recon.hpp"

namespace sparsect {

double total_variation(const Grid3& grid, std::span<const double> x, double eps)
{
    const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
    const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = sy * static_cast<std::size_t>(ny);
    double tv = 0.0;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int xi = 0; xi < nx; ++xi) {
                const std::size_t i = grid.index(xi, y, z);
                const double dx = xi + 1 < nx ? x[i + sx] - x[i] : 0.0;
                const double dy = y + 1 < ny ? x[i + sy] - x[i] : 0.0;
                const double dz = z + 1 < nz ? x[i + sz] - x[i] : 0.0;
                tv += std::sqrt(dx * dx + dy * dy + dz * dz + eps);
            }
    return tv;
}

void total_variation_gradient(const Grid3& grid, std::span<const double> x, std::span<double> grad, double eps)
{
    const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
    const std::size_t sx = 1, sy = static_cast<std::size_t>(nx), sz = sy * static_cast<std::size_t>(ny);
    // Store forward differences scaled by 1/|grad| once, then gather.
    std::vector<double> qx(x.size()), qy(x.size()), qz(x.size());
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int xi = 0; xi < nx; ++xi) {
                const std::size_t i = grid.index(xi, y, z);
                const double dx = xi + 1 < nx ? x[i + sx] - x[i] : 0.0;
                const double dy = y + 1 < ny ? x[i + sy] - x[i] : 0.0;
                const double dz = z + 1 < nz ? x[i + sz] - x[i] : 0.0;
                const double inv = 1.0 / std::sqrt(dx * dx + dy * dy + dz * dz + eps);
                qx[i] = dx * inv;
                qy[i] = dy * inv;
                qz[i] = dz * inv;
            }
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int xi = 0; xi < nx; ++xi) {
                const std::size_t i = grid.index(xi, y, z);
                double g = -(qx[i] + qy[i] + qz[i]);
                if (xi > 0)
                    g += qx[i - sx];
                if (y > 0)
                    g += qy[i - sy];
                if (z > 0)
                    g += qz[i - sz];
                grad[i] = g;
            }
}

namespace {

double l2_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double l2_norm(std::span<const double> a)
{
    double s = 0.0;
    for (double v : a)
        s += v * v;
    return std::sqrt(s);
}

constexpr int kMaxStepHalvings = 12;

}  // namespace

AsdPocsResult asd_pocs(const ProjectionStack& p, const Grid3& grid, const AsdPocsParams& params)
{
    params.validate();
    grid.validate();
    p.validate();

    detail::SartEngine engine(p, grid, params.sart_inner);
    std::vector<double> f(grid.size(), 0.0), f_prev(grid.size()), grad(grid.size()), trial(grid.size());
    AsdPocsResult result;
    double tv_step = 0.0;

    for (int it = 0; it < params.iterations; ++it) {
        f_prev = f;
        for (int k = 0; k < params.sart_inner.iterations; ++k)
            engine.pass(f);
        IterationDiagnostics d;
        d.iteration = it;
        d.residual = engine.residual(f);
        const double dp = l2_distance(f, f_prev);
        if (it == 0)
            tv_step = params.alpha * dp;
        d.tv_step = tv_step;

        // Steepest descent on TV with normalised gradient; a step that would
        // raise TV is halved until it does not, otherwise the loop stops.
        const std::vector<double> f_data = f;
        double tv = params.tv_steps_per_iter > 0 ? total_variation(grid, f) : 0.0;
        if (params.tv_steps_per_iter > 0)
            d.tv_trace.push_back(tv);
        for (int s = 0; s < params.tv_steps_per_iter && tv_step > 0.0; ++s) {
            total_variation_gradient(grid, f, grad);
            const double gnorm = l2_norm(grad);
            if (!(gnorm > 0.0))
                break;
            double step = tv_step / gnorm;
            bool accepted = false;
            for (int h = 0; h <= kMaxStepHalvings; ++h, step *= 0.5) {
                for (std::size_t i = 0; i < f.size(); ++i)
                    trial[i] = f[i] - step * grad[i];
                const double tv_trial = total_variation(grid, trial);
                if (tv_trial <= tv) {
                    f.swap(trial);
                    tv = tv_trial;
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                break;
            d.tv_trace.push_back(tv);
        }
        const double dg = l2_distance(f, f_data);
        if (dg > params.r_max * dp && d.residual > params.data_tolerance)
            tv_step *= params.alpha_red;
        d.tv = total_variation(grid, f);
        result.diagnostics.iterations.push_back(std::move(d));
    }
    std::vector<float> out(f.begin(), f.end());
    result.volume = Volume3(grid, std::move(out));
    return result;
}

}  // namespace sparsect
