#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cone_frame.hpp"
#include "ray_traversal.hpp"
#include "sart_kernel.hpp"
#include "sparsect/error.hpp"

namespace sparsect {

namespace {
constexpr double kZeroGuard = 1e-12;
}

void SartParams::validate() const
{
    if (iterations < 0)
        throw ParameterError("SART iterations must be >= 0");
    if (!(relaxation > 0.0 && relaxation < 2.0))
        throw ParameterError("SART relaxation must lie in (0, 2)");
}

void AsdPocsParams::validate() const
{
    if (iterations < 1)
        throw ParameterError("ASD-POCS iterations must be positive");
    if (tv_steps_per_iter < 0)
        throw ParameterError("ASD-POCS TV step count must be >= 0");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ParameterError("ASD-POCS alpha must be >= 0");
    if (!(alpha_red > 0.0 && alpha_red < 1.0))
        throw ParameterError("ASD-POCS alpha_red must lie in (0, 1)");
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        throw ParameterError("ASD-POCS r_max must be positive");
    if (!(data_tolerance >= 0.0))
        throw ParameterError("ASD-POCS data tolerance must be >= 0");
    sart_inner.validate();
}

std::vector<int> sart_view_order(int n_views, const SartParams& params)
{
    std::vector<int> order(static_cast<std::size_t>(std::max(n_views, 0)));
    std::iota(order.begin(), order.end(), 0);
    if (params.view_order == ViewOrder::GoldenAngle && n_views > 1) {
        // Sort views by the fractional part of k * (golden ratio - 1), where k
        // counts from a seeded start view: consecutive updates land far apart.
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        const auto start = static_cast<int>(params.order_seed % static_cast<std::uint64_t>(n_views));
        std::vector<double> key(order.size());
        for (int i = 0; i < n_views; ++i) {
            const int k = (i - start + n_views) % n_views;
            const double t = k * phi;
            key[static_cast<std::size_t>(i)] = t - std::floor(t);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)]; });
    }
    return order;
}

namespace detail {

SartEngine::SartEngine(const ProjectionStack& p, const Grid3& grid, const SartParams& params)
    : proj_(p), grid_(grid), params_(params), order_(sart_view_order(p.geometry.n_views(), params))
{
    row_residual_.resize(p.geometry.pixels_per_view());
    update_.resize(grid.size());
    column_sum_.resize(grid.size());
}

void SartEngine::pass(std::span<double> x)
{
    const auto& g = proj_.geometry;
    for (int view : order_) {
        const auto f = view_frame(g, view);
        const auto measured = proj_.view(view);

        // Forward: residual per ray, normalised by the ray's length in the volume.
        for (int iv = 0; iv < g.nv; ++iv) {
            for (int iu = 0; iu < g.nu; ++iu) {
                double ax = 0.0, row_sum = 0.0;
                for_each_segment(grid_, f.source, pixel_position(g, f, iv, iu),
                                 [&](std::size_t voxel, double len) {
                                     ax += x[voxel] * len;
                                     row_sum += len;
                                 });
                const std::size_t r = static_cast<std::size_t>(iv) * static_cast<std::size_t>(g.nu) +
                                      static_cast<std::size_t>(iu);
                row_residual_[r] = row_sum < kZeroGuard ? 0.0 : (measured[r] - ax) / row_sum;
            }
        }

        // Adjoint of the normalised residual and of the all-ones image.
        std::fill(update_.begin(), update_.end(), 0.0);
        std::fill(column_sum_.begin(), column_sum_.end(), 0.0);
        for (int iv = 0; iv < g.nv; ++iv) {
            for (int iu = 0; iu < g.nu; ++iu) {
                const double y = row_residual_[static_cast<std::size_t>(iv) * static_cast<std::size_t>(g.nu) +
                                               static_cast<std::size_t>(iu)];
                for_each_segment(grid_, f.source, pixel_position(g, f, iv, iu),
                                 [&](std::size_t voxel, double len) {
                                     update_[voxel] += y * len;
                                     column_sum_[voxel] += len;
                                 });
            }
        }

        const double lambda = params_.relaxation;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (column_sum_[j] < kZeroGuard)
                continue;
            double v = x[j] + lambda * update_[j] / column_sum_[j];
            if (params_.nonneg_clip && v < 0.0)
                v = 0.0;
            x[j] = v;
        }
    }
}

double SartEngine::residual(std::span<const double> x) const
{
    const auto& g = proj_.geometry;
    double ss = 0.0;
    for (int view = 0; view < g.n_views(); ++view) {
        const auto f = view_frame(g, view);
        const auto measured = proj_.view(view);
        for (int iv = 0; iv < g.nv; ++iv) {
            for (int iu = 0; iu < g.nu; ++iu) {
                double ax = 0.0;
                for_each_segment(grid_, f.source, pixel_position(g, f, iv, iu),
                                 [&](std::size_t voxel, double len) { ax += x[voxel] * len; });
                const double r = ax - measured[static_cast<std::size_t>(iv) * static_cast<std::size_t>(g.nu) +
                                               static_cast<std::size_t>(iu)];
                ss += r * r;
            }
        }
    }
    return std::sqrt(ss);
}

}  // namespace detail

Volume3 sart(const ProjectionStack& p, const Grid3& grid, const SartParams& params,
             const std::optional<Volume3>& init, ReconDiagnostics* diag)
{
    params.validate();
    grid.validate();
    p.validate();
    if (init && !(init->grid() == grid))
        throw ParameterError("SART initial volume does not match the reconstruction grid");

    std::vector<double> x(grid.size(), 0.0);
    if (init)
        std::copy(init->data().begin(), init->data().end(), x.begin());
    if (params.iterations == 0)
        return init ? *init : Volume3(grid);

    detail::SartEngine engine(p, grid, params);
    for (int it = 0; it < params.iterations; ++it) {
        engine.pass(x);
        if (diag) {
            IterationDiagnostics d;
            d.iteration = it;
            d.residual = engine.residual(x);
            d.tv = total_variation(grid, x);
            diag->iterations.push_back(std::move(d));
        }
    }
    std::vector<float> out(x.begin(), x.end());
    return Volume3(grid, std::move(out));
}

double data_residual(const ProjectionStack& p, const Volume3& x)
{
    std::vector<double> xd(x.data().begin(), x.data().end());
    SartParams unused;
    return detail::SartEngine(p, x.grid(), unused).residual(xd);
}

void write_diagnostics_csv(const ReconDiagnostics& d, const std::string& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "iteration,residual,tv\n";
    for (const auto& it : d.iterations)
        out << it.iteration << ',' << it.residual << ',' << it.tv << '\n';
}

}  // namespace sparsect
