#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparsect/error.hpp"
#include "sparsect/metrics.hpp"

namespace sparsect {

SurfacePointSet extract_surface(const Mask3& m)
{
    const Grid3& g = m.grid();
    SurfacePointSet out{g, {}};
    static constexpr int kDirs[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                if (!m.at(x, y, z))
                    continue;
                const Vec3 c = g.center_mm(x, y, z);
                for (const auto& d : kDirs) {
                    if (m.get(x + d[0], y + d[1], z + d[2]))
                        continue;
                    Vec3 p = c;
                    for (int a = 0; a < 3; ++a)
                        p[a] += 0.5 * d[a] * g.spacing_mm[a];
                    out.points.push_back(p);
                }
            }
    return out;
}

SurfaceIndex::SurfaceIndex(const std::vector<Vec3>& points, double cell_mm)
    : requested_cell_(cell_mm), cell_(cell_mm)
{
    if (!(cell_mm > 0.0) || !std::isfinite(cell_mm))
        throw ParameterError("surface index cell size must be positive");
    // A small inflation keeps points at exactly one cell edge inside the
    // 27-cell neighbourhood despite rounding.
    requested_cell_ = cell_mm;
    cell_ = cell_mm * (1.0 + 1e-9) + 1e-12;
    if (points.empty()) {
        cell_start_.assign(1, 0);
        return;
    }
    Vec3 hi = points.front();
    lo_ = points.front();
    for (const auto& p : points)
        for (int a = 0; a < 3; ++a) {
            lo_[a] = std::min(lo_[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    for (int a = 0; a < 3; ++a)
        ncell_[a] = static_cast<int>(std::floor((hi[a] - lo_[a]) / cell_)) + 1;
    const std::size_t ncells =
        static_cast<std::size_t>(ncell_[0]) * static_cast<std::size_t>(ncell_[1]) * static_cast<std::size_t>(ncell_[2]);
    std::vector<std::size_t> ids(points.size());
    cell_start_.assign(ncells + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = cell_of(points[i]);
        ids[i] = cell_id(c[0], c[1], c[2]);
        ++cell_start_[ids[i] + 1];
    }
    std::partial_sum(cell_start_.begin(), cell_start_.end(), cell_start_.begin());
    points_.resize(points.size());
    std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i)
        points_[fill[ids[i]]++] = points[i];
}

Index3 SurfaceIndex::cell_of(const Vec3& q) const
{
    Index3 c{};
    for (int a = 0; a < 3; ++a) {
        const double t = std::floor((q[a] - lo_[a]) / cell_);
        c[a] = t < -1.0 ? -2 : (t > ncell_[a] ? ncell_[a] + 1 : static_cast<int>(t));
    }
    return c;
}

bool SurfaceIndex::any_within(const Vec3& q, double radius) const
{
    if (points_.empty())
        return false;
    const double r2 = radius * radius;
    Index3 lo{}, hi{};
    if (radius <= cell_mm_limit()) {
        const auto c = cell_of(q);
        for (int a = 0; a < 3; ++a) {
            lo[a] = c[a] - 1;
            hi[a] = c[a] + 1;
        }
    } else {
        for (int a = 0; a < 3; ++a) {
            lo[a] = static_cast<int>(std::floor((q[a] - radius - lo_[a]) / cell_)) - 1;
            hi[a] = static_cast<int>(std::floor((q[a] + radius - lo_[a]) / cell_)) + 1;
        }
    }
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(lo[a], 0);
        hi[a] = std::min(hi[a], ncell_[a] - 1);
        if (lo[a] > hi[a])
            return false;
    }
    for (int z = lo[2]; z <= hi[2]; ++z)
        for (int y = lo[1]; y <= hi[1]; ++y)
            for (int x = lo[0]; x <= hi[0]; ++x) {
                const std::size_t id = cell_id(x, y, z);
                for (std::size_t k = cell_start_[id]; k < cell_start_[id + 1]; ++k) {
                    const Vec3& p = points_[k];
                    const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
                    if (dx * dx + dy * dy + dz * dz <= r2)
                        return true;
                }
            }
    return false;
}

double SurfaceIndex::nearest_sq(const Vec3& q) const
{
    double best = std::numeric_limits<double>::infinity();
    if (points_.empty())
        return best;
    const auto c = cell_of(q);
    const int max_ring = std::max({ncell_[0], ncell_[1], ncell_[2]}) + 2;
    for (int ring = 0; ring <= max_ring; ++ring) {
        // Every point in ring r is at least (r - 1) cells away.
        if (ring >= 2) {
            const double bound = (ring - 1) * cell_;
            if (bound * bound > best)
                break;
        }
        for (int z = c[2] - ring; z <= c[2] + ring; ++z)
            for (int y = c[1] - ring; y <= c[1] + ring; ++y)
                for (int x = c[0] - ring; x <= c[0] + ring; ++x) {
                    if (std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])}) != ring)
                        continue;
                    if (x < 0 || y < 0 || z < 0 || x >= ncell_[0] || y >= ncell_[1] || z >= ncell_[2])
                        continue;
                    const std::size_t id = cell_id(x, y, z);
                    for (std::size_t k = cell_start_[id]; k < cell_start_[id + 1]; ++k) {
                        const Vec3& p = points_[k];
                        const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
                        best = std::min(best, dx * dx + dy * dy + dz * dz);
                    }
                }
    }
    return best;
}

namespace {

std::size_t count_covered(const std::vector<Vec3>& from, const SurfaceIndex& to, double tau)
{
    std::size_t n = 0;
    for (const auto& p : from)
        n += to.any_within(p, tau);
    return n;
}

}  // namespace

double nsd(const Mask3& p, const Mask3& g, double tau_mm, const EmptyPolicy& policy)
{
    if (!(p.grid() == g.grid()))
        throw ParameterError("nsd: inputs are on different grids");
    if (!(tau_mm > 0.0))
        throw ParameterError("nsd: tolerance must be positive");
    const auto sp = extract_surface(p), sg = extract_surface(g);
    if (sp.empty() && sg.empty())
        return policy.both_empty;
    if (sp.empty() || sg.empty())
        return policy.one_empty;
    const SurfaceIndex ip(sp.points, tau_mm), ig(sg.points, tau_mm);
    const std::size_t covered = count_covered(sp.points, ig, tau_mm) + count_covered(sg.points, ip, tau_mm);
    return static_cast<double>(covered) / static_cast<double>(sp.size() + sg.size());
}

}  // namespace sparsect
