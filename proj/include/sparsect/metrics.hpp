#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "sparsect/volume.hpp"

namespace sparsect {

/// PSNR value returned for identical volumes.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

/// Score for empty inputs: both empty scores `both_empty`, exactly one empty
/// scores `one_empty`.
struct EmptyPolicy {
    double both_empty = 1.0;
    double one_empty = 0.0;
};

struct MetricParams {
    double nsd_tau_mm = 2.0;
    SsimParams ssim;
    EmptyPolicy empty_policy;

    void validate() const;
};

/// 10 log10(range^2 / MSE); kPsnrInfinity when MSE is zero.
double psnr(const Volume3& ref, const Volume3& test, double data_range);

/// Gaussian-window SSIM per axial (z) slice over valid window positions,
/// averaged over slices.
double ssim(const Volume3& ref, const Volume3& test, const SsimParams& params = {});

/// 2|P and G| / (|P| + |G|).
double dsc(const Mask3& p, const Mask3& g, const EmptyPolicy& policy = {});

/// Centres of the voxel faces separating foreground from background
/// (6-connectivity); faces on the grid border count as boundary.
struct SurfacePointSet {
    Grid3 grid;
    std::vector<Vec3> points;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
};

SurfacePointSet extract_surface(const Mask3& m);

/// Uniform-cell spatial index over a point set with exact Euclidean queries.
class SurfaceIndex {
public:
    /// `cell_mm` is the bucket edge length; queries with radius <= cell_mm
    /// only visit the 27 neighbouring cells.
    SurfaceIndex(const std::vector<Vec3>& points, double cell_mm);

    /// True when some indexed point p satisfies |p - q|^2 <= radius^2.
    bool any_within(const Vec3& q, double radius) const;
    /// Squared distance to the nearest indexed point (infinity when empty).
    double nearest_sq(const Vec3& q) const;

    std::size_t size() const noexcept { return points_.size(); }

private:
    Index3 cell_of(const Vec3& q) const;
    double cell_mm_limit() const noexcept { return requested_cell_; }
    std::size_t cell_id(int x, int y, int z) const noexcept
    {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(ncell_[1]) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(ncell_[0]) +
               static_cast<std::size_t>(x);
    }

    double requested_cell_;
    double cell_;
    Vec3 lo_{0, 0, 0};
    Index3 ncell_{0, 0, 0};
    std::vector<Vec3> points_;            // sorted by cell
    std::vector<std::size_t> cell_start_;  // CSR offsets, size = cells + 1
};

/// Normalised surface Dice at tolerance tau (mm).
double nsd(const Mask3& p, const Mask3& g, double tau_mm, const EmptyPolicy& policy = {});

/// True when removing the centre of a 3x3x3 neighbourhood preserves topology
/// with 26-connected foreground and 6-connected background. `nbhd` is indexed
/// (dz+1)*9 + (dy+1)*3 + (dx+1); the centre entry is ignored.
bool is_simple_point(const std::uint8_t (&nbhd)[27]);

/// Topology-preserving directional thinning to a curve skeleton. A voxel is
/// peeled towards a direction only when it is backed by foreground on the
/// opposite side; curve end points (exactly one 26-neighbour) are kept.
Mask3 skeletonize(const Mask3& m);

/// Harmonic mean of |skel(P) and G| / |skel(P)| and |skel(G) and P| / |skel(G)|.
double cl_dice(const Mask3& p, const Mask3& g, const EmptyPolicy& policy = {});
/// Same, with precomputed skeletons.
double cl_dice_with_skeletons(const Mask3& p, const Mask3& g, const Mask3& skel_p, const Mask3& skel_g,
                              const EmptyPolicy& policy = {});

/// Number of connected foreground components (connectivity 6, 18 or 26).
int count_components(const Mask3& m, int connectivity = 26);

}  // namespace sparsect
