#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "sparsect/volume.hpp"

namespace sparsect {

/**
 * Circular cone-beam trajectory around the z axis.
 *
 * For view angle a the source sits at sod * (sin a, -cos a, 0) and the flat
 * detector centre at (sdd - sod) * (-sin a, cos a, 0). The detector u axis is
 * (cos a, sin a, 0) and v is +z. Pixel (iu, iv) is centred at
 * u = (iu - (nu - 1) / 2) * du + u0 and v = (iv - (nv - 1) / 2) * dv + v0.
 */
struct ConeBeamGeometry {
    std::vector<double> angles_rad;
    double sod_mm = 250.0;
    double sdd_mm = 500.0;
    int nu = 80;
    int nv = 80;
    double du_mm = 2.0;
    double dv_mm = 2.0;
    double u0_mm = 0.0;
    double v0_mm = 0.0;

    /// `n_views` angles equally spaced over [0, 2pi).
    static std::vector<double> equispaced_angles(int n_views);

    int n_views() const noexcept { return static_cast<int>(angles_rad.size()); }
    std::size_t pixels_per_view() const noexcept
    {
        return static_cast<std::size_t>(nu) * static_cast<std::size_t>(nv);
    }
    std::size_t size() const noexcept { return pixels_per_view() * angles_rad.size(); }

    double u_of(int iu) const noexcept { return (iu - 0.5 * (nu - 1)) * du_mm + u0_mm; }
    double v_of(int iv) const noexcept { return (iv - 0.5 * (nv - 1)) * dv_mm + v0_mm; }

    /// Throws ParameterError unless sdd > sod > 0, counts and spacings are
    /// positive and angles strictly increase within [0, 2pi).
    void validate() const;

    bool operator==(const ConeBeamGeometry&) const = default;
};

/// Line integrals, laid out view-major, then detector row (v), then column (u).
struct ProjectionStack {
    ConeBeamGeometry geometry;
    std::vector<float> data;
    /// Set when every ray missed the volume.
    bool outside_fov = false;

    float at(int view, int iv, int iu) const noexcept
    {
        return data[(static_cast<std::size_t>(view) * geometry.nv + iv) * geometry.nu + iu];
    }
    std::span<const float> view(int i) const noexcept
    {
        return std::span<const float>(data).subspan(
            static_cast<std::size_t>(i) * geometry.pixels_per_view(), geometry.pixels_per_view());
    }
    /// Throws IntegrityError on a length mismatch, ParameterError on invalid
    /// geometry or non-finite values.
    void validate() const;
};

/// One traversal step: flat voxel index and intersection length in mm.
struct RaySegment {
    std::size_t voxel;
    double length_mm;
};

/// Exact (Siddon-style) intersections of the segment a->b with the voxel grid,
/// in traversal order. Voxels are treated as piecewise-constant boxes.
void trace_ray(const Grid3& grid, const Vec3& a, const Vec3& b, std::vector<RaySegment>& out);

/// Source and detector-pixel world positions for one ray.
struct Ray {
    Vec3 source;
    Vec3 pixel;
};
Ray detector_ray(const ConeBeamGeometry& g, int view, int iv, int iu);

/// Ray-driven forward projection of `v` for all views.
ProjectionStack forward_project(const Volume3& v, const ConeBeamGeometry& g);

/// Forward projection of a single view into `out` (nv * nu values).
void forward_project_view(const Volume3& v, const ConeBeamGeometry& g, int view,
                          std::span<float> out);

/// Unweighted adjoint of forward_project (scatters intersection lengths).
Volume3 backproject(const ProjectionStack& p, const Grid3& grid);

/// Adjoint of a single view, accumulated into `accum` (double precision).
void backproject_view_accumulate(std::span<const float> view_data, const ConeBeamGeometry& g,
                                 int view, const Grid3& grid, std::span<double> accum);

enum class Apodization { None, Hann };

const char* to_string(Apodization a) noexcept;
Apodization apodization_from_string(const std::string& s);

/**
 * Ramp filter applied along detector rows by FFT multiplication.
 *
 * The response is the DFT of the band-limited spatial ramp kernel sampled at
 * `sample_spacing_mm`, with the DC bin forced to zero, optionally multiplied by
 * a Hann window. Rows are zero-padded to the next power of two >= 2 * row_length.
 */
class RampFilter {
public:
    RampFilter(int row_length, double sample_spacing_mm, Apodization apod);

    int row_length() const noexcept { return row_length_; }
    int padded_length() const noexcept { return padded_; }
    double sample_spacing() const noexcept { return spacing_; }
    /// Real frequency response, one value per FFT bin.
    const std::vector<double>& response() const noexcept { return response_; }

    /// Filters `row` in place (row_length values).
    void apply(std::span<double> row) const;
    /// Full circular convolution result over the padded length.
    std::vector<double> apply_padded(std::span<const double> row) const;

private:
    int row_length_;
    int padded_;
    double spacing_;
    std::vector<double> response_;
};

/// Spatial band-limited ramp kernel h[n] (units 1/mm^2) at spacing tau.
double ramp_kernel_sample(int n, double tau_mm) noexcept;

/**
 * Feldkamp pre-weighting and row filtering: each pixel is multiplied by
 * sdd / sqrt(sdd^2 + u^2 + v^2), then every row is ramp filtered with the
 * kernel sampled at the isocentre-magnified spacing du * sod / sdd and scaled
 * by that spacing (discrete convolution integral).
 */
ProjectionStack fdk_filter(const ProjectionStack& p, Apodization apod);

void save_projections(const ProjectionStack& p, const std::filesystem::path& base);
ProjectionStack load_projections(const std::filesystem::path& base);

}  // namespace sparsect
