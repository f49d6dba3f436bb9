#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsect/geometry.hpp"
#include "sparsect/volume.hpp"

namespace sparsect {

enum class ViewOrder { Sequential, GoldenAngle };

struct SartParams {
    int iterations = 20;
    double relaxation = 0.7;
    ViewOrder view_order = ViewOrder::Sequential;
    /// Start offset of the golden-angle permutation.
    std::uint64_t order_seed = 0;
    bool nonneg_clip = true;

    /// Throws ParameterError when iterations < 0 or relaxation is outside (0, 2).
    void validate() const;
};

struct AsdPocsParams {
    int iterations = 20;
    int tv_steps_per_iter = 20;
    double alpha = 0.2;
    double alpha_red = 0.95;
    double r_max = 0.95;
    /// Data residual below which the TV step is no longer reduced.
    double data_tolerance = 0.0;
    SartParams sart_inner{1, 1.0, ViewOrder::Sequential, 0, true};

    void validate() const;
};

/// Per-iteration record of an iterative reconstruction.
struct IterationDiagnostics {
    int iteration = 0;
    double residual = 0.0;  ///< ||A x - p||_2 after the data-consistency step
    double tv = 0.0;        ///< smoothed TV at the end of the iteration
    double tv_step = 0.0;   ///< TV step length used during the iteration
    /// TV before the first and after every accepted descent step.
    std::vector<double> tv_trace;
};

struct ReconDiagnostics {
    std::vector<IterationDiagnostics> iterations;
};

/// Writes `iteration,residual,tv` rows.
void write_diagnostics_csv(const ReconDiagnostics& d, const std::string& path);

/// Feldkamp-Davis-Kress reconstruction for a full circular scan. Throws
/// ParameterError with fewer than 2 views.
Volume3 fdk(const ProjectionStack& p, const Grid3& grid, Apodization apod = Apodization::Hann);

/// Voxel-driven weighted backprojection of already filtered projections,
/// with magnification weight (sod / U)^2 and per-view angular step.
Volume3 fdk_backproject(const ProjectionStack& filtered, const Grid3& grid);

/// View visiting order used by SART for a given geometry.
std::vector<int> sart_view_order(int n_views, const SartParams& params);

/// Simultaneous algebraic reconstruction, one additive update per view.
/// When `diag` is non-null one entry per pass is appended with the residual.
Volume3 sart(const ProjectionStack& p, const Grid3& grid, const SartParams& params,
             const std::optional<Volume3>& init = std::nullopt, ReconDiagnostics* diag = nullptr);

struct AsdPocsResult {
    Volume3 volume;
    ReconDiagnostics diagnostics;
};

/// Alternating SART data consistency and adaptive steepest-descent TV steps.
AsdPocsResult asd_pocs(const ProjectionStack& p, const Grid3& grid, const AsdPocsParams& params);

/// Isotropic total variation with forward differences and sqrt(|grad|^2 + eps).
inline constexpr double kTvEpsilon = 1e-8;
double total_variation(const Grid3& grid, std::span<const double> x, double eps = kTvEpsilon);
void total_variation_gradient(const Grid3& grid, std::span<const double> x, std::span<double> grad,
                              double eps = kTvEpsilon);

/// ||A x - p||_2 over all views.
double data_residual(const ProjectionStack& p, const Volume3& x);

}  // namespace sparsect
