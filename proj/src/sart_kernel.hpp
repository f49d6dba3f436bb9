#pragma once

#include <span>
#include <vector>

#include "sparsect/geometry.hpp"
#include "sparsect/recon.hpp"

namespace sparsect::detail {

/// SART on a double-precision state, shared by sart() and asd_pocs() so that
/// chained calls are bit-identical to one longer run.
class SartEngine {
public:
    SartEngine(const ProjectionStack& p, const Grid3& grid, const SartParams& params);

    /// One pass over all views, updating `x` in place.
    void pass(std::span<double> x);
    /// ||A x - p||_2.
    double residual(std::span<const double> x) const;

private:
    const ProjectionStack& proj_;
    Grid3 grid_;
    SartParams params_;
    std::vector<int> order_;
    std::vector<double> row_residual_;
    std::vector<double> update_;
    std::vector<double> column_sum_;
};

}  // namespace sparsect::detail
