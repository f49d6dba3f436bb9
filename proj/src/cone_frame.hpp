#pragma once

#include <cmath>

#include "sparsect/geometry.hpp"

namespace sparsect::detail {

struct ViewFrame {
    Vec3 source;
    Vec3 det_center;
    Vec3 e_u;
};

inline ViewFrame view_frame(const ConeBeamGeometry& g, int view)
{
    const double a = g.angles_rad[static_cast<std::size_t>(view)];
    const double s = std::sin(a), c = std::cos(a);
    const double d = g.sdd_mm - g.sod_mm;
    return {{g.sod_mm * s, -g.sod_mm * c, 0.0}, {-d * s, d * c, 0.0}, {c, s, 0.0}};
}

inline Vec3 pixel_position(const ConeBeamGeometry& g, const ViewFrame& f, int iv, int iu)
{
    const double u = g.u_of(iu), v = g.v_of(iv);
    return {f.det_center[0] + u * f.e_u[0], f.det_center[1] + u * f.e_u[1], v};
}

}  // namespace sparsect::detail
