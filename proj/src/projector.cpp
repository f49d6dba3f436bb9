#include <algorithm>
#include <cmath>
#include <numbers>

#include "cone_frame.hpp"
#include "ray_traversal.hpp"
#include "raw_io.hpp"
#include "sparsect/error.hpp"
#include "sparsect/geometry.hpp"
#include "sparsect/volume_io.hpp"

namespace sparsect {

std::vector<double> ConeBeamGeometry::equispaced_angles(int n_views)
{
    if (n_views <= 0)
        throw ParameterError("view count must be positive");
    std::vector<double> a(static_cast<std::size_t>(n_views));
    for (int i = 0; i < n_views; ++i)
        a[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * i / n_views;
    return a;
}

void ConeBeamGeometry::validate() const
{
    if (angles_rad.empty())
        throw ParameterError("geometry needs at least one view");
    if (!(sod_mm > 0.0) || !(sdd_mm > sod_mm))
        throw ParameterError("geometry requires sdd > sod > 0");
    if (nu <= 0 || nv <= 0)
        throw ParameterError("detector pixel counts must be positive");
    if (!(du_mm > 0.0) || !(dv_mm > 0.0))
        throw ParameterError("detector spacing must be positive");
    if (!std::isfinite(u0_mm) || !std::isfinite(v0_mm))
        throw ParameterError("detector offset must be finite");
    for (std::size_t i = 0; i < angles_rad.size(); ++i) {
        const double a = angles_rad[i];
        if (!(a >= 0.0) || !(a < 2.0 * std::numbers::pi))
            throw ParameterError("view angles must lie in [0, 2pi)");
        if (i > 0 && !(a > angles_rad[i - 1]))
            throw ParameterError("view angles must be strictly increasing");
    }
}

void ProjectionStack::validate() const
{
    geometry.validate();
    if (data.size() != geometry.size())
        throw IntegrityError("projection payload has " + std::to_string(data.size()) +
                             " values, geometry expects " + std::to_string(geometry.size()));
    for (float v : data)
        if (!std::isfinite(v))
            throw ParameterError("projection stack contains non-finite values");
}

void trace_ray(const Grid3& grid, const Vec3& a, const Vec3& b, std::vector<RaySegment>& out)
{
    out.clear();
    detail::for_each_segment(grid, a, b, [&](std::size_t voxel, double len) {
        out.push_back({voxel, len});
    });
}

using detail::pixel_position;
using detail::view_frame;

Ray detector_ray(const ConeBeamGeometry& g, int view, int iv, int iu)
{
    const auto f = view_frame(g, view);
    return {f.source, pixel_position(g, f, iv, iu)};
}

void forward_project_view(const Volume3& v, const ConeBeamGeometry& g, int view, std::span<float> out)
{
    const auto f = view_frame(g, view);
    const float* vol = v.data().data();
    for (int iv = 0; iv < g.nv; ++iv) {
        for (int iu = 0; iu < g.nu; ++iu) {
            double sum = 0.0;
            detail::for_each_segment(v.grid(), f.source, pixel_position(g, f, iv, iu),
                                     [&](std::size_t voxel, double len) { sum += vol[voxel] * len; });
            out[static_cast<std::size_t>(iv) * static_cast<std::size_t>(g.nu) +
                static_cast<std::size_t>(iu)] = static_cast<float>(sum);
        }
    }
}

ProjectionStack forward_project(const Volume3& v, const ConeBeamGeometry& g)
{
    g.validate();
    ProjectionStack p;
    p.geometry = g;
    p.data.assign(g.size(), 0.0f);
    const int n_views = g.n_views();
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_views; ++i)
        forward_project_view(v, g, i,
                             std::span<float>(p.data).subspan(
                                 static_cast<std::size_t>(i) * g.pixels_per_view(), g.pixels_per_view()));
    p.outside_fov = std::all_of(p.data.begin(), p.data.end(), [](float x) { return x == 0.0f; }) &&
                    std::any_of(v.data().begin(), v.data().end(), [](float x) { return x != 0.0f; });
    return p;
}

void backproject_view_accumulate(std::span<const float> view_data, const ConeBeamGeometry& g, int view,
                                 const Grid3& grid, std::span<double> accum)
{
    const auto f = view_frame(g, view);
    for (int iv = 0; iv < g.nv; ++iv) {
        for (int iu = 0; iu < g.nu; ++iu) {
            const double y = view_data[static_cast<std::size_t>(iv) * static_cast<std::size_t>(g.nu) +
                                       static_cast<std::size_t>(iu)];
            if (y == 0.0)
                continue;
            detail::for_each_segment(grid, f.source, pixel_position(g, f, iv, iu),
                                     [&](std::size_t voxel, double len) { accum[voxel] += y * len; });
        }
    }
}

Volume3 backproject(const ProjectionStack& p, const Grid3& grid)
{
    grid.validate();
    p.geometry.validate();
    if (p.data.size() != p.geometry.size())
        throw ParameterError("projection payload does not match its geometry");

    // Fixed view blocks, each with its own accumulator, summed in block order:
    // the result does not depend on the thread count.
    const int n_views = p.geometry.n_views();
    const int n_blocks = std::min(n_views, 8);
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_blocks));
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < n_blocks; ++b) {
        auto& acc = partial[static_cast<std::size_t>(b)];
        acc.assign(grid.size(), 0.0);
        for (int i = b; i < n_views; i += n_blocks)
            backproject_view_accumulate(p.view(i), p.geometry, i, grid, acc);
    }
    std::vector<float> out(grid.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        double s = 0.0;
        for (const auto& acc : partial)
            s += acc[k];
        out[k] = static_cast<float>(s);
    }
    return Volume3(grid, std::move(out));
}

namespace {

nlohmann::json geometry_to_json(const ConeBeamGeometry& g)
{
    return {{"angles_rad", g.angles_rad}, {"sod_mm", g.sod_mm}, {"sdd_mm", g.sdd_mm},
            {"det_size", {g.nu, g.nv}},   {"det_spacing_mm", {g.du_mm, g.dv_mm}},
            {"det_offset_mm", {g.u0_mm, g.v0_mm}}};
}

ConeBeamGeometry geometry_from_json(const nlohmann::json& j)
{
    ConeBeamGeometry g;
    g.angles_rad = j.at("angles_rad").get<std::vector<double>>();
    g.sod_mm = j.at("sod_mm").get<double>();
    g.sdd_mm = j.at("sdd_mm").get<double>();
    g.nu = j.at("det_size").at(0).get<int>();
    g.nv = j.at("det_size").at(1).get<int>();
    g.du_mm = j.at("det_spacing_mm").at(0).get<double>();
    g.dv_mm = j.at("det_spacing_mm").at(1).get<double>();
    g.u0_mm = j.at("det_offset_mm").at(0).get<double>();
    g.v0_mm = j.at("det_offset_mm").at(1).get<double>();
    return g;
}

}  // namespace

void save_projections(const ProjectionStack& p, const std::filesystem::path& path)
{
    const auto base = artifact_base(path);
    nlohmann::json side;
    side["version"] = kFormatVersion;
    side["kind"] = "projections";
    side["dtype"] = "float32-le";
    side["layout"] = "view,v,u";
    side["geometry"] = geometry_to_json(p.geometry);
    side["outside_fov"] = p.outside_fov;
    detail::write_raw_le(detail::with_suffix(base, ".f32"), p.data.data(), p.data.size());
    detail::write_sidecar(detail::with_suffix(base, ".json"), side);
}

ProjectionStack load_projections(const std::filesystem::path& path)
{
    const auto base = artifact_base(path);
    const auto side_path = detail::with_suffix(base, ".json");
    const auto side = detail::read_sidecar(side_path);
    ProjectionStack p;
    try {
        if (side.at("version").get<std::string>() != kFormatVersion)
            throw FormatError("unsupported format version in '" + side_path.string() + "'");
        p.geometry = geometry_from_json(side.at("geometry"));
        p.outside_fov = side.value("outside_fov", false);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed projection sidecar '" + side_path.string() + "': " + e.what());
    }
    try {
        p.geometry.validate();
    } catch (const ParameterError& e) {
        throw FormatError("invalid geometry in '" + side_path.string() + "': " + e.what());
    }
    p.data = detail::read_raw_le<float>(detail::with_suffix(base, ".f32"));
    if (p.data.size() != p.geometry.size())
        throw IntegrityError("projection payload length does not match sidecar geometry");
    return p;
}

}  // namespace sparsect
