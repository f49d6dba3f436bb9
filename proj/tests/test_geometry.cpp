#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sparsect/error.hpp"
#include "sparsect/geometry.hpp"

using namespace sparsect;

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot(std::span<const float> a, std::span<const float> b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += double(a[i]) * b[i];
    return s;
}

}  // namespace

TEST_CASE("geometry validation")
{
    ConeBeamGeometry g;
    g.angles_rad = ConeBeamGeometry::equispaced_angles(4);
    CHECK_NOTHROW(g.validate());
    CHECK(g.angles_rad[1] == doctest::Approx(kPi / 2));
    auto bad = g;
    bad.sdd_mm = bad.sod_mm;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = g;
    bad.angles_rad = {0.5, 0.1};
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = g;
    bad.nu = 0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("ray through the grid centre along x crosses the full width")
{
    const Grid3 grid = Grid3::centered({8, 8, 8}, {1, 1, 1});
    std::vector<RaySegment> segs;
    // Offset slightly so the ray runs inside a voxel row, not on a face.
    trace_ray(grid, {-20, 0.3, 0.2}, {20, 0.3, 0.2}, segs);
    double total = 0;
    for (const auto& s : segs)
        total += s.length_mm;
    CHECK(segs.size() == 8);
    CHECK(total == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("ray chord length through a box matches the analytic slab intersection")
{
    const Grid3 grid = Grid3::centered({7, 5, 6}, {1.0, 1.5, 0.75});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-12, 12);
    std::vector<RaySegment> segs;
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
        trace_ray(grid, a, b, segs);
        double total = 0;
        for (const auto& s : segs)
            total += s.length_mm;
        // Oracle: slab clipping on the box bounds.
        double t0 = 0, t1 = 1;
        for (int k = 0; k < 3; ++k) {
            const double lo = grid.origin_mm[k] - 0.5 * grid.spacing_mm[k];
            const double hi = lo + grid.dims[k] * grid.spacing_mm[k];
            const double d = b[k] - a[k];
            if (std::abs(d) < 1e-15) {
                if (a[k] < lo || a[k] > hi)
                    t1 = -1;
                continue;
            }
            double ta = (lo - a[k]) / d, tb = (hi - a[k]) / d;
            if (ta > tb)
                std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
        const double len = std::sqrt((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]) +
                                     (b[2] - a[2]) * (b[2] - a[2]));
        const double expected = t1 > t0 ? (t1 - t0) * len : 0.0;
        CHECK(total == doctest::Approx(expected).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("forward projection of a uniform ball matches analytic chord lengths at the central pixel")
{
    const Grid3 grid = Grid3::centered({48, 48, 48}, {1, 1, 1});
    std::vector<float> d(grid.size(), 0.0f);
    const double r = 15;
    // 3x3x3 supersampled occupancy for a smooth digital ball.
    for (int z = 0; z < 48; ++z)
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) {
                const Vec3 c = grid.center_mm(x, y, z);
                int inside = 0;
                for (int k = -1; k <= 1; ++k)
                    for (int j = -1; j <= 1; ++j)
                        for (int i = -1; i <= 1; ++i) {
                            const double px = c[0] + i / 3.0, py = c[1] + j / 3.0, pz = c[2] + k / 3.0;
                            inside += px * px + py * py + pz * pz <= r * r;
                        }
                d[grid.index(x, y, z)] = inside / 27.0f;
            }
    ConeBeamGeometry g;
    g.angles_rad = ConeBeamGeometry::equispaced_angles(3);
    g.nu = g.nv = 2;  // pixels at +/-1 mm, rays through near the centre
    const ProjectionStack p = forward_project(Volume3(grid, d), g);
    for (int v = 0; v < 3; ++v)
        CHECK(p.at(v, 0, 0) == doctest::Approx(2 * r).epsilon(0.02));
}

TEST_CASE("forward and back projection are adjoint")
{
    std::mt19937_64 rng(5);
    const Grid3 grid = Grid3::centered({12, 10, 8}, {1.5, 1.5, 1.5});
    ConeBeamGeometry g;
    g.angles_rad = ConeBeamGeometry::equispaced_angles(7);
    g.nu = 24;
    g.nv = 20;
    g.du_mm = g.dv_mm = 1.6;
    const Volume3 x = oracle::random_volume(grid, 0, 1, rng);
    ProjectionStack y{g, std::vector<float>(g.size()), false};
    std::uniform_real_distribution<float> u(-1, 1);
    for (auto& v : y.data)
        v = u(rng);
    const ProjectionStack ax = forward_project(x, g);
    const Volume3 aty = backproject(y, grid);
    const double lhs = dot(ax.data, y.data), rhs = dot(x.data(), aty.data());
    CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-5);
}

TEST_CASE("ramp kernel samples")
{
    const double tau = 0.5;
    CHECK(ramp_kernel_sample(0, tau) == doctest::Approx(1.0 / (4 * tau * tau)));
    CHECK(ramp_kernel_sample(2, tau) == 0.0);
    CHECK(ramp_kernel_sample(-3, tau) == doctest::Approx(-1.0 / (kPi * kPi * 9 * tau * tau)));
}

TEST_CASE("ramp filter pads to the next power of two at least twice the row")
{
    CHECK(RampFilter(80, 1.0, Apodization::None).padded_length() == 256);
    CHECK(RampFilter(64, 1.0, Apodization::None).padded_length() == 128);
    CHECK(RampFilter(5, 1.0, Apodization::None).padded_length() == 16);
}

TEST_CASE("ramp filter of a constant row removes the DC component")
{
    const RampFilter f(80, 1.0, Apodization::None);
    std::vector<double> row(80, 3.0);
    const auto out = f.apply_padded(row);
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    CHECK(std::abs(mean) < 1e-6 * 3.0);
}

TEST_CASE("ramp filter impulse response equals the spatial kernel")
{
    // With the DC bin removed, the circular impulse response is the wrapped
    // spatial kernel minus its period mean, scaled by the sample spacing.
    const int n = 40;
    const double tau = 0.8;
    const RampFilter f(n, tau, Apodization::None);
    const int m = f.padded_length();
    std::vector<double> impulse(n, 0.0);
    impulse[7] = 1.0;
    const auto out = f.apply_padded(impulse);
    std::vector<double> wrapped(m, 0.0);
    for (int k = -m / 2; k < m / 2; ++k)
        wrapped[(k + m) % m] = ramp_kernel_sample(k, tau);
    const double mean = std::accumulate(wrapped.begin(), wrapped.end(), 0.0) / m;
    for (int i = 0; i < m; ++i) {
        const double expected = tau * (wrapped[((i - 7) % m + m) % m] - mean);
        CHECK(out[i] == doctest::Approx(expected).epsilon(1e-9).scale(1.0 / (tau * tau)));
    }
}

TEST_CASE("hann apodisation attenuates high frequencies only")
{
    const RampFilter none(64, 1.0, Apodization::None), hann(64, 1.0, Apodization::Hann);
    const auto& a = none.response();
    const auto& b = hann.response();
    CHECK(a[0] == 0.0);
    CHECK(b[0] == 0.0);
    CHECK(b[1] == doctest::Approx(a[1]).epsilon(1e-3));
    CHECK(std::abs(b[b.size() - 1]) < 1e-12 + 1e-6 * std::abs(a[a.size() - 1]));
    CHECK(apodization_from_string("hann") == Apodization::Hann);
    CHECK_THROWS_AS(apodization_from_string("cosine"), ParameterError);
}

TEST_CASE("fdk filter is linear and shift-equivariant along u")
{
    ConeBeamGeometry g;
    g.angles_rad = {0.0};
    g.nu = 32;
    g.nv = 1;
    ProjectionStack a{g, std::vector<float>(32, 0.0f), false}, b = a;
    a.data[10] = 1.0f;
    b.data[13] = 1.0f;
    // Undo the cosine weight so the comparison sees the filter alone.
    const auto fa = fdk_filter(a, Apodization::None), fb = fdk_filter(b, Apodization::None);
    auto cosw = [&](int iu) {
        const double u = g.u_of(iu), v = g.v_of(0);
        return g.sdd_mm / std::sqrt(g.sdd_mm * g.sdd_mm + u * u + v * v);
    };
    for (int i = 0; i + 3 < 32; ++i)
        CHECK(fa.data[i] / cosw(10) == doctest::Approx(fb.data[i + 3] / cosw(13)).epsilon(1e-5).scale(1e-3));
}

TEST_CASE("projection stack round trip and validation")
{
    const auto dir = std::filesystem::temp_directory_path() / "sparsect_test_proj";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    ConeBeamGeometry g;
    g.angles_rad = ConeBeamGeometry::equispaced_angles(3);
    g.nu = 4;
    g.nv = 2;
    ProjectionStack p{g, std::vector<float>(g.size()), false};
    for (std::size_t i = 0; i < p.data.size(); ++i)
        p.data[i] = static_cast<float>(i) * 0.5f;
    save_projections(p, dir / "p");
    const auto q = load_projections(dir / "p.f32");
    CHECK(q.geometry == g);
    CHECK(q.data == p.data);
    p.data.pop_back();
    CHECK_THROWS_AS(p.validate(), IntegrityError);
}
