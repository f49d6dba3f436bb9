#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "sparsect/error.hpp"
#include "sparsect/recon.hpp"

using namespace sparsect;

namespace {

Volume3 ball(const Grid3& g, double r, float value)
{
    std::vector<float> d(g.size(), 0.0f);
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const Vec3 c = g.center_mm(x, y, z);
                if (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] <= r * r)
                    d[g.index(x, y, z)] = value;
            }
    return Volume3(g, std::move(d));
}

ConeBeamGeometry small_geometry(int views)
{
    ConeBeamGeometry g;
    g.angles_rad = ConeBeamGeometry::equispaced_angles(views);
    g.nu = 48;
    g.nv = 48;
    return g;
}

}  // namespace

TEST_CASE("fdk needs at least two views")
{
    const Grid3 grid = Grid3::centered({8, 8, 8}, {1, 1, 1});
    ConeBeamGeometry g = small_geometry(1);
    const ProjectionStack p = forward_project(Volume3(grid), g);
    CHECK_THROWS_AS(fdk(p, grid), ParameterError);
}

TEST_CASE("fdk recovers the amplitude of a uniform ball")
{
    const Grid3 grid = Grid3::centered({32, 32, 32}, {1, 1, 1});
    const Volume3 truth = ball(grid, 10.0, 1.0f);
    const ProjectionStack p = forward_project(truth, small_geometry(180));
    const Volume3 r = fdk(p, grid, Apodization::None);
    double inner = 0, outer = 0;
    int ni = 0, no = 0;
    for (int z = 0; z < 32; ++z)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                const Vec3 c = grid.center_mm(x, y, z);
                const double rr = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
                if (rr < 6) {
                    inner += r.at(x, y, z);
                    ++ni;
                } else if (rr > 13 && rr < 15) {
                    outer += r.at(x, y, z);
                    ++no;
                }
            }
    CHECK(inner / ni == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(outer / no) < 0.05);
}

TEST_CASE("sart view order is a permutation")
{
    SartParams s;
    const auto seq = sart_view_order(10, s);
    CHECK(seq == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    s.view_order = ViewOrder::GoldenAngle;
    s.order_seed = 3;
    const auto gold = sart_view_order(10, s);
    CHECK(std::set<int>(gold.begin(), gold.end()).size() == 10);
    CHECK(gold != seq);
}

TEST_CASE("sart parameter validation and zero iterations")
{
    SartParams s;
    s.relaxation = 2.5;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s.relaxation = 0.7;
    s.iterations = -1;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s.iterations = 0;
    const Grid3 grid = Grid3::centered({8, 8, 8}, {1, 1, 1});
    const ProjectionStack p = forward_project(ball(grid, 3, 1.0f), small_geometry(4));
    const Volume3 r = sart(p, grid, s);
    CHECK(std::all_of(r.data().begin(), r.data().end(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("sart residual decreases monotonically on consistent data")
{
    const Grid3 grid = Grid3::centered({16, 16, 16}, {2, 2, 2});
    const ProjectionStack p = forward_project(ball(grid, 9, 1.0f), small_geometry(12));
    ReconDiagnostics d;
    SartParams s;
    s.iterations = 10;
    const Volume3 r = sart(p, grid, s, std::nullopt, &d);
    REQUIRE(d.iterations.size() == 10);
    for (std::size_t i = 1; i < d.iterations.size(); ++i)
        CHECK(d.iterations[i].residual <= d.iterations[i - 1].residual);
    CHECK(d.iterations.back().residual == doctest::Approx(data_residual(p, r)).epsilon(1e-4));
    CHECK(std::all_of(r.data().begin(), r.data().end(), [](float v) { return v >= 0.0f; }));
}

TEST_CASE("total variation gradient matches finite differences")
{
    const Grid3 grid = Grid3::centered({5, 4, 3}, {1, 1, 1});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> x(grid.size());
    for (auto& v : x)
        v = u(rng);
    std::vector<double> g(grid.size());
    total_variation_gradient(grid, x, g, 1e-4);
    for (std::size_t i = 0; i < x.size(); i += 7) {
        auto xp = x, xm = x;
        const double h = 1e-6;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (total_variation(grid, xp, 1e-4) - total_variation(grid, xm, 1e-4)) / (2 * h);
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("asd-pocs keeps TV non-increasing within each descent and is deterministic")
{
    const Grid3 grid = Grid3::centered({16, 16, 16}, {2, 2, 2});
    const ProjectionStack p = forward_project(ball(grid, 9, 1.0f), small_geometry(10));
    AsdPocsParams a;
    a.iterations = 4;
    a.tv_steps_per_iter = 5;
    const auto r1 = asd_pocs(p, grid, a);
    const auto r2 = asd_pocs(p, grid, a);
    CHECK(std::equal(r1.volume.data().begin(), r1.volume.data().end(), r2.volume.data().begin()));
    REQUIRE(r1.diagnostics.iterations.size() == 4);
    for (const auto& it : r1.diagnostics.iterations) {
        REQUIRE_FALSE(it.tv_trace.empty());
        for (std::size_t k = 1; k < it.tv_trace.size(); ++k)
            CHECK(it.tv_trace[k] <= it.tv_trace[k - 1]);
    }
    CHECK(r1.diagnostics.iterations.back().residual < r1.diagnostics.iterations.front().residual);
}

TEST_CASE("asd-pocs parameter validation")
{
    AsdPocsParams a;
    a.alpha_red = 1.5;
    CHECK_THROWS_AS(a.validate(), ParameterError);
}

TEST_CASE("exact data has zero residual")
{
    const Grid3 grid = Grid3::centered({8, 8, 8}, {1, 1, 1});
    const Volume3 v = ball(grid, 3, 1.0f);
    const ProjectionStack p = forward_project(v, small_geometry(5));
    CHECK(data_residual(p, v) < 1e-4);
}
