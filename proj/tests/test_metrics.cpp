#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sparsect/error.hpp"
#include "sparsect/metrics.hpp"
#include "sparsect/phantom.hpp"
#include "sparsect/segment.hpp"

using namespace sparsect;

namespace {

Mask3 mask_of(const Grid3& g, std::initializer_list<Index3> on)
{
    std::vector<std::uint8_t> b(g.size(), 0);
    for (const auto& c : on)
        b[g.index(c[0], c[1], c[2])] = 1;
    return Mask3(g, std::move(b));
}

}  // namespace

TEST_CASE("psnr")
{
    const Grid3 g = Grid3::centered({4, 4, 4}, {1, 1, 1});
    std::mt19937_64 rng(1);
    const Volume3 a = oracle::random_volume(g, 0, 1, rng);
    CHECK(psnr(a, a, 1.0) == kPsnrInfinity);
    std::vector<float> shifted(a.data().begin(), a.data().end());
    std::vector<float> zeros(g.size(), 0.0f), tenth(g.size(), 0.1f);
    CHECK(psnr(Volume3(g, zeros), Volume3(g, tenth), 1.0) == doctest::Approx(20.0).epsilon(1e-6));
    const Volume3 b = oracle::random_volume(g, 0, 1, rng);
    CHECK(psnr(a, b, 1.0) == doctest::Approx(oracle::psnr(a, b, 1.0)).epsilon(1e-9));
    CHECK_THROWS_AS(psnr(a, Volume3(Grid3::centered({4, 4, 3}, {1, 1, 1})), 1.0), ParameterError);
    CHECK_THROWS_AS(psnr(a, b, 0.0), ParameterError);
}

TEST_CASE("ssim")
{
    const Grid3 g = Grid3::centered({32, 32, 4}, {1, 1, 1});
    std::mt19937_64 rng(2);
    const Volume3 a = oracle::random_volume(g, 0, 1, rng);
    CHECK(ssim(a, a) == doctest::Approx(1.0));
    // Inverting the intensities keeps local means near 0.5 but flips the covariance.
    std::vector<float> inv(g.size());
    for (std::size_t i = 0; i < inv.size(); ++i)
        inv[i] = 1.0f - a[i];
    CHECK(ssim(a, Volume3(g, inv)) < 0.0);
    const Volume3 b = oracle::random_volume(g, 0, 1, rng);
    CHECK(std::abs(ssim(a, b) - oracle::ssim(a, b)) <= 1e-6);
    CHECK_THROWS_AS(ssim(Volume3(Grid3::centered({8, 8, 2}, {1, 1, 1})),
                         Volume3(Grid3::centered({8, 8, 2}, {1, 1, 1}))),
                    ParameterError);
}

TEST_CASE("dsc basics and empty policy")
{
    const Grid3 g = Grid3::centered({3, 3, 3}, {1, 1, 1});
    const Mask3 a = mask_of(g, {{0, 0, 0}, {1, 0, 0}}), b = mask_of(g, {{2, 2, 2}}), e(g);
    CHECK(dsc(a, a) == 1.0);
    CHECK(dsc(a, b) == 0.0);
    CHECK(dsc(e, e) == 1.0);
    CHECK(dsc(a, e) == 0.0);
    CHECK(dsc(a, mask_of(g, {{0, 0, 0}})) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("surface extraction")
{
    const Grid3 g = Grid3::centered({4, 4, 4}, {1, 1, 1});
    CHECK(extract_surface(mask_of(g, {{1, 1, 1}})).size() == 6);
    CHECK(extract_surface(mask_of(g, {{1, 1, 1}, {2, 1, 1}})).size() == 10);
    CHECK(extract_surface(Mask3(g)).empty());
    const Mask3 full(g, std::vector<std::uint8_t>(g.size(), 1));
    const auto s = extract_surface(full);
    CHECK(s.size() == 6 * 16);
    for (const auto& p : s.points) {
        bool on_border = false;
        for (int a = 0; a < 3; ++a)
            on_border = on_border || std::abs(std::abs(p[a]) - 2.0) < 1e-12;
        CHECK(on_border);
    }
    // Points lie on half-spacing offsets.
    const Grid3 h = Grid3::centered({5, 5, 5}, {0.5, 1.0, 2.0});
    for (const auto& p : extract_surface(mask_of(h, {{2, 2, 2}})).points) {
        int half = 0;
        for (int a = 0; a < 3; ++a) {
            const double k = (p[a] - h.origin_mm[a]) / h.spacing_mm[a];
            half += std::abs(k - std::round(k)) > 0.25;
        }
        CHECK(half == 1);
    }
}

TEST_CASE("surface index queries match brute force")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-10, 10);
    std::vector<Vec3> pts(300);
    for (auto& p : pts)
        p = {u(rng), u(rng), u(rng)};
    const SurfaceIndex idx(pts, 2.0);
    for (int q = 0; q < 200; ++q) {
        const Vec3 c{u(rng) * 1.3, u(rng) * 1.3, u(rng) * 1.3};
        double best = INFINITY;
        for (const auto& p : pts)
            best = std::min(best, (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]) +
                                      (p[2] - c[2]) * (p[2] - c[2]));
        CHECK(idx.nearest_sq(c) == best);
        for (double r : {0.5, 2.0, 3.5})
            CHECK(idx.any_within(c, r) == (best <= r * r));
    }
    CHECK(std::isinf(SurfaceIndex({}, 1.0).nearest_sq({0, 0, 0})));
}

TEST_CASE("nsd")
{
    const Grid3 g = Grid3::centered({8, 8, 8}, {1, 1, 1});
    std::mt19937_64 rng(4);
    const Mask3 a = oracle::random_mask(g, 0.3, rng), b = oracle::random_mask(g, 0.3, rng);
    CHECK(nsd(a, a, 0.5) == 1.0);
    CHECK(nsd(a, b, 1.0) == oracle::nsd(a, b, 1.0));
    CHECK(nsd(a, b, 1.0) == nsd(b, a, 1.0));
    CHECK(nsd(Mask3(g), Mask3(g), 1.0) == 1.0);
    CHECK(nsd(a, Mask3(g), 1.0) == 0.0);
    CHECK_THROWS_AS(nsd(a, b, 0.0), ParameterError);
}

TEST_CASE("simple point test agrees with the union-find oracle on random neighbourhoods")
{
    std::mt19937_64 rng(12);
    const Grid3 g = Grid3::centered({3, 3, 3}, {1, 1, 1});
    for (int trial = 0; trial < 3000; ++trial) {
        Mask3 m = oracle::random_mask(g, trial % 2 ? 0.35 : 0.65, rng);
        std::uint8_t nb[27];
        for (int i = 0; i < 27; ++i)
            nb[i] = m.bits()[i];
        CHECK(is_simple_point(nb) == oracle::is_simple(m, 1, 1, 1));
    }
}

TEST_CASE("skeletonize")
{
    const Grid3 g = Grid3::centered({12, 12, 50}, {1, 1, 1});
    CHECK(skeletonize(Mask3(g)).empty());
    std::vector<std::uint8_t> line(g.size(), 0);
    for (int z = 5; z < 40; ++z)
        line[g.index(4, 6, z)] = 1;
    const Mask3 l(g, line);
    CHECK(skeletonize(l) == l);

    const Mask3 tube = rasterize_shape(g, TubeShape{{{0, 0, -20}, {0, 0, 20}}, 3.0}, 0);
    const Mask3 skel = skeletonize(tube);
    CHECK(count_components(skel, 26) == 1);
    CHECK(skel.count() < 60);
    for (std::size_t i = 0; i < skel.size(); ++i)
        if (skel[i])
            CHECK(tube[i]);  // subset of the input
    // Thin: no voxel of the skeleton is simple unless it is an end point.
    for (int z = 0; z < 50; ++z)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x)
                if (skel.at(x, y, z) && oracle::neighbours26(skel, x, y, z) > 1)
                    CHECK_FALSE(oracle::is_simple(skel, x, y, z));
    CHECK(skel == oracle::skeletonize(tube));
}

TEST_CASE("cl_dice")
{
    const Grid3 g = Grid3::centered({12, 12, 40}, {1, 1, 1});
    const Mask3 tube = rasterize_shape(g, TubeShape{{{0, 0, -16}, {0, 0, 16}}, 2.5}, 0);
    CHECK(cl_dice(tube, tube) == 1.0);
    CHECK(cl_dice(Mask3(g), tube) == 0.0);
    CHECK(cl_dice(Mask3(g), Mask3(g)) == 1.0);
    // Voxel centres sit at half-integer z, so a slab around z = 0.5 clears three slices.
    const Mask3 cut = cut_slab(tube, {0, 0, 0.5}, {0, 0, 1}, 3.0, 5.0);
    CHECK(tube.count() - cut.count() == 3 * 24);
    CHECK(count_components(skeletonize(cut), 26) == 2);
    CHECK(cl_dice(cut, tube) < 1.0);
    CHECK(cl_dice(cut, tube) == cl_dice(tube, cut));
    std::mt19937_64 rng(6);
    const Grid3 s = Grid3::centered({8, 8, 8}, {1, 1, 1});
    for (int trial = 0; trial < 20; ++trial) {
        const Mask3 a = oracle::random_mask(s, 0.5, rng), b = oracle::random_mask(s, 0.5, rng);
        CHECK(cl_dice(a, b) == doctest::Approx(oracle::cl_dice(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("a gap in a thin vessel branch costs more clDice than dsc")
{
    const PhantomSpec spec = PhantomSpec::default_spec();
    const Phantom ph = make_phantom(spec);
    std::size_t k = 0;
    while (spec.structures[k].category != Category::Vessel)
        ++k;
    const Mask3 vessel = binary_mask(ph.labels, *ph.labels.find(spec.structures[k].name));
    const auto caps = shape_capsules(spec.structures[k].shape, structure_seed(spec.seed, k));
    const auto thin = std::min_element(caps.begin(), caps.end(),
                                       [](const Capsule& a, const Capsule& b) { return a.radius_mm < b.radius_mm; });
    const Vec3 mid{(thin->a[0] + thin->b[0]) / 2, (thin->a[1] + thin->b[1]) / 2, (thin->a[2] + thin->b[2]) / 2};
    const Vec3 axis{thin->b[0] - thin->a[0], thin->b[1] - thin->a[1], thin->b[2] - thin->a[2]};
    const Mask3 cut = cut_slab(vessel, mid, axis, 3.0, thin->radius_mm + 1.5);
    REQUIRE(count_components(cut, 26) > 1);
    CHECK(1.0 - cl_dice(cut, vessel) > 1.0 - dsc(cut, vessel));
    CHECK(count_components(skeletonize(vessel), 26) == 1);
}

TEST_CASE("count components by connectivity")
{
    const Grid3 g = Grid3::centered({3, 3, 3}, {1, 1, 1});
    const Mask3 diag = mask_of(g, {{0, 0, 0}, {1, 1, 1}});
    CHECK(count_components(diag, 26) == 1);
    CHECK(count_components(diag, 18) == 2);
    CHECK(count_components(mask_of(g, {{0, 0, 0}, {1, 1, 0}}), 18) == 1);
    CHECK(count_components(mask_of(g, {{0, 0, 0}, {1, 1, 0}}), 6) == 2);
    CHECK_THROWS_AS(count_components(diag, 8), ParameterError);
}

TEST_CASE("segmenting the reference reproduces its labels; an ablated structure is not found")
{
    const Phantom ph = make_phantom(PhantomSpec::default_spec());
    for (const auto& [label, info] : ph.labels.table())
        CHECK(segment_structure(ph.volume, ph.volume, ph.labels, label) == binary_mask(ph.labels, label));
    const auto target = *smallest_structure(ph.labels, Category::SmallOrgan);
    const Volume3 ab = ablate_structure(ph.volume, ph.labels, target);
    CHECK(segment_structure(ab, ph.volume, ph.labels, target).empty());
    CHECK_THROWS_AS(segment_structure(ph.volume, ph.volume, ph.labels, 0), ParameterError);
    CHECK_THROWS_AS(segment_structure(ph.volume, ph.volume, ph.labels, 42), LookupError);
}
