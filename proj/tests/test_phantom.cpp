#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "sparsect/error.hpp"
#include "sparsect/metrics.hpp"
#include "sparsect/phantom.hpp"

using namespace sparsect;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("empty structure list gives background only")
{
    PhantomSpec spec;
    spec.dims = {8, 8, 8};
    spec.body.reset();
    const Phantom ph = make_phantom(spec);
    CHECK(std::all_of(ph.volume.data().begin(), ph.volume.data().end(), [](float v) { return v == 0.0f; }));
    CHECK(std::all_of(ph.labels.labels().begin(), ph.labels.labels().end(), [](auto l) { return l == 0; }));
}

TEST_CASE("default phantom covers every category, is disjoint and deterministic")
{
    const PhantomSpec spec = PhantomSpec::default_spec();
    const Phantom a = make_phantom(spec), b = make_phantom(spec);
    CHECK(std::equal(a.volume.data().begin(), a.volume.data().end(), b.volume.data().begin()));
    CHECK(std::equal(a.labels.labels().begin(), a.labels.labels().end(), b.labels.labels().begin()));
    std::map<Category, int> per_cat;
    for (const auto& [label, info] : a.labels.table()) {
        ++per_cat[info.category];
        CHECK(a.labels.count(label) > 0);
    }
    CHECK(per_cat[Category::LargeOrgan] == 2);
    CHECK(per_cat[Category::SmallOrgan] == 3);
    CHECK(per_cat[Category::Intestine] == 1);
    CHECK(per_cat[Category::Vessel] == 1);
}

TEST_CASE("tube and tree structures are 26-connected")
{
    for (std::uint64_t seed : {7u, 8u, 9u, 31u}) {
        PhantomSpec spec = PhantomSpec::default_spec();
        spec.seed = seed;
        const Phantom ph = make_phantom(spec);
        for (const auto& [label, info] : ph.labels.table())
            if (info.category == Category::Intestine || info.category == Category::Vessel)
                CHECK(count_components(binary_mask(ph.labels, label), 26) == 1);
    }
}

TEST_CASE("tree generation depends on the seed")
{
    TreeShape t;
    t.depth = 3;
    const auto a = expand_tree(t, 1), b = expand_tree(t, 1), c = expand_tree(t, 2);
    REQUIRE(a.size() == 7);
    CHECK(a[3].b == b[3].b);
    CHECK(a[3].b != c[3].b);
    CHECK(a[1].radius_mm == doctest::Approx(t.radius_mm * t.taper));
}

TEST_CASE("rasterised sphere volume matches the analytic volume")
{
    const Grid3 g = Grid3::centered({32, 32, 32}, {0.5, 0.5, 0.5});
    const Mask3 m = rasterize_shape(g, EllipsoidShape{{0.1, -0.2, 0.15}, {5, 5, 5}}, 0);
    const double expected = 4.0 / 3.0 * kPi * 125.0 / g.voxel_volume_mm3();
    CHECK(std::abs(static_cast<double>(m.count()) - expected) / expected < 0.05);
}

TEST_CASE("overlapping structures are a spec error naming the pair")
{
    PhantomSpec spec;
    spec.dims = {16, 16, 16};
    spec.structures = {{"left", Category::LargeOrgan, EllipsoidShape{{-1, 0, 0}, {3, 3, 3}}, 1.2},
                       {"right", Category::LargeOrgan, EllipsoidShape{{1, 0, 0}, {3, 3, 3}}, 1.3}};
    try {
        make_phantom(spec);
        FAIL("expected a spec error");
    } catch (const SpecError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("left") != std::string::npos);
        CHECK(msg.find("right") != std::string::npos);
    }
}

TEST_CASE("phantom spec JSON round trip")
{
    const PhantomSpec spec = PhantomSpec::default_spec();
    const PhantomSpec back = phantom_spec_from_json(to_json(spec));
    CHECK(to_json(back) == to_json(spec));
    const Phantom a = make_phantom(spec), b = make_phantom(back);
    CHECK(std::equal(a.volume.data().begin(), a.volume.data().end(), b.volume.data().begin()));
    CHECK_THROWS_AS(phantom_spec_from_json(nlohmann::json{{"dims", "x"}}), SpecError);
}

TEST_CASE("ablation replaces only the target with surrounding background")
{
    const Phantom ph = make_phantom(PhantomSpec::default_spec());
    const auto label = smallest_structure(ph.labels, Category::SmallOrgan);
    REQUIRE(label.has_value());
    CHECK(ph.labels.info(*label).name == "celiac_trunk");
    const Volume3 ab = ablate_structure(ph.volume, ph.labels, *label);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < ab.size(); ++i) {
        if (ab[i] != ph.volume[i]) {
            ++changed;
            CHECK(ph.labels[i] == *label);
            CHECK(ab[i] == doctest::Approx(1.0));
        }
    }
    CHECK(changed == ph.labels.count(*label));
    CHECK_THROWS_AS(ablate_structure(ph.volume, ph.labels, 0), ParameterError);
    CHECK_THROWS_AS(ablate_structure(ph.volume, ph.labels, 99), LookupError);
}

TEST_CASE("shift and dilate basics")
{
    const Grid3 g = Grid3::centered({12, 12, 12}, {1, 1, 1});
    const Mask3 m = digital_sphere(g, {0, 0, 0}, 3.0);
    CHECK(shift_mask(m, {0, 0, 0}).mask == m);
    CHECK(dilate_mask(m, 0.0) == m);
    const auto s = shift_mask(m, {1.4, -2.6, 0.0});
    CHECK(s.voxel_offset == Index3{1, -3, 0});
    CHECK(s.applied_mm[1] == doctest::Approx(-3.0));
    CHECK(s.mask.count() == m.count());
    // Truncation at the border.
    CHECK(shift_mask(m, {20, 0, 0}).mask.count() == 0);
}

TEST_CASE("dilation of a large sphere grows by the shell volume")
{
    const Grid3 g = Grid3::centered({112, 112, 112}, {1, 1, 1});
    const Mask3 m = digital_sphere(g, {0, 0, 0}, 50.0);
    const Mask3 d = dilate_mask(m, 3.0);
    const double shell = static_cast<double>(d.count()) - static_cast<double>(m.count());
    const double analytic = 4.0 * kPi * 50.0 * 50.0 * 3.0;  // S * delta
    CHECK(std::abs(shell - analytic) / analytic < 0.10);
}

TEST_CASE("slab cut clears a band across a tube")
{
    const Grid3 g = Grid3::centered({10, 10, 30}, {1, 1, 1});
    const Mask3 tube = rasterize_shape(g, TubeShape{{{0, 0, -12}, {0, 0, 12}}, 2.5}, 0);
    const Mask3 cut = cut_slab(tube, {0, 0, 0}, {0, 0, 1}, 3.0, 5.0);
    CHECK(count_components(tube, 26) == 1);
    CHECK(count_components(cut, 26) == 2);
}
