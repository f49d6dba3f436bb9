#include "sparsect/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "sparsect/error.hpp"

namespace sparsect {

using nlohmann::json;

namespace {

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
Vec3 normalized(const Vec3& a)
{
    const double n = std::sqrt(dot(a, a));
    if (!(n > 0.0))
        throw SpecError("direction vector must be nonzero");
    return scale(a, 1.0 / n);
}

// Rodrigues rotation of v about unit axis k.
Vec3 rotate(const Vec3& v, const Vec3& k, double angle)
{
    const double c = std::cos(angle), s = std::sin(angle);
    return add(add(scale(v, c), scale(cross(k, v), s)), scale(k, dot(k, v) * (1.0 - c)));
}

// Uniform in [0, 1) from the top 53 bits; std distributions are not portable.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double segment_distance_sq(const Vec3& p, const Capsule& c)
{
    const Vec3 ab = sub(c.b, c.a);
    const Vec3 ap = sub(p, c.a);
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(ap, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec3 d = sub(ap, scale(ab, t));
    return dot(d, d);
}

void build_tree(const TreeShape& tree, const Vec3& start, const Vec3& dir, double length, double radius,
                int level, std::mt19937_64& rng, std::vector<Capsule>& out)
{
    const Vec3 end = add(start, scale(dir, length));
    out.push_back({start, end, radius});
    if (level + 1 >= tree.depth)
        return;
    // Bifurcation plane: contains dir and the reference axis, then rolled by jitter.
    Vec3 ref{0, 1, 0};
    if (std::abs(dot(ref, dir)) > 0.9)
        ref = {1, 0, 0};
    const double deg = std::numbers::pi / 180.0;
    const double roll = (2.0 * uniform01(rng) - 1.0) * tree.jitter_deg * deg;
    const Vec3 axis = rotate(normalized(cross(dir, ref)), dir, roll);
    for (int side : {-1, 1}) {
        const double jitter = (2.0 * uniform01(rng) - 1.0) * tree.jitter_deg * deg;
        const double angle = side * tree.branch_angle_deg * deg + jitter;
        const Vec3 child = normalized(rotate(dir, axis, angle));
        build_tree(tree, end, child, length * tree.taper, radius * tree.taper, level + 1, rng, out);
    }
}

struct Primitive {
    Vec3 lo, hi;  // world bounding box
    std::variant<EllipsoidShape, Capsule> geom;
};

std::vector<Primitive> primitives(const Shape& shape, std::uint64_t seed)
{
    std::vector<Primitive> out;
    if (const auto* e = std::get_if<EllipsoidShape>(&shape)) {
        out.push_back({sub(e->center_mm, e->radii_mm), add(e->center_mm, e->radii_mm), *e});
        return out;
    }
    for (const auto& c : shape_capsules(shape, seed)) {
        Primitive p;
        for (int k = 0; k < 3; ++k) {
            p.lo[k] = std::min(c.a[k], c.b[k]) - c.radius_mm;
            p.hi[k] = std::max(c.a[k], c.b[k]) + c.radius_mm;
        }
        p.geom = c;
        out.push_back(p);
    }
    return out;
}

bool inside(const Primitive& p, const Vec3& x)
{
    if (const auto* e = std::get_if<EllipsoidShape>(&p.geom)) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double t = (x[k] - e->center_mm[k]) / e->radii_mm[k];
            s += t * t;
        }
        return s <= 1.0;
    }
    const auto& c = std::get<Capsule>(p.geom);
    return segment_distance_sq(x, c) <= c.radius_mm * c.radius_mm;
}

void validate_shape(const Shape& shape, const std::string& name)
{
    if (const auto* e = std::get_if<EllipsoidShape>(&shape)) {
        for (double r : e->radii_mm)
            if (!(r > 0.0))
                throw SpecError("structure '" + name + "': ellipsoid radii must be positive");
    } else if (const auto* t = std::get_if<TubeShape>(&shape)) {
        if (t->points_mm.empty() || !(t->radius_mm > 0.0))
            throw SpecError("structure '" + name + "': tube needs points and a positive radius");
    } else {
        const auto& tr = std::get<TreeShape>(shape);
        if (tr.depth < 1 || !(tr.radius_mm > 0.0) || !(tr.length_mm > 0.0) || !(tr.taper > 0.0))
            throw SpecError("structure '" + name + "': tree needs depth >= 1 and positive sizes");
    }
}

}  // namespace

std::uint64_t structure_seed(std::uint64_t phantom_seed, std::size_t index)
{
    return phantom_seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1));
}

std::vector<Capsule> expand_tree(const TreeShape& tree, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Capsule> out;
    build_tree(tree, tree.root_mm, normalized(tree.direction), tree.length_mm, tree.radius_mm, 0, rng, out);
    return out;
}

std::vector<Capsule> shape_capsules(const Shape& shape, std::uint64_t seed)
{
    if (const auto* t = std::get_if<TubeShape>(&shape)) {
        std::vector<Capsule> out;
        if (t->points_mm.size() == 1)
            out.push_back({t->points_mm[0], t->points_mm[0], t->radius_mm});
        for (std::size_t i = 1; i < t->points_mm.size(); ++i)
            out.push_back({t->points_mm[i - 1], t->points_mm[i], t->radius_mm});
        return out;
    }
    if (const auto* tr = std::get_if<TreeShape>(&shape))
        return expand_tree(*tr, seed);
    return {};
}

Mask3 rasterize_shape(const Grid3& grid, const Shape& shape, std::uint64_t seed)
{
    grid.validate();
    const auto prims = primitives(shape, seed);
    const int sx = 2 * grid.dims[0], sy = 2 * grid.dims[1], sz = 2 * grid.dims[2];
    std::vector<std::uint8_t> sub_hits(static_cast<std::size_t>(sx) * sy * sz, 0);
    auto sub_center = [&](int k, int i) {
        // Sub-sample i sits at voxel centre -/+ a quarter spacing.
        return grid.origin_mm[k] + (i / 2) * grid.spacing_mm[k] + ((i % 2) ? 0.25 : -0.25) * grid.spacing_mm[k];
    };
    auto sub_range = [&](int k, double lo, double hi, int n) {
        const double s = 0.5 * grid.spacing_mm[k];
        const double base = grid.origin_mm[k] - 0.25 * grid.spacing_mm[k];
        int a = static_cast<int>(std::floor((lo - base) / s)) - 1;
        int b = static_cast<int>(std::ceil((hi - base) / s)) + 1;
        return std::pair{std::max(a, 0), std::min(b, n - 1)};
    };
    for (const auto& p : prims) {
        const auto [x0, x1] = sub_range(0, p.lo[0], p.hi[0], sx);
        const auto [y0, y1] = sub_range(1, p.lo[1], p.hi[1], sy);
        const auto [z0, z1] = sub_range(2, p.lo[2], p.hi[2], sz);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const std::size_t i = (static_cast<std::size_t>(z) * sy + y) * sx + x;
                    if (!sub_hits[i] && inside(p, {sub_center(0, x), sub_center(1, y), sub_center(2, z)}))
                        sub_hits[i] = 1;
                }
    }
    std::vector<std::uint8_t> bits(grid.size(), 0);
    const int nz = grid.dims[2];
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < grid.dims[1]; ++y)
            for (int x = 0; x < grid.dims[0]; ++x) {
                int count = 0;
                for (int dz = 0; dz < 2; ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx)
                            count += sub_hits[(static_cast<std::size_t>(2 * z + dz) * sy + 2 * y + dy) * sx +
                                              2 * x + dx];
                bits[grid.index(x, y, z)] = count >= 4;
            }
    return Mask3(grid, std::move(bits));
}

Phantom make_phantom(const PhantomSpec& spec)
{
    const Grid3 grid = spec.grid();
    grid.validate();
    std::vector<float> intensity(grid.size(), 0.0f);
    std::vector<std::uint16_t> labels(grid.size(), 0);
    LabelTable table;

    if (spec.body) {
        const auto body = rasterize_shape(grid, EllipsoidShape{spec.body->center_mm, spec.body->radii_mm}, 0);
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (body[i])
                intensity[i] = static_cast<float>(spec.body->attenuation);
    }
    if (spec.structures.size() > 65535)
        throw SpecError("too many structures");
    for (std::size_t s = 0; s < spec.structures.size(); ++s) {
        const auto& st = spec.structures[s];
        validate_shape(st.shape, st.name);
        for (std::size_t t = 0; t < s; ++t)
            if (spec.structures[t].name == st.name)
                throw SpecError("duplicate structure name '" + st.name + "'");
        const auto id = static_cast<std::uint16_t>(s + 1);
        table[id] = LabelInfo{st.name, st.category};
        const auto mask = rasterize_shape(grid, st.shape, structure_seed(spec.seed, s));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!mask[i])
                continue;
            if (labels[i] != 0)
                throw SpecError("structures '" + spec.structures[labels[i] - 1].name + "' and '" + st.name +
                                "' overlap");
            labels[i] = id;
            intensity[i] = static_cast<float>(st.attenuation);
        }
    }
    return {Volume3(grid, std::move(intensity)), LabelVolume(grid, std::move(labels), std::move(table))};
}

Mask3 dilate_mask(const Mask3& m, double delta_mm)
{
    if (!(delta_mm >= 0.0))
        throw ParameterError("dilation radius must be >= 0");
    const Grid3& g = m.grid();
    int reach[3];
    for (int k = 0; k < 3; ++k)
        reach[k] = static_cast<int>(std::floor(delta_mm / g.spacing_mm[k]));
    std::vector<Index3> ball;
    for (int dz = -reach[2]; dz <= reach[2]; ++dz)
        for (int dy = -reach[1]; dy <= reach[1]; ++dy)
            for (int dx = -reach[0]; dx <= reach[0]; ++dx) {
                const double x = dx * g.spacing_mm[0], y = dy * g.spacing_mm[1], z = dz * g.spacing_mm[2];
                if (x * x + y * y + z * z <= delta_mm * delta_mm)
                    ball.push_back({dx, dy, dz});
            }
    std::vector<std::uint8_t> out(m.bits().begin(), m.bits().end());
    // The nearest foreground voxel of any background voxel is a border voxel,
    // so stamping the ball at border voxels only gives the exact dilation.
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                if (!m.at(x, y, z))
                    continue;
                const bool border = !m.get(x - 1, y, z) || !m.get(x + 1, y, z) || !m.get(x, y - 1, z) ||
                                    !m.get(x, y + 1, z) || !m.get(x, y, z - 1) || !m.get(x, y, z + 1);
                if (!border)
                    continue;
                for (const auto& o : ball) {
                    const int qx = x + o[0], qy = y + o[1], qz = z + o[2];
                    if (g.contains(qx, qy, qz))
                        out[g.index(qx, qy, qz)] = 1;
                }
            }
    return Mask3(g, std::move(out));
}

ShiftResult shift_mask(const Mask3& m, const Vec3& offset_mm)
{
    const Grid3& g = m.grid();
    Index3 off;
    Vec3 applied;
    for (int k = 0; k < 3; ++k) {
        off[k] = static_cast<int>(std::lround(offset_mm[k] / g.spacing_mm[k]));
        applied[k] = off[k] * g.spacing_mm[k];
    }
    std::vector<std::uint8_t> out(g.size(), 0);
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                if (!m.at(x, y, z))
                    continue;
                const int qx = x + off[0], qy = y + off[1], qz = z + off[2];
                if (g.contains(qx, qy, qz))
                    out[g.index(qx, qy, qz)] = 1;
            }
    return {Mask3(g, std::move(out)), off, applied};
}

Mask3 digital_sphere(const Grid3& grid, const Vec3& center_mm, double radius_mm)
{
    std::vector<std::uint8_t> bits(grid.size(), 0);
    for (int z = 0; z < grid.dims[2]; ++z)
        for (int y = 0; y < grid.dims[1]; ++y)
            for (int x = 0; x < grid.dims[0]; ++x) {
                const auto d = sub(grid.center_mm(x, y, z), center_mm);
                bits[grid.index(x, y, z)] = dot(d, d) <= radius_mm * radius_mm;
            }
    return Mask3(grid, std::move(bits));
}

Mask3 cut_slab(const Mask3& m, const Vec3& center_mm, const Vec3& normal, double thickness_mm, double radius_mm)
{
    const Vec3 n = normalized(normal);
    const Grid3& g = m.grid();
    std::vector<std::uint8_t> out(m.bits().begin(), m.bits().end());
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                const std::size_t i = g.index(x, y, z);
                if (!out[i])
                    continue;
                const Vec3 d = sub(g.center_mm(x, y, z), center_mm);
                const double along = dot(d, n);
                const Vec3 radial = sub(d, scale(n, along));
                if (std::abs(along) < 0.5 * thickness_mm && dot(radial, radial) <= radius_mm * radius_mm)
                    out[i] = 0;
            }
    return Mask3(g, std::move(out));
}

Volume3 ablate_structure(const Volume3& v, const LabelVolume& lv, std::uint16_t label)
{
    if (label == 0)
        throw ParameterError("cannot ablate the background label");
    lv.info(label);
    if (!(v.grid() == lv.grid()))
        throw ParameterError("volume and label grids differ");
    const Mask3 m = binary_mask(lv, label);
    const double max_spacing = *std::max_element(lv.grid().spacing_mm.begin(), lv.grid().spacing_mm.end());
    const Mask3 ring = dilate_mask(m, 2.0 * max_spacing);
    std::vector<float> surround;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (ring[i] && lv[i] == 0)
            surround.push_back(v[i]);
    float fill = 0.0f;
    if (!surround.empty()) {
        auto mid = surround.begin() + static_cast<std::ptrdiff_t>(surround.size() / 2);
        std::nth_element(surround.begin(), mid, surround.end());
        fill = *mid;
    }
    std::vector<float> out(v.data().begin(), v.data().end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (lv[i] == label)
            out[i] = fill;
    return Volume3(v.grid(), std::move(out));
}

namespace {

std::optional<std::uint16_t> extreme_structure(const LabelVolume& lv, Category category, bool smallest)
{
    std::optional<std::uint16_t> best;
    std::size_t best_count = 0;
    for (const auto& [id, info] : lv.table()) {
        if (info.category != category)
            continue;
        const std::size_t c = lv.count(id);
        if (!best || (smallest ? c < best_count : c > best_count)) {
            best = id;
            best_count = c;
        }
    }
    return best;
}

}  // namespace

std::optional<std::uint16_t> smallest_structure(const LabelVolume& lv, Category category)
{
    return extreme_structure(lv, category, true);
}

std::optional<std::uint16_t> largest_structure(const LabelVolume& lv, Category category)
{
    return extreme_structure(lv, category, false);
}

// ---------------------------------------------------------------------------
// Spec (de)serialisation

namespace {

json shape_to_json(const Shape& shape)
{
    if (const auto* e = std::get_if<EllipsoidShape>(&shape))
        return {{"type", "ellipsoid"}, {"center_mm", e->center_mm}, {"radii_mm", e->radii_mm}};
    if (const auto* t = std::get_if<TubeShape>(&shape))
        return {{"type", "tube"}, {"points_mm", t->points_mm}, {"radius_mm", t->radius_mm}};
    const auto& tr = std::get<TreeShape>(shape);
    return {{"type", "tree"},           {"root_mm", tr.root_mm},
            {"direction", tr.direction}, {"length_mm", tr.length_mm},
            {"depth", tr.depth},         {"radius_mm", tr.radius_mm},
            {"branch_angle_deg", tr.branch_angle_deg},
            {"taper", tr.taper},         {"jitter_deg", tr.jitter_deg}};
}

Shape shape_from_json(const json& j)
{
    const auto type = j.at("type").get<std::string>();
    if (type == "ellipsoid")
        return EllipsoidShape{j.at("center_mm").get<Vec3>(), j.at("radii_mm").get<Vec3>()};
    if (type == "sphere") {
        const double r = j.at("radius_mm").get<double>();
        return EllipsoidShape{j.at("center_mm").get<Vec3>(), {r, r, r}};
    }
    if (type == "tube")
        return TubeShape{j.at("points_mm").get<std::vector<Vec3>>(), j.at("radius_mm").get<double>()};
    if (type == "tree") {
        TreeShape t;
        t.root_mm = j.at("root_mm").get<Vec3>();
        t.direction = j.at("direction").get<Vec3>();
        t.length_mm = j.at("length_mm").get<double>();
        t.depth = j.at("depth").get<int>();
        t.radius_mm = j.at("radius_mm").get<double>();
        t.branch_angle_deg = j.value("branch_angle_deg", t.branch_angle_deg);
        t.taper = j.value("taper", t.taper);
        t.jitter_deg = j.value("jitter_deg", t.jitter_deg);
        return t;
    }
    throw SpecError("unknown shape type '" + type + "'");
}

}  // namespace

json to_json(const PhantomSpec& spec)
{
    json j;
    j["seed"] = spec.seed;
    j["dims"] = spec.dims;
    j["spacing_mm"] = spec.spacing_mm;
    if (spec.body)
        j["body"] = {{"center_mm", spec.body->center_mm},
                     {"radii_mm", spec.body->radii_mm},
                     {"attenuation", spec.body->attenuation}};
    j["structures"] = json::array();
    for (const auto& s : spec.structures)
        j["structures"].push_back({{"name", s.name},
                                   {"category", to_string(s.category)},
                                   {"attenuation", s.attenuation},
                                   {"shape", shape_to_json(s.shape)}});
    return j;
}

PhantomSpec phantom_spec_from_json(const json& j)
{
    try {
        PhantomSpec spec;
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.dims = j.at("dims").get<Index3>();
        spec.spacing_mm = j.at("spacing_mm").get<Vec3>();
        if (j.contains("body") && !j["body"].is_null()) {
            const auto& b = j["body"];
            spec.body = BodySpec{b.at("center_mm").get<Vec3>(), b.at("radii_mm").get<Vec3>(),
                                 b.at("attenuation").get<double>()};
        }
        for (const auto& s : j.value("structures", json::array())) {
            StructureSpec st;
            st.name = s.at("name").get<std::string>();
            st.category = category_from_string(s.at("category").get<std::string>());
            st.attenuation = s.at("attenuation").get<double>();
            st.shape = shape_from_json(s.at("shape"));
            spec.structures.push_back(std::move(st));
        }
        return spec;
    } catch (const json::exception& e) {
        throw SpecError(std::string("malformed phantom spec: ") + e.what());
    } catch (const LookupError& e) {
        throw SpecError(std::string("malformed phantom spec: ") + e.what());
    }
}

PhantomSpec load_phantom_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open phantom spec '" + path.string() + "'");
    try {
        return phantom_spec_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw SpecError("phantom spec '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void save_phantom_spec(const PhantomSpec& spec, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << to_json(spec).dump(2) << '\n';
}

PhantomSpec PhantomSpec::default_spec()
{
    PhantomSpec s;
    s.seed = 7;
    s.dims = {64, 64, 64};
    s.spacing_mm = {1.0, 1.0, 1.0};
    s.body = BodySpec{{0, 0, 0}, {30, 26, 30}, 1.0};
    s.structures = {
        {"liver", Category::LargeOrgan, EllipsoidShape{{-12, -3, 6}, {10, 9, 11}}, 1.4},
        {"spleen", Category::LargeOrgan, EllipsoidShape{{14, -3, 8}, {6, 7, 8}}, 1.3},
        {"gallbladder", Category::SmallOrgan, EllipsoidShape{{-4, 12, 2}, {5, 5, 5}}, 1.35},
        {"adrenal_gland", Category::SmallOrgan, EllipsoidShape{{9, 12, 4}, {3.5, 3.5, 3.5}}, 1.4},
        {"celiac_trunk", Category::SmallOrgan, EllipsoidShape{{2, 0, 16}, {2, 2, 2}}, 1.45},
        {"small_intestine", Category::Intestine,
         TubeShape{{{-17, -2, -14}, {-9, 9, -17}, {0, -2, -15}, {9, 9, -17}, {17, -2, -14}}, 4.0},
         0.7},
        {"aorta", Category::Vessel, TreeShape{{2, -9, -10}, {0, 0, 1}, 8.0, 4, 3.0, 32.0, 0.75, 8.0}, 1.6},
    };
    return s;
}

}  // namespace sparsect
