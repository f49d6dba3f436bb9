#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sparsect/volume.hpp"

namespace sparsect {

/// Positions are in mm relative to the volume centre.
struct EllipsoidShape {
    Vec3 center_mm{0, 0, 0};
    Vec3 radii_mm{1, 1, 1};
};

/// Union of capsules along consecutive polyline points.
struct TubeShape {
    std::vector<Vec3> points_mm;
    double radius_mm = 1.0;
};

/// Recursively bifurcating capsule tree. Each level scales length and radius
/// by `taper`; child directions are rotated by +/- branch_angle with seeded jitter.
struct TreeShape {
    Vec3 root_mm{0, 0, 0};
    Vec3 direction{0, 0, 1};
    double length_mm = 10.0;
    int depth = 3;
    double radius_mm = 3.0;
    double branch_angle_deg = 30.0;
    double taper = 0.75;
    double jitter_deg = 8.0;
};

using Shape = std::variant<EllipsoidShape, TubeShape, TreeShape>;

struct StructureSpec {
    std::string name;
    Category category = Category::LargeOrgan;
    Shape shape;
    double attenuation = 1.0;
};

struct BodySpec {
    Vec3 center_mm{0, 0, 0};
    Vec3 radii_mm{30, 26, 30};
    double attenuation = 1.0;
};

struct PhantomSpec {
    std::uint64_t seed = 0;
    Index3 dims{64, 64, 64};
    Vec3 spacing_mm{1, 1, 1};
    std::optional<BodySpec> body;
    std::vector<StructureSpec> structures;

    /// 64^3 at 1 mm: body, two large organs, three small spheres, one
    /// winding intestine tube and one branching vessel tree.
    static PhantomSpec default_spec();

    Grid3 grid() const { return Grid3::centered(dims, spacing_mm); }
};

nlohmann::json to_json(const PhantomSpec& spec);
/// Throws SpecError on malformed input.
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);
PhantomSpec load_phantom_spec(const std::filesystem::path& path);
void save_phantom_spec(const PhantomSpec& spec, const std::filesystem::path& path);

struct Capsule {
    Vec3 a;
    Vec3 b;
    double radius_mm;
};

/// Capsules of a tree shape, deterministic in `seed`.
std::vector<Capsule> expand_tree(const TreeShape& tree, std::uint64_t seed);
/// Capsules of any tube-like shape; empty for ellipsoids.
std::vector<Capsule> shape_capsules(const Shape& shape, std::uint64_t seed);
/// Seed used for structure `index` of a phantom with `phantom_seed`.
std::uint64_t structure_seed(std::uint64_t phantom_seed, std::size_t index);

struct Phantom {
    Volume3 volume;
    LabelVolume labels;
};

/// Rasterises the spec with 2x supersampling per axis; a voxel belongs to a
/// shape when at least half of its 8 sub-samples do. Structures get labels
/// 1..n in spec order. Throws SpecError naming the first colliding pair.
Phantom make_phantom(const PhantomSpec& spec);

/// Rasterised support of one shape on `grid` (same supersampling rule).
Mask3 rasterize_shape(const Grid3& grid, const Shape& shape, std::uint64_t seed);

/// Replaces the voxels of `label` with the median intensity of the unlabeled
/// voxels surrounding it. Throws ParameterError for label 0 and LookupError
/// for unknown labels.
Volume3 ablate_structure(const Volume3& v, const LabelVolume& lv, std::uint16_t label);

/// Label of the structure of `category` with the fewest voxels, if any.
std::optional<std::uint16_t> smallest_structure(const LabelVolume& lv, Category category);
std::optional<std::uint16_t> largest_structure(const LabelVolume& lv, Category category);

struct ShiftResult {
    Mask3 mask;
    Index3 voxel_offset;  ///< offset actually applied, in voxels
    Vec3 applied_mm;      ///< voxel_offset converted back to mm
};

/// Translation rounded to whole voxels per axis; content leaving the grid is dropped.
ShiftResult shift_mask(const Mask3& m, const Vec3& offset_mm);

/// Morphological dilation by the Euclidean ball of radius `delta_mm`.
Mask3 dilate_mask(const Mask3& m, double delta_mm);

/// Voxels whose centres lie within `radius_mm` of `center_mm` (world coordinates).
Mask3 digital_sphere(const Grid3& grid, const Vec3& center_mm, double radius_mm);

/// Clears voxels within a slab of `thickness_mm` around the plane through
/// `center_mm` with normal `normal`, limited to `radius_mm` from the normal axis.
Mask3 cut_slab(const Mask3& m, const Vec3& center_mm, const Vec3& normal, double thickness_mm,
               double radius_mm);

}  // namespace sparsect
