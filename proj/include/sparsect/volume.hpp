#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sparsect {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

/// Regular voxel grid. Voxel (0,0,0) is centred at `origin_mm`, x runs fastest.
struct Grid3 {
    Index3 dims{0, 0, 0};
    Vec3 spacing_mm{1.0, 1.0, 1.0};
    Vec3 origin_mm{0.0, 0.0, 0.0};

    /// Grid whose centre sits at the world origin (the rotation isocentre).
    static Grid3 centered(Index3 dims, Vec3 spacing_mm);

    std::size_t size() const noexcept
    {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
    std::size_t index(int x, int y, int z) const noexcept
    {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims[1]) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(dims[0]) +
               static_cast<std::size_t>(x);
    }
    Index3 coords(std::size_t idx) const noexcept;
    bool contains(int x, int y, int z) const noexcept
    {
        return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
    }
    Vec3 center_mm(int x, int y, int z) const noexcept
    {
        return {origin_mm[0] + x * spacing_mm[0], origin_mm[1] + y * spacing_mm[1],
                origin_mm[2] + z * spacing_mm[2]};
    }
    double voxel_volume_mm3() const noexcept
    {
        return spacing_mm[0] * spacing_mm[1] * spacing_mm[2];
    }

    /// Throws ParameterError when dims or spacing are not strictly positive.
    void validate() const;

    bool operator==(const Grid3&) const = default;
};

/// Scalar intensity volume (attenuation per mm for phantoms and reconstructions).
class Volume3 {
public:
    Volume3() = default;
    /// Zero-filled volume on `grid`.
    explicit Volume3(const Grid3& grid);
    /// Takes ownership of `data`; throws IntegrityError on a length mismatch and
    /// ParameterError on non-finite values.
    Volume3(const Grid3& grid, std::vector<float> data);

    const Grid3& grid() const noexcept { return grid_; }
    std::span<const float> data() const noexcept { return data_; }
    std::size_t size() const noexcept { return data_.size(); }
    float operator[](std::size_t i) const noexcept { return data_[i]; }
    float at(int x, int y, int z) const noexcept { return data_[grid_.index(x, y, z)]; }

    /// Moves the voxel buffer out, leaving the volume empty.
    std::vector<float> release() && { return std::move(data_); }

private:
    Grid3 grid_;
    std::vector<float> data_;
};

/// Binary voxel mask.
class Mask3 {
public:
    Mask3() = default;
    explicit Mask3(const Grid3& grid);
    Mask3(const Grid3& grid, std::vector<std::uint8_t> bits);

    const Grid3& grid() const noexcept { return grid_; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::size_t size() const noexcept { return bits_.size(); }
    bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
    bool at(int x, int y, int z) const noexcept { return bits_[grid_.index(x, y, z)] != 0; }
    /// Out-of-grid coordinates read as background.
    bool get(int x, int y, int z) const noexcept
    {
        return grid_.contains(x, y, z) && bits_[grid_.index(x, y, z)] != 0;
    }

    void set(int x, int y, int z, bool v) noexcept { bits_[grid_.index(x, y, z)] = v ? 1 : 0; }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }

    std::vector<std::uint8_t> release() && { return std::move(bits_); }

    bool operator==(const Mask3&) const = default;

private:
    Grid3 grid_;
    std::vector<std::uint8_t> bits_;
};

enum class Category { LargeOrgan, SmallOrgan, Intestine, Vessel };

const char* to_string(Category c) noexcept;
/// Throws LookupError on an unknown name.
Category category_from_string(const std::string& name);

struct LabelInfo {
    std::string name;
    Category category = Category::LargeOrgan;
    bool operator==(const LabelInfo&) const = default;
};

using LabelTable = std::map<std::uint16_t, LabelInfo>;

/// Integer anatomy labels (0 = background) with a name/category table.
class LabelVolume {
public:
    LabelVolume() = default;
    /// Throws IntegrityError on length mismatch, LookupError when a nonzero
    /// voxel label is missing from `table`.
    LabelVolume(const Grid3& grid, std::vector<std::uint16_t> labels, LabelTable table);

    const Grid3& grid() const noexcept { return grid_; }
    std::span<const std::uint16_t> labels() const noexcept { return labels_; }
    const LabelTable& table() const noexcept { return table_; }
    std::uint16_t operator[](std::size_t i) const noexcept { return labels_[i]; }

    /// Label id for a structure name, or nullopt.
    std::optional<std::uint16_t> find(const std::string& name) const;
    /// Throws LookupError when `label` is neither 0 nor in the table.
    const LabelInfo& info(std::uint16_t label) const;

    std::size_t count(std::uint16_t label) const noexcept;

private:
    Grid3 grid_;
    std::vector<std::uint16_t> labels_;
    LabelTable table_;
};

/// Bits set exactly where the label volume equals `label`.
Mask3 binary_mask(const LabelVolume& lv, std::uint16_t label);

/// clamp((x - lo) / (hi - lo), 0, 1) per voxel. Throws ParameterError if lo >= hi.
Volume3 window_normalize(const Volume3& v, double lo, double hi);

/// Default phantom intensity window in attenuation units.
inline constexpr double kDefaultWindowLo = 0.0;
inline constexpr double kDefaultWindowHi = 2.0;

}  // namespace sparsect
