#include "sparsect/volume.hpp"

#include <algorithm>
#include <cmath>

#include "sparsect/error.hpp"

namespace sparsect {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Format: return "format";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::Spec: return "spec";
    case ErrorKind::Pipeline: return "pipeline";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Io: return "io";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation";
    }
    return "unknown";
}

Grid3 Grid3::centered(Index3 dims, Vec3 spacing_mm)
{
    Grid3 g;
    g.dims = dims;
    g.spacing_mm = spacing_mm;
    for (int a = 0; a < 3; ++a)
        g.origin_mm[a] = -0.5 * (dims[a] - 1) * spacing_mm[a];
    return g;
}

Index3 Grid3::coords(std::size_t idx) const noexcept
{
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
            static_cast<int>(idx / (nx * ny))};
}

void Grid3::validate() const
{
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0)
            throw ParameterError("grid dimensions must be positive");
        if (!(spacing_mm[a] > 0.0) || !std::isfinite(spacing_mm[a]))
            throw ParameterError("grid spacing must be strictly positive");
        if (!std::isfinite(origin_mm[a]))
            throw ParameterError("grid origin must be finite");
    }
}

Volume3::Volume3(const Grid3& grid) : grid_(grid)
{
    grid_.validate();
    data_.assign(grid_.size(), 0.0f);
}

Volume3::Volume3(const Grid3& grid, std::vector<float> data)
    : grid_(grid), data_(std::move(data))
{
    grid_.validate();
    if (data_.size() != grid_.size())
        throw IntegrityError("volume payload has " + std::to_string(data_.size()) +
                             " values, grid expects " + std::to_string(grid_.size()));
    for (float v : data_)
        if (!std::isfinite(v))
            throw ParameterError("volume contains non-finite values");
}

Mask3::Mask3(const Grid3& grid) : grid_(grid)
{
    grid_.validate();
    bits_.assign(grid_.size(), 0);
}

Mask3::Mask3(const Grid3& grid, std::vector<std::uint8_t> bits)
    : grid_(grid), bits_(std::move(bits))
{
    grid_.validate();
    if (bits_.size() != grid_.size())
        throw IntegrityError("mask length does not match grid");
    for (auto& b : bits_)
        b = b ? 1 : 0;
}

std::size_t Mask3::count() const noexcept
{
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

const char* to_string(Category c) noexcept
{
    switch (c) {
    case Category::LargeOrgan: return "LargeOrgan";
    case Category::SmallOrgan: return "SmallOrgan";
    case Category::Intestine: return "Intestine";
    case Category::Vessel: return "Vessel";
    }
    return "?";
}

Category category_from_string(const std::string& name)
{
    for (auto c : {Category::LargeOrgan, Category::SmallOrgan, Category::Intestine, Category::Vessel})
        if (name == to_string(c))
            return c;
    throw LookupError("unknown category '" + name + "'");
}

LabelVolume::LabelVolume(const Grid3& grid, std::vector<std::uint16_t> labels, LabelTable table)
    : grid_(grid), labels_(std::move(labels)), table_(std::move(table))
{
    grid_.validate();
    if (labels_.size() != grid_.size())
        throw IntegrityError("label payload length does not match grid");
    if (table_.count(0))
        throw LookupError("label 0 is reserved for background");
    std::uint16_t last_checked = 0;
    for (auto l : labels_) {
        if (l == 0 || l == last_checked)
            continue;
        if (!table_.count(l))
            throw LookupError("voxel label " + std::to_string(l) + " missing from label table");
        last_checked = l;
    }
}

std::optional<std::uint16_t> LabelVolume::find(const std::string& name) const
{
    for (const auto& [id, info] : table_)
        if (info.name == name)
            return id;
    return std::nullopt;
}

const LabelInfo& LabelVolume::info(std::uint16_t label) const
{
    auto it = table_.find(label);
    if (it == table_.end())
        throw LookupError("unknown label " + std::to_string(label));
    return it->second;
}

std::size_t LabelVolume::count(std::uint16_t label) const noexcept
{
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

Mask3 binary_mask(const LabelVolume& lv, std::uint16_t label)
{
    if (label != 0 && !lv.table().count(label))
        throw LookupError("unknown label " + std::to_string(label));
    std::vector<std::uint8_t> bits(lv.labels().size());
    std::transform(lv.labels().begin(), lv.labels().end(), bits.begin(),
                   [label](std::uint16_t l) { return static_cast<std::uint8_t>(l == label); });
    return Mask3(lv.grid(), std::move(bits));
}

Volume3 window_normalize(const Volume3& v, double lo, double hi)
{
    if (!(lo < hi))
        throw ParameterError("window requires lo < hi");
    const double width = hi - lo;
    std::vector<float> out(v.size());
    std::transform(v.data().begin(), v.data().end(), out.begin(), [&](float x) {
        return static_cast<float>(std::clamp((x - lo) / width, 0.0, 1.0));
    });
    return Volume3(v.grid(), std::move(out));
}

}  // namespace sparsect
