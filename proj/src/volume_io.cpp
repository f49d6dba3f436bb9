#include "sparsect/volume_io.hpp"

#include "raw_io.hpp"
#include "sparsect/error.hpp"

namespace sparsect {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path artifact_base(const fs::path& p)
{
    const auto ext = p.extension().string();
    if (ext == ".f32" || ext == ".u16" || ext == ".json") {
        auto base = p;
        base.replace_extension();
        return base;
    }
    return p;
}

namespace {

json grid_to_json(const Grid3& g)
{
    return {{"dims", g.dims}, {"spacing_mm", g.spacing_mm}, {"origin_mm", g.origin_mm}};
}

Grid3 grid_from_json(const json& j, const fs::path& where)
{
    try {
        if (j.at("version").get<std::string>() != kFormatVersion)
            throw FormatError("unsupported format version in '" + where.string() + "'");
        Grid3 g;
        g.dims = j.at("dims").get<Index3>();
        g.spacing_mm = j.at("spacing_mm").get<Vec3>();
        g.origin_mm = j.at("origin_mm").get<Vec3>();
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw FormatError("malformed sidecar '" + where.string() + "': " + e.what());
    } catch (const ParameterError& e) {
        throw FormatError("invalid grid in '" + where.string() + "': " + e.what());
    }
}

}  // namespace

void save_volume(const Volume3& v, const fs::path& path)
{
    const auto base = artifact_base(path);
    json side = grid_to_json(v.grid());
    side["version"] = kFormatVersion;
    side["kind"] = "volume";
    side["dtype"] = "float32-le";
    detail::write_raw_le(detail::with_suffix(base, ".f32"), v.data().data(), v.size());
    detail::write_sidecar(detail::with_suffix(base, ".json"), side);
}

Volume3 load_volume(const fs::path& path)
{
    const auto base = artifact_base(path);
    const auto side_path = detail::with_suffix(base, ".json");
    const auto side = detail::read_sidecar(side_path);
    const Grid3 grid = grid_from_json(side, side_path);
    auto data = detail::read_raw_le<float>(detail::with_suffix(base, ".f32"));
    if (data.size() != grid.size())
        throw IntegrityError("payload '" + detail::with_suffix(base, ".f32").string() + "' holds " +
                             std::to_string(data.size()) + " floats, sidecar dims require " +
                             std::to_string(grid.size()));
    return Volume3(grid, std::move(data));
}

void save_labels(const LabelVolume& lv, const fs::path& path)
{
    const auto base = artifact_base(path);
    json side = grid_to_json(lv.grid());
    side["version"] = kFormatVersion;
    side["kind"] = "labels";
    side["dtype"] = "uint16-le";
    json table = json::array();
    for (const auto& [id, info] : lv.table())
        table.push_back({{"label", id}, {"name", info.name}, {"category", to_string(info.category)}});
    side["table"] = table;
    detail::write_raw_le(detail::with_suffix(base, ".u16"), lv.labels().data(), lv.labels().size());
    detail::write_sidecar(detail::with_suffix(base, ".json"), side);
}

LabelVolume load_labels(const fs::path& path)
{
    const auto base = artifact_base(path);
    const auto side_path = detail::with_suffix(base, ".json");
    const auto side = detail::read_sidecar(side_path);
    const Grid3 grid = grid_from_json(side, side_path);
    LabelTable table;
    try {
        for (const auto& row : side.at("table"))
            table[row.at("label").get<std::uint16_t>()] =
                LabelInfo{row.at("name").get<std::string>(),
                          category_from_string(row.at("category").get<std::string>())};
    } catch (const json::exception& e) {
        throw FormatError("malformed label table in '" + side_path.string() + "': " + e.what());
    }
    auto labels = detail::read_raw_le<std::uint16_t>(detail::with_suffix(base, ".u16"));
    if (labels.size() != grid.size())
        throw IntegrityError("label payload length does not match sidecar dims");
    return LabelVolume(grid, std::move(labels), std::move(table));
}

}  // namespace sparsect
