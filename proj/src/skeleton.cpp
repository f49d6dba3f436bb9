#include <array>
#include <cstdlib>
#include <vector>

#include "sparsect/metrics.hpp"

namespace sparsect {

namespace {

constexpr int kCentre = 13;

constexpr int nb_index(int dx, int dy, int dz) { return (dz + 1) * 9 + (dy + 1) * 3 + (dx + 1); }

struct Offset {
    int dx, dy, dz;
};

constexpr Offset offset_of(int i) { return {i % 3 - 1, (i / 3) % 3 - 1, i / 9 - 1}; }

constexpr int order_of(int i)
{
    const Offset o = offset_of(i);
    return (o.dx != 0) + (o.dy != 0) + (o.dz != 0);
}

// Number of components of `member` cells among `allowed` cells, where two
// cells are adjacent when their offset differs by at most `max_order` axes.
// Only components containing a cell in `seeds` are counted.
int count_local_components(const std::array<bool, 27>& member, int max_order, const std::array<bool, 27>& seeds)
{
    std::array<bool, 27> seen{};
    int components = 0;
    for (int s = 0; s < 27; ++s) {
        if (!member[s] || seen[s] || !seeds[s])
            continue;
        ++components;
        int stack[27];
        int top = 0;
        stack[top++] = s;
        seen[s] = true;
        while (top > 0) {
            const Offset a = offset_of(stack[--top]);
            for (int j = 0; j < 27; ++j) {
                if (!member[j] || seen[j])
                    continue;
                const Offset b = offset_of(j);
                const int ax = std::abs(a.dx - b.dx), ay = std::abs(a.dy - b.dy), az = std::abs(a.dz - b.dz);
                if (ax > 1 || ay > 1 || az > 1)
                    continue;
                if ((ax != 0) + (ay != 0) + (az != 0) > max_order)
                    continue;
                seen[j] = true;
                stack[top++] = j;
            }
        }
    }
    return components;
}

}  // namespace

bool is_simple_point(const std::uint8_t (&nbhd)[27])
{
    // Foreground: 26-components in the punctured 26-neighbourhood.
    std::array<bool, 27> fg{}, all{};
    for (int i = 0; i < 27; ++i) {
        fg[i] = i != kCentre && nbhd[i] != 0;
        all[i] = true;
    }
    if (count_local_components(fg, 3, all) != 1)
        return false;
    // Background: 6-components in the punctured 18-neighbourhood that are
    // 6-adjacent to the centre.
    std::array<bool, 27> bg{}, face{};
    for (int i = 0; i < 27; ++i) {
        const int ord = order_of(i);
        bg[i] = i != kCentre && ord <= 2 && nbhd[i] == 0;
        face[i] = ord == 1;
    }
    return count_local_components(bg, 1, face) == 1;
}

Mask3 skeletonize(const Mask3& m)
{
    const Grid3& g = m.grid();
    Mask3 s = m;
    static constexpr int kDirs[6][3] = {{0, -1, 0}, {0, 1, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}};

    auto gather = [&](int x, int y, int z, std::uint8_t (&nb)[27]) {
        int neighbours = 0;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const bool v = s.get(x + dx, y + dy, z + dz);
                    nb[nb_index(dx, dy, dz)] = v;
                    if (v && (dx || dy || dz))
                        ++neighbours;
                }
        return neighbours;
    };

    std::vector<std::size_t> foreground;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i])
            foreground.push_back(i);

    bool changed = true;
    std::vector<std::size_t> candidates;
    while (changed) {
        changed = false;
        for (const auto& d : kDirs) {
            candidates.clear();
            for (std::size_t i : foreground) {
                if (!s[i])
                    continue;
                const auto c = g.coords(i);
                // Border towards d and backed by foreground towards -d: a layer
                // that is already one voxel thin along d is left for the other
                // directions, so thin ribbons are not eaten from their ends.
                if (s.get(c[0] + d[0], c[1] + d[1], c[2] + d[2]) || !s.get(c[0] - d[0], c[1] - d[1], c[2] - d[2]))
                    continue;
                std::uint8_t nb[27];
                if (gather(c[0], c[1], c[2], nb) <= 1 || !is_simple_point(nb))
                    continue;
                candidates.push_back(i);
            }
            // Sequential re-check keeps topology when neighbouring candidates
            // are removed in the same sub-iteration.
            for (std::size_t i : candidates) {
                const auto c = g.coords(i);
                std::uint8_t nb[27];
                if (gather(c[0], c[1], c[2], nb) <= 1 || !is_simple_point(nb))
                    continue;
                s.set(c[0], c[1], c[2], false);
                changed = true;
            }
        }
        std::size_t kept = 0;
        for (std::size_t i : foreground)
            if (s[i])
                foreground[kept++] = i;
        foreground.resize(kept);
    }
    return s;
}

}  // namespace sparsect
