#pragma once
// Naive reference implementations used to cross-check the library. They are
// written for clarity, not speed, and avoid sharing code with src/.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "sparsect/volume.hpp"

namespace oracle {

using sparsect::Grid3;
using sparsect::Mask3;
using sparsect::Vec3;
using sparsect::Volume3;

inline Mask3 random_mask(const Grid3& g, double density, std::mt19937_64& rng)
{
    std::bernoulli_distribution b(density);
    std::vector<std::uint8_t> bits(g.size());
    for (auto& v : bits)
        v = b(rng) ? 1 : 0;
    return Mask3(g, std::move(bits));
}

inline Volume3 random_volume(const Grid3& g, double lo, double hi, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<float> d(g.size());
    for (auto& v : d)
        v = static_cast<float>(u(rng));
    return Volume3(g, std::move(d));
}

inline bool in(const Mask3& m, int x, int y, int z)
{
    const auto& d = m.grid().dims;
    if (x < 0 || y < 0 || z < 0 || x >= d[0] || y >= d[1] || z >= d[2])
        return false;
    return m.bits()[(static_cast<std::size_t>(z) * d[1] + y) * d[0] + x] != 0;
}

inline double dsc(const Mask3& p, const Mask3& g)
{
    double a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        a += p.bits()[i];
        b += g.bits()[i];
        both += p.bits()[i] && g.bits()[i];
    }
    if (a == 0 && b == 0)
        return 1.0;
    if (a == 0 || b == 0)
        return 0.0;
    return 2 * both / (a + b);
}

// Surface points enumerated face-plane by face-plane: a face between cell
// c-1 and c along an axis is a boundary when exactly one side is foreground.
inline std::vector<Vec3> surface(const Mask3& m)
{
    const Grid3& g = m.grid();
    std::vector<Vec3> pts;
    for (int axis = 0; axis < 3; ++axis)
        for (int z = 0; z < g.dims[2] + (axis == 2); ++z)
            for (int y = 0; y < g.dims[1] + (axis == 1); ++y)
                for (int x = 0; x < g.dims[0] + (axis == 0); ++x) {
                    int px = x, py = y, pz = z;
                    (axis == 0 ? px : axis == 1 ? py : pz) -= 1;
                    if (in(m, x, y, z) == in(m, px, py, pz))
                        continue;
                    Vec3 c;
                    const int idx[3] = {x, y, z};
                    for (int a = 0; a < 3; ++a)
                        c[a] = g.origin_mm[a] + g.spacing_mm[a] * (idx[a] - (a == axis ? 0.5 : 0.0));
                    pts.push_back(c);
                }
    return pts;
}

inline double nsd(const Mask3& p, const Mask3& g, double tau)
{
    const auto sp = surface(p), sg = surface(g);
    if (sp.empty() && sg.empty())
        return 1.0;
    if (sp.empty() || sg.empty())
        return 0.0;
    auto covered = [tau](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        std::size_t n = 0;
        for (const auto& a : from) {
            bool hit = false;
            for (const auto& b : to) {
                const double dx = b[0] - a[0], dy = b[1] - a[1], dz = b[2] - a[2];
                if (dx * dx + dy * dy + dz * dz <= tau * tau) {
                    hit = true;
                    break;
                }
            }
            n += hit;
        }
        return n;
    };
    return double(covered(sp, sg) + covered(sg, sp)) / double(sp.size() + sg.size());
}

inline double psnr(const Volume3& a, const Volume3& b, double range)
{
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double d = (long double)a[i] - (long double)b[i];
        s += d * d;
    }
    const double mse = double(s / a.size());
    if (mse == 0)
        return INFINITY;
    return 10 * std::log10(range * range / mse);
}

// Direct sliding 2-D window with explicit 2-D Gaussian weights.
inline double ssim(const Volume3& a, const Volume3& b, int win = 11, double sigma = 1.5, double k1 = 0.01,
                   double k2 = 0.03, double L = 1.0)
{
    const int nx = a.grid().dims[0], ny = a.grid().dims[1], nz = a.grid().dims[2];
    const int r = win / 2;
    std::vector<double> w(win * win);
    double wsum = 0;
    for (int j = 0; j < win; ++j)
        for (int i = 0; i < win; ++i) {
            w[j * win + i] = std::exp(-((i - r) * (i - r) + (j - r) * (j - r)) / (2 * sigma * sigma));
            wsum += w[j * win + i];
        }
    for (auto& v : w)
        v /= wsum;
    const double c1 = (k1 * L) * (k1 * L), c2 = (k2 * L) * (k2 * L);
    double total = 0;
    for (int z = 0; z < nz; ++z) {
        double acc = 0;
        int count = 0;
        for (int cy = r; cy < ny - r; ++cy)
            for (int cx = r; cx < nx - r; ++cx) {
                double ma = 0, mb = 0;
                for (int j = 0; j < win; ++j)
                    for (int i = 0; i < win; ++i) {
                        ma += w[j * win + i] * a.at(cx - r + i, cy - r + j, z);
                        mb += w[j * win + i] * b.at(cx - r + i, cy - r + j, z);
                    }
                double va = 0, vb = 0, cov = 0;
                for (int j = 0; j < win; ++j)
                    for (int i = 0; i < win; ++i) {
                        const double da = a.at(cx - r + i, cy - r + j, z) - ma;
                        const double db = b.at(cx - r + i, cy - r + j, z) - mb;
                        va += w[j * win + i] * da * da;
                        vb += w[j * win + i] * db * db;
                        cov += w[j * win + i] * da * db;
                    }
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
        total += acc / count;
    }
    return total / nz;
}

// Connected components of a set of cube offsets (each in {-1,0,1}^3) under
// the given adjacency, counting only components that touch `seeds`. Uses an
// explicit union-find over all pairs.
inline int local_components(const std::vector<std::array<int, 3>>& cells, int adjacency,
                            const std::vector<bool>& seed)
{
    const std::size_t n = cells.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            int cheb = 0, l1 = 0;
            for (int a = 0; a < 3; ++a) {
                const int d = std::abs(cells[i][a] - cells[j][a]);
                cheb = std::max(cheb, d);
                l1 += d;
            }
            const bool adj = cheb == 1 && (adjacency == 26 || (adjacency == 18 && l1 <= 2) || (adjacency == 6 && l1 == 1));
            if (adj)
                parent[find(i)] = find(j);
        }
    std::set<std::size_t> roots;
    for (std::size_t i = 0; i < n; ++i)
        if (seed[i])
            roots.insert(find(i));
    return static_cast<int>(roots.size());
}

// Simple point: exactly one 26-component of foreground in N26*, and exactly
// one 6-component of background in N18* that is 6-adjacent to the centre.
inline bool is_simple(const Mask3& m, int x, int y, int z)
{
    std::vector<std::array<int, 3>> fg, bg;
    std::vector<bool> fg_seed, bg_seed;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int l1 = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (l1 == 0)
                    continue;
                if (in(m, x + dx, y + dy, z + dz)) {
                    fg.push_back({dx, dy, dz});
                    fg_seed.push_back(true);
                } else if (l1 <= 2) {
                    bg.push_back({dx, dy, dz});
                    bg_seed.push_back(l1 == 1);
                }
            }
    return local_components(fg, 26, fg_seed) == 1 && local_components(bg, 6, bg_seed) == 1;
}

inline int neighbours26(const Mask3& m, int x, int y, int z)
{
    int n = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if ((dx || dy || dz) && in(m, x + dx, y + dy, z + dz))
                    ++n;
    return n;
}

// Same peeling schedule as the library: six directions, candidates (border
// towards d, backed by foreground towards -d) collected in raster order, then
// removed one by one after a re-check.
inline Mask3 skeletonize(const Mask3& input)
{
    const Grid3& g = input.grid();
    std::vector<std::uint8_t> bits(input.bits().begin(), input.bits().end());
    const int dirs[6][3] = {{0, -1, 0}, {0, 1, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}};
    auto idx = [&](int x, int y, int z) { return (static_cast<std::size_t>(z) * g.dims[1] + y) * g.dims[0] + x; };
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& d : dirs) {
            Mask3 cur(g, bits);
            std::vector<std::array<int, 3>> cand;
            for (int z = 0; z < g.dims[2]; ++z)
                for (int y = 0; y < g.dims[1]; ++y)
                    for (int x = 0; x < g.dims[0]; ++x)
                        if (in(cur, x, y, z) && !in(cur, x + d[0], y + d[1], z + d[2]) &&
                            in(cur, x - d[0], y - d[1], z - d[2]) && neighbours26(cur, x, y, z) > 1 && is_simple(cur, x, y, z))
                            cand.push_back({x, y, z});
            for (const auto& c : cand) {
                Mask3 now(g, bits);
                if (neighbours26(now, c[0], c[1], c[2]) > 1 && is_simple(now, c[0], c[1], c[2])) {
                    bits[idx(c[0], c[1], c[2])] = 0;
                    changed = true;
                }
            }
        }
    }
    return Mask3(g, std::move(bits));
}

inline double cl_dice(const Mask3& p, const Mask3& g)
{
    const Mask3 sp = skeletonize(p), sg = skeletonize(g);
    double nsp = 0, nsg = 0, hp = 0, hg = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        nsp += sp.bits()[i];
        nsg += sg.bits()[i];
        hp += sp.bits()[i] && g.bits()[i];
        hg += sg.bits()[i] && p.bits()[i];
    }
    if (nsp == 0 && nsg == 0)
        return 1.0;
    if (nsp == 0 || nsg == 0)
        return 0.0;
    const double tprec = hp / nsp, tsens = hg / nsg;
    if (tprec + tsens == 0)
        return 0.0;
    return 2 * tprec * tsens / (tprec + tsens);
}

// Exact two-sided Mann-Whitney p by enumerating every subset of the pooled
// sample of size |a| as a bitmask (tie-free data).
inline double mann_whitney_exact_p(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    auto rank = [&](double v) { return double(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin() + 1); };
    const int n = static_cast<int>(pooled.size()), na = static_cast<int>(a.size());
    double ra = 0;
    for (double v : a)
        ra += rank(v);
    const double u_obs = ra - na * (na + 1) / 2.0;
    long le = 0, ge = 0, total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != na)
            continue;
        double r = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i))
                r += i + 1;
        const double u = r - na * (na + 1) / 2.0;
        ++total;
        le += u <= u_obs;
        ge += u >= u_obs;
    }
    return std::min(1.0, 2.0 * double(std::min(le, ge)) / double(total));
}

// Two-sided Mann-Whitney p: bitmask enumeration for small tie-free samples,
// otherwise the tie-corrected normal approximation with continuity correction.
inline double mann_whitney_p(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    const bool ties = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
    if (!ties && pooled.size() <= 12)
        return mann_whitney_exact_p(a, b);
    // Midrank of v: mean of the 1-based positions holding v.
    auto midrank = [&](double v) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
        return (lo + 1 + hi) / 2.0;
    };
    double ra = 0;
    for (double v : a)
        ra += midrank(v);
    const double n1 = a.size(), n2 = b.size(), n = n1 + n2;
    const double u = ra - n1 * (n1 + 1) / 2;
    double t3 = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i])
            ++j;
        const double t = double(j - i);
        t3 += t * t * t - t;
        i = j;
    }
    const double var = n1 * n2 / 12 * (n + 1 - t3 / (n * (n - 1)));
    if (var <= 0)
        return 1.0;
    const double z = std::max(0.0, std::abs(u - n1 * n2 / 2) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

inline double inclusive_quantile(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const double h = (v.size() - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size())
        return v.back();
    return v[lo] + (h - lo) * (v[lo + 1] - v[lo]);
}

}  // namespace oracle
