#include "sparsect/metrics.hpp"

#include <cmath>
#include <vector>

#include "sparsect/error.hpp"

namespace sparsect {

void MetricParams::validate() const
{
    if (!(nsd_tau_mm > 0.0))
        throw ParameterError("NSD tolerance must be positive");
    if (ssim.window < 1 || ssim.window % 2 == 0)
        throw ParameterError("SSIM window must be a positive odd size");
    if (!(ssim.sigma > 0.0) || !(ssim.data_range > 0.0))
        throw ParameterError("SSIM sigma and data range must be positive");
}

namespace {

void require_same_grid(const Grid3& a, const Grid3& b, const char* what)
{
    if (!(a == b))
        throw ParameterError(std::string(what) + ": inputs are on different grids");
}

}  // namespace

double psnr(const Volume3& ref, const Volume3& test, double data_range)
{
    require_same_grid(ref.grid(), test.grid(), "psnr");
    if (!(data_range > 0.0))
        throw ParameterError("psnr: data range must be positive");
    double ss = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = static_cast<double>(test[i]) - static_cast<double>(ref[i]);
        ss += d * d;
    }
    const double mse = ss / static_cast<double>(ref.size());
    if (mse == 0.0)
        return kPsnrInfinity;
    return 10.0 * std::log10(data_range * data_range / mse);
}

namespace {

std::vector<double> gaussian_window(int size, double sigma)
{
    std::vector<double> w(static_cast<std::size_t>(size));
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double x = i - half;
        w[static_cast<std::size_t>(i)] = std::exp(-(x * x) / (2.0 * sigma * sigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w)
        v /= sum;
    return w;
}

// Separable valid-mode filter of an nx*ny image.
std::vector<double> filter_valid(const std::vector<double>& img, int nx, int ny, const std::vector<double>& w)
{
    const int k = static_cast<int>(w.size());
    const int ox = nx - k + 1, oy = ny - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ox) * ny);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < ox; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i)
                s += w[static_cast<std::size_t>(i)] * img[static_cast<std::size_t>(y) * nx + x + i];
            tmp[static_cast<std::size_t>(y) * ox + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ox) * oy);
    for (int y = 0; y < oy; ++y)
        for (int x = 0; x < ox; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i)
                s += w[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(y + i) * ox + x];
            out[static_cast<std::size_t>(y) * ox + x] = s;
        }
    return out;
}

}  // namespace

double ssim(const Volume3& ref, const Volume3& test, const SsimParams& params)
{
    require_same_grid(ref.grid(), test.grid(), "ssim");
    MetricParams check;
    check.ssim = params;
    check.validate();
    const int nx = ref.grid().dims[0], ny = ref.grid().dims[1], nz = ref.grid().dims[2];
    if (nx < params.window || ny < params.window)
        throw ParameterError("ssim: slice is smaller than the window");

    const auto w = gaussian_window(params.window, params.sigma);
    const double c1 = (params.k1 * params.data_range) * (params.k1 * params.data_range);
    const double c2 = (params.k2 * params.data_range) * (params.k2 * params.data_range);
    const std::size_t slice = static_cast<std::size_t>(nx) * ny;

    double total = 0.0;
    for (int z = 0; z < nz; ++z) {
        std::vector<double> a(slice), b(slice), aa(slice), bb(slice), ab(slice);
        for (std::size_t i = 0; i < slice; ++i) {
            a[i] = ref[static_cast<std::size_t>(z) * slice + i];
            b[i] = test[static_cast<std::size_t>(z) * slice + i];
            aa[i] = a[i] * a[i];
            bb[i] = b[i] * b[i];
            ab[i] = a[i] * b[i];
        }
        const auto mu_a = filter_valid(a, nx, ny, w), mu_b = filter_valid(b, nx, ny, w);
        const auto e_aa = filter_valid(aa, nx, ny, w), e_bb = filter_valid(bb, nx, ny, w);
        const auto e_ab = filter_valid(ab, nx, ny, w);
        double sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            sum += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
        }
        total += sum / static_cast<double>(mu_a.size());
    }
    return total / nz;
}

double dsc(const Mask3& p, const Mask3& g, const EmptyPolicy& policy)
{
    require_same_grid(p.grid(), g.grid(), "dsc");
    std::size_t np = 0, ng = 0, both = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool a = p[i], b = g[i];
        np += a;
        ng += b;
        both += a && b;
    }
    if (np == 0 && ng == 0)
        return policy.both_empty;
    if (np == 0 || ng == 0)
        return policy.one_empty;
    return 2.0 * static_cast<double>(both) / static_cast<double>(np + ng);
}

int count_components(const Mask3& m, int connectivity)
{
    if (connectivity != 6 && connectivity != 18 && connectivity != 26)
        throw ParameterError("connectivity must be 6, 18 or 26");
    const Grid3& g = m.grid();
    std::vector<std::uint8_t> seen(m.size(), 0);
    std::vector<std::size_t> stack;
    int components = 0;
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (!m[start] || seen[start])
            continue;
        ++components;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const auto c = g.coords(stack.back());
            stack.pop_back();
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int order = std::abs(dx) + std::abs(dy) + std::abs(dz);
                        if (order == 0 || (connectivity == 6 && order > 1) || (connectivity == 18 && order > 2))
                            continue;
                        const int x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
                        if (!g.contains(x, y, z))
                            continue;
                        const std::size_t j = g.index(x, y, z);
                        if (m[j] && !seen[j]) {
                            seen[j] = 1;
                            stack.push_back(j);
                        }
                    }
        }
    }
    return components;
}

double cl_dice_with_skeletons(const Mask3& p, const Mask3& g, const Mask3& skel_p, const Mask3& skel_g,
                              const EmptyPolicy& policy)
{
    require_same_grid(p.grid(), g.grid(), "cl_dice");
    require_same_grid(p.grid(), skel_p.grid(), "cl_dice");
    require_same_grid(p.grid(), skel_g.grid(), "cl_dice");
    std::size_t sp = 0, sp_in_g = 0, sg = 0, sg_in_p = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (skel_p[i]) {
            ++sp;
            sp_in_g += g[i];
        }
        if (skel_g[i]) {
            ++sg;
            sg_in_p += p[i];
        }
    }
    if (sp == 0 && sg == 0)
        return policy.both_empty;
    if (sp == 0 || sg == 0)
        return policy.one_empty;
    const double tprec = static_cast<double>(sp_in_g) / static_cast<double>(sp);
    const double tsens = static_cast<double>(sg_in_p) / static_cast<double>(sg);
    if (tprec + tsens == 0.0)
        return 0.0;
    return 2.0 * tprec * tsens / (tprec + tsens);
}

double cl_dice(const Mask3& p, const Mask3& g, const EmptyPolicy& policy)
{
    require_same_grid(p.grid(), g.grid(), "cl_dice");
    return cl_dice_with_skeletons(p, g, skeletonize(p), skeletonize(g), policy);
}

}  // namespace sparsect
