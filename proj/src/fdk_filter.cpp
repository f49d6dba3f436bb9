#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "sparsect/error.hpp"
#include "sparsect/geometry.hpp"

namespace sparsect {

const char* to_string(Apodization a) noexcept
{
    return a == Apodization::Hann ? "hann" : "none";
}

Apodization apodization_from_string(const std::string& s)
{
    if (s == "none" || s == "ramp")
        return Apodization::None;
    if (s == "hann")
        return Apodization::Hann;
    throw ParameterError("unknown apodization '" + s + "' (expected none|hann)");
}

double ramp_kernel_sample(int n, double tau) noexcept
{
    if (n == 0)
        return 1.0 / (4.0 * tau * tau);
    if (n % 2 == 0)
        return 0.0;
    const double pn = std::numbers::pi * n;
    return -1.0 / (pn * pn * tau * tau);
}

namespace {

// The FFTW planner is not re-entrant; execution on fresh arrays is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n)
{
    return FftwBuffer<T>(static_cast<T*>(fftw_malloc(sizeof(T) * n)));
}

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
    ~PlanPair()
    {
        std::lock_guard lock(planner_mutex());
        if (forward)
            fftw_destroy_plan(forward);
        if (inverse)
            fftw_destroy_plan(inverse);
    }
};

std::shared_ptr<PlanPair> plans_for(int n)
{
    auto real = fftw_alloc<double>(static_cast<std::size_t>(n));
    auto spec = fftw_alloc<fftw_complex>(static_cast<std::size_t>(n / 2 + 1));
    auto pp = std::make_shared<PlanPair>();
    std::lock_guard lock(planner_mutex());
    pp->forward = fftw_plan_dft_r2c_1d(n, real.get(), spec.get(), FFTW_ESTIMATE);
    pp->inverse = fftw_plan_dft_c2r_1d(n, spec.get(), real.get(), FFTW_ESTIMATE);
    return pp;
}

int next_pow2_at_least(int n)
{
    int p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

// Circular convolution of `in` (length n) with the response, in place.
void convolve(const PlanPair& plans, const std::vector<double>& response, double* in, int n)
{
    auto spec = fftw_alloc<fftw_complex>(static_cast<std::size_t>(n / 2 + 1));
    fftw_execute_dft_r2c(plans.forward, in, spec.get());
    for (int k = 0; k <= n / 2; ++k) {
        spec[k][0] *= response[static_cast<std::size_t>(k)];
        spec[k][1] *= response[static_cast<std::size_t>(k)];
    }
    fftw_execute_dft_c2r(plans.inverse, spec.get(), in);
    const double inv = 1.0 / n;
    for (int i = 0; i < n; ++i)
        in[i] *= inv;
}

}  // namespace

RampFilter::RampFilter(int row_length, double sample_spacing_mm, Apodization apod)
    : row_length_(row_length), padded_(next_pow2_at_least(2 * std::max(row_length, 1))),
      spacing_(sample_spacing_mm)
{
    if (row_length <= 0 || !(sample_spacing_mm > 0.0))
        throw ParameterError("ramp filter needs a positive row length and spacing");
    const int n = padded_;
    // Symmetric kernel wrapped onto the padded period; its DFT is real.
    std::vector<double> kernel(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i <= n / 2; ++i)
        kernel[static_cast<std::size_t>(i)] = ramp_kernel_sample(i, spacing_);
    for (int i = 1; i < n / 2; ++i)
        kernel[static_cast<std::size_t>(n - i)] = ramp_kernel_sample(i, spacing_);

    auto plans = plans_for(n);
    auto buf = fftw_alloc<double>(static_cast<std::size_t>(n));
    auto spec = fftw_alloc<fftw_complex>(static_cast<std::size_t>(n / 2 + 1));
    std::copy(kernel.begin(), kernel.end(), buf.get());
    fftw_execute_dft_r2c(plans->forward, buf.get(), spec.get());

    response_.assign(static_cast<std::size_t>(n / 2 + 1), 0.0);
    for (int k = 0; k <= n / 2; ++k) {
        double r = spacing_ * spec[k][0];
        if (apod == Apodization::Hann)
            r *= 0.5 * (1.0 + std::cos(std::numbers::pi * k / (n / 2)));
        response_[static_cast<std::size_t>(k)] = r;
    }
    response_[0] = 0.0;
}

std::vector<double> RampFilter::apply_padded(std::span<const double> row) const
{
    if (static_cast<int>(row.size()) != row_length_)
        throw ParameterError("row length does not match ramp filter");
    static thread_local std::shared_ptr<PlanPair> cached;
    static thread_local int cached_n = 0;
    if (!cached || cached_n != padded_) {
        cached = plans_for(padded_);
        cached_n = padded_;
    }
    auto buf = fftw_alloc<double>(static_cast<std::size_t>(padded_));
    std::fill(buf.get(), buf.get() + padded_, 0.0);
    std::copy(row.begin(), row.end(), buf.get());
    convolve(*cached, response_, buf.get(), padded_);
    return std::vector<double>(buf.get(), buf.get() + padded_);
}

void RampFilter::apply(std::span<double> row) const
{
    const auto full = apply_padded(row);
    std::copy(full.begin(), full.begin() + row_length_, row.begin());
}

ProjectionStack fdk_filter(const ProjectionStack& p, Apodization apod)
{
    p.validate();
    const auto& g = p.geometry;
    const double magnified_du = g.du_mm * g.sod_mm / g.sdd_mm;
    const RampFilter filter(g.nu, magnified_du, apod);

    ProjectionStack out;
    out.geometry = g;
    out.outside_fov = p.outside_fov;
    out.data.resize(p.data.size());
    const int rows = g.n_views() * g.nv;
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        const int iv = r % g.nv;
        const double v = g.v_of(iv);
        std::vector<double> row(static_cast<std::size_t>(g.nu));
        const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(g.nu);
        for (int iu = 0; iu < g.nu; ++iu) {
            const double u = g.u_of(iu);
            const double w = g.sdd_mm / std::sqrt(g.sdd_mm * g.sdd_mm + u * u + v * v);
            row[static_cast<std::size_t>(iu)] = w * p.data[base + static_cast<std::size_t>(iu)];
        }
        filter.apply(row);
        for (int iu = 0; iu < g.nu; ++iu)
            out.data[base + static_cast<std::size_t>(iu)] = static_cast<float>(row[static_cast<std::size_t>(iu)]);
    }
    return out;
}

}  // namespace sparsect
