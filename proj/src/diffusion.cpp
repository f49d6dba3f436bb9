#include "sparsect/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sparsect/error.hpp"

namespace sparsect {

LatentGrid::LatentGrid(std::size_t h, std::size_t w, std::size_t c, double fill)
    : h_(h), w_(w), c_(c), data_(h * w * c, fill)
{
    if (!std::isfinite(fill))
        throw ParameterError("latent entries must be finite");
}

LatentGrid::LatentGrid(std::size_t h, std::size_t w, std::size_t c, std::vector<double> data)
    : h_(h), w_(w), c_(c), data_(std::move(data))
{
    if (data_.size() != h * w * c)
        throw ParameterError("latent data length " + std::to_string(data_.size()) + " does not match shape (" +
                             std::to_string(h) + "," + std::to_string(w) + "," + std::to_string(c) + ")");
    for (double v : data_)
        if (!std::isfinite(v))
            throw ParameterError("latent entries must be finite");
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end)
{
    if (steps < 1)
        throw ParameterError("noise schedule needs at least one step");
    if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end))
        throw ParameterError("betas must satisfy 0 < beta_start <= beta_end < 1");
    std::vector<double> ab(static_cast<std::size_t>(steps));
    double prod = 1.0;
    for (int i = 0; i < steps; ++i) {
        const double beta =
            steps == 1 ? beta_start : beta_start + (beta_end - beta_start) * static_cast<double>(i) / (steps - 1);
        prod *= 1.0 - beta;
        ab[static_cast<std::size_t>(i)] = prod;
    }
    return from_alpha_bar(std::move(ab));
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> alpha_bar)
{
    if (alpha_bar.empty())
        throw ParameterError("noise schedule needs at least one step");
    for (std::size_t i = 0; i < alpha_bar.size(); ++i) {
        if (!(alpha_bar[i] > 0.0 && alpha_bar[i] <= 1.0))
            throw ParameterError("alpha_bar must lie in (0, 1]");
        if (i > 0 && !(alpha_bar[i] < alpha_bar[i - 1]))
            throw ParameterError("alpha_bar must be strictly decreasing");
    }
    NoiseSchedule s;
    s.alpha_bar_ = std::move(alpha_bar);
    return s;
}

double NoiseSchedule::alpha_bar(int t) const
{
    if (t == 0)
        return 1.0;
    if (t < 0 || t > steps())
        throw ParameterError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
    return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

namespace {

void require_same_shape(const LatentGrid& a, const LatentGrid& b, const char* what)
{
    if (!a.same_shape(b))
        throw ParameterError(std::string(what) + ": shape mismatch");
}

void require_step(int t, const NoiseSchedule& sched)
{
    if (t < 1 || t > sched.steps())
        throw ParameterError("timestep " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps()) +
                             "]");
}

}  // namespace

LatentGrid add_noise(const LatentGrid& z0, const LatentGrid& eps, int t, const NoiseSchedule& sched)
{
    require_same_shape(z0, eps, "add_noise");
    require_step(t, sched);
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
    LatentGrid out(z0.h(), z0.w(), z0.c());
    for (std::size_t i = 0; i < z0.size(); ++i)
        out[i] = a * z0[i] + s * eps[i];
    return out;
}

LatentGrid recover_z0(const LatentGrid& zt, const LatentGrid& eps_hat, int t, const NoiseSchedule& sched)
{
    require_same_shape(zt, eps_hat, "recover_z0");
    require_step(t, sched);
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
    LatentGrid out(zt.h(), zt.w(), zt.c());
    for (std::size_t i = 0; i < zt.size(); ++i)
        out[i] = (zt[i] - s * eps_hat[i]) / a;
    return out;
}

LatentGrid concat_latents(const LatentGrid& a, const LatentGrid& b)
{
    if (a.h() != b.h() || a.w() != b.w())
        throw ParameterError("concat_latents: spatial shapes differ");
    LatentGrid out(a.h(), a.w(), a.c() + b.c());
    for (std::size_t y = 0; y < a.h(); ++y)
        for (std::size_t x = 0; x < a.w(); ++x) {
            for (std::size_t ch = 0; ch < a.c(); ++ch)
                out.at(y, x, ch) = a.at(y, x, ch);
            for (std::size_t ch = 0; ch < b.c(); ++ch)
                out.at(y, x, a.c() + ch) = b.at(y, x, ch);
        }
    return out;
}

double noise_loss(const LatentGrid& eps, const LatentGrid& eps_hat)
{
    require_same_shape(eps, eps_hat, "noise_loss");
    if (eps.size() == 0)
        throw ParameterError("noise_loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double d = eps[i] - eps_hat[i];
        s += d * d;
    }
    return s / static_cast<double>(eps.size());
}

double pixel_loss(std::span<const double> x_hat, std::span<const double> x_gt)
{
    if (x_hat.size() != x_gt.size())
        throw ParameterError("pixel_loss: shape mismatch");
    if (x_hat.empty())
        throw ParameterError("pixel_loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < x_hat.size(); ++i)
        s += std::abs(x_hat[i] - x_gt[i]);
    return s / static_cast<double>(x_hat.size());
}

double anatomy_loss(const SegLogits& seg, std::span<const std::int32_t> labels)
{
    const std::size_t k = seg.n_classes;
    if (k < 1)
        throw ParameterError("anatomy_loss: at least one class is required");
    if (labels.empty() || seg.logits.size() != labels.size() * k)
        throw ParameterError("anatomy_loss: logits do not match labels times classes");
    double total = 0.0;
    for (std::size_t v = 0; v < labels.size(); ++v) {
        if (labels[v] < 0 || static_cast<std::size_t>(labels[v]) >= k)
            throw ParameterError("anatomy_loss: class id " + std::to_string(labels[v]) + " out of range");
        const double* row = seg.logits.data() + v * k;
        const double m = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            z += std::exp(row[c] - m);
        // -log softmax = logsumexp - logit
        total += (m + std::log(z)) - row[labels[v]];
    }
    return total / static_cast<double>(labels.size());
}

double care_loss(double l_n, double l_p, double l_s, double lambda_p, double lambda_s)
{
    for (double v : {l_n, l_p, l_s, lambda_p, lambda_s})
        if (!std::isfinite(v) || v < 0.0)
            throw ParameterError("care_loss: components and weights must be finite and non-negative");
    return l_n + lambda_p * l_p + lambda_s * l_s;
}

CareLossTerms care_objective(const CareSample& sample, const CareModels& models, const NoiseSchedule& sched,
                             double lambda_p, double lambda_s)
{
    if (!models.denoiser || !models.decoder || !models.segmentator)
        throw ParameterError("care_objective: denoiser, decoder and segmentator are required");
    const LatentGrid zt = add_noise(sample.z0, sample.eps, sample.t, sched);
    const LatentGrid eps_hat = models.denoiser(concat_latents(zt, sample.z_rec), sample.t);
    CareLossTerms terms;
    terms.noise = noise_loss(sample.eps, eps_hat);
    const LatentGrid z0_hat = recover_z0(zt, eps_hat, sample.t, sched);
    const std::vector<double> x_hat = models.decoder(z0_hat);
    terms.pixel = pixel_loss(x_hat, sample.x_gt);
    terms.anatomy = anatomy_loss(models.segmentator(x_hat), sample.seg_gt_labels);
    terms.total = care_loss(terms.noise, terms.pixel, terms.anatomy, lambda_p, lambda_s);
    return terms;
}

}  // namespace sparsect
