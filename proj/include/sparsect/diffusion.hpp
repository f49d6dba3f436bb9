#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sparsect {

/// Latent tensor of shape (h, w, c), channel index fastest.
class LatentGrid {
public:
    LatentGrid() = default;
    LatentGrid(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0);
    /// Throws ParameterError when the data length does not match or an entry is not finite.
    LatentGrid(std::size_t h, std::size_t w, std::size_t c, std::vector<double> data);

    std::size_t h() const noexcept { return h_; }
    std::size_t w() const noexcept { return w_; }
    std::size_t c() const noexcept { return c_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(std::size_t y, std::size_t x, std::size_t ch) { return data_[(y * w_ + x) * c_ + ch]; }
    double at(std::size_t y, std::size_t x, std::size_t ch) const { return data_[(y * w_ + x) * c_ + ch]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_shape(const LatentGrid& o) const noexcept { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }
    bool operator==(const LatentGrid&) const = default;

private:
    std::size_t h_ = 0, w_ = 0, c_ = 0;
    std::vector<double> data_;
};

/// Variance-preserving schedule: alpha_bar(t) = prod_{s<=t} (1 - beta_s), t = 1..T.
class NoiseSchedule {
public:
    static constexpr int kDefaultSteps = 1000;
    static constexpr double kDefaultBetaStart = 1e-4;
    static constexpr double kDefaultBetaEnd = 2e-2;

    /// Betas spaced linearly from beta_start to beta_end over `steps` steps.
    static NoiseSchedule linear(int steps = kDefaultSteps, double beta_start = kDefaultBetaStart,
                                double beta_end = kDefaultBetaEnd);
    /// Explicit alpha_bar(1..T); must be strictly decreasing within (0, 1].
    static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar);

    int steps() const noexcept { return static_cast<int>(alpha_bar_.size()); }
    /// alpha_bar(t) for 1 <= t <= T; t = 0 gives 1. Throws ParameterError otherwise.
    double alpha_bar(int t) const;

private:
    std::vector<double> alpha_bar_;
};

/// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps.
LatentGrid add_noise(const LatentGrid& z0, const LatentGrid& eps, int t, const NoiseSchedule& sched);
/// z0_hat = (z_t - sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_bar_t).
LatentGrid recover_z0(const LatentGrid& zt, const LatentGrid& eps_hat, int t, const NoiseSchedule& sched);
/// Channel-axis concatenation: output channels are those of `a` followed by those of `b`.
LatentGrid concat_latents(const LatentGrid& a, const LatentGrid& b);

/// Mean squared error.
double noise_loss(const LatentGrid& eps, const LatentGrid& eps_hat);
/// Mean absolute error.
double pixel_loss(std::span<const double> x_hat, std::span<const double> x_gt);

/// Per-voxel class scores: `logits` holds n_voxels * n_classes values, class index fastest.
struct SegLogits {
    std::size_t n_classes = 0;
    std::vector<double> logits;
};

/// Mean cross entropy of softmax(logits) against integer class ids.
double anatomy_loss(const SegLogits& logits, std::span<const std::int32_t> labels);

inline constexpr double kDefaultLambdaPixel = 1.0;
inline constexpr double kDefaultLambdaSeg = 0.001;

/// l_n + lambda_p l_p + lambda_s l_s. Throws ParameterError on a negative or
/// non-finite component.
double care_loss(double l_n, double l_p, double l_s, double lambda_p = kDefaultLambdaPixel,
                 double lambda_s = kDefaultLambdaSeg);

/// Stand-ins for the trained networks of the loss pipeline.
struct CareModels {
    /// Predicts the noise from the conditioned latent [z_t, z_rec] and t.
    std::function<LatentGrid(const LatentGrid& conditioned, int t)> denoiser;
    /// Maps a latent to pixel space.
    std::function<std::vector<double>(const LatentGrid& z)> decoder;
    /// Per-pixel class logits of a pixel-space image.
    std::function<SegLogits(std::span<const double> image)> segmentator;
};

struct CareSample {
    LatentGrid z0;     ///< latent of the ground-truth image
    LatentGrid z_rec;  ///< latent of the sparse-view reconstruction
    LatentGrid eps;    ///< sampled noise
    int t = 1;
    std::vector<double> x_gt;                 ///< ground-truth image
    std::vector<std::int32_t> seg_gt_labels;  ///< anatomy labels of x_gt
};

struct CareLossTerms {
    double noise = 0.0;
    double pixel = 0.0;
    double anatomy = 0.0;
    double total = 0.0;
};

/// Noises z0, predicts the noise from the concatenation with z_rec, recovers
/// z0, decodes it and scores pixels and anatomy against the ground truth.
CareLossTerms care_objective(const CareSample& sample, const CareModels& models, const NoiseSchedule& sched,
                             double lambda_p = kDefaultLambdaPixel, double lambda_s = kDefaultLambdaSeg);

}  // namespace sparsect
