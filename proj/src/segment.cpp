#include "sparsect/segment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sparsect/error.hpp"
#include "sparsect/phantom.hpp"

namespace sparsect {

void SegmenterParams::validate() const
{
    if (!(margin_mm >= 0.0) || !std::isfinite(margin_mm))
        throw ParameterError("segmentation margin must be a finite non-negative length");
}

namespace {

double median_of(std::vector<float> v)
{
    if (v.empty())
        return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1)
        return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

}  // namespace

Mask3 segment_structure(const Volume3& test, const Volume3& reference, const LabelVolume& labels,
                        std::uint16_t label, const SegmenterParams& params)
{
    params.validate();
    if (!(test.grid() == labels.grid()) || !(reference.grid() == labels.grid()))
        throw EvaluationError("segmentation inputs are on different grids");
    if (label == 0)
        throw ParameterError("background has no segmentation");
    labels.info(label);  // throws LookupError for unknown labels

    const Mask3 support = binary_mask(labels, label);
    const Mask3 region = dilate_mask(support, params.margin_mm);
    const auto lab = labels.labels();

    std::vector<float> inside, outside;
    for (std::size_t i = 0; i < region.size(); ++i) {
        if (!region[i])
            continue;
        if (lab[i] == label)
            inside.push_back(reference[i]);
        else if (lab[i] == 0)
            outside.push_back(reference[i]);
    }
    const double mu_in = median_of(std::move(inside));
    const double mu_out = median_of(std::move(outside));

    std::vector<std::uint8_t> bits(region.size(), 0);
    for (std::size_t i = 0; i < region.size(); ++i) {
        if (!region[i] || (lab[i] != 0 && lab[i] != label))
            continue;
        const double v = test[i];
        bits[i] = std::abs(v - mu_in) < std::abs(v - mu_out);
    }
    return Mask3(labels.grid(), std::move(bits));
}

}  // namespace sparsect
