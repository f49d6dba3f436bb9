#pragma once

#include <cstdint>

#include "sparsect/volume.hpp"

namespace sparsect {

/// Ground-truth-guided segmentation of a reconstruction.
///
/// A structure is searched only inside its reference support dilated by
/// `margin_mm`, excluding voxels that belong to other structures. A voxel is
/// assigned to the structure when its test intensity is strictly closer to the
/// structure's reference intensity (median over the reference support) than to
/// the surrounding background intensity (median over the rest of the search
/// region). Segmenting the reference itself therefore returns the reference
/// support, and a structure erased from the test volume is not found.
struct SegmenterParams {
    double margin_mm = 3.0;

    void validate() const;
};

Mask3 segment_structure(const Volume3& test, const Volume3& reference, const LabelVolume& labels,
                        std::uint16_t label, const SegmenterParams& params = {});

}  // namespace sparsect
