#pragma once

#include <vector>

#include "patchlr/image.hpp"
#include "patchlr/patch_ops.hpp"

namespace patchlr {

/// Projected gradient descent on 1/2 |Gamma z|^2 with the observed pixels held
/// fixed. Gamma = I (x) L + L (x) I, L the path-graph Laplacian.
struct ReferenceConfig {
    int max_iters = 2000;
    double tol = 1e-6;           ///< stop when |z_t+1 - z_t| <= tol |z_t|
    int power_iters = 50;        ///< for the largest eigenvalue of Gamma^T Gamma
    double step_fraction = 0.95; ///< step = step_fraction / lambda_max

    void validate() const;
};

struct ReferenceResult {
    Image image;
    int iterations = 0;
    double step = 0.0;
    double lambda_max = 0.0;
    /// 1/2 |Gamma z|^2 at the start and after every iteration.
    std::vector<double> objective;
};

/// Applies Gamma to a row-major N x N buffer.
void apply_gamma(std::span<const double> in, std::span<double> out, int side);
/// 1/2 |Gamma z|^2.
double laplacian_objective(const Image& z);

/// Reference image for grouping. Missing pixels start at the mean of the
/// observed values; observed pixels (distinct support of `samples`) always
/// equal y. Throws std::invalid_argument on a grid mismatch.
ReferenceResult reference_image_trace(const Image& y, const SampleSet& samples,
                                      const ReferenceConfig& cfg);
Image reference_image(const Image& y, const SampleSet& samples, const ReferenceConfig& cfg);

/// Block matching parameters. Similarity is the squared Euclidean distance
/// between vectorized patches.
struct GroupingConfig {
    int k_groups = 0;       ///< 0 selects enough groups for the lattice to tile the image
    int group_size = 40;
    int search_radius = 12; ///< half-width, in anchor positions, of the search window

    void validate() const;
};

/// K actually used for `k_groups == 0`: a lattice whose spacing is at most
/// max(1, n/2) anchor positions per axis.
int resolve_group_count(const GroupingConfig& gcfg, const PatchConfig& pcfg);

/// Reference anchors on an even ceil(sqrt K) x ceil(sqrt K) lattice over the
/// anchor range, K of them picked evenly in raster order.
std::vector<Pixel> reference_anchors(int k_groups, const PatchConfig& pcfg);

/// Each group is its reference anchor followed by the group_size - 1 nearest
/// other anchors in the search window (ties broken by raster order).
/// Throws std::invalid_argument if a window holds fewer than group_size anchors.
PatchGroups build_groups(const Image& reference, const GroupingConfig& gcfg,
                         const PatchConfig& pcfg);

} // namespace patchlr
