#pragma once

#include <random>

#include "patchlr/image.hpp"
#include "patchlr/patch_ops.hpp"

namespace patchlr::fixtures {

inline Image random_image(int side, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Image z(side);
    for (auto& v : z.pixels())
        v = nd(rng);
    return z;
}

inline GroupedPatchMatrix random_like(const GroupedPatchMatrix& shape, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    GroupedPatchMatrix m = shape.zeros_like();
    for (auto& b : m.blocks)
        for (Eigen::Index i = 0; i < b.size(); ++i)
            b.data()[i] = nd(rng);
    return m;
}

inline Image from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int side = static_cast<int>(rows.size());
    std::vector<double> px;
    for (const auto& r : rows)
        px.insert(px.end(), r.begin(), r.end());
    return Image(side, std::move(px));
}

} // namespace patchlr::fixtures
