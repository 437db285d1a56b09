#include <algorithm>

#include "srnr/error.hpp"
#include "srnr/readout.hpp"

namespace srnr {

FeatureVector bin_spike_counts(const SpikeRaster& raster, std::size_t n_bins, int label) {
    if (n_bins < 1 || raster.steps() % n_bins != 0)
        throw ConfigError("bin_spike_counts: " + std::to_string(raster.steps()) +
                          " steps are not divisible into " + std::to_string(n_bins) + " bins");
    const std::size_t per_bin = raster.steps() / n_bins;
    const auto& k = simd::kernels();
    FeatureVector fv;
    fv.n_bins = n_bins;
    fv.label = label;
    fv.counts.resize(raster.rows() * n_bins);
    for (std::size_t r = 0; r < raster.rows(); ++r) {
        const auto row = raster.spikes.row(r);
        for (std::size_t b = 0; b < n_bins; ++b)
            fv.counts[r * n_bins + b] =
                static_cast<std::uint32_t>(k.count_ones(row.data() + b * per_bin, per_bin));
    }
    return fv;
}

Dataset make_dataset(std::span<const FeatureVector> features, std::size_t n_classes,
                     double scale) {
    Dataset d;
    d.n_classes = n_classes;
    const std::size_t dim = features.empty() ? 0 : features.front().counts.size();
    d.x = Matrix<double>(features.size(), dim);
    d.y.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        if (f.counts.size() != dim) throw DataError("make_dataset: feature dimensions differ");
        if (f.label < 0 || static_cast<std::size_t>(f.label) >= n_classes)
            throw DataError("make_dataset: label " + std::to_string(f.label) + " outside [0, " +
                            std::to_string(n_classes) + ")");
        auto row = d.x.row(i);
        std::transform(f.counts.begin(), f.counts.end(), row.begin(),
                       [scale](std::uint32_t c) { return scale * static_cast<double>(c); });
        d.y.push_back(f.label);
    }
    return d;
}

double accuracy(std::span<const int> predictions, std::span<const int> truths) {
    if (predictions.size() != truths.size() || truths.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) hit += predictions[i] == truths[i];
    return 100.0 * static_cast<double>(hit) / static_cast<double>(truths.size());
}

}  // namespace srnr
