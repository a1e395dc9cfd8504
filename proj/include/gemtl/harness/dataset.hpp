#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gemtl/detection.hpp"
#include "gemtl/harness/config.hpp"
#include "gemtl/prng.hpp"
#include "gemtl/task.hpp"
#include "gemtl/tensor.hpp"

namespace gemtl::harness {

/// Everything needed to regenerate a dataset bit-exactly.
struct GeneratorSpec {
    TaskKind task = TaskKind::classification;
    std::uint64_t seed = 0;
    std::size_t size = 0;
    double noise = 1.0;
    double separation = 6.0;
};

/// Full-batch synthetic data. The batch is the first preserved mode of `inputs`.
struct SyntheticDataset {
    GeneratorSpec spec;
    Tensor inputs;   // I ++ J
    Tensor targets;  // one-hot K ++ J (class tasks) or K ++ J regression targets (mse)
    Labels labels;   // class index per preserved position (class tasks)
    Tensor centroids;  // classes × features: cluster centres of the class-conditional generator
    std::optional<DetectionTargets> detection;

    [[nodiscard]] bool empty() const noexcept { return spec.size == 0; }
};

namespace detail {

inline constexpr std::uint64_t kCentroidStream = 1;
inline constexpr std::uint64_t kLabelStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;

/// Random centroids rescaled so the closest pair sits exactly `min_distance` apart.
inline Tensor separated_centroids(std::size_t classes, std::size_t features, double min_distance, Prng& rng) {
    Tensor c = random_normal(Shape{classes, features}, 0.0, 1.0, rng);
    if (classes < 2) {
        return c;
    }
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < classes; ++a) {
        for (std::size_t b = a + 1; b < classes; ++b) {
            double d2 = 0.0;
            for (std::size_t f = 0; f < features; ++f) {
                const double d = c[a * features + f] - c[b * features + f];
                d2 += d * d;
            }
            closest = std::min(closest, std::sqrt(d2));
        }
    }
    if (closest > 0.0) {
        c *= min_distance / closest;
    }
    return c;
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace detail

/// Features × B inputs drawn around class centroids; label of sample b is b mod C.
inline SyntheticDataset make_classification_data(std::size_t features, std::size_t classes, std::size_t size,
                                                 std::uint64_t seed, double noise = 1.0, double separation = 6.0) {
    SyntheticDataset ds;
    ds.spec = {TaskKind::classification, seed, size, noise, separation};
    if (size == 0) {
        return ds;
    }
    const Prng root(seed);
    Prng crng = root.split(detail::kCentroidStream);
    Prng nrng = root.split(detail::kNoiseStream);
    ds.centroids = detail::separated_centroids(classes, features, separation * noise, crng);
    ds.labels = {Shape{size}, std::vector<std::size_t>(size)};
    for (std::size_t b = 0; b < size; ++b) {
        ds.labels.values[b] = b % classes;
    }
    ds.inputs = Tensor(Shape{features, size});
    for (std::size_t b = 0; b < size; ++b) {
        for (std::size_t f = 0; f < features; ++f) {
            ds.inputs[f * size + b] = ds.centroids[ds.labels.values[b] * features + f] + noise * nrng.normal();
        }
    }
    ds.targets = one_hot(ds.labels, Shape{classes});
    return ds;
}

/// C_in × B × H × W inputs. Each mask is background (class 0) with one or two planted rectangles of
/// classes 1..C-1; pixel features are drawn around the centroid of the pixel's class.
inline SyntheticDataset make_dense_data(std::size_t channels, std::size_t classes, std::size_t size,
                                        std::size_t height, std::size_t width, std::uint64_t seed,
                                        double noise = 1.0, double separation = 6.0,
                                        TaskKind kind = TaskKind::dense) {
    SyntheticDataset ds;
    ds.spec = {kind, seed, size, noise, separation};
    if (size == 0) {
        return ds;
    }
    const Prng root(seed);
    Prng crng = root.split(detail::kCentroidStream);
    Prng lrng = root.split(detail::kLabelStream);
    Prng nrng = root.split(detail::kNoiseStream);
    ds.centroids = detail::separated_centroids(classes, channels, separation * noise, crng);

    const std::size_t positions = size * height * width;
    ds.labels = {Shape{size, height, width}, std::vector<std::size_t>(positions, 0)};
    if (classes > 1) {
        for (std::size_t b = 0; b < size; ++b) {
            const std::size_t rects = 1 + lrng.below(2);
            for (std::size_t r = 0; r < rects; ++r) {
                const std::size_t cls = 1 + lrng.below(classes - 1);
                const std::size_t rh = 1 + lrng.below(std::max<std::size_t>(1, height / 2 + 1));
                const std::size_t rw = 1 + lrng.below(std::max<std::size_t>(1, width / 2 + 1));
                const std::size_t y0 = lrng.below(height - std::min(rh, height) + 1);
                const std::size_t x0 = lrng.below(width - std::min(rw, width) + 1);
                for (std::size_t y = y0; y < std::min(height, y0 + rh); ++y) {
                    for (std::size_t x = x0; x < std::min(width, x0 + rw); ++x) {
                        ds.labels.values[(b * height + y) * width + x] = cls;
                    }
                }
            }
        }
    }
    ds.inputs = Tensor(Shape{channels, size, height, width});
    for (std::size_t p = 0; p < positions; ++p) {
        for (std::size_t c = 0; c < channels; ++c) {
            ds.inputs[c * positions + p] = ds.centroids[ds.labels.values[p] * channels + c] + noise * nrng.normal();
        }
    }
    ds.targets = one_hot(ds.labels, Shape{classes});
    return ds;
}

/// Grid detection data on a C_in × B × G_h × G_w input with 1–3 objects per sample, each in its own cell.
/// Object cells carry a presence feature, a class indicator and the box logits
/// (logit of the x/y offsets, log of the w/h sizes in prior units); every channel gets Gaussian noise.
inline SyntheticDataset make_detection_data(std::size_t channels, std::size_t classes, std::size_t size,
                                            std::size_t grid_h, std::size_t grid_w, std::uint64_t seed,
                                            double noise = 0.05) {
    SyntheticDataset ds;
    ds.spec = {TaskKind::detection, seed, size, noise, 0.0};
    if (size == 0) {
        return ds;
    }
    const Prng root(seed);
    Prng lrng = root.split(detail::kLabelStream);
    Prng nrng = root.split(detail::kNoiseStream);
    const std::size_t cells_per_image = grid_h * grid_w;
    const std::size_t cells = size * cells_per_image;

    DetectionTargets t{Tensor(Shape{size, grid_h, grid_w}), Tensor(Shape{4, size, grid_h, grid_w}),
                       Tensor(Shape{classes, size, grid_h, grid_w})};
    ds.inputs = Tensor(Shape{channels, size, grid_h, grid_w});
    constexpr double kSignal = 2.0;

    for (std::size_t b = 0; b < size; ++b) {
        const std::size_t objects = std::min<std::size_t>(1 + lrng.below(3), cells_per_image);
        std::vector<std::size_t> order(cells_per_image);
        for (std::size_t i = 0; i < cells_per_image; ++i) order[i] = i;
        for (std::size_t i = 0; i < objects; ++i) {
            std::swap(order[i], order[i + lrng.below(cells_per_image - i)]);
        }
        for (std::size_t o = 0; o < objects; ++o) {
            const std::size_t cell = b * cells_per_image + order[o];
            const std::size_t cls = lrng.below(classes);
            const double ox = lrng.uniform(0.2, 0.8);
            const double oy = lrng.uniform(0.2, 0.8);
            const double sw = lrng.uniform(0.7, 1.5);
            const double sh = lrng.uniform(0.7, 1.5);
            t.object_mask[cell] = 1.0;
            t.target_boxes[0 * cells + cell] = ox;
            t.target_boxes[1 * cells + cell] = oy;
            t.target_boxes[2 * cells + cell] = sw;
            t.target_boxes[3 * cells + cell] = sh;
            t.target_classes[cls * cells + cell] = 1.0;

            ds.inputs[0 * cells + cell] = kSignal;
            ds.inputs[(1 + cls) * cells + cell] = kSignal;
            ds.inputs[(1 + classes + 0) * cells + cell] = detail::logit(ox);
            ds.inputs[(1 + classes + 1) * cells + cell] = detail::logit(oy);
            ds.inputs[(1 + classes + 2) * cells + cell] = std::log(sw);
            ds.inputs[(1 + classes + 3) * cells + cell] = std::log(sh);
        }
    }
    for (double& v : ds.inputs.data()) {
        v += noise * nrng.normal();
    }
    ds.detection = std::move(t);
    return ds;
}

/// Uniform [-1, 1) inputs of shape I ++ J with random labels over the joint K space (class losses)
/// or uniform [-1, 1) regression targets (mse).
inline SyntheticDataset make_generic_data(const TaskConfig& task, const std::vector<std::size_t>& i_dims,
                                          std::uint64_t seed) {
    SyntheticDataset ds;
    const std::size_t size = task.j_dims.empty() ? 0 : task.j_dims[0];
    ds.spec = {TaskKind::generic, seed, size, 1.0, 0.0};
    if (size == 0) {
        return ds;
    }
    const Prng root(seed);
    Prng lrng = root.split(detail::kLabelStream);
    Prng nrng = root.split(detail::kNoiseStream);
    const Shape j(task.j_dims);
    const Shape k(task.k_dims);
    ds.inputs = random_uniform(Shape(i_dims).concat(j), -1.0, 1.0, nrng);
    if (task.loss == LossTag::mse) {
        ds.targets = random_uniform(k.concat(j), -1.0, 1.0, lrng);
    } else {
        ds.labels = {j, std::vector<std::size_t>(j.count())};
        for (auto& v : ds.labels.values) {
            v = lrng.below(k.count());
        }
        ds.targets = one_hot(ds.labels, k);
    }
    return ds;
}

/// Fraction of labels recovered by assigning each sample to its nearest class centroid.
/// `inputs` is features × positions (any trailing preserved modes are flattened).
inline double nearest_centroid_accuracy(const SyntheticDataset& ds) {
    const std::size_t classes = ds.centroids.shape()[0];
    const std::size_t features = ds.centroids.shape()[1];
    const std::size_t positions = ds.inputs.size() / features;
    std::size_t correct = 0;
    for (std::size_t p = 0; p < positions; ++p) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < classes; ++c) {
            double d2 = 0.0;
            for (std::size_t f = 0; f < features; ++f) {
                const double d = ds.inputs[f * positions + p] - ds.centroids[c * features + f];
                d2 += d * d;
            }
            if (d2 < best_d) {
                best_d = d2;
                best = c;
            }
        }
        correct += best == ds.labels.values[p];
    }
    return static_cast<double>(correct) / static_cast<double>(positions);
}

}  // namespace gemtl::harness
