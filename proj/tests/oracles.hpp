#pragma once

// Reference implementations used only by tests. Each one computes its answer by a route that does
// not share code with the library path it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "gemtl/detection.hpp"
#include "gemtl/layer.hpp"
#include "gemtl/tensor.hpp"

namespace oracle {

using gemtl::Shape;
using gemtl::Tensor;

/// Advances a multi-index in row-major order; returns false after the last index.
inline bool next_index(std::vector<std::size_t>& idx, const std::vector<std::size_t>& ext) {
    for (std::size_t i = idx.size(); i-- > 0;) {
        if (++idx[i] < ext[i]) return true;
        idx[i] = 0;
    }
    return false;
}

inline std::size_t flat(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& ext) {
    std::size_t off = 0, stride = 1;
    for (std::size_t i = idx.size(); i-- > 0;) {
        off += idx[i] * stride;
        stride *= ext[i];
    }
    return off;
}

/// Nested-loop Einstein product: for every output multi-index, enumerate every contracted multi-index.
inline Tensor einstein_product(const Tensor& x, const Tensor& y, std::size_t m) {
    const auto& xe = x.shape().extents();
    const auto& ye = y.shape().extents();
    const std::size_t n = xe.size() - m;
    std::vector<std::size_t> lead(xe.begin(), xe.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::size_t> con(xe.begin() + static_cast<std::ptrdiff_t>(n), xe.end());
    std::vector<std::size_t> trail(ye.begin() + static_cast<std::ptrdiff_t>(m), ye.end());
    std::vector<std::size_t> oe = lead;
    oe.insert(oe.end(), trail.begin(), trail.end());
    Tensor out{Shape(oe)};

    std::vector<std::size_t> i(lead.size(), 0);
    do {
        std::vector<std::size_t> k(trail.size(), 0);
        do {
            double s = 0.0;
            std::vector<std::size_t> j(con.size(), 0);
            do {
                std::vector<std::size_t> xi = i, yi = j;
                xi.insert(xi.end(), j.begin(), j.end());
                yi.insert(yi.end(), k.begin(), k.end());
                s += x[flat(xi, xe)] * y[flat(yi, ye)];
            } while (next_index(j, con));
            std::vector<std::size_t> oi = i;
            oi.insert(oi.end(), k.begin(), k.end());
            out[flat(oi, oe)] = s;
        } while (next_index(k, trail));
    } while (next_index(i, lead));
    return out;
}

/// Mode permutation by explicit index remapping; result mode perm[i] is input mode i.
inline Tensor permute(const Tensor& x, const std::vector<std::size_t>& perm) {
    const auto& xe = x.shape().extents();
    std::vector<std::size_t> oe(xe.size());
    for (std::size_t i = 0; i < xe.size(); ++i) oe[perm[i]] = xe[i];
    Tensor out{Shape(oe)};
    std::vector<std::size_t> idx(xe.size(), 0);
    do {
        std::vector<std::size_t> o(xe.size());
        for (std::size_t i = 0; i < xe.size(); ++i) o[perm[i]] = idx[i];
        out[flat(o, oe)] = x[flat(idx, xe)];
    } while (!xe.empty() && next_index(idx, xe));
    return out;
}

inline double relative_error(double a, double b, double floor = 1e-4) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central finite difference of `loss` with respect to every entry of `param` (restored afterwards).
/// Divides by the step actually realized in double storage, not the nominal 2h.
inline std::vector<double> numeric_gradient(Tensor& param, const std::function<long double()>& loss,
                                            double h = 1e-6) {
    std::vector<double> g(param.size());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double keep = param[i];
        const double hi = keep + h, lo = keep - h;
        param[i] = hi;
        const long double up = loss();
        param[i] = lo;
        const long double down = loss();
        param[i] = keep;
        g[i] = static_cast<double>((up - down) / (static_cast<long double>(hi) - lo));
    }
    return g;
}

/// Largest relative error between an analytic gradient tensor and finite differences.
inline double max_gradient_error(Tensor& param, const Tensor& analytic, const std::function<long double()>& loss,
                                 double h = 1e-6) {
    const auto numeric = numeric_gradient(param, loss, h);
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        worst = std::max(worst, relative_error(analytic[i], numeric[i]));
    }
    return worst;
}

/// Extended-precision layer forward by flat-index loops: input laid out I ++ J, output K ++ J.
inline std::vector<long double> layer_forward(const gemtl::Layer& layer, const std::vector<long double>& x) {
    const std::size_t kc = layer.k_shape().count(), ic = layer.i_shape().count(), jc = x.size() / ic;
    std::vector<long double> pre(kc * jc), out(kc * jc);
    for (std::size_t k = 0; k < kc; ++k) {
        for (std::size_t j = 0; j < jc; ++j) {
            long double s = layer.bias_mode == gemtl::BiasMode::shared ? layer.bias[k] : layer.bias[k * jc + j];
            for (std::size_t i = 0; i < ic; ++i) s += static_cast<long double>(layer.weight[k * ic + i]) * x[i * jc + j];
            pre[k * jc + j] = s;
        }
    }
    using gemtl::Activation;
    for (std::size_t j = 0; j < jc; ++j) {
        long double z = 0;
        if (layer.activation == Activation::softmax) {
            for (std::size_t k = 0; k < kc; ++k) z += std::exp(pre[k * jc + j]);
        }
        for (std::size_t k = 0; k < kc; ++k) {
            const long double v = pre[k * jc + j];
            long double& o = out[k * jc + j];
            switch (layer.activation) {
                case Activation::identity: o = v; break;
                case Activation::relu: o = v > 0 ? v : 0; break;
                case Activation::sigmoid: o = 1 / (1 + std::exp(-v)); break;
                case Activation::exp: o = std::exp(v); break;
                case Activation::softmax: o = std::exp(v) / z; break;
                case Activation::box: o = k < 2 ? 1 / (1 + std::exp(-v)) : std::exp(v); break;
            }
        }
    }
    return out;
}

inline std::vector<long double> widen(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

/// sum(r ⊙ y) in extended precision.
inline long double probe_sum(const std::vector<long double>& y, const Tensor& r) {
    long double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
}

inline double box_iou(const gemtl::DetectionBox& a, const gemtl::DetectionBox& b) {
    const double ax0 = a.cx - a.w / 2, ax1 = a.cx + a.w / 2, ay0 = a.cy - a.h / 2, ay1 = a.cy + a.h / 2;
    const double bx0 = b.cx - b.w / 2, bx1 = b.cx + b.w / 2, by0 = b.cy - b.h / 2, by1 = b.cy + b.h / 2;
    const double w = std::min(ax1, bx1) - std::max(ax0, bx0);
    const double h = std::min(ay1, by1) - std::max(ay0, by0);
    const double inter = (w > 0 && h > 0) ? w * h : 0.0;
    return inter / (a.w * a.h + b.w * b.h - inter);
}

/// Exhaustive NMS: within each class, searches all subsets for the one satisfying
/// "a box survives iff no higher-ranked survivor overlaps it above the threshold".
/// Boxes must have distinct objectness values. Returns survivors sorted by objectness.
inline std::vector<gemtl::DetectionBox> brute_force_nms(const std::vector<gemtl::DetectionBox>& boxes,
                                                        double threshold) {
    std::vector<gemtl::DetectionBox> out;
    std::size_t max_class = 0;
    for (const auto& b : boxes) max_class = std::max(max_class, b.class_id);
    for (std::size_t c = 0; c <= max_class; ++c) {
        std::vector<gemtl::DetectionBox> group;
        for (const auto& b : boxes) {
            if (b.class_id == c) group.push_back(b);
        }
        const std::size_t n = group.size();
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            bool consistent = true;
            for (std::size_t b = 0; b < n && consistent; ++b) {
                bool suppressed = false;
                for (std::size_t a = 0; a < n; ++a) {
                    if (a != b && ((mask >> a) & 1) && group[a].objectness > group[b].objectness &&
                        box_iou(group[a], group[b]) > threshold) {
                        suppressed = true;
                    }
                }
                const bool in = (mask >> b) & 1;
                consistent = in != suppressed;
            }
            if (consistent) {
                for (std::size_t b = 0; b < n; ++b) {
                    if ((mask >> b) & 1) out.push_back(group[b]);
                }
                break;
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.objectness > b.objectness; });
    return out;
}

inline double scalar_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace oracle
