#pragma once

#include <cstddef>
#include <vector>

#include "libra/common.hpp"

namespace libra {

// 1-channel field (depth, transmission, guides). Row-major [H][W].
struct ScalarField {
    int height = 0;
    int width = 0;
    std::vector<double> v;

    ScalarField() = default;
    ScalarField(int h, int w, double fill = 0.0)
        : height(h), width(w), v(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return v.size(); }
    bool same_shape(const ScalarField& o) const { return height == o.height && width == o.width; }
};

// 3-channel planar image in [0,1]. Layout [3][H][W].
struct Frame {
    int height = 0;
    int width = 0;
    std::vector<double> v;

    Frame() = default;
    Frame(int h, int w, double fill = 0.0)
        : height(h), width(w), v(static_cast<std::size_t>(3) * h * w, fill) {}

    double& at(int c, int y, int x) {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double* plane(int c) { return v.data() + static_cast<std::size_t>(c) * height * width; }
    const double* plane(int c) const {
        return v.data() + static_cast<std::size_t>(c) * height * width;
    }
    std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const Frame& o) const { return height == o.height && width == o.width; }

    ScalarField channel(int c) const {
        ScalarField f(height, width);
        const double* src = plane(c);
        std::copy(src, src + pixels(), f.v.begin());
        return f;
    }
};

// Forward optical flow, frame t -> t+1, displacement in pixels. Row-major
// [H][W] per component.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<double> u, v;

    FlowField() = default;
    FlowField(int h, int w)
        : height(h),
          width(w),
          u(static_cast<std::size_t>(h) * w, 0.0),
          v(static_cast<std::size_t>(h) * w, 0.0) {}

    std::size_t size() const { return u.size(); }
};

// Pulls `prev` forward along the flow: out(x) = prev(x - flow(x)). Positions
// whose bilinear footprint leaves the image write `fallback` at that pixel
// and clear the in-bounds mask when one is supplied.
ScalarField warp_backward(const ScalarField& prev, const FlowField& flow,
                          const ScalarField* fallback = nullptr,
                          std::vector<unsigned char>* in_bounds = nullptr);

// Mean over exact p x p blocks; requires H, W divisible by p.
ScalarField area_downsample(const ScalarField& in, int p);
Frame area_downsample(const Frame& in, int p);

// Bilinear resize with pixel-center alignment; border taps replicate.
ScalarField bilinear_resize(const ScalarField& in, int out_h, int out_w);
Frame bilinear_resize(const Frame& in, int out_h, int out_w);

// Bilinear sample at a continuous position (x right, y down), taps clamped
// to the image border.
double bilinear_sample(const ScalarField& f, double x, double y);

// Source taps for one output index of a center-aligned bilinear resize;
// shared by the resize kernels and their adjoints.
struct ResizeTap {
    int i0, i1;
    double w1;
};
ResizeTap resize_tap(int out_index, int n_in, int n_out);

}  // namespace libra
