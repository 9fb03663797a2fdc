#pragma once

#include <vector>

#include "tensor.hpp"

namespace psidit {

// 8-bit-backed RGB image in [0,1], row-major HWC.
struct ImageGrid {
    int h = 0;
    int w = 0;
    int c = 3;
    std::vector<float> data;

    ImageGrid() = default;
    ImageGrid(int height, int width, int channels = 3)
        : h(height), w(width), c(channels), data(static_cast<size_t>(height) * width * channels, 0.0f) {}

    float& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    size_t size() const { return data.size(); }
};

// center-aligned sampling (src = (dst + 0.5) / scale - 0.5), replicate borders
ImageGrid bilinear_resize(const ImageGrid& img, int out_h, int out_w);
ImageGrid bicubic_resize(const ImageGrid& img, int out_h, int out_w);

// exact box average over scale x scale cells; dims must divide
ImageGrid area_downsample(const ImageGrid& img, int scale);

ImageGrid clamp01(ImageGrid img);

// snap to the 8-bit grid (round(v*255)/255), the representable set of PNG I/O
ImageGrid quantize_8bit(ImageGrid img);

}  // namespace psidit
